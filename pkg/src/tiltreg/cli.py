"""Command-line interface.

Subcommands: ``fit`` (estimate a median regression from CSV data and persist
it as JSON), ``predict`` (fitted medians/shapes for new rows), ``residuals``
(quantile residuals as CSV), ``dist`` (evaluate distribution functions) and
``sample`` (seeded random draws).  Exit codes: 0 success, 1 usage or
specification error, 2 numerical non-convergence, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import __version__
from .data import (
    ModelConfig,
    build_design,
    design_schema,
    ingest_csv,
    prediction_designs,
    table_from_schema,
)
from .diagnostics import build_report, quantile_residuals, render_svg
from .errors import InferenceError, NumericalError, SpecificationError
from .exponential import MedianTiltedExponential, TiltedExponential
from .regression import FittedModel, ModelSpec, fit

_MODEL_FORMAT = "tiltreg-model"


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors exit with code 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="tiltreg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_fit = sub.add_parser("fit", help="fit a median regression from CSV data")
    p_fit.add_argument("--data", required=True, help="input CSV file")
    p_fit.add_argument("--response", required=True, help="response column name")
    p_fit.add_argument("--mu", nargs="*", default=[], metavar="TERM",
                       help="median-submodel terms (intercept is implicit)")
    p_fit.add_argument("--sigma", nargs="*", default=[], metavar="TERM",
                       help="shape-submodel terms (intercept is implicit)")
    p_fit.add_argument("--out", required=True, help="output model JSON file")
    p_fit.add_argument("--plots", metavar="PREFIX",
                       help="write PREFIX_qq.svg and PREFIX_worm.svg")
    p_fit.add_argument("--max-iter", type=int, default=500)
    p_fit.add_argument("--tol", type=float, default=1e-6,
                       help="gradient max-norm tolerance")
    p_fit.add_argument("--seed", type=int, default=None,
                       help="unused by fitting, which is deterministic")
    p_fit.set_defaults(func=cmd_fit)

    p_pred = sub.add_parser("predict", help="fitted medians for new data")
    p_pred.add_argument("--model", required=True, help="model JSON from fit")
    p_pred.add_argument("--data", required=True, help="CSV with covariates")
    p_pred.add_argument("--out", required=True, help="output CSV")
    p_pred.set_defaults(func=cmd_predict)

    p_res = sub.add_parser("residuals", help="quantile residuals as CSV")
    p_res.add_argument("--model", required=True, help="model JSON from fit")
    p_res.add_argument("--data", required=True,
                       help="CSV with response and covariates")
    p_res.add_argument("--out", required=True, help="output CSV")
    p_res.set_defaults(func=cmd_residuals)

    p_dist = sub.add_parser("dist", help="evaluate distribution functions")
    p_dist.add_argument("function",
                        choices=["cdf", "pdf", "sf", "hrf", "quantile", "moment"])
    p_dist.add_argument("--beta", type=float, help="shape parameter")
    p_dist.add_argument("--lambda", dest="lam", type=float, help="rate parameter")
    p_dist.add_argument("--mu", type=float, help="median parameter")
    p_dist.add_argument("--sigma", type=float, help="shape parameter")
    p_dist.add_argument("--x", nargs="+", type=float,
                        help="evaluation points for cdf/pdf/sf/hrf")
    p_dist.add_argument("--p", nargs="+", type=float,
                        help="probabilities (quantile) or moment orders")
    p_dist.set_defaults(func=cmd_dist)

    p_samp = sub.add_parser("sample", help="seeded random draws as CSV")
    p_samp.add_argument("--n", type=int, required=True)
    p_samp.add_argument("--beta", type=float)
    p_samp.add_argument("--lambda", dest="lam", type=float)
    p_samp.add_argument("--mu", type=float)
    p_samp.add_argument("--sigma", type=float)
    p_samp.add_argument("--seed", type=int, default=0)
    p_samp.add_argument("--out", required=True, help="output CSV")
    p_samp.set_defaults(func=cmd_sample)

    return parser


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def _format_p(p: float) -> str:
    return "<0.001" if p < 0.001 else f"{p:.3f}"


def _coefficient_table(model: FittedModel) -> str:
    width = max(len(n) for n in model.coef_names) + 2
    lines = [
        f"  {'coefficient':<{width}}{'estimate':>10}{'std. error':>12}"
        f"{'z-stat':>10}{'p-value':>10}"
    ]
    for j, name in enumerate(model.coef_names):
        lines.append(
            f"  {name:<{width}}{model.theta_hat[j]:>10.3f}"
            f"{model.std_errors[j]:>12.3f}{model.z_stats[j]:>10.3f}"
            f"{_format_p(model.p_values[j]):>10}"
        )
    return "\n".join(lines)


def _model_document(model: FittedModel, schema: dict) -> dict:
    return {
        "format": _MODEL_FORMAT,
        "version": __version__,
        "schema": schema,
        "coefficients": list(model.coef_names),
        "n_mu_coefs": model.n_mu_coefs,
        "estimates": model.theta_hat.tolist(),
        "std_errors": model.std_errors.tolist(),
        "z_stats": model.z_stats.tolist(),
        "p_values": model.p_values.tolist(),
        "info_inverse": model.info_inverse.tolist(),
        "loglik": model.loglik_at_optimum,
        "converged": model.converged,
        "iterations": model.iterations,
        "gradient_max_norm": model.gradient_max_norm,
        "n_obs": model.n_obs,
    }


def _write_json(path, document: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(document, indent=2, sort_keys=True))
        fh.write("\n")


def _load_model(path) -> tuple[FittedModel, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != _MODEL_FORMAT:
        raise SpecificationError(f"{path} is not a {_MODEL_FORMAT} file")
    model = FittedModel(
        theta_hat=np.array(doc["estimates"], dtype=float),
        info_inverse=np.array(doc["info_inverse"], dtype=float),
        std_errors=np.array(doc["std_errors"], dtype=float),
        z_stats=np.array(doc["z_stats"], dtype=float),
        p_values=np.array(doc["p_values"], dtype=float),
        loglik_at_optimum=float(doc["loglik"]),
        converged=bool(doc["converged"]),
        iterations=int(doc["iterations"]),
        gradient_max_norm=float(doc["gradient_max_norm"]),
        n_mu_coefs=int(doc["n_mu_coefs"]),
        n_obs=int(doc["n_obs"]),
        coef_names=tuple(doc["coefficients"]),
    )
    return model, doc["schema"]


def cmd_fit(args) -> int:
    config = ModelConfig(
        response=args.response,
        mu_terms=tuple(args.mu),
        sigma_terms=tuple(args.sigma),
        max_iter=args.max_iter,
        grad_tol=args.tol,
        seed=args.seed,
    )
    table = ingest_csv(args.data, config)
    if table.n_dropped:
        print(
            f"warning: dropped {table.n_dropped} row(s) with missing or "
            f"unparseable cells",
            file=sys.stderr,
        )
    spec = build_design(table, config)
    with warnings.catch_warnings():
        # non-convergence is reported through the exit code, not a warning
        warnings.simplefilter("ignore", RuntimeWarning)
        model = fit(spec, max_iter=config.max_iter, grad_tol=config.grad_tol,
                    ll_tol=config.ll_tol)

    print(f"Median regression fit ({table.n_rows} observations)")
    print(
        f"  log-likelihood: {model.loglik_at_optimum:.4f}"
        f"    iterations: {model.iterations}"
        f"    converged: {'yes' if model.converged else 'NO'}"
    )
    print()
    print(_coefficient_table(model))

    _write_json(args.out, _model_document(model, design_schema(table, config)))
    if args.plots:
        residuals = quantile_residuals(model, spec)
        report = build_report(residuals)
        render_svg(report, "qq", f"{args.plots}_qq.svg")
        render_svg(report, "worm", f"{args.plots}_worm.svg")

    if not model.converged:
        print(
            f"error: optimizer did not converge "
            f"(gradient max-norm {model.gradient_max_norm:.3e})",
            file=sys.stderr,
        )
        return 2
    return 0


# ---------------------------------------------------------------------------
# predict / residuals
# ---------------------------------------------------------------------------

def cmd_predict(args) -> int:
    model, schema = _load_model(args.model)
    table = table_from_schema(args.data, schema, require_response=False)
    W, Z = prediction_designs(table, schema)
    medians = np.exp(W @ model.mu_coefs)
    sigmas = np.exp(Z @ model.sigma_coefs)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("median,sigma\n")
        for m, s in zip(medians.tolist(), sigmas.tolist()):
            fh.write(f"{m!r},{s!r}\n")
    print(f"wrote {len(medians)} prediction(s) to {args.out}")
    return 0


def cmd_residuals(args) -> int:
    model, schema = _load_model(args.model)
    table = table_from_schema(args.data, schema, require_response=True)
    W, Z = prediction_designs(table, schema)
    y = table.numeric[schema["response"]]
    spec = ModelSpec(response=y, mu_design=W, sigma_design=Z)
    residuals = quantile_residuals(model, spec)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("quantile_residual\n")
        for r in residuals.tolist():
            fh.write(f"{r!r}\n")
    print(f"wrote {len(residuals)} residual(s) to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# dist / sample
# ---------------------------------------------------------------------------

def _distribution_from(args) -> TiltedExponential:
    has_classical = args.beta is not None or args.lam is not None
    has_median = args.mu is not None or args.sigma is not None
    if has_classical and has_median:
        raise SpecificationError(
            "give either --beta/--lambda or --mu/--sigma, not both"
        )
    if has_classical:
        if args.beta is None or args.lam is None:
            raise SpecificationError("--beta and --lambda are both required")
        return TiltedExponential(beta=args.beta, rate=args.lam)
    if has_median:
        if args.mu is None or args.sigma is None:
            raise SpecificationError("--mu and --sigma are both required")
        return MedianTiltedExponential(mu=args.mu, sigma=args.sigma).to_classical()
    raise SpecificationError(
        "parameters required: --beta/--lambda or --mu/--sigma"
    )


def cmd_dist(args) -> int:
    dist = _distribution_from(args)
    func = args.function
    if func in ("cdf", "pdf", "sf", "hrf"):
        if not args.x:
            raise SpecificationError(f"--x is required for {func}")
        evaluate = {
            "cdf": dist.cdf,
            "pdf": dist.pdf,
            "sf": dist.sf,
            "hrf": dist.hazard,
        }[func]
        values = [evaluate(x) for x in args.x]
    elif func == "quantile":
        if not args.p:
            raise SpecificationError("--p is required for quantile")
        values = [dist.quantile(p) for p in args.p]
    else:  # moment
        if not args.p:
            raise SpecificationError("--p (moment order) is required for moment")
        generic = dist.as_generic()
        values = [generic.moment(p) for p in args.p]
    for v in values:
        print(f"{v:.10g}")
    return 0


def cmd_sample(args) -> int:
    dist = _distribution_from(args)
    draws = dist.sample(args.n, args.seed)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("sample\n")
        for v in draws.tolist():
            fh.write(f"{v!r}\n")
    print(f"wrote {args.n} draw(s) to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (SpecificationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, InferenceError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
