"""Command-line front end.

Commands
--------
``weight``
    One connectivity weight as ``{N, sigma, kappa, value, err_est}``.
``verify duality|identities|logfit|pde``
    Verification reports ``{check, kappa, config, value, tolerance, pass}``.
``cardy``
    Rows ``{R, lambda, P_cardy}`` over a range of aspect ratios.
``perc``
    Monte Carlo rows ``{width, height, p, trials, p_hat, stderr, seed, R,
    P_cardy, z_score}``.

Exit codes are 0 on success, 1 when a verification fails, 2 on usage or
domain errors and 3 on numerical failure. Floats are written with 17
significant digits. JSON output has one object per line; the record
layouts are described by the JSON schema shipped as ``artifact/schema.json``
(see :func:`load_schema`). A JSON file given
with ``--config`` supplies defaults per command, e.g.
``{"weight": {"kappa": 6}}``; flags on the command line take precedence.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from typing import Iterable

import click
import numpy as np

from . import functionals as fn
from .errors import DomainError, NumericalError
from .percsim import LatticeSpec, estimate_crossing
from .specfun import lambda_from_aspect
from .weights import cardy_crossing, weight, weight_rainbow, weight_rect_hyp

EXIT_OK, EXIT_VERIFY, EXIT_DOMAIN, EXIT_NUMERICAL = 0, 1, 2, 3


def load_schema() -> dict:
    """JSON schema of the output records, keyed under ``$defs`` by command."""
    from importlib.resources import files

    return json.loads(files("artifact").joinpath("schema.json").read_text())


# ---------------------------------------------------------------------------
# Output


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return format(v, ".17g")


def to_json(obj) -> str:
    """JSON text with every float written to 17 significant digits."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v)}"
                               for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    return _num(obj)


def _csv_cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (dict, list, tuple, np.ndarray)):
        return to_json(v)
    if v is None:
        return ""
    return _num(v)


def emit(rows: list[dict], fmt: str, out: str | None) -> None:
    """Write records as line-delimited JSON or CSV with a header row."""
    if fmt == "json":
        text = "".join(to_json(r) + "\n" for r in rows)
    else:
        buf = io.StringIO()
        fields: list[str] = []
        for r in rows:
            fields += [k for k in r if k not in fields]
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([_csv_cell(r.get(k)) for k in fields])
        text = buf.getvalue()
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@contextmanager
def _errors():
    """Translate library errors into exit codes."""
    try:
        yield
    except DomainError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DOMAIN)
    except NumericalError as exc:
        est = getattr(exc, "err_est", None)
        extra = f" (achieved err_est {est:.3g})" if est is not None else ""
        click.echo(f"numerical failure: {exc}{extra}", err=True)
        sys.exit(EXIT_NUMERICAL)


def _points(text: str | None) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise click.BadParameter(f"cannot parse points: {exc}") from exc


def _threads(n: int | None) -> int:
    return max(1, n if n else (os.cpu_count() or 1))


@contextmanager
def _mapper(threads: int):
    """Ordered ``map``; a process pool when more than one worker is asked for."""
    if threads <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=threads) as pool:
        yield pool.map


# ---------------------------------------------------------------------------
# Commands


fmt_option = click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
                          default="json", show_default=True, help="Output format.")
out_option = click.option("--out", type=click.Path(dir_okay=False), default=None,
                          help="Output file; standard output when omitted.")
kappa_option = click.option("--kappa", type=float, required=True, help="SLE speed in (0, 8).")
threads_option = click.option("--threads", type=int, default=None,
                              help="Worker count; defaults to the number of CPUs.")
quad_option = click.option("--quad-tol", type=float, default=None,
                           help="Relative quadrature tolerance.")


@click.group()
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON file with per-command defaults.")
@click.pass_context
def main(ctx: click.Context, config: str | None) -> None:
    """Connectivity weights of multiple SLE and their verification."""
    if config:
        with open(config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise click.BadParameter("config must be a JSON object", param_hint="--config")
        ctx.default_map = data


@main.command("weight")
@kappa_option
@click.option("--points", required=True, help="Comma-separated increasing points.")
@click.option("--sigma", type=int, default=1, show_default=True, help="Canonical diagram index.")
@click.option("--N", "N", type=int, default=None, help="Number of pairs; inferred from points.")
@click.option("--rainbow", is_flag=True, help="Use the rainbow formula.")
@quad_option
@out_option
@fmt_option
def cmd_weight(kappa, points, sigma, N, rainbow, quad_tol, out, fmt):
    """Evaluate one connectivity weight."""
    x = _points(points)
    with _errors():
        if len(x) % 2:
            raise DomainError("an even number of points is required")
        n = len(x) // 2
        if N is not None and N != n:
            raise DomainError(f"--N {N} does not match {len(x)} points")
        if not rainbow and n > 4:
            raise DomainError("only the rainbow formula is available beyond 8 points")
        if rainbow:
            res = weight_rainbow(kappa, n, sigma - 1, x, tol=quad_tol) if n >= 2 \
                else weight(kappa, 1, 1, x)
        else:
            res = weight(kappa, n, sigma, x, tol=quad_tol)
        if not math.isfinite(res.value):
            raise NumericalError("non-finite weight", err_est=res.err_est)
    emit([{"N": n, "sigma": sigma, "kappa": kappa, "value": res.value,
           "err_est": res.err_est}], fmt, out)


@main.group("verify")
def verify() -> None:
    """Run a verification suite; exit status 1 on failure."""


def _finish(reports: Iterable[fn.Report], fmt: str, out: str | None) -> None:
    reports = list(reports)
    emit([r.to_dict() for r in reports], fmt, out)
    sys.exit(EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY)


@verify.command("duality")
@kappa_option
@click.option("--N", "N", type=int, required=True)
@click.option("--rainbow", is_flag=True, help="Only the rainbow row and column.")
@click.option("--limit-tol", type=float, default=None,
              help="Allowed deviation from the identity (5e-3, or 2e-2 for N = 4).")
@quad_option
@threads_option
@out_option
@fmt_option
def cmd_duality(kappa, N, rainbow, limit_tol, quad_tol, threads, out, fmt):
    """Duality matrix of the limit functionals against the weights."""
    tol = limit_tol if limit_tol is not None else (2e-2 if N >= 4 else 5e-3)
    with _errors():
        rows = [1] if (rainbow or N >= 5) else None
        qt = quad_tol if quad_tol is not None else (1e-4 if N >= 4 else None)
        with _mapper(_threads(threads)) as mapper:
            M = fn.duality_matrix(N, kappa, tol=qt, rows=rows, mapper=mapper)
    if rows is not None:
        vals = M.values[0, :1]
        dev = float(abs(vals[0] - 1.0))
        matrix = vals.tolist()
    else:
        dev = M.max_deviation()
        matrix = M.values.tolist()
    ok = bool(math.isfinite(dev) and dev <= tol and not M.failures)
    rep = fn.Report("duality", kappa, {"N": N, "rainbow": bool(rows)}, dev, tol, ok,
                    {"matrix": matrix,
                     "failures": {f"{s},{t}": m for (s, t), m in M.failures.items()}})
    _finish([rep], fmt, out)


@verify.command("identities")
@kappa_option
@click.option("--limit-tol", type=float, default=None,
              help="Relative tolerance of the hexagon identity (default 1e-6).")
@out_option
@fmt_option
def cmd_identities(kappa, limit_tol, out, fmt):
    """Linear relations among integrals at exceptional speeds."""
    with _errors():
        kw = {} if limit_tol is None else {"tol_hex": limit_tol}
        reports = fn.check_exceptional_identities(kappa, **kw)
    _finish(reports, fmt, out)


@verify.command("logfit")
@kappa_option
@click.option("--N", "N", type=int, default=2, show_default=True)
@click.option("--sigma", type=int, default=1, show_default=True)
@click.option("--points", default=None, help="Base configuration (default 0,1,2,...).")
@click.option("--mode", type=click.Choice(["pair", "triple"]), default="pair",
              show_default=True)
@click.option("--index", "i", type=int, default=1, show_default=True,
              help="1-based left index of the collapse.")
@click.option("--lam", type=float, default=0.5, show_default=True,
              help="Relative position of the middle point in triple mode.")
@click.option("--expect", type=click.Choice(["log", "nolog"]), default=None,
              help="Expected verdict; a mismatch exits with status 1.")
@quad_option
@out_option
@fmt_option
def cmd_logfit(kappa, N, sigma, points, mode, i, lam, expect, quad_tol, out, fmt):
    """Fit a Frobenius expansion with a possible logarithm."""
    x = _points(points) or [float(k) for k in range(2 * N)]
    with _errors():
        F = _evaluator(kappa, N, sigma, quad_tol, estimate=True)
        fit = fn.frobenius_log_fit(F, kappa, x, mode=mode, i=i, lam=lam)
    ok = True if expect is None else (fit.log_present == (expect == "log"))
    rep = fn.Report("logfit", kappa, {"N": N, "sigma": sigma, "x": x, "mode": mode,
                                      "index": i, "lam": lam},
                    fit.C, 5.0 * fit.sC, ok,
                    {"verdict": fit.verdict, "A": fit.A, "B": fit.B, "C": fit.C,
                     "sA": fit.sA, "sB": fit.sB, "sC": fit.sC})
    _finish([rep], fmt, out)


@verify.command("pde")
@kappa_option
@click.option("--N", "N", type=int, default=None)
@click.option("--sigma", type=int, default=1, show_default=True)
@click.option("--points", required=True)
@click.option("--limit-tol", type=float, default=1e-3, show_default=True,
              help="Allowed normalized residual.")
@quad_option
@out_option
@fmt_option
def cmd_pde(kappa, N, sigma, points, limit_tol, quad_tol, out, fmt):
    """Residuals of the null-state equations and Ward identities."""
    x = _points(points)
    n = len(x) // 2
    with _errors():
        if N is not None and N != n:
            raise DomainError(f"--N {N} does not match {len(x)} points")
        F = _evaluator(kappa, n, sigma, quad_tol)
        null, ward = fn.pde_residual(F, kappa, x)
    worst = float(max(np.max(np.abs(null)), np.max(np.abs(ward))))
    rep = fn.Report("pde", kappa, {"N": n, "sigma": sigma, "x": x}, worst, limit_tol,
                    worst <= limit_tol, {"null_state": null.tolist(), "ward": ward.tolist()})
    _finish([rep], fmt, out)


def _evaluator(kappa: float, N: int, sigma: int, tol, estimate: bool = False):
    """Weight as a function of the points; ``estimate`` keeps ``err_est``."""
    if N == 2 and tol is None:
        def F(y):
            return weight_rect_hyp(kappa, sigma, y)
    else:
        def F(y):
            return weight(kappa, N, sigma, y, tol=tol)
    if estimate:
        return F
    return lambda y: F(y).value


def _cardy(R: float) -> tuple[float, float]:
    lam = lambda_from_aspect(R)
    return lam, cardy_crossing(lam)


@main.command("cardy")
@click.option("--r-min", type=float, default=0.25, show_default=True)
@click.option("--r-max", type=float, default=4.0, show_default=True)
@click.option("--count", type=int, default=17, show_default=True)
@click.option("--aspects", default=None, help="Explicit comma-separated aspect ratios.")
@out_option
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv",
              show_default=True)
def cmd_cardy(r_min, r_max, count, aspects, out, fmt):
    """Sweep the rectangle crossing formula over aspect ratios."""
    with _errors():
        if aspects:
            Rs = _points(aspects)
        else:
            if not (0 < r_min <= r_max) or count < 1:
                raise DomainError("need 0 < r-min <= r-max and count >= 1")
            Rs = list(np.geomspace(r_min, r_max, count)) if count > 1 else [r_min]
        rows = []
        for R in Rs:
            if not R > 0:
                raise DomainError("aspect ratios must be positive")
            lam, P = _cardy(R)
            rows.append({"R": R, "lambda": lam, "P_cardy": P})
    emit(rows, fmt, out)


@main.command("perc")
@click.option("--width", type=int, default=128, show_default=True)
@click.option("--height", type=int, default=64, show_default=True)
@click.option("--p", "p", type=float, default=0.5, show_default=True)
@click.option("--trials", type=int, default=100000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@threads_option
@out_option
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv",
              show_default=True)
def cmd_perc(width, height, p, trials, seed, threads, out, fmt):
    """Monte Carlo crossing frequency compared with the crossing formula."""
    with _errors():
        spec = LatticeSpec(width, height, p, seed)
        est = estimate_crossing(spec, trials, threads=_threads(threads))
        R = spec.aspect
        lam, P = _cardy(R)
    if est.stderr > 0:
        z = (est.p_hat - P) / est.stderr
    else:
        z = 0.0 if est.p_hat == P else math.copysign(math.inf, est.p_hat - P)
    emit([{"width": width, "height": height, "p": p, "trials": trials,
           "p_hat": est.p_hat, "stderr": est.stderr, "seed": seed, "R": R,
           "lambda": lam, "P_cardy": P, "z_score": z}], fmt, out)


if __name__ == "__main__":  # pragma: no cover
    main()
