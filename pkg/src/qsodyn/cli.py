"""Command-line front end: spec ingestion, command dispatch, deterministic
report emission (JSON/CSV)."""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click
import numpy as np

from . import __version__
from .abscont import (
    CylinderClass,
    VaParams,
    cylinder_discrepancy_log,
    rn_series,
    rn_series_csv,
)
from .classify import classify_operator
from .markov import CylinderSet, TransitionFamily, cylinder_measure, mixing_series, mixing_series_csv
from .operator import TensorError, find_fixed_points, trajectory
from .simplex import SimplexError, make_point, partial_sum
from .specfile import SpecFileError, load_spec, spec_hash

EXIT_VALIDATION = 2
EXIT_PARSE = 3


def _die(code: int, kind: str, message: str, **extra):
    payload = {"error": kind, "message": message}
    payload.update(extra)
    click.echo(json.dumps(payload), err=True)
    sys.exit(code)


def _f17(x: float) -> float:
    return float(f"{x:.17g}")


def _load_operator(spec_path: str, symmetrize: bool):
    try:
        spec = load_spec(spec_path)
    except SpecFileError as exc:
        _die(EXIT_PARSE, "parse_error", str(exc), path=spec_path)
    try:
        return spec, spec.build(symmetrize=symmetrize)
    except (TensorError, SimplexError, ValueError) as exc:
        _die(EXIT_VALIDATION, "validation_error", str(exc), path=spec_path)


def _parse_point(text: str):
    try:
        return make_point([float(v) for v in text.split(",")])
    except (ValueError, SimplexError) as exc:
        _die(EXIT_VALIDATION, "validation_error", f"bad point {text!r}: {exc}")


def _parse_cylinder(text: str) -> CylinderSet:
    """Syntax 'l:i_l,i_{l+1},...', e.g. '0:1,2' pins states 1 then 2 from time 0."""
    try:
        start_str, states_str = text.split(":")
        states = tuple(int(s) for s in states_str.split(","))
        return CylinderSet(int(start_str), states)
    except (ValueError, TypeError) as exc:
        _die(EXIT_VALIDATION, "validation_error", f"bad cylinder {text!r}: {exc}")


def _envelope(spec_path: Optional[str], config: dict, result) -> dict:
    return {
        "tool_version": __version__,
        "spec_hash": spec_hash(spec_path) if spec_path else None,
        "config": config,
        "result": result,
    }


def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _emit(payload: dict, out: Optional[str], name: str):
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default)
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        (path / f"{name}.json").write_text(text + "\n")
    else:
        click.echo(text)


def _emit_csv(text: str, out: Optional[str], name: str):
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        (path / f"{name}.csv").write_text(text)
    else:
        click.echo(text, nl=False)


@click.group()
@click.version_option(__version__)
def main():
    """Quadratic stochastic operators: certificates, dynamics, Markov measures."""


spec_opt = click.option("--spec", "spec_path", required=True, type=click.Path())
symmetrize_opt = click.option("--symmetrize", is_flag=True, default=False)
seed_opt = click.option("--seed", type=int, default=0, show_default=True)
out_opt = click.option("--out", type=click.Path(), default=None)


@main.command()
@spec_opt
@symmetrize_opt
@seed_opt
@out_opt
def validate(spec_path, symmetrize, seed, out):
    """Tensor validation plus structural and numeric order checks."""
    spec, V = _load_operator(spec_path, symmetrize)
    from .classify import check_necessary_bbistochastic, verify_bbistochastic_numeric

    nec = check_necessary_bbistochastic(V)
    num = verify_bbistochastic_numeric(V, seed=seed)
    result = {
        "n": V.n,
        "tensor_valid": True,
        "necessary_conditions": [
            {"name": c.name, "passed": c.passed, "witness": c.witness}
            for c in nec.conditions
        ],
        "numeric_b_verdict": (
            {
                "violated": True,
                "witness_point": [_f17(v) for v in num.witness_point.coords],
                "violating_k": num.violating_k,
                "gap": _f17(num.gap),
                "resolution": num.resolution,
                "sample_count": num.sample_count,
            }
            if num.violated
            else {
                "violated": False,
                "resolution": num.resolution,
                "sample_count": num.sample_count,
            }
        ),
    }
    _emit(
        _envelope(spec_path, {"symmetrize": symmetrize, "seed": seed}, result),
        out,
        "validate",
    )


@main.command()
@spec_opt
@symmetrize_opt
@seed_opt
@out_opt
def classify(spec_path, symmetrize, seed, out):
    """Full certificate report for the operator."""
    spec, V = _load_operator(spec_path, symmetrize)
    report = classify_operator(V, seed=seed)
    _emit(
        _envelope(spec_path, {"symmetrize": symmetrize, "seed": seed}, report.to_dict()),
        out,
        "classify",
    )


@main.command()
@spec_opt
@symmetrize_opt
@click.option("--x", "x_text", required=True, help="start point, comma-separated")
@click.option("--steps", type=int, default=None, help="fixed iteration count")
@click.option("--tol", type=float, default=1e-12, show_default=True)
@click.option("--max-iter", type=int, default=10_000, show_default=True)
@out_opt
def iterate(spec_path, symmetrize, x_text, steps, tol, max_iter, out):
    """Trajectory CSV: step, coordinates, prefix sums, step size."""
    spec, V = _load_operator(spec_path, symmetrize)
    x = _parse_point(x_text)
    if x.n != V.n:
        _die(EXIT_VALIDATION, "validation_error", f"point has {x.n} states, operator {V.n}")
    tr = trajectory(V, x, tol=tol, max_iter=steps if steps is not None else max_iter, record_path=True)
    n = V.n
    header = (
        ["step"]
        + [f"x_{i}" for i in range(1, n + 1)]
        + [f"U_{k}" for k in range(1, n)]
        + ["step_l1"]
    )
    lines = [",".join(header)]
    prev = None
    for step, p in enumerate(tr.path):
        row = [str(step)]
        row += [f"{v:.17g}" for v in p.coords]
        row += [f"{partial_sum(p, k):.17g}" for k in range(1, n)]
        delta = 0.0 if prev is None else float(np.abs(p.as_array() - prev.as_array()).sum())
        row.append(f"{delta:.17g}")
        prev = p
        lines.append(",".join(row))
    _emit_csv("\n".join(lines) + "\n", out, "iterate")


@main.command("fixed-points")
@spec_opt
@symmetrize_opt
@click.option("--tol", type=float, default=1e-9, show_default=True)
@out_opt
def fixed_points(spec_path, symmetrize, tol, out):
    """Multistart fixed-point search, JSON output."""
    spec, V = _load_operator(spec_path, symmetrize)
    fps = find_fixed_points(V, tol=tol)
    result = {
        "dedup_radius": fps.dedup_radius,
        "points": [
            {"coords": [_f17(v) for v in p.coords], "residual_l1": _f17(r)}
            for p, r in zip(fps.points, fps.residuals)
        ],
    }
    _emit(_envelope(spec_path, {"symmetrize": symmetrize, "tol": tol}, result), out, "fixed_points")


@main.command()
@spec_opt
@symmetrize_opt
@click.option("--x", "x_text", required=True)
@click.option("--horizon", type=int, default=10, show_default=True)
@out_opt
def markov(spec_path, symmetrize, x_text, horizon, out):
    """Transition matrices up to the horizon plus basic cylinder measures."""
    spec, V = _load_operator(spec_path, symmetrize)
    x = _parse_point(x_text)
    if x.n != V.n:
        _die(EXIT_VALIDATION, "validation_error", f"point has {x.n} states, operator {V.n}")
    fam = TransitionFamily(V, x)
    mats = {
        str(k): [[_f17(v) for v in row] for row in fam.transition_matrix(k)]
        for k in range(horizon)
    }
    singles = {
        f"[0,0]({i})": _f17(cylinder_measure(fam, CylinderSet(0, (i,))))
        for i in range(1, V.n + 1)
    }
    pairs = {
        f"[0,1]({i},{j})": _f17(cylinder_measure(fam, CylinderSet(0, (i, j))))
        for i in range(1, V.n + 1)
        for j in range(1, V.n + 1)
    }
    result = {"transition_matrices": mats, "cylinder_measures": {**singles, **pairs}}
    _emit(_envelope(spec_path, {"symmetrize": symmetrize, "x": list(x.coords), "horizon": horizon}, result), out, "markov")


@main.command()
@spec_opt
@symmetrize_opt
@click.option("--x", "x_text", required=True)
@click.option("--A", "a_text", required=True, help="cylinder, e.g. '0:1'")
@click.option("--B", "b_text", required=True, help="cylinder, e.g. '0:1'")
@click.option("--m-max", type=int, default=12, show_default=True)
@out_opt
def mixing(spec_path, symmetrize, x_text, a_text, b_text, m_max, out):
    """Correlation-gap series CSV: m, tau_m, bound_m."""
    spec, V = _load_operator(spec_path, symmetrize)
    x = _parse_point(x_text)
    A = _parse_cylinder(a_text)
    B = _parse_cylinder(b_text)
    fam = TransitionFamily(V, x)
    series = mixing_series(fam, A, B, m_max)
    _emit_csv(mixing_series_csv(series), out, "mixing")


@main.command()
@click.option("--a", type=float, required=True)
@click.option("--a2", type=float, default=None, help="denominator parameter; defaults to --a")
@click.option("--x", "x_text", required=True)
@click.option("--y", "y_text", required=True)
@click.option("--m-max", type=int, default=12, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@out_opt
def abscont(a, a2, x_text, y_text, m_max, fmt, out):
    """Likelihood-ratio second-moment series for the one-parameter family."""
    x = _parse_point(x_text)
    y = _parse_point(y_text)
    try:
        num = VaParams(a, x)
        den = VaParams(a2 if a2 is not None else a, y)
        report = rn_series(num, den, m_max)
    except ValueError as exc:
        _die(EXIT_VALIDATION, "validation_error", str(exc))
    if fmt == "csv":
        _emit_csv(rn_series_csv(report), out, "abscont")
        return
    disc = cylinder_discrepancy_log(
        num,
        [
            CylinderClass.all_ones(0, 4),
            CylinderClass.all_ones(2, 5),
            CylinderClass.all_twos(0, 4),
            CylinderClass.all_twos(2, 5),
            CylinderClass.ones_then_twos(0, 5, 2),
            CylinderClass.ones_then_twos(2, 6, 3),
            CylinderClass.two_one(3),
        ],
    )
    result = report.to_dict()
    result["closed_form_discrepancies"] = [
        {
            "kind": c.kind,
            "l": c.l,
            "m": c.m,
            "k": c.k,
            "constructive": _f17(cons),
            "printed": _f17(printed),
            "abs_difference": _f17(d),
        }
        for c, cons, printed, d in disc
    ]
    config = {"a": a, "a2": a2, "x": list(x.coords), "y": list(y.coords), "m_max": m_max}
    _emit(_envelope(None, config, result), out, "abscont")


@main.command("rn-sweep")
@spec_opt
@symmetrize_opt
@click.option("--x", "x_text", required=True)
@click.option("--y", "y_text", required=True)
@click.option("--m-max", type=int, default=12, show_default=True)
@click.option("--samples", type=int, default=200, show_default=True)
@seed_opt
@out_opt
def rn_sweep(spec_path, symmetrize, x_text, y_text, m_max, samples, seed, out):
    """HEURISTIC: sampled likelihood-ratio series for a general operator.

    Samples trajectories under the x-chain and accumulates the conditional
    second moment of the one-step transition ratio against the y-chain.
    The verdict is exploratory evidence only.
    """
    spec, V = _load_operator(spec_path, symmetrize)
    x = _parse_point(x_text)
    y = _parse_point(y_text)
    if x.n != V.n or y.n != V.n:
        _die(EXIT_VALIDATION, "validation_error", "point dimensions must match operator")
    from .abscont import _classify_terms

    fam_x = TransitionFamily(V, x)
    fam_y = TransitionFamily(V, y)
    rng = np.random.default_rng(seed)
    hx = [fam_x.transition_matrix(k) for k in range(m_max)]
    hy = [fam_y.transition_matrix(k) for k in range(m_max)]
    x0 = fam_x.trajectory_point(0)
    states = rng.choice(V.n, size=samples, p=x0 / x0.sum())
    sums = np.zeros(samples)
    mean_terms = []
    for m in range(1, m_max + 1):
        hxm, hym = hx[m - 1], hy[m - 1]
        terms = np.zeros(samples)
        for s_idx in range(samples):
            i = states[s_idx]
            t = 0.0
            for j in range(V.n):
                px, py = hxm[i, j], hym[i, j]
                if px == 0.0:
                    continue
                ratio = 1.0 if py == 0.0 and px == 0.0 else (px / py if py > 0 else np.inf)
                t += (1.0 - ratio) ** 2 * px if np.isfinite(ratio) else np.inf
            terms[s_idx] = t
        sums += terms
        mean_terms.append(float(np.mean(terms)))
        nxt = np.empty(samples, dtype=int)
        for s_idx in range(samples):
            nxt[s_idx] = rng.choice(V.n, p=hxm[states[s_idx]] / hxm[states[s_idx]].sum())
        states = nxt
    classification = _classify_terms(mean_terms)
    result = {
        "heuristic": True,
        "classification": classification,
        "mean_terms": [_f17(t) for t in mean_terms],
        "mean_partial_sum": _f17(float(np.mean(sums[np.isfinite(sums)])) if np.isfinite(sums).any() else float("inf")),
        "divergent_sample_fraction": _f17(float(np.mean(~np.isfinite(sums)))),
    }
    config = {
        "x": list(x.coords),
        "y": list(y.coords),
        "m_max": m_max,
        "samples": samples,
        "seed": seed,
        "symmetrize": symmetrize,
    }
    _emit(_envelope(spec_path, config, result), out, "rn_sweep")


if __name__ == "__main__":
    main()
