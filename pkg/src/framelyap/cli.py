"""Command-line experiment runner.

Exit codes: 0 success, 2 validation error, 3 guarantee violation (a
postcondition failed at recheck; signals a bug).

Every emitted report embeds a recheck: errors and measures are recomputed
from the serialized selection, never copied from internal state.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import GuaranteeViolation, ValidationError
from .fixtures import (
    moving_average_pc_frame,
    named_gen_frame,
)
from .frame_core import (
    PCFrame,
    WeightFn,
    frame_bounds,
    frame_operator,
    full_selection,
    quantize,
    weighted_frame_operator,
)
from .measure_space import MeasureSpace, canonicalize_to_interval
from .operators import operator_norm
from .povm import OperatorDensity, povm_evaluate, povm_select, rademacher_probe, weighted_density_operator
from .selection import (
    Selection,
    aw_subset_exhaustive,
    aw_subset_heuristic,
    budget_select,
    dyadic_bisect,
    halving_gap_exhaustive,
    interleaved_halving_error,
    lyapunov_select,
)

SCHEMA = 1


def _thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("FRAME_LYAPUNOV_THREADS", "1")))
    except ValueError:
        return 1


def _pc_fixture(args) -> PCFrame:
    if getattr(args, "frame_file", None):
        with open(args.frame_file) as f:
            return PCFrame.from_json(f.read())
    d = args.d
    cells = args.cells or d
    if args.fixture == "moving-average":
        return moving_average_pc_frame(d, cells)
    # other named generators: midpoint-sample on a uniform partition
    gen_frame = named_gen_frame(args.fixture, d)
    space = MeasureSpace.uniform(cells)
    layout = canonicalize_to_interval(space)
    values = {cid: gen_frame.generator((a + b) / 2) for cid, a, b in layout.entries}
    return PCFrame(space, values, d)


def parse_tau(spec: str, frame: PCFrame) -> WeightFn:
    """Weight mini-language: one | zero | const:x | linear | indicator:a-b[,c-d...] | file:path."""
    space = frame.space
    if spec == "one":
        return WeightFn.constant(space, 1.0)
    if spec == "zero":
        return WeightFn.constant(space, 0.0)
    if spec.startswith("const:"):
        return WeightFn.constant(space, float(spec.split(":", 1)[1]))
    if spec == "linear":
        total = space.total_measure
        return WeightFn.from_point_fn(space, lambda t: t / total)
    if spec.startswith("indicator:"):
        pieces = []
        for part in spec.split(":", 1)[1].split(","):
            a, b = part.split("-")
            pieces.append((float(a), float(b)))

        def fn(t: float) -> float:
            return 1.0 if any(a <= t < b for a, b in pieces) else 0.0

        return WeightFn.from_point_fn(space, fn)
    if spec.startswith("file:"):
        with open(spec.split(":", 1)[1]) as f:
            return WeightFn(json.load(f))
    raise ValidationError(f"cannot parse tau specification {spec!r}")


def _recheck_selection(frame: PCFrame, report, tau: WeightFn | None = None, target=None):
    """Recompute error and measure from the kept map; raise on disagreement."""
    sel = Selection(dict(report.selection.kept))
    tgt = target if target is not None else (
        weighted_frame_operator(frame, tau) if tau is not None else report.target
    )
    err = operator_norm(frame_operator(frame, sel) - tgt)
    measure = sel.measure
    if abs(err - report.achieved_error) > 1e-10:
        raise GuaranteeViolation(
            f"recheck error {err} disagrees with reported {report.achieved_error}"
        )
    if abs(measure - report.measure) > 1e-9:
        raise GuaranteeViolation(f"recheck measure {measure} disagrees with {report.measure}")
    return err, measure


def _report_payload(frame: PCFrame, report) -> dict:
    return json.loads(report.to_json(frame.space))


# ---------------------------------------------------------------------------
# subcommand handlers (each returns the result dict)


def cmd_bounds(args) -> dict:
    frame = _pc_fixture(args)
    a, b = frame_bounds(frame)
    return {"lower_bound": a, "upper_bound": b, "parseval": abs(a - 1) < 1e-9 and abs(b - 1) < 1e-9}


def cmd_select(args) -> dict:
    frame = _pc_fixture(args)
    tau = parse_tau(args.tau, frame)
    report = lyapunov_select(frame, tau, args.eps)
    err, measure = _recheck_selection(frame, report, tau=tau)
    if err > max(2 * args.eps, 1e-9):
        raise GuaranteeViolation(f"selection error {err} exceeds bound {2 * args.eps}")
    return _report_payload(frame, report)


def cmd_bisect(args) -> dict:
    frame = _pc_fixture(args)
    tau0s = [float(x) for x in args.tau0.split(",")]

    def run(t0: float) -> dict:
        report = dyadic_bisect(frame, t0, args.eps)
        err, measure = _recheck_selection(frame, report)
        if err > args.eps or measure > t0 * frame.space.total_measure + 1e-12:
            raise GuaranteeViolation(
                f"bisect bounds violated at tau0={t0}: error {err}, measure {measure}"
            )
        payload = _report_payload(frame, report)
        payload["tau0"] = t0
        payload["tree_certificates"] = report.extras["tree_certificates"]
        return payload

    with ThreadPoolExecutor(max_workers=_thread_cap()) as pool:
        rows = list(pool.map(run, tau0s))
    if args.csv:
        lines = ["tau0,eps,error,measure"]
        lines += [f"{r['tau0']!r},{args.eps!r},{r['error']!r},{r['measure']!r}" for r in rows]
        with open(args.csv, "w") as f:
            f.write("\n".join(lines) + "\n")
    return rows[0] if len(rows) == 1 else {"sweep": rows}


def cmd_budget(args) -> dict:
    frame = _pc_fixture(args)
    tau = parse_tau(args.tau, frame)
    report = budget_select(frame, tau, args.eps)
    err, measure = _recheck_selection(frame, report, tau=tau)
    if err > args.eps or measure > tau.integral(frame.space) + 1e-9:
        raise GuaranteeViolation(f"budget bounds violated: error {err}, measure {measure}")
    return _report_payload(frame, report)


def cmd_quantize(args) -> dict:
    gen = named_gen_frame(args.fixture, args.d, args.cells or 1)
    pc, cert = quantize(gen, args.eps)
    out = {
        "cells": cert.cell_count,
        "requested_epsilon": cert.requested_epsilon,
        "internal_epsilon": cert.internal_epsilon,
        "certified_total": cert.certified_total,
        "layers": cert.layers,
    }
    if args.out_frame:
        with open(args.out_frame, "w") as f:
            f.write(pc.to_json())
        out["frame_file"] = args.out_frame
    return out


def cmd_halving_gap(args) -> dict:
    frame = _pc_fixture(args)
    min_error, argmin = halving_gap_exhaustive(frame, args.max_cells)
    resolutions = [2**k for k in range(4, 10)]
    interleaved = [
        interleaved_halving_error(moving_average_pc_frame(args.d, r)) for r in resolutions
    ] if args.fixture == "moving-average" else []
    return {
        "min_error": min_error,
        "argmin": argmin,
        "interleaved": [
            {"cells": r, "error": e} for r, e in zip(resolutions, interleaved)
        ],
    }


def _aw_instance(n: int, d: int, max_norm_sq: float, seed: int):
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((n, d))
    scales = np.sqrt(max_norm_sq * rng.uniform(0.5, 1.0, size=n)) / np.linalg.norm(V, axis=1)
    V = V * scales[:, None]
    bessel = operator_norm(V.T @ V)
    if bessel > 1.0:
        V /= math.sqrt(bessel)
    taus = rng.random(n)
    return V, taus


def cmd_aw(args) -> dict:
    V, taus = _aw_instance(args.n, args.d, args.max_norm_sq, args.seed)
    subset, err = aw_subset_heuristic(V, taus, args.strategy, args.seed)
    out = {
        "strategy": args.strategy,
        "n": args.n,
        "heuristic_error": err,
        "subset_size": len(subset),
    }
    if args.oracle:
        _, oracle_err = aw_subset_exhaustive(V, taus)
        out["oracle_error"] = oracle_err
        if err < oracle_err - 1e-12:
            raise GuaranteeViolation(
                f"heuristic error {err} beats the exhaustive minimum {oracle_err}"
            )
    return out


def cmd_povm_select(args) -> dict:
    frame = _pc_fixture(args)
    density = OperatorDensity.rank_one(frame)
    tau = parse_tau(args.tau, frame)
    report = povm_select(density, tau, args.eps)
    sel = Selection(dict(report.selection.kept))
    target = weighted_density_operator(density, tau.on_space(density.space))
    err = operator_norm(povm_evaluate(density, sel) - target)
    if abs(err - report.achieved_error) > 1e-10:
        raise GuaranteeViolation("povm recheck disagrees with reported error")
    if err > max(2 * args.eps, 1e-9):
        raise GuaranteeViolation(f"povm selection error {err} exceeds bound")
    return json.loads(report.to_json(density.space))


def cmd_rademacher(args) -> dict:
    report = rademacher_probe(args.d, args.resolution, args.budget, args.seed)
    if args.csv:
        with open(args.csv, "w") as f:
            f.write(report.to_csv())
    return {
        "dimension": report.dimension,
        "resolution": report.resolution,
        "phi_full_vs_identity": report.phi_full_vs_identity,
        "evaluations": report.evaluations,
    }


def cmd_gallery(args) -> dict:
    """Moving-average and Rademacher showcases, end to end."""
    frame = moving_average_pc_frame(args.d, args.d)
    a, b = frame_bounds(frame)
    bisect_rep = dyadic_bisect(frame, 1.0 / 3.0, 0.01)
    coarse = moving_average_pc_frame(args.d, 12)
    gap, _ = halving_gap_exhaustive(coarse)
    interleaved = [
        {"cells": 2**k, "error": interleaved_halving_error(moving_average_pc_frame(args.d, 2**k))}
        for k in range(4, 10)
    ]
    rad = rademacher_probe(16, 1024, search_budget=8, seed=args.seed)
    return {
        "moving_average": {
            "bounds": [a, b],
            "bisect_third": {"error": bisect_rep.achieved_error, "measure": bisect_rep.measure},
            "halving_gap_12_cells": gap,
            "interleaved": interleaved,
        },
        "rademacher": {
            "phi_full_vs_identity": rad.phi_full_vs_identity,
            "evaluations": rad.evaluations[:4],
        },
    }


# ---------------------------------------------------------------------------


def _add_fixture_args(p, gen_only: bool = False):
    p.add_argument("--fixture", default="moving-average",
                   choices=["moving-average", "fourier", "constant"])
    p.add_argument("--d", type=int, default=512, help="Hilbert space truncation dimension")
    p.add_argument("--cells", type=int, default=None, help="number of cells (default: d)")
    if not gen_only:
        p.add_argument("--frame-file", default=None, help="load a PCFrame from JSON instead")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="framelyap")
    ap.add_argument("--config", default=None, help="JSON file of defaults; flags override")
    ap.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    ap.add_argument("--deterministic", action="store_true", help="suppress the timestamp field")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="frame bounds (A, B)")
    _add_fixture_args(p)
    p.set_defaults(fn=cmd_bounds)

    p = sub.add_parser("select", help="Lyapunov selection for a weight tau")
    _add_fixture_args(p)
    p.add_argument("--tau", default="const:0.5")
    p.add_argument("--eps", type=float, default=0.01)
    p.set_defaults(fn=cmd_select)

    p = sub.add_parser("bisect", help="dyadic bisection toward tau0 * S")
    _add_fixture_args(p)
    p.add_argument("--tau0", default="0.5", help="value in (0,1), or comma list for a sweep")
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--csv", default=None, help="CSV sweep output (tau0, eps, error, measure)")
    p.set_defaults(fn=cmd_bisect)

    p = sub.add_parser("budget", help="selection with measure budget integral(tau)")
    _add_fixture_args(p)
    p.add_argument("--tau", default="const:0.5")
    p.add_argument("--eps", type=float, default=0.01)
    p.set_defaults(fn=cmd_budget)

    p = sub.add_parser("quantize", help="quantize a generator frame")
    _add_fixture_args(p, gen_only=True)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--out-frame", default=None, help="write the quantized PCFrame JSON here")
    p.set_defaults(fn=cmd_quantize)

    p = sub.add_parser("halving-gap", help="exhaustive no-exact-halving probe")
    _add_fixture_args(p)
    p.add_argument("--max-cells", type=int, default=24)
    p.set_defaults(fn=cmd_halving_gap)

    p = sub.add_parser("aw", help="discrete subset selection (heuristic vs oracle)")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--max-norm-sq", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strategy", default="greedy",
                   choices=["greedy", "local_search", "randomized_rounding"])
    p.add_argument("--oracle", action="store_true")
    p.set_defaults(fn=cmd_aw)

    p = sub.add_parser("povm-select", help="POVM selection on a rank-one density")
    _add_fixture_args(p)
    p.add_argument("--tau", default="const:0.5")
    p.add_argument("--eps", type=float, default=0.01)
    p.set_defaults(fn=cmd_povm_select)

    p = sub.add_parser("rademacher", help="Rademacher diagonal density probe")
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--resolution", type=int, default=1024)
    p.add_argument("--budget", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default=None)
    p.set_defaults(fn=cmd_rademacher)

    p = sub.add_parser("gallery", help="moving-average and Rademacher showcases")
    p.add_argument("--d", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_gallery)

    return ap


def _apply_config(ap: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = ap.parse_args(argv)
    if args.config:
        with open(args.config) as f:
            defaults = json.load(f)
        for key, value in defaults.items():
            flag = "--" + key.replace("_", "-")
            explicit = flag in argv or any(a.startswith(flag + "=") for a in argv)
            if not explicit and hasattr(args, key):
                setattr(args, key, value)
    return args


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = _apply_config(ap, sys.argv[1:] if argv is None else argv)
        result = args.fn(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except GuaranteeViolation as exc:
        print(f"guarantee violation: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2

    doc = {"schema": SCHEMA, "command": args.command, "result": result}
    if not args.deterministic:
        doc["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text + "\n")
    else:
        print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
