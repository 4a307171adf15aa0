"""Command-line entry point ``kakeyalab``."""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import exponents as ex
from .generators import KINDS, GeneratorSpec, generate
from .geometry import TubeFamily, cap_decompose

# exit codes
OK, CONTRACT_FAILED, BAD_INPUT = 0, 1, 2


class ContractFailure(RuntimeError):
    pass


def _writer(path):
    if path in (None, "-"):
        return sys.stdout, False
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline=""), True


def _write_csv(rows, path=None):
    fh, close = _writer(path)
    csv.writer(fh).writerows(rows)
    if close:
        fh.close()


def _real(s: str) -> float:
    """Float argument that also accepts fractions such as ``1/64``."""
    try:
        return float(Fraction(s))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"invalid number: {s!r}")


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


# -- exponents ---------------------------------------------------------------------


def cmd_exponents(a):
    if a.what == "table":
        rows = [("n", "k_star", "p_n_num", "p_n_den", "best_known", "attribution")]
        for n in range(2, a.n_max + 1):
            r = ex.best_known(n, a.conjecture)
            rows.append((n, r.k_star, r.p_n.numerator, r.p_n.denominator, _frac(r.best_known), r.attribution.value))
        _emit_table(rows, a.format)
    elif a.what == "dims":
        dims = ex.improved_dimensions(a.n_max)
        if a.format == "csv":
            _write_csv([("n",)] + [(n,) for n in dims])
        else:
            print(", ".join(map(str, dims)))
    else:
        sol = ex.gamma_solve_system(a.n, a.m)
        if sol != ex.gamma_closed_form(a.n, a.m) or any(ex.system_residuals(sol)):
            raise ContractFailure("linear solve disagrees with the closed form")
        rows = [("j", "gamma_j")] + [(j, _frac(g)) for j, g in sorted(sol.gamma.items())]
        rows.append(("p", _frac(sol.p)))
        _emit_table(rows, a.format)
    return OK


def _emit_table(rows, fmt):
    if fmt == "csv":
        _write_csv(rows)
        return
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join(str(v).rjust(w) for v, w in zip(r, widths)))


# -- norms ---------------------------------------------------------------------------


def cmd_norms(a):
    from .norms import BroadParams, broad_norm, default_candidates, lp_norm

    f = TubeFamily.load(a.family)
    res = a.res or f.delta / 4
    if a.what == "lp":
        out = {"value": lp_norm(f, a.p, resolution=res), "resolution": res, "n_balls": None}
    else:
        caps = cap_decompose(f, a.beta)
        cands = default_candidates(caps.centers, a.k, f.n, a.net_size, seed=a.seed)
        r = broad_norm(f, params=BroadParams(a.k, a.A, a.p, a.beta, cands), resolution=res, caps=caps)
        out = {"value": r.value, "resolution": r.quadrature_resolution, "n_balls": r.n_balls}
        if a.per_ball:
            rows = [["ball"] + [f"x{i}" for i in range(f.n)] + ["weight", "mu"]]
            for i in np.flatnonzero(r.weights > 0):
                rows.append([int(i)] + [repr(float(v)) for v in r.ball_centers[i]]
                            + [repr(float(r.weights[i])), repr(float(r.per_ball_mu[i]))])
            _write_csv(rows, a.per_ball)
    print(json.dumps(out))
    return OK


# -- wolff ---------------------------------------------------------------------------


def cmd_wolff(a):
    from .wolff import ShapeCatalog, builtin_catalog, linear_wolff_N, poly_wolff_N, random_boxes

    f = TubeFamily.load(a.family)
    if a.what == "linear":
        if a.shapes == "builtin":
            boxes = random_boxes(f.n, a.count, f.delta, a.seed, f)
        else:
            boxes = ShapeCatalog.from_list(json.loads(Path(a.shapes).read_text())).shapes
        rep = linear_wolff_N(f, boxes)
        summary = ("N_linear", rep.N_linear)
    else:
        if a.shapes == "builtin":
            cat = builtin_catalog(f.n, f.delta, a.count, a.seed, f)
        else:
            cat = ShapeCatalog.from_list(json.loads(Path(a.shapes).read_text()))
        rep = poly_wolff_N(f, cat, samples=a.samples, seed=a.seed)
        summary = ("N_poly", rep.N_poly)
    rows = list(rep.csv_rows())
    rows.insert(1, ("witness", "", rep.witness_lambda, "", "", summary[1]))
    _write_csv(rows, a.out)
    print(f"{summary[0]} = {summary[1]!r} (witness shape {rep.witness_shape})", file=sys.stderr)
    return OK


# -- partition -----------------------------------------------------------------------


def cmd_partition(a):
    from .partition import Measure, cells_entered, classify_dichotomy, partition_measure

    F = Measure.load(a.measure)
    part = partition_measure(F, a.d, a.delta, seed=a.seed)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "polynomial.json").write_text(part.to_json())
    _write_csv(part.cell_rows(), out / "cells.csv")
    if a.family:
        tubes = TubeFamily.load(a.family)
    else:
        tubes = generate(GeneratorSpec("random_separated", 2, 0.02, count=a.tubes, seed=a.seed))
    rows = [("tube", "observed", "certified", "restriction_bound", "degree_bound", "cells_visited", "ok")]
    bad = 0
    for i, t in enumerate(tubes):
        rep = cells_entered(t, part.P, partition=part)
        bad += not rep.ok
        rows.append((i,) + rep.to_row() + (int(rep.ok),))
    _write_csv(rows, out / "certificate.csv")
    dich = classify_dichotomy(F, part)
    print(json.dumps({"degree": part.degree, "cells": len(part.cells), "near_mass": part.near_mass,
                      "total": part.total, "branch": dich.branch, "violations": bad}))
    assigned = math.fsum(part.cell_masses) + part.near_mass
    if not math.isclose(assigned, part.total, rel_tol=1e-12):
        raise ContractFailure("cell masses plus near mass differ from the total")
    if bad:
        raise ContractFailure(f"{bad} tubes exceed their crossing certificate")
    return OK


# -- generators and the harness --------------------------------------------------------


def cmd_gen(a):
    extra = json.loads(a.extra) if a.extra else {}
    variety = json.loads(a.variety) if a.variety else None
    spec = GeneratorSpec(a.kind, a.n, a.delta, count=a.count, seed=a.seed, variety=variety,
                         ball_radius=a.ball_radius, beta=a.beta, extra=extra)
    f = generate(spec)
    if a.o in (None, "-"):
        print(f.dumps())
    else:
        f.save(a.o)
    print(f"{len(f)} tubes", file=sys.stderr)
    return OK


def _seed(a):
    from .harness import default_seed

    return default_seed() if a.seed is None else a.seed


def cmd_sweep(a):
    from .harness import NormConfig, sweep

    deltas = [float(Fraction(d)) for d in a.deltas.split(",")]
    spec = GeneratorSpec(a.kind, a.n, deltas[0], count=a.count, seed=_seed(a))
    norm = NormConfig(a.norm, a.p, a.k, a.A, a.beta, a.net_size)
    recs = sweep(spec, deltas, norm, out=a.out, workers=a.workers)
    for r in recs:
        print(f"delta={r.delta:.6g} norm={r.norm_value:.10g} tubes={r.tube_count} time={r.wall_time:.2f}s")
    return OK


def cmd_fit(a):
    from .harness import ResultStore, fit_exponent

    store = ResultStore(a.out)
    recs = store.read(a.config)
    hashes = sorted({r.config_hash for r in recs})
    if a.config is None and len(hashes) > 1:
        raise ValueError(f"several configurations in {a.out}; pick one with --config ({', '.join(hashes)})")
    fit = fit_exponent(recs)
    print(json.dumps(fit.to_dict()))
    return OK


def cmd_report(a):
    from .harness import report

    print(report(a.out))
    return OK


def cmd_loglaw(a):
    from .harness import planar_log_law

    r = planar_log_law(seed=_seed(a), out=a.out)
    for d, v in zip(r.deltas, r.ratios):
        print(f"delta={d:.6g} ratio={v:.6f}")
    print(f"slope={r.slope:.4f} r2={r.r_squared:.4f} {'PASS' if r.passed else 'FAIL'}")
    if not r.passed:
        raise ContractFailure("the planar log law did not hold")
    return OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kakeyalab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    e = sub.add_parser("exponents", help="exact exponent tables")
    e.add_argument("what", choices=["table", "dims", "gamma"])
    e.add_argument("--n-max", type=int, default=15)
    e.add_argument("--n", type=int)
    e.add_argument("--m", type=int)
    e.add_argument("--conjecture", choices=["pwa", "maximal"], default="pwa")
    e.add_argument("--format", choices=["text", "csv"], default="text")
    e.set_defaults(func=cmd_exponents)

    n = sub.add_parser("norms", help="L^p and k-broad norms of a tube family")
    n.add_argument("what", choices=["lp", "broad"])
    n.add_argument("--family", required=True)
    n.add_argument("--p", type=float, default=2.0)
    n.add_argument("--k", type=int, default=2)
    n.add_argument("--A", type=int, default=1)
    n.add_argument("--beta", type=_real, default=0.25)
    n.add_argument("--res", type=_real)
    n.add_argument("--net-size", type=int, default=8)
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--per-ball", help="write per-ball CSV here")
    n.set_defaults(func=cmd_norms)

    w = sub.add_parser("wolff", help="empirical Wolff-axiom constants")
    w.add_argument("what", choices=["linear", "poly"])
    w.add_argument("--family", required=True)
    w.add_argument("--shapes", default="builtin")
    w.add_argument("--samples", type=int, default=1000)
    w.add_argument("--count", type=int, default=2000, help="size of the builtin sample")
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--out", help="CSV path (default stdout)")
    w.set_defaults(func=cmd_wolff)

    p = sub.add_parser("partition", help="polynomial partitioning of a planar measure")
    p.add_argument("--measure", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--delta", type=_real, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--family", help="tubes for the crossing certificate")
    p.add_argument("--tubes", type=int, default=20, help="random tubes when no family is given")
    p.add_argument("--out", default="partition_out")
    p.set_defaults(func=cmd_partition)

    g = sub.add_parser("gen", help="generate a tube family")
    g.add_argument("--kind", required=True, choices=KINDS)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--delta", type=_real, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int)
    g.add_argument("--beta", type=_real, default=0.25)
    g.add_argument("--variety", help="variety JSON for tangent_to_variety")
    g.add_argument("--ball-radius", type=float)
    g.add_argument("--extra", help="JSON object of extra generator options")
    g.add_argument("-o", help="output file (default stdout)")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("sweep", help="measure a norm across scales")
    s.add_argument("--kind", default="random_separated", choices=KINDS)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--deltas", required=True, help="comma-separated, decreasing (fractions allowed)")
    s.add_argument("--count", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--norm", choices=["lp", "broad"], default="lp")
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--A", type=int, default=1)
    s.add_argument("--beta", type=_real, default=0.25)
    s.add_argument("--net-size", type=int, default=8)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    fi = sub.add_parser("fit", help="fit the scaling exponent of stored records")
    fi.add_argument("--out", required=True)
    fi.add_argument("--config", help="config hash (needed when several are stored)")
    fi.set_defaults(func=cmd_fit)

    r = sub.add_parser("report", help="summarise stored sweeps")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)

    c = sub.add_parser("loglaw", help="planar L^2 log-law check on a maximal bush")
    c.add_argument("--seed", type=int)
    c.add_argument("--out")
    c.set_defaults(func=cmd_loglaw)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    if a.command == "exponents" and a.what == "gamma" and (a.n is None or a.m is None):
        ap.error("exponents gamma needs --n and --m")
    try:
        return a.func(a)
    except ContractFailure as e:
        print(f"contract failure: {e}", file=sys.stderr)
        return CONTRACT_FAILED
    except (ValueError, ArithmeticError, RuntimeError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
