"""Command line entry point: run, converge, caustic-demo, fields-dump."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import PhaseBeamError
from .harness import QUANTITIES, ExperimentConfig, converge, emit, run
from .hamiltonian import HamiltonianModel
from .liouville_grid import eulerian_beam_table, phase_grid
from .polynomial import Polynomial
from .reference import caustic_error_integral, exact_caustic_family, l2_distance, l2_norm
from .superposition import AmplitudeProfile, SuperpositionConfig, assemble, launch
from .wavefield import UniformGrid


def caustic_demo(eps=0.01, beta=1.0, a=0.5, out="caustic_out"):
    """Assemble first-order beams through the free-space focus at t = 1.

    Writes the beam field and the closed forms as CSV and returns a summary dict.
    """
    model = HamiltonianModel(1, Polynomial.zero(1))
    S_in = Polynomial.univariate([0.0, 0.0, -0.5])
    A_in = AmplitudeProfile("gaussian", 1, a, 0.0)
    cfg = SuperpositionConfig(eps, 1, beta)
    beams = launch(model, S_in, A_in, cfg, 1.0, save_times=[0.0, 1.0])
    grid = UniformGrid.with_spacing(-1.0, 1.0, eps / 40.0)
    field = assemble(beams, 1.0, cfg, grid)
    exact, pred = exact_caustic_family(eps, beta, 1.0, grid, a)
    err2 = l2_distance(field, exact) ** 2
    summary = {"eps": eps, "beta": beta, "a": a, "nbeams": int(beams.bundle.nbeams),
               "rel_dist_to_prediction": l2_distance(field, pred) / l2_norm(pred),
               "err_sq": err2, "err_sq_integral": caustic_error_integral(eps, beta, a)}
    summary["err_sq_ratio"] = summary["err_sq"] / summary["err_sq_integral"]
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    field.to_csv(outdir / "beam_field.csv")
    exact.to_csv(outdir / "exact_field.csv")
    pred.to_csv(outdir / "predicted_field.csv")
    (outdir / "caustic.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def fields_dump(cfg: ExperimentConfig, t, out):
    """Eulerian S, g_x, g_p, M, A, w on the configured phase grid at time t."""
    e = cfg.eulerian
    grid = phase_grid(tuple(e.get("x_range", (-2.0, 2.0))), tuple(e.get("p_range", (-2.5, 2.5))),
                      int(e.get("dump_count", 41)))
    tab = eulerian_beam_table(cfg.model(), cfg.S_in, cfg.A_in, cfg.beta, grid, t,
                              float(e.get("dt", 1e-2)))
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    return [f.to_csv(outdir / f"{name}.csv") for name, f in tab.items()]


def _set_threads(n):
    if n and n > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(n))


def build_parser():
    ap = argparse.ArgumentParser(prog="phasebeam",
                                 description="Gaussian beam superposition error studies")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="experiment JSON")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads over eps rows")

    common(sub.add_parser("run", help="initial, residual and total error sweep"))
    p = sub.add_parser("converge", help="single-quantity rate study")
    common(p)
    p.add_argument("--quantity", choices=QUANTITIES, default="total")
    p = sub.add_parser("caustic-demo", help="beams through the free-space focus")
    common(p, config=False)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--a", type=float, default=0.5, help="Gaussian width parameter")
    p = sub.add_parser("fields-dump", help="Eulerian phase-space fields as CSV")
    common(p)
    p.add_argument("--time", type=float, default=1.0)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    _set_threads(args.threads)
    try:
        if args.command == "caustic-demo":
            s = caustic_demo(args.eps, args.beta, args.a, args.out)
            print(f"rel. distance to beam prediction {s['rel_dist_to_prediction']:.3e}")
            print(f"|psi_eps - psi|^2 = {s['err_sq']:.6e}  integral = {s['err_sq_integral']:.6e}")
            return 0
        cfg = ExperimentConfig.load(args.config)
        if args.command == "fields-dump":
            for path in fields_dump(cfg, args.time, args.out):
                print(path)
            return 0
        if args.command == "run":
            report = run(cfg, args.threads)
        else:
            report = converge(cfg, args.quantity, args.threads)
        js, cs = emit(report, args.out)
        for name, fit in report.fits.items():
            note = "  (residual at rounding level)" if fit.get("at_roundoff") else ""
            print(f"{name:10s} slope {fit['slope']:.3f} +- {fit['stderr']:.3f} "
                  f"(need >= {fit['threshold']:.2f})  {'PASS' if fit['pass'] else 'FAIL'}{note}")
        for w in report.warnings:
            print("warning:", w)
        print(js)
        print(cs)
        return 0 if all(report.verdicts.values()) else 1
    except PhaseBeamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
