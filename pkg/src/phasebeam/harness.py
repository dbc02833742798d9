"""Experiment driver: config parsing, error sweeps, rate fits and reports."""
from __future__ import annotations

import csv
import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .beam_core import integrate_beam_first_order
from .errors import ConfigError
from .flow import DEFAULT_DT
from .hamiltonian import HamiltonianModel
from .liouville_grid import eulerian_beam_table, phase_grid, sample
from .polynomial import Polynomial
from .reference import (GaussianPacket, caustic_exact, domain_half_width,
                        exact_quadratic_propagate, l2_distance, l2_norm, make_run, split_step)
from .superposition import (AmplitudeProfile, SuperpositionConfig, assemble, initial_wave,
                            launch, residual_field)
from .wavefield import WaveField

# expected rate exponents (n-dimensional, order-k beams)
def total_exponent(k, n):
    """Total-error rate k/2 - n/4."""
    return k / 2.0 - n / 4.0


def residual_exponent(k, n):
    """Residual rate k/2 + 1 - n/4."""
    return k / 2.0 + 1.0 - n / 4.0


def initial_exponent(k):
    """Initial-data matching rate (j + 1)/2 with j = k - 1."""
    return k / 2.0


QUADRATIC_TOTAL_EXPONENT = 1.0
SLOPE_TOLERANCE = 0.15
WELLPOSED_SLACK = 0.05
# residual norms below this fraction of the data norm are rounding noise
ROUNDOFF_FLOOR = 1e-10
REFERENCE_KINDS = ("spectral", "exact-quadratic", "exact-caustic")
QUANTITIES = ("total", "residual", "initial", "eulerian-vs-lagrangian")
# characteristic step for the grid sweep; RK4 error stays far below the
# interpolation error at these resolutions
EULERIAN_DT = 1e-2
EULERIAN_EXPONENT = 4.0
EULERIAN_TOLERANCE = 0.3
CSV_COLUMNS = ("eps", "err_total", "err_init", "resid_l2", "time_s")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    potential: Polynomial
    S_in: Polynomial
    A_in: AmplitudeProfile
    k: int
    beta: float
    eps: tuple
    times: tuple
    dt: float = DEFAULT_DT
    h0_policy: dict = field(default_factory=lambda: {"policy": "default", "scale": 1.0})
    delta_c: float = 1.0
    dx_over_eps: float = 0.25
    reference: dict = field(default_factory=lambda: {"kind": "spectral"})
    residual_samples: int = 11
    report: str = "report.json"
    eulerian: dict = field(default_factory=dict)
    smoke: bool = False
    raw: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, cfg):
        try:
            n = int(cfg["n"])
            pot = Polynomial.from_config(n, cfg.get("potential", []))
            S_in = Polynomial.from_config(n, cfg.get("S_in", []))
            A_in = AmplitudeProfile.from_config(n, cfg.get("A_in", {}))
            eps = tuple(float(e) for e in cfg.get("eps", []))
            times = tuple(float(t) for t in cfg.get("times", [1.0]))
            ref = cfg.get("reference", {"kind": "spectral"})
            if isinstance(ref, str):
                ref = {"kind": ref}
            h0 = cfg.get("h0", {"policy": "default", "scale": 1.0})
            if isinstance(h0, (int, float)):
                h0 = {"policy": "fixed", "value": float(h0)}
            out = cls(n=n, potential=pot, S_in=S_in, A_in=A_in, k=int(cfg.get("k", 1)),
                      beta=float(cfg.get("beta", 1.0)), eps=eps, times=times,
                      dt=float(cfg.get("dt", DEFAULT_DT)), h0_policy=dict(h0),
                      delta_c=float(cfg.get("delta_c", 1.0)),
                      dx_over_eps=float(cfg.get("output_grid", {}).get("dx_over_eps", 0.25)),
                      reference=dict(ref), residual_samples=int(cfg.get("residual_samples", 11)),
                      report=str(cfg.get("report", "report.json")),
                      eulerian=dict(cfg.get("eulerian", {})), smoke=bool(cfg.get("smoke", False)),
                      raw=dict(cfg))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid config: {exc}") from exc
        out.validate()
        return out

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def validate(self):
        if not self.eps:
            raise ConfigError("eps list is empty")
        if any(e <= 0 for e in self.eps):
            raise ConfigError("eps values must be positive")
        if any(b >= a for a, b in zip(self.eps, self.eps[1:])):
            raise ConfigError("eps list must be strictly decreasing")
        if len(self.eps) < 3 and not self.smoke:
            raise ConfigError("rate fits need at least three eps values")
        if self.k not in (1, 2, 3):
            raise ConfigError(f"k={self.k} not supported")
        if self.beta <= 0 or self.dt <= 0 or self.dx_over_eps <= 0:
            raise ConfigError("beta, dt and dx_over_eps must be positive")
        if not self.times or any(t < 0 for t in self.times):
            raise ConfigError("times must be a non-empty list of non-negative values")
        if self.reference.get("kind") not in REFERENCE_KINDS:
            raise ConfigError(f"reference kind must be one of {REFERENCE_KINDS}")
        if self.h0_policy.get("policy", "default") not in ("default", "fixed"):
            raise ConfigError("h0 policy must be 'default' or 'fixed'")
        if self.A_in.n != self.n:
            raise ConfigError("A_in dimension mismatch")
        kind = self.reference["kind"]
        if kind == "exact-quadratic":
            if self.potential.degree > 2 or self.S_in.degree > 2 or self.A_in.kind != "gaussian":
                raise ConfigError("exact-quadratic reference needs quadratic V, S_in and a "
                                  "Gaussian A_in")
        if kind == "exact-caustic":
            if (self.n != 1 or not self.potential.is_zero()
                    or self.S_in != Polynomial.univariate([0, 0, -0.5])
                    or self.A_in.kind != "gaussian" or abs(self.A_in.center[0]) > 0
                    or max(self.times) > 1.0):
                raise ConfigError("exact-caustic reference needs V = 0, S_in = -x^2/2, a centred "
                                  "Gaussian A_in and t <= 1")

    @property
    def T(self):
        return max(self.times)

    @property
    def quadratic(self):
        return self.potential.degree <= 2 and self.S_in.degree <= 2

    def model(self):
        return HamiltonianModel(self.n, self.potential, max(8, self.k + 3))

    def superposition(self, eps):
        h0 = None
        scale = float(self.h0_policy.get("scale", 1.0))
        if self.h0_policy.get("policy", "default") == "fixed":
            h0 = float(self.h0_policy["value"])
        return SuperpositionConfig(eps, self.k, self.beta, h0, scale, self.delta_c)

    def to_dict(self):
        return {"n": self.n, "potential": self.potential.to_config(),
                "S_in": self.S_in.to_config(), "A_in": self.A_in.to_config(), "k": self.k,
                "beta": self.beta, "eps": list(self.eps), "times": list(self.times),
                "dt": self.dt, "h0": dict(self.h0_policy), "delta_c": self.delta_c,
                "output_grid": {"dx_over_eps": self.dx_over_eps},
                "reference": dict(self.reference), "residual_samples": self.residual_samples,
                "report": self.report}


@dataclass
class RateReport:
    quantity: str
    config: dict
    rows: list
    fits: dict
    warnings: list
    verdicts: dict

    def to_dict(self):
        return {"quantity": self.quantity, "config": self.config, "rows": self.rows,
                "fits": self.fits, "warnings": self.warnings, "verdicts": self.verdicts}


def fit_slope(x, y):
    """Least-squares slope of log y against log x with its standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.any(y <= 0) or not np.all(np.isfinite(y)):
        return {"slope": float("nan"), "stderr": float("nan"), "intercept": float("nan")}
    if x.size == 2:
        s = float(np.diff(np.log(y))[0] / np.diff(np.log(x))[0])
        return {"slope": s, "stderr": float("nan"), "intercept": float(np.log(y[0]) - s * np.log(x[0]))}
    r = stats.linregress(np.log(x), np.log(y))
    return {"slope": float(r.slope), "stderr": float(r.stderr), "intercept": float(r.intercept)}


def verdict(fit, exponent, tol=SLOPE_TOLERANCE):
    """Expected rates are upper bounds on the error: pass when slope >= exponent - tol."""
    out = dict(fit)
    out["exponent"] = exponent
    out["threshold"] = exponent - tol
    out["pass"] = bool(np.isfinite(fit["slope"]) and fit["slope"] >= exponent - tol)
    return out


def _monotone(values, floor=0.0):
    """Strictly decreasing, ignoring sequences that sit entirely at the noise floor."""
    v = np.asarray(values)
    if np.all(v <= floor):
        return True
    return bool(np.all(np.diff(v) < 0))


# ---------------------------------------------------------------------------
# per-eps evaluation
# ---------------------------------------------------------------------------

def _sample_times(cfg):
    T = cfg.T
    base = np.linspace(0.0, T, max(2, cfg.residual_samples)) if T > 0 else np.zeros(1)
    return np.unique(np.concatenate([base, np.asarray(cfg.times), [0.0]]))


def _excursion(beams):
    b = beams.bundle
    amp = np.abs(b.A[0])
    sel = amp > 1e-10 * amp.max()
    return float(np.max(np.abs(b.x[:, sel])))


def _reference_fields(cfg, model, eps, grid, run):
    """psi_ref at every time in cfg.times (dict time -> WaveField)."""
    kind = cfg.reference["kind"]
    out = {}
    if kind == "spectral":
        psi = initial_wave(cfg.S_in, cfg.A_in, eps, grid)
        t_prev = 0.0
        for t in sorted(cfg.times):
            if t > t_prev:
                psi = split_step(run, psi, t - t_prev)
                t_prev = t
            out[t] = WaveField(grid, psi.values, t, eps)
    elif kind == "exact-quadratic":
        packet = GaussianPacket.from_data(cfg.S_in, cfg.A_in.center, cfg.A_in.a, eps)
        for t in cfg.times:
            out[t] = exact_quadratic_propagate(model, packet, t, eps, grid)
    else:
        x = grid.axes[0]
        for t in cfg.times:
            out[t] = WaveField(grid, caustic_exact(x, eps, t, cfg.A_in.a), t, eps)
    return out


def evaluate_eps(cfg: ExperimentConfig, eps, quantities=("total", "residual", "initial")):
    """One row of the rate table."""
    t0 = time.perf_counter()
    model = cfg.model()
    sc = cfg.superposition(eps)
    ts = _sample_times(cfg)
    beams = launch(model, cfg.S_in, cfg.A_in, sc, cfg.T, save_times=ts, dt=cfg.dt)
    L = domain_half_width(_excursion(beams), eps)
    ref_cfg = cfg.reference
    order = int(ref_cfg.get("order", 2))
    ref_dt = float(ref_cfg.get("dt_over_eps", 0.05)) * eps
    run = make_run(model, eps, L, dx_max=cfg.dx_over_eps * eps, dt=ref_dt, order=order)
    grid = run.grid
    row = {"eps": eps, "nbeams": int(beams.bundle.nbeams), "grid_points": int(np.prod(grid.shape)),
           "delta_c_min": float(np.min(beams.delta)), "time_s": cfg.T}
    psi_in = initial_wave(cfg.S_in, cfg.A_in, eps, grid)
    row["norm_in"] = l2_norm(psi_in)
    if "initial" in quantities or "total" in quantities:
        f0 = assemble(beams, 0.0, sc, grid)
        row["err_init"] = l2_distance(f0, psi_in)
    if "residual" in quantities or "total" in quantities:
        res = [l2_norm(residual_field(beams, t, sc, grid, model)) for t in ts]
        row["resid_times"] = [float(t) for t in ts]
        row["resid_by_time"] = res
        row["resid_l2"] = float(max(res))
    if "total" in quantities:
        refs = _reference_fields(cfg, model, eps, grid, run)
        by_time, ok = {}, True
        checks = {}
        for t in sorted(cfg.times):
            f = assemble(beams, t, sc, grid)
            err = l2_distance(f, refs[t])
            by_time[repr(float(t))] = err
            sel = ts <= t + 1e-12
            integ = float(np.trapezoid(np.asarray(res)[sel], ts[sel]) / eps) if sel.sum() > 1 else 0.0
            bound = row["err_init"] + integ
            checks[repr(float(t))] = {"err_total": err, "bound": bound,
                                      "ok": bool(err <= (1.0 + WELLPOSED_SLACK) * bound)}
            ok &= checks[repr(float(t))]["ok"]
        row["err_total_by_time"] = by_time
        row["err_total"] = by_time[repr(float(cfg.T))]
        row["wellposed"] = checks
        row["wellposed_ok"] = bool(ok)
        row["norm_beam"] = l2_norm(f)
    row["wall_time_s"] = time.perf_counter() - t0
    return row


def _map_rows(cfg, fn, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, cfg.eps))
    return [fn(e) for e in cfg.eps]


def _fits(cfg, rows, quantities):
    eps = [r["eps"] for r in rows]
    fits, warn = {}, []
    if "total" in quantities:
        exp = QUADRATIC_TOTAL_EXPONENT if cfg.quadratic else total_exponent(cfg.k, cfg.n)
        fits["total"] = verdict(fit_slope(eps, [r["err_total"] for r in rows]), exp)
        if not _monotone([r["err_total"] for r in rows]):
            warn.append("total error is not monotone in eps")
        if not all(r["wellposed_ok"] for r in rows):
            warn.append("well-posedness inequality violated on some row")
    if "residual" in quantities:
        res = [r["resid_l2"] for r in rows]
        floor = ROUNDOFF_FLOOR * max(r["norm_in"] for r in rows)
        fits["residual"] = verdict(fit_slope(eps, res), residual_exponent(cfg.k, cfg.n))
        if max(res) <= floor:
            # an identically vanishing residual beats any rate
            fits["residual"]["pass"] = True
            fits["residual"]["at_roundoff"] = True
        if not _monotone(res, floor):
            warn.append("residual norm is not monotone in eps")
    if "initial" in quantities:
        fits["initial"] = verdict(fit_slope(eps, [r["err_init"] for r in rows]),
                                  initial_exponent(cfg.k))
        if not _monotone([r["err_init"] for r in rows]):
            warn.append("initial error is not monotone in eps")
    return fits, warn


def run(cfg: ExperimentConfig, threads=1) -> RateReport:
    """Full sweep: initial error, residual and total error for every eps."""
    quantities = ("total", "residual", "initial")
    rows = _map_rows(cfg, lambda e: evaluate_eps(cfg, e, quantities), threads)
    fits, warn = _fits(cfg, rows, quantities) if len(rows) >= 2 else ({}, [])
    for w in warn:
        warnings.warn(w)
    verdicts = {name: f["pass"] for name, f in fits.items()}
    if rows and "wellposed_ok" in rows[0]:
        verdicts["wellposed"] = all(r["wellposed_ok"] for r in rows)
    return RateReport("run", cfg.to_dict(), rows, fits, [], verdicts)


def converge(cfg: ExperimentConfig, quantity, threads=1) -> RateReport:
    """Single-quantity sweep with a slope fit."""
    if quantity not in QUANTITIES:
        raise ConfigError(f"quantity must be one of {QUANTITIES}")
    if quantity == "eulerian-vs-lagrangian":
        return eulerian_convergence(cfg)
    needs = {"total": ("total", "residual", "initial"), "residual": ("residual",),
             "initial": ("initial",)}[quantity]
    rows = _map_rows(cfg, lambda e: evaluate_eps(cfg, e, needs), threads)
    fits, warn = _fits(cfg, rows, (quantity,)) if len(rows) >= 2 else ({}, [])
    for w in warn:
        warnings.warn(w)
    return RateReport(quantity, cfg.to_dict(), rows, fits, [],
                      {name: f["pass"] for name, f in fits.items()})


def eulerian_convergence(cfg: ExperimentConfig) -> RateReport:
    """Grid fields vs Lagrangian beams at probe rays under grid refinement.

    ``cfg.eulerian`` holds ``x_range``, ``p_range``, ``counts`` (increasing),
    ``probes`` (initial positions), ``times`` and the characteristic step ``dt``.
    """
    if cfg.n != 1:
        raise ConfigError("the Eulerian sweep runs on n = 1 phase grids")
    e = cfg.eulerian
    x_range = tuple(e.get("x_range", (-2.0, 2.0)))
    p_range = tuple(e.get("p_range", (-2.5, 2.5)))
    counts = [int(c) for c in e.get("counts", (41, 81, 161))]
    probes = np.asarray(e.get("probes", np.linspace(-0.4, 0.4, 9)), dtype=float)
    times = [float(t) for t in e.get("times", (0.5, 1.0))]
    grid_dt = float(e.get("dt", EULERIAN_DT))
    model = cfg.model()
    beams = [[integrate_beam_first_order(model, x0, cfg.S_in, cfg.beta, t, cfg.dt,
                                         A0=float(cfg.A_in(x0))) for x0 in probes] for t in times]
    rows = []
    for N in counts:
        t0 = time.perf_counter()
        grid = phase_grid(x_range, p_range, N)
        err = 0.0
        for t, recs in zip(times, beams):
            tab = eulerian_beam_table(model, cfg.S_in, cfg.A_in, cfg.beta, grid, t, grid_dt)
            for r in recs:
                X = np.array([r.x[-1, 0], r.p[-1, 0]])
                err = max(err,
                          abs(sample(tab["S"], X) - r.S[-1]),
                          abs(sample(tab["M"], X)[0, 0] - r.M[-1, 0, 0]),
                          abs(sample(tab["A"], X) - r.A[-1]),
                          abs(sample(tab["w"], X)))
        rows.append({"h": grid.spacing[0], "count": N, "err": float(err),
                     "wall_time_s": time.perf_counter() - t0})
    fit = fit_slope([r["h"] for r in rows], [r["err"] for r in rows])
    fits = {"eulerian": verdict(fit, EULERIAN_EXPONENT, EULERIAN_TOLERANCE)}
    return RateReport("eulerian-vs-lagrangian", cfg.to_dict(), rows, fits, [],
                      {"eulerian": fits["eulerian"]["pass"]})


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def emit(report: RateReport, path):
    """Write report.json and rates.csv into directory ``path``."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(_jsonable(report.to_dict()), indent=2,
                                                sort_keys=True) + "\n")
    with open(out / "rates.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in report.rows:
            w.writerow([repr(float(r.get(c, float("nan")))) for c in CSV_COLUMNS])
    return out / "report.json", out / "rates.csv"
