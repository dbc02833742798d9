import json
from importlib import resources

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasebeam.errors import ConfigError
from phasebeam.harness import (CSV_COLUMNS, ExperimentConfig, converge, emit, fit_slope, run,
                               total_exponent, residual_exponent, verdict)

QUAD = {"n": 1, "potential": [{"exponents": [2], "coeff": 0.5}],
        "S_in": [{"exponents": [1], "coeff": 0.4}, {"exponents": [2], "coeff": -0.3}],
        "A_in": {"kind": "gaussian", "a": 1.0, "center": 0.1}, "k": 1,
        "eps": [0.08, 0.04, 0.02], "times": [0.5], "reference": "exact-quadratic"}


def _schema():
    return json.loads(resources.files("phasebeam").joinpath("report_schema.json").read_text())


@pytest.mark.parametrize("patch", [{"eps": []}, {"eps": [0.01, 0.02, 0.04]}, {"eps": [0.1, 0.05]},
                                   {"k": 4}, {"reference": "magic"}, {"eps": [0.1, -0.1, -0.2]},
                                   {"potential": [{"exponents": [4], "coeff": 1.0}]},
                                   {"times": []}])
def test_config_validation(patch):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(dict(QUAD, **patch))


def test_caustic_reference_requires_focusing_data():
    cfg = dict(QUAD, potential=[], reference="exact-caustic")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(cfg)
    ok = dict(cfg, S_in=[{"exponents": [2], "coeff": -0.5}],
              A_in={"kind": "gaussian", "a": 0.5, "center": 0.0})
    assert ExperimentConfig.from_dict(ok).reference["kind"] == "exact-caustic"


def test_exponents():
    assert total_exponent(1, 1) == 0.25
    assert residual_exponent(3, 1) == 2.25


def test_fit_slope_power_law():
    eps = np.array([0.04, 0.02, 0.01, 0.005])
    fit = fit_slope(eps, 3.0 * eps ** 1.7)
    assert fit["slope"] == pytest.approx(1.7)
    assert fit["stderr"] < 1e-10
    assert np.isnan(fit_slope(eps, np.zeros(4))["slope"])


@settings(max_examples=50, deadline=None)
@given(st.floats(-1, 4), st.floats(0, 3), st.floats(0, 1), st.floats(0, 1))
def test_verdict_monotone_in_tolerance(slope, exponent, tol_a, tol_b):
    loose, tight = max(tol_a, tol_b), min(tol_a, tol_b)
    fit = {"slope": slope, "stderr": 0.0, "intercept": 0.0}
    if verdict(fit, exponent, tight)["pass"]:
        assert verdict(fit, exponent, loose)["pass"]


def test_run_emit_and_determinism(tmp_path):
    cfg = ExperimentConfig.from_dict(QUAD)
    rep = run(cfg)
    js, cs = emit(rep, tmp_path / "a")
    jsonschema.validate(json.loads(js.read_text()), _schema())
    lines = cs.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + len(cfg.eps)
    rep2 = run(cfg, threads=2)
    _, cs2 = emit(rep2, tmp_path / "b")
    assert cs.read_bytes() == cs2.read_bytes()
    for r in rep.rows:
        assert r["wellposed_ok"]
        assert r["time_s"] == 0.5
    print("quadratic fits", {k: round(v["slope"], 3) for k, v in rep.fits.items()})
    assert rep.fits["total"]["exponent"] == 1.0


def test_converge_residual_only():
    cfg = ExperimentConfig.from_dict(dict(QUAD, potential=[{"exponents": [4], "coeff": 0.25}],
                                          reference="spectral"))
    rep = converge(cfg, "residual")
    assert set(rep.fits) == {"residual"}
    assert "err_total" not in rep.rows[0]
    with pytest.raises(ConfigError):
        converge(cfg, "energy")


def test_two_dimensional_smoke():
    cfg = {"n": 2, "potential": [{"exponents": [2, 0], "coeff": 0.5},
                                 {"exponents": [0, 2], "coeff": 0.5},
                                 {"exponents": [2, 2], "coeff": 0.1}],
           "S_in": [{"exponents": [1, 0], "coeff": 0.3}, {"exponents": [0, 2], "coeff": -0.2}],
           "A_in": {"kind": "gaussian", "a": 2.0, "center": [0.0, 0.0]}, "k": 1,
           "eps": [0.2, 0.1], "times": [0.5], "smoke": True, "residual_samples": 3,
           "output_grid": {"dx_over_eps": 0.5}}
    rep = run(ExperimentConfig.from_dict(cfg))
    for r in rep.rows:
        print("n=2 smoke", r["eps"], r["err_total"], r["err_init"], r["resid_l2"])
        assert np.isfinite(r["err_total"]) and r["err_total"] < 1.0
        assert r["wellposed_ok"]
