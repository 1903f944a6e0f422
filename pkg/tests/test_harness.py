import json
import math
import subprocess
import sys

import numpy as np
import pytest

from glimmlab import make_model
from glimmlab.config import ExperimentConfig, FROZEN_CONSTANTS
from glimmlab.errors import ConfigError, RhoTooSmall
from glimmlab.harness import (make_ic, make_sequence, monitor_suite,
                              rho_schedule, run_convergence,
                              write_convergence_csv)
from glimmlab.sampling import vdc_sequence
from glimmlab.scheme import evolve, riemann_ic
from glimmlab import functionals as F


@pytest.fixture(scope="module")
def burgers():
    return make_model("burgers")


def test_make_ic_and_sequence():
    ic = make_ic("riemann:-1,1")
    assert ic.left[0] == -1.0 and ic.right[0] == 1.0
    ic2 = make_ic({"type": "piecewise", "breaks": [0.0], "states": [[1], [0]]})
    assert ic2(1.0)[0] == 0.0
    assert make_sequence("vdc").theta(0) == 0.5
    assert make_sequence("seed:3").kind == "pseudorandom"
    with pytest.raises(ValueError):
        make_sequence("bogus")


def test_convergence_linear_system_ratio_drops():
    lin = make_model("linear2")
    ic = riemann_ic([0.05, 0.0], [0.0, 0.05])
    res = run_convergence(lin, ic, 0.5, [1 / 16, 1 / 32, 1 / 64],
                          vdc_sequence(), reference="exact")
    errs = [r.error for r in res.rows]
    # translation-only dynamics: error dominated by sampling drift
    assert all(np.isfinite(e) for e in errs)
    assert errs[-1] <= errs[0] + 1e-12


def test_convergence_single_rung_slope_nan(burgers):
    ic = riemann_ic([0.4], [0.2])
    res = run_convergence(burgers, ic, 0.5, [1 / 16], vdc_sequence())
    assert math.isnan(res.slope)
    assert len(res.rows) == 1 and not res.rows[0].failed


def test_convergence_csv_roundtrip(tmp_path, burgers):
    ic = riemann_ic([0.4], [0.2])
    res = run_convergence(burgers, ic, 0.5, [1 / 8, 1 / 16], vdc_sequence())
    path = tmp_path / "conv.csv"
    write_convergence_csv(res, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("eps,steps,l1_error")
    assert len(lines) == 4          # header + 2 rows + slope line


def test_convergence_deterministic(burgers):
    ic = riemann_ic([0.4], [0.2])
    a = run_convergence(burgers, ic, 0.5, [1 / 16, 1 / 32], vdc_sequence())
    b = run_convergence(burgers, ic, 0.5, [1 / 16, 1 / 32], vdc_sequence())
    assert [r.error for r in a.rows] == [r.error for r in b.rows]


def test_rho_schedule_interaction_free(burgers):
    eps = 1 / 32
    consts = F.default_constants(0.2, burgers.delta0)
    traj = evolve(burgers, riemann_ic([0.4], [0.2]), eps, 1.0, vdc_sequence(),
                  constants=consts, snapshots="all")
    rho = 0.25
    sched = rho_schedule(traj, rho)
    assert set(sched.kinds) == {1}
    lengths = np.diff(sched.boundaries) * eps
    assert np.all(lengths[:-1] >= rho - eps)     # maximal type-1 intervals
    assert sched.boundaries[-1] == traj.steps


def test_rho_schedule_big_drop_triggers_type2(burgers):
    eps = 1 / 16
    from glimmlab.scheme import piecewise_constant_ic
    ic = piecewise_constant_ic([0.0, eps], [[0.3], [0.1], [-0.2]])
    consts = F.FunctionalConstants(c0=4.0, c=4.0, C=30.0, C1=30.0,
                                   delta0=burgers.delta0)
    traj = evolve(burgers, ic, eps, 1.0, vdc_sequence(), constants=consts,
                  snapshots="all")
    drops = -np.diff([s.Upsilon for s in traj.snapshots])
    rho = 2.5 * eps
    assert drops.max() > rho                     # the merge is a big drop
    sched = rho_schedule(traj, rho)
    assert 2 in sched.kinds
    assert sched.implied_constant == len(sched.kinds) * rho


def test_rho_too_small(burgers):
    consts = F.default_constants(0.2, burgers.delta0)
    traj = evolve(burgers, riemann_ic([0.4], [0.2]), 1 / 16, 0.5,
                  vdc_sequence(), constants=consts, snapshots="all")
    with pytest.raises(RhoTooSmall):
        rho_schedule(traj, 2 / 16)


def test_rho_default_value(burgers):
    eps = 1 / 64
    consts = F.default_constants(0.2, burgers.delta0)
    traj = evolve(burgers, riemann_ic([0.4], [0.2]), eps, 0.5,
                  vdc_sequence(), constants=consts, snapshots="all")
    sched = rho_schedule(traj)
    assert sched.rho == pytest.approx(np.sqrt(eps) * np.log(abs(np.log(eps))))


def test_monitor_zero_constants_fail(burgers):
    cubic = make_model("cubic")
    builder = lambda v0: F.FunctionalConstants(c0=0.0, c=0.0, C=0.0, C1=0.0,
                                               delta0=cubic.delta0)
    rep = monitor_suite(cubic, trials=20, seed=0, constants_builder=builder)
    # with C = c = 0 the functional is V alone, which same-sign same-family
    # interactions can increase
    assert not rep.passed


def test_monitor_ld_system_constant():
    lin = make_model("linear2")
    rep = monitor_suite(lin, trials=5, seed=1, keep_trajectories=True)
    assert rep.passed
    for traj in rep.trajectories:
        ups = [s.Upsilon for s in traj.snapshots]
        assert max(ups) - min(ups) <= 1e-12


def test_config_parsing(tmp_path):
    raw = {"model": {"name": "cubic", "params": {"delta0": 0.04}},
           "ic": "riemann:-1,1", "T": 0.25, "eps_ladder": [0.125, 0.0625],
           "constants": {"c": 8.0}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    cfg = ExperimentConfig.from_json(path)
    assert cfg.model_name == "cubic"
    assert cfg.model_params == {"delta0": 0.04}
    assert cfg.constants["c"] == 8.0
    assert cfg.constants["c0"] == FROZEN_CONSTANTS["c0"]
    model = cfg.build_model()
    assert model.delta0 == 0.04
    consts = cfg.build_constants(0.5, model.delta0)
    assert consts.c == 8.0


def test_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"model": "cubic", "bogus": 1}))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(path)


def _cli(*argv):
    return subprocess.run([sys.executable, "-m", "glimmlab.cli", *argv],
                          capture_output=True, text=True)


def test_cli_riemann_and_exit_codes(tmp_path):
    r = _cli("--out", str(tmp_path), "riemann", "--model", "cubic",
             "--ic", "riemann:-1,1")
    assert r.returncode == 0
    lines = (tmp_path / "riemann.csv").read_text().splitlines()
    assert lines[0].startswith("family,kind,size")
    assert len(lines) == 3


def test_cli_evolve_profile_schema(tmp_path):
    r = _cli("--out", str(tmp_path), "evolve", "--model", "burgers",
             "--ic", "riemann:0.3,0.1", "--eps", "0.125", "--T", "0.5")
    assert r.returncode == 0
    lines = (tmp_path / "profile.csv").read_text().splitlines()
    assert lines[0] == "j,x_left,u_0"


def test_cli_functionals_schema(tmp_path):
    r = _cli("--out", str(tmp_path), "functionals", "--model", "burgers",
             "--ic", "riemann:0.3,0.1", "--eps", "0.125", "--T", "0.5")
    assert r.returncode == 0
    lines = (tmp_path / "functionals.csv").read_text().splitlines()
    assert lines[0] == "i,V,Q1,Qq,Qcubic,Upsilon,dUpsilon,cancellation"
    assert len(lines) == 6          # header + 5 snapshots


def test_cli_discrepancy(tmp_path):
    r = _cli("--out", str(tmp_path), "discrepancy", "--kind", "vdc",
             "--nmax", "128")
    assert r.returncode == 0
    assert "worst normalized ratio" in r.stdout
    header = (tmp_path / "discrepancy.csv").read_text().splitlines()[0]
    assert header == "m,n,D,ratio"


def test_cli_monitor_config_and_violation_exit(tmp_path):
    cfg = {"model": "cubic", "trials": 3, "eps": 0.03125, "T": 0.5,
           "constants": {"c0": 0.0, "c": 0.0, "scale": 0.0}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    r = _cli("--config", str(path), "--out", str(tmp_path), "monitor")
    assert r.returncode in (0, 2)
    good = {"model": "cubic", "trials": 2, "eps": 0.03125, "T": 0.5}
    path.write_text(json.dumps(good))
    r = _cli("--config", str(path), "--out", str(tmp_path), "monitor")
    assert r.returncode == 0


def test_cli_bad_config_is_runtime_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{")
    r = _cli("--config", str(path), "monitor")
    assert r.returncode == 1
    assert "error:" in r.stderr
