import json
import os

import pytest

from pinlab import ConfigError, DomainError, verdict_from_series
from pinlab.cli import main as cli_main
from pinlab.experiments import (cfg_float, cfg_floats, cfg_int,
                                exceptional_probe, parse_config_text,
                                sweep_threshold)


def test_parse_config_text():
    cfg = parse_config_text("""
# comment line
phase = euclidean
level = 5            # trailing comment
epsilons = 2^-3 2^-4
ratio_a = 0.25
""")
    assert cfg["phase"] == "euclidean"
    assert cfg_int(cfg, "level") == 5
    assert cfg_floats(cfg, "epsilons") == [0.125, 0.0625]
    assert cfg_float(cfg, "ratio_a") == 0.25
    assert cfg_float(cfg, "missing", 1.5) == 1.5
    with pytest.raises(ConfigError):
        cfg_float(cfg, "missing")
    with pytest.raises(ConfigError):
        parse_config_text("just a line without equals")
    with pytest.raises(ConfigError):
        cfg_int(parse_config_text("level = 2.5"), "level")


def test_verdict_rule_pure_function():
    assert verdict_from_series([1.0, 0.9, 0.85, 0.84]) == "STABLE"
    assert verdict_from_series([1.0, 0.8, 0.65, 0.55]) == "SHRINKING"
    # monotone but shallow: neither shrinking (cumulative < 30%) nor unstable
    assert verdict_from_series([1.0, 0.95, 0.91, 0.88]) == "STABLE"
    # non-monotone with a big last step
    assert verdict_from_series([1.0, 1.4, 0.9]) == "MIXED"
    # per-step mode requires every step to lose 30%
    assert verdict_from_series([1.0, 0.65, 0.42], shrink_mode="per_step") == "SHRINKING"
    assert verdict_from_series([1.0, 0.8, 0.55], shrink_mode="per_step") == "MIXED"
    with pytest.raises(DomainError):
        verdict_from_series([1.0])
    with pytest.raises(DomainError):
        verdict_from_series([1.0, 0.5], shrink_mode="nope")


def sweep_cfg(**over):
    cfg = {"d": "2", "dims": "1.0 1.8", "epsilons": "2^-3 2^-4 2^-5",
           "level": "4", "pins": "4", "seed": "3"}
    cfg.update({k: str(v) for k, v in over.items()})
    return cfg


def test_sweep_structure_and_annotations():
    rep = sweep_threshold(sweep_cfg())
    assert set(rep.verdicts) == {1.0, 1.8}
    assert rep.annotations[1.8]["exceptional_bound"] == pytest.approx(1.2)
    assert rep.annotations[1.8]["above_threshold"] is True
    assert rep.annotations[1.0]["above_threshold"] is False
    assert len(rep.rows) == 2 * 4 * 3
    assert len(rep.energy_rows) == 2 * 3
    for r in rep.rows:
        if not r["error"]:
            assert r["mass"] == pytest.approx(1.0, abs=1e-6)


def test_sweep_error_cells_isolated():
    # t_step_divisor = 1 makes dt = eps > eps/2: every cell fails, sweep survives
    rep = sweep_threshold(sweep_cfg(t_step_divisor=1))
    assert all(r["error"] for r in rep.rows)
    assert all(v == "ERROR" for v in rep.verdicts.values())


def test_sweep_precondition_errors():
    with pytest.raises(ConfigError):
        sweep_threshold(sweep_cfg(dims="1.5"))
    with pytest.raises(ConfigError):
        sweep_threshold(sweep_cfg(epsilons="2^-3"))


def test_sweep_verdicts_rederivable_from_rows():
    # the verdict is a pure function of the report rows
    import numpy as np
    from pinlab import verdict_from_series
    rep = sweep_threshold(sweep_cfg())
    for dim, verdict in rep.verdicts.items():
        by_eps = {}
        for r in rep.rows:
            if r["dim"] == dim and not r["error"]:
                by_eps.setdefault(r["eps"], []).append(r["cs_lower_bound"])
        series = [float(np.median(by_eps[e])) for e in sorted(by_eps, reverse=True)]
        assert verdict_from_series(series) == verdict


def test_sweep_jobs_invariance():
    r1 = sweep_threshold(sweep_cfg(), jobs=1)
    r2 = sweep_threshold(sweep_cfg(), jobs=4)
    for a, b in zip(r1.rows, r2.rows):
        assert a == b
    assert r1.verdicts == r2.verdicts


def probe_cfg(**over):
    cfg = {"generator": "circle", "n_atoms": "256", "d": "2",
           "pin_policy": "fixed", "pin": "0.5 0.5", "pins": "50",
           "epsilons": "2^-6 2^-7", "floor": "0.1", "seed": "3"}
    cfg.update({k: str(v) for k, v in over.items()})
    return cfg


def test_probe_circle_toy_flags_everything():
    rep = exceptional_probe(probe_cfg())
    # every pin sits at the center: the pinned set is the single value 1/4
    assert all(v == 1.0 for v in rep.flagged_fraction.values())
    assert len(rep.persistent_pins) == 50


def test_probe_lebesgue_square_flags_nothing():
    cfg = probe_cfg(generator="uniform", per_side="24", pin_policy="mu",
                    floor="0.1", epsilons="2^-5 2^-6")
    rep = exceptional_probe(cfg)
    assert all(v == 0.0 for v in rep.flagged_fraction.values())
    assert rep.persistent_pins == []


def test_probe_needs_fifty_pins():
    with pytest.raises(ConfigError):
        exceptional_probe(probe_cfg(pins="10"))


def write_cfg(tmp_path, name, body):
    path = tmp_path / name
    path.write_text(body)
    return str(path)


PINNED_CFG = """
generator = product_cantor
d = 2
ratio_a = 0.3333333333333333
level = 4
phase = euclidean
pins = 3
epsilons = 2^-4 2^-5
seed = 11
"""


def test_cli_pinned_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, "p.cfg", PINNED_CFG)
    out1, out2 = str(tmp_path / "r1"), str(tmp_path / "r2")
    assert cli_main(["pinned", "--config", cfg, "--out", out1]) == 0
    assert cli_main(["pinned", "--config", cfg, "--out", out2]) == 0
    for name in ("pinned_summary.csv", "density_pin0_eps0.csv"):
        a = open(os.path.join(out1, name), "rb").read()
        b = open(os.path.join(out2, name), "rb").read()
        assert a == b
    man = json.load(open(os.path.join(out1, "manifest.json")))
    assert man["command"] == "pinned" and man["seed"] == 11
    assert set(man["versions"]) == {"pinlab", "numpy", "scipy"}


def test_cli_seed_override_changes_output(tmp_path):
    cfg = write_cfg(tmp_path, "p.cfg", PINNED_CFG)
    out1, out2 = str(tmp_path / "s1"), str(tmp_path / "s2")
    assert cli_main(["pinned", "--config", cfg, "--out", out1]) == 0
    assert cli_main(["pinned", "--config", cfg, "--out", out2, "--seed", "99"]) == 0
    a = open(os.path.join(out1, "pinned_summary.csv")).read()
    b = open(os.path.join(out2, "pinned_summary.csv")).read()
    assert a != b


def test_cli_exit_codes(tmp_path):
    assert cli_main(["pinned", "--config", str(tmp_path / "absent.cfg"),
                     "--out", str(tmp_path / "o")]) == 2
    bad = write_cfg(tmp_path, "bad.cfg", "generator = nosuch\nseed = 1\n")
    assert cli_main(["gen", "--config", bad, "--out", str(tmp_path / "o2")]) == 2
    big = write_cfg(tmp_path, "big.cfg",
                    "generator = product_cantor\nd = 2\nratio_a = 0.3\nlevel = 20\nseed = 1\n")
    assert cli_main(["gen", "--config", big, "--out", str(tmp_path / "o3")]) == 3


def test_cli_regression_freeze_and_mismatch(tmp_path):
    cfg = write_cfg(tmp_path, "h.cfg", """
generator = product_cantor
d = 2
ratio_a = 0.44
level = 3
phase = euclidean
pins = 8
epsilons = 2^-3
seed = 5
""")
    out = str(tmp_path / "h")
    assert cli_main(["hinge", "--config", cfg, "--out", out,
                     "--regression-freeze"]) == 0
    assert os.path.exists(os.path.join(out, "golden", "hinge.csv"))
    assert cli_main(["hinge", "--config", cfg, "--out", out]) == 0
    cfg2 = write_cfg(tmp_path, "h2.cfg", open(cfg).read().replace("seed = 5", "seed = 6"))
    assert cli_main(["hinge", "--config", cfg2, "--out", out]) == 4


def test_cli_gen_writes_cells_and_measure(tmp_path):
    cfg = write_cfg(tmp_path, "g.cfg", """
generator = subdivision
d = 2
base_b = 2
keep_m = 3
level = 4
seed = 9
""")
    out = str(tmp_path / "g")
    assert cli_main(["gen", "--config", cfg, "--out", out]) == 0
    from pinlab import load_cells, load_measure
    f = load_cells(os.path.join(out, "cells.txt"))
    assert len(f.digits) == 3 ** 4
    mu = load_measure(os.path.join(out, "measure.csv"))
    assert len(mu) == 3 ** 4
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert summary["atoms"] == 81


def test_cli_sweep_and_probe_outputs(tmp_path):
    scfg = write_cfg(tmp_path, "s.cfg", """
d = 2
dims = 1.0 1.8
epsilons = 2^-3 2^-4
level = 3
pins = 3
seed = 2
""")
    out = str(tmp_path / "s")
    assert cli_main(["sweep", "--config", scfg, "--out", out, "--jobs", "2"]) == 0
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert set(summary["verdicts"]) == {"1.0", "1.8"}
    rows = open(os.path.join(out, "sweep_rows.csv")).read().splitlines()
    assert rows[0] == "dim,pin,eps,mass,cs_lower_bound,support,error"
    assert len(rows) == 1 + 2 * 3 * 2

    pcfg = write_cfg(tmp_path, "pr.cfg", """
generator = circle
n_atoms = 128
d = 2
pin_policy = fixed
pin = 0.5 0.5
pins = 50
epsilons = 2^-6
floor = 0.1
seed = 2
""")
    pout = str(tmp_path / "pr")
    assert cli_main(["probe", "--config", pcfg, "--out", pout]) == 0
    psum = json.load(open(os.path.join(pout, "summary.json")))
    assert psum["flagged_fraction"]["0.015625"] == 1.0


def test_cli_config_count_and_chain(tmp_path):
    ccfg = write_cfg(tmp_path, "cc.cfg", """
generator = uniform
d = 2
per_side = 4
phase = euclidean
edges = 1-2 2-3
t_assignment = 1-2:0.5 2-3:0.5
epsilons = 2^-3
lift = 1
seed = 1
""")
    out = str(tmp_path / "cc")
    assert cli_main(["config-count", "--config", ccfg, "--out", out]) == 0
    lines = open(os.path.join(out, "config_counts.csv")).read().splitlines()
    assert lines[0] == "eps,count_normalized,stderr,samples,n_edges"
    assert os.path.exists(os.path.join(out, "edge_map_lifted.txt"))

    chcfg = write_cfg(tmp_path, "ch.cfg", """
generator = product_cantor
d = 2
ratio_a = 0.3333333333333333
level = 3
phase = euclidean
k = 2
epsilon = 2^-3
mc_samples = 1024
seed = 4
""")
    chout = str(tmp_path / "ch")
    assert cli_main(["chain", "--config", chcfg, "--out", chout]) == 0
    summary = json.load(open(os.path.join(chout, "summary.json")))
    assert summary["mass"] == pytest.approx(1.0, abs=max(3 * summary["mass_stderr"], 5e-3))
