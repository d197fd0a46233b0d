import csv
import io
import json

import numpy as np
import pytest

from kpzlab.harness import (
    POINT_COLUMNS,
    ConfigError,
    ExperimentConfig,
    ExperimentReport,
    InfeasibleError,
    ReportWriteError,
    replicate_seed,
    run_experiment,
    summarize_report,
    write_report,
)
from kpzlab.noise import ModelParams, NoiseSpec


def small_invariance(**kw):
    base = dict(kind="invariance", params=ModelParams(N=64, beta=1.0, A=0.5), noise=NoiseSpec("gaussian"),
                psi="quadratic", psi_params={"kappa": 0.25}, replicates=6, master_seed=4,
                points=[(0.25, 0.25), (0.5, 0.5)])
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.mark.parametrize("fmt", ["json", "toml"])
def test_config_round_trip(fmt):
    cfg = small_invariance(options={"alpha": 0.05, "profile": "holder"}, out_dir="out")
    back = ExperimentConfig.loads(cfg.dumps(fmt), fmt)
    assert back == cfg
    assert back.config_hash == cfg.config_hash


def test_config_files(tmp_path):
    cfg = small_invariance()
    for suffix, fmt in [(".json", "json"), (".toml", "toml")]:
        p = tmp_path / f"c{suffix}"
        p.write_text(cfg.dumps(fmt))
        assert ExperimentConfig.load(p) == cfg
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "c.yaml")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("kind = [")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(bad)


@pytest.mark.parametrize("change", [
    {"replicates": 0},
    {"points": [(0.0, 0.5)]},
    {"points": [(0.5, 1.5)]},
    {"kind": "unknown"},
    {"options": {"nonsense": 1}},
])
def test_config_invariants(change):
    with pytest.raises(ConfigError):
        small_invariance(**change)


def test_config_from_dict_errors():
    d = small_invariance().to_dict()
    d["extra"] = 1
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(d)
    d = small_invariance().to_dict()
    d["params"]["N"] = 0
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(d)


def test_replicate_seeds_distinct_and_stable():
    seeds = {replicate_seed(1, i, r) for i in range(50) for r in ("model", "polymer", "she")}
    assert len(seeds) == 150
    assert replicate_seed(1, 3) == replicate_seed(1, 3)
    assert replicate_seed(1, 3) != replicate_seed(2, 3)


def test_invariance_report_structure():
    cfg = small_invariance()
    rep = run_experiment(cfg)
    assert len(rep.samples) == len(cfg.points) * cfg.replicates
    assert [list(p) for p in rep.points] and all(set(POINT_COLUMNS) <= set(p) for p in rep.points)
    for v in rep.verdicts:
        assert v.n == cfg.replicates and v.tolerance == 0.01
    text = summarize_report(rep, "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == POINT_COLUMNS and len(rows) == 1 + len(cfg.points)
    assert "\r" not in text
    assert rep.config_hash == cfg.config_hash and rep.seed == 4


def test_verdicts_recomputable_from_samples():
    from kpzlab.stats import ks_two_sample

    rep = run_experiment(small_invariance())
    for pt in rep.points:
        m = [s["model"] for s in rep.samples if (s["x"], s["t"]) == (pt["x"], pt["t"])]
        p = [s["polymer"] for s in rep.samples if (s["x"], s["t"]) == (pt["x"], pt["t"])]
        ks = ks_two_sample(m, p)
        assert ks.D == pt["D"] and ks.p == pt["p"]
        assert np.mean(m) == pytest.approx(pt["mean"], rel=1e-15)


def test_same_stream_polymer_gives_zero_distance():
    cfg = small_invariance(psi="polymer", psi_params={"beta": 1.0}, options={"same_stream": True})
    rep = run_experiment(cfg)
    assert all(p["D"] == 0.0 for p in rep.points)
    assert rep.passed


def test_order_independence():
    # replicate i depends only on (master_seed, i): a run with more replicates extends a shorter one
    a = run_experiment(small_invariance(replicates=3))
    b = run_experiment(small_invariance(replicates=6))
    assert b.samples[: len(a.samples)] == a.samples
    # reported statistics are invariant under permutation of replicates
    from kpzlab.stats import mean_ci

    vals = np.array([s["model"] for s in b.samples if s["x"] == 0.25])
    perm = np.random.default_rng(0).permutation(vals)
    assert mean_ci(perm).mean == pytest.approx(b.points[0]["mean"], rel=1e-14)


def test_report_json_round_trip():
    rep = run_experiment(small_invariance())
    d = json.loads(summarize_report(rep, "json"))
    back = ExperimentReport.from_dict(d)
    assert back.to_dict() == rep.to_dict()
    assert d["passed"] == rep.passed


def test_empty_points_header_only():
    cfg = ExperimentConfig("kernels", ModelParams(N=64, beta=1.0), options={"truncations": [32],
                                                                               "anchor": [32, 64]})
    rep = run_experiment(cfg)
    assert summarize_report(rep, "csv") == ",".join(POINT_COLUMNS) + "\n"
    assert rep.passed
    assert "PASS" in summarize_report(rep, "text")
    with pytest.raises(ValueError):
        summarize_report(rep, "xml")


def test_write_report_byte_identical(tmp_path):
    cfg = small_invariance()
    files_a = write_report(run_experiment(cfg), tmp_path / "a")
    files_b = write_report(run_experiment(cfg), tmp_path / "b")
    assert [f.name for f in files_a] == [f.name for f in files_b]
    for fa, fb in zip(files_a, files_b):
        assert fa.read_bytes() == fb.read_bytes()
    samples = list(csv.DictReader(open(tmp_path / "a" / "samples.csv", encoding="utf-8")))
    assert len(samples) == len(cfg.points) * cfg.replicates


def test_write_failure_has_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    rep = run_experiment(small_invariance(replicates=2))
    with pytest.raises(ReportWriteError, match="file"):
        write_report(rep, blocker / "sub")


def test_infeasible_refused():
    cfg = ExperimentConfig("renorm_mean", ModelParams(N=10**8, beta=1.0), replicates=10**4,
                           points=[(1.0, 1.0)])
    with pytest.raises(InfeasibleError, match="lattice cell"):
        run_experiment(cfg)


def test_nonfinite_replicates_flagged():
    cfg = ExperimentConfig("invariance", ModelParams(N=16, beta=1.0), NoiseSpec("gaussian", 5.0),
                           psi="quadratic", psi_params={"kappa": 40.0}, replicates=4, points=[(1.0, 1.0)],
                           options={"pairing": "literal"})
    # every quadratic replicate blows up, so nothing is left to compare
    with pytest.raises(InfeasibleError, match="non-finite"):
        run_experiment(cfg)


def test_renorm_small():
    cfg = ExperimentConfig("renorm_mean", ModelParams(N=256, beta=1.0), replicates=200, master_seed=1,
                           points=[(0.5, 0.5)], options={"epsilon": 0.5})
    rep = run_experiment(cfg)
    names = [v.name for v in rep.verdicts]
    assert names == ["mean_Y_vs_Vt@(0.5,0.5)", "mean_Y_vs_windowed@(0.5,0.5)"]
    assert rep.verdicts[1].passed
    assert len(rep.samples) == 200


def test_bound_scan_small_beta():
    cfg = ExperimentConfig("bound_scan", ModelParams(N=256, beta=0.25), replicates=10, master_seed=2)
    rep = run_experiment(cfg)
    assert rep.passed
    assert [s["replicate"] for s in rep.samples] == list(range(10))


def test_local_time_small():
    cfg = ExperimentConfig("local_time_scan", ModelParams(N=100, beta=1.0),
                           options={"A_values": [-1.0, 1.0], "n_x": 3, "n_t": 4})
    rep = run_experiment(cfg)
    assert rep.passed and len(rep.verdicts) == 6


def test_simulate_and_polymer_tables(tmp_path):
    for kind in ("simulate", "polymer"):
        cfg = ExperimentConfig(kind, ModelParams(N=64, beta=1.0, A=1.0), psi="quadratic",
                               options={"T": 10, "X_eval": 5})
        rep = run_experiment(cfg)
        assert rep.passed
        name = "interface" if kind == "simulate" else "partition"
        assert len(rep.tables[name]) == 11 * 6
        write_report(rep, tmp_path / kind)
        header = (tmp_path / kind / f"{name}.csv").read_text().splitlines()[0]
        assert header.startswith("x,t,")
