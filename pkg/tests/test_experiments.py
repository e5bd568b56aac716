import csv
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from roiexplore.experiments import (
    ExperimentPlan,
    execute_run,
    run_balance_sweep,
    run_plan,
    summarize,
)
from roiexplore.explorer import UnknownFeature

TINY = dict(system="gray_scott", methods=("R", "NRAB"), seeds=(0, 1),
            budget=12, n_init=4, rollout_steps=50,
            roi={"volume": [0.0, 0.5]})


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundle")
    plan = ExperimentPlan(**TINY, save_patterns=True, output_dir=str(out))
    run_plan(plan)
    return out, plan


# --------------------------------------------------------------------------
# plan construction

def test_plan_validation():
    with pytest.raises(ValueError):
        ExperimentPlan(system="gray_scott", methods=())
    with pytest.raises(ValueError):
        ExperimentPlan(system="gray_scott", seeds=())
    with pytest.raises(UnknownFeature):
        ExperimentPlan(system="gray_scott", roi={"bogus": [0, 1]})
    with pytest.raises(ValueError):
        ExperimentPlan(system="gray_scott", roi={"volume": [0.7, 0.6]})


def test_plan_from_file_resolves_relative_output_dir(tmp_path):
    plan_file = tmp_path / "plan.json"
    plan_file.write_text(json.dumps({
        "system": "gray_scott", "methods": ["R"], "seeds": [0, 3],
        "budget": 10, "n_init": 2, "output_dir": "out"}))
    plan = ExperimentPlan.from_file(plan_file)
    assert plan.methods == ("R",)
    assert plan.seeds == (0, 3)
    assert Path(plan.output_dir) == tmp_path / "out"


def test_plan_from_file_keeps_absolute_output_dir(tmp_path):
    plan_file = tmp_path / "plan.json"
    plan_file.write_text(json.dumps({
        "system": "gray_scott", "output_dir": "/tmp/elsewhere"}))
    plan = ExperimentPlan.from_file(plan_file)
    assert plan.output_dir == "/tmp/elsewhere"


# --------------------------------------------------------------------------
# single runs

def test_execute_run_shapes_and_acceptance():
    plan = ExperimentPlan(**TINY)
    result = execute_run(plan, "R", seed=0)
    assert len(result.history) == plan.budget
    assert result.eval_features.shape == (plan.budget, 13)
    assert np.isfinite(result.eval_features).all()
    cls = result.history.classifications()[plan.n_init:]
    assert result.acceptance == pytest.approx((cls == 1).mean())
    assert result.mean_time_per_sample > 0
    # Observations are dropped after feature extraction.
    assert all(e.observation is None for e in result.history)


def test_execute_run_deterministic_across_calls():
    plan = ExperimentPlan(**TINY)
    a = execute_run(plan, "NRAB", seed=1)
    b = execute_run(plan, "NRAB", seed=1)
    np.testing.assert_array_equal(a.eval_features, b.eval_features)
    for ea, eb in zip(a.history, b.history):
        np.testing.assert_array_equal(ea.params, eb.params)


# --------------------------------------------------------------------------
# full bundles

def test_bundle_layout(bundle):
    out, plan = bundle
    for method in plan.methods:
        for seed in plan.seeds:
            assert (out / "runs" / f"{method}_{seed}.jsonl").is_file()
    for name in ("diversity.csv", "diversity_summary.csv",
                 "acceptance.csv", "manifest.json"):
        assert (out / name).is_file()


def test_diversity_csv_contents(bundle):
    out, plan = bundle
    with open(out / "diversity.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(plan.methods) * len(plan.seeds) * plan.budget
    by_run = {}
    for r in rows:
        by_run.setdefault((r["method"], r["seed"]), []).append(r)
    for series in by_run.values():
        assert [int(r["sample_index"]) for r in series] == list(
            range(plan.budget))
        g = [int(r["global_diversity"]) for r in series]
        c = [int(r["constrained_diversity"]) for r in series]
        assert all(a <= b for a, b in zip(g, g[1:]))       # non-decreasing
        assert all(a <= b for a, b in zip(c, c[1:]))
        assert all(ci <= gi for gi, ci in zip(g, c))       # constrained <= global
        assert all(r["inlier_flag"] in ("0", "1") for r in series)


def test_acceptance_csv_contents(bundle):
    out, plan = bundle
    with open(out / "acceptance.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(plan.methods) * len(plan.seeds)
    for r in rows:
        acc = float(r["acceptance_rate"])
        tps = float(r["time_per_sample_s"])
        tpi = float(r["time_per_inlier_s"])
        assert 0.0 <= acc <= 1.0
        assert tps > 0
        if acc > 0:
            assert tpi == pytest.approx(tps / acc, rel=1e-3)


def test_diversity_summary_curves(bundle):
    out, plan = bundle
    with open(out / "diversity_summary.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(plan.methods) * plan.budget
    assert {r["method"] for r in rows} == set(plan.methods)
    for r in rows:
        assert float(r["global_mean"]) >= float(r["constrained_mean"]) >= 0


def test_manifest_hashes_match_file_contents(bundle):
    out, plan = bundle
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["failures"] == []
    assert manifest["plan"]["system"] == "gray_scott"
    assert manifest["plan"]["budget"] == plan.budget
    assert manifest["files"]  # non-empty
    for rel, digest in manifest["files"].items():
        p = out / rel
        assert p.is_file()
        assert hashlib.sha256(p.read_bytes()).hexdigest() == digest
    assert "manifest.json" not in manifest["files"]


def test_history_jsonl_fields_and_pattern_links(bundle):
    out, plan = bundle
    path = out / "runs" / "NRAB_0.jsonl"
    lines = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(lines) == plan.budget
    for i, rec in enumerate(lines):
        assert rec["index"] == i
        assert len(rec["params"]) == 2          # gray-scott: (f, k)
        assert len(rec["behavior"]) == 9
        assert set(rec["constraint_features"]) == {
            "volume", "mean_pixel", "tamura_coarseness",
            "tamura_contrast", "tamura_directionality"}
        assert rec["classification"] in (-1, 1)
        png = (path.parent / rec["observation_id"]).resolve()
        assert png.is_file()
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_rerun_is_byte_identical_apart_from_timing(bundle, tmp_path):
    out, plan = bundle
    plan2 = ExperimentPlan(**TINY, save_patterns=True,
                           output_dir=str(tmp_path / "again"))
    out2 = run_plan(plan2)
    assert ((out / "diversity.csv").read_bytes()
            == (out2 / "diversity.csv").read_bytes())
    for method in plan.methods:
        for seed in plan.seeds:
            rel = f"runs/{method}_{seed}.jsonl"
            assert (out / rel).read_bytes() == (out2 / rel).read_bytes()
    # acceptance.csv timing columns vary; the rest must agree.
    def stable_cols(p):
        with open(p, newline="") as fh:
            return [(r["method"], r["seed"], r["acceptance_rate"])
                    for r in csv.DictReader(fh)]
    assert stable_cols(out / "acceptance.csv") == stable_cols(
        out2 / "acceptance.csv")


def test_summarize_aggregates_acceptance(bundle):
    out, plan = bundle
    summary = summarize(out)
    assert set(summary) == set(plan.methods)
    with open(out / "acceptance.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    for method in plan.methods:
        accs = [float(r["acceptance_rate"]) for r in rows
                if r["method"] == method]
        assert summary[method]["acceptance_rate"] == pytest.approx(
            np.mean(accs))
        assert summary[method]["n_runs"] == len(plan.seeds)
        if summary[method]["acceptance_rate"] > 0:
            assert summary[method]["time_per_inlier_s"] == pytest.approx(
                summary[method]["time_per_sample_s"]
                / summary[method]["acceptance_rate"])


def test_failed_runs_recorded_not_fatal(tmp_path):
    # budget < n_init makes the explorer config invalid for every run.
    plan = ExperimentPlan(system="gray_scott", methods=("R",), seeds=(0, 1),
                          budget=3, n_init=10, rollout_steps=10,
                          output_dir=str(tmp_path / "broken"))
    out = run_plan(plan)
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["failures"]) == 2
    for f in manifest["failures"]:
        assert f["method"] == "R"
        assert "error" in f and "traceback" in f
    assert not (out / "acceptance.csv").exists()


# --------------------------------------------------------------------------
# balance sweep

def test_balance_sweep_rows(tmp_path):
    plan = ExperimentPlan(**TINY, balance_sweep=(0.0, 1.0),
                          output_dir=str(tmp_path / "sweep"))
    out = run_balance_sweep(plan)
    with open(out / "balance_sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * len(plan.seeds)
    assert {r["balance_prob"] for r in rows} == {"0.0", "1.0"}
    for r in rows:
        assert 0.0 <= float(r["acceptance_rate"]) <= 1.0
        assert int(r["constrained_diversity"]) <= int(r["global_diversity"])
    assert (out / "manifest.json").is_file()


def test_balance_sweep_requires_values():
    plan = ExperimentPlan(**TINY)
    with pytest.raises(ValueError):
        run_balance_sweep(plan)
