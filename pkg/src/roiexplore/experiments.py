"""Declarative benchmark runner.

A plan names a system, a set of exploration methods, seeds, budgets, and an
ROI; running it produces per-run history files, per-sample diversity
series, an acceptance/timing table, and a manifest with content hashes.
The evaluation embedding (Haralick -> standardize -> PCA) is fitted on the
pooled samples of all runs in the plan so that diversity numbers are
comparable across methods.
"""

from __future__ import annotations

import hashlib
import json
import time
import traceback
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .explorer import Explorer, ExplorerConfig, History, Roi
from .features import haralick13, pca_fit, pca_project
from .metrics import (
    CONSTRAINED_BINS_TARGET,
    GLOBAL_BINS_TARGET,
    BinningSpec,
    acceptance_rate,
    diversity_series,
    write_diversity_csv,
)
from .systems import grid_to_png, make_system

DEFAULT_ROI = {"volume": [0.6, 0.7]}


@dataclass(frozen=True)
class ExperimentPlan:
    system: str
    methods: tuple[str, ...] = ("R", "N", "NRA", "NRAB")
    seeds: tuple[int, ...] = tuple(range(10))
    budget: int = 1000
    n_init: int = 250
    balance_prob: float = 0.5
    subspace_dims: int = 3
    roi: dict[str, list[float]] = field(
        default_factory=lambda: dict(DEFAULT_ROI))
    balance_sweep: tuple[float, ...] | None = None
    rollout_steps: int | None = None
    save_patterns: bool = False
    output_dir: str = "results"

    def __post_init__(self) -> None:
        if not self.methods:
            raise ValueError("plan needs at least one method")
        if not self.seeds:
            raise ValueError("plan needs at least one seed")
        Roi.from_dict(self.roi)  # validates feature names and intervals

    @classmethod
    def from_file(cls, path: Path | str) -> "ExperimentPlan":
        """Load a JSON plan; a relative output_dir is resolved against the
        plan file's directory."""
        path = Path(path)
        raw = json.loads(path.read_text())
        for key in ("methods", "seeds", "balance_sweep"):
            if key in raw and raw[key] is not None:
                raw[key] = tuple(raw[key])
        plan = cls(**raw)
        out = Path(plan.output_dir)
        if not out.is_absolute():
            out = path.parent / out
        return replace(plan, output_dir=str(out))


@dataclass
class RunResult:
    method: str
    seed: int
    balance_prob: float
    history: History
    eval_features: np.ndarray       # (n, 13) Haralick vectors
    mean_time_per_sample: float
    acceptance: float


def _build_system(plan: ExperimentPlan):
    system = make_system(plan.system)
    if plan.rollout_steps is not None:
        cfg = replace(system.default_config, steps=plan.rollout_steps)
        system = replace(system, default_config=cfg)
    return system


def execute_run(plan: ExperimentPlan, method: str, seed: int,
                balance_prob: float | None = None,
                pattern_dir: Path | None = None) -> RunResult:
    """One full exploration plus per-sample evaluation features.

    Observations are dropped as soon as their features are extracted (and
    their PNG written when requested), so memory stays flat across the run.
    """
    system = _build_system(plan)
    config = ExplorerConfig(
        method=method,
        budget=plan.budget,
        n_init=plan.n_init,
        balance_prob=(plan.balance_prob if balance_prob is None
                      else balance_prob),
        subspace_dims=plan.subspace_dims,
        seed=seed,
        keep_observations=True,
    )
    explorer = Explorer(system, config, Roi.from_dict(plan.roi))
    if pattern_dir is not None:
        pattern_dir.mkdir(parents=True, exist_ok=True)

    eval_features = np.empty((plan.budget, 13))
    t0 = time.perf_counter()
    while not explorer.done:
        entry = explorer.step()
        eval_features[entry.index] = haralick13(entry.observation)
        if pattern_dir is not None:
            (pattern_dir / f"{entry.index:06d}.png").write_bytes(
                grid_to_png(entry.observation))
        entry.observation = None
    elapsed = time.perf_counter() - t0

    return RunResult(
        method=method,
        seed=seed,
        balance_prob=config.balance_prob,
        history=explorer.history,
        eval_features=eval_features,
        mean_time_per_sample=elapsed / plan.budget,
        acceptance=acceptance_rate(explorer.history, plan.n_init),
    )


def _write_history_jsonl(path: Path, result: RunResult,
                         patterns_rel: str | None) -> None:
    with open(path, "w") as fh:
        for e in result.history:
            obs_id = (f"{patterns_rel}/{e.index:06d}.png"
                      if patterns_rel is not None else None)
            fh.write(json.dumps({
                "index": e.index,
                "params": [float(v) for v in e.params],
                "behavior": [float(v) for v in e.behavior],
                "constraint_features": {k: float(v) for k, v in
                                        e.constraint_features.items()},
                "classification": int(e.classification),
                "observation_id": obs_id,
            }) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out: Path, plan: ExperimentPlan,
                    failures: list[dict]) -> None:
    files = {}
    for p in sorted(out.rglob("*")):
        if p.is_file() and p.name != "manifest.json":
            files[str(p.relative_to(out))] = _sha256(p)
    manifest = {"plan": asdict(plan), "files": files, "failures": failures}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2,
                                                  sort_keys=True) + "\n")


def _fit_embedding(results: Sequence[RunResult]):
    pooled = np.concatenate([r.eval_features for r in results])
    basis = pca_fit(pooled, out_dims=4)
    embedded = pca_project(basis, pooled)
    global_spec = BinningSpec.from_points(embedded, GLOBAL_BINS_TARGET)
    constrained_spec = BinningSpec.from_points(embedded,
                                               CONSTRAINED_BINS_TARGET)
    return basis, global_spec, constrained_spec


def run_plan(plan: ExperimentPlan) -> Path:
    """Execute every (method, seed) pair and write the result bundle.

    Returns the output directory.  Per-run failures are recorded in the
    manifest and do not abort the remaining runs.
    """
    out = Path(plan.output_dir)
    (out / "runs").mkdir(parents=True, exist_ok=True)

    results: list[RunResult] = []
    failures: list[dict] = []
    for method in plan.methods:
        for seed in plan.seeds:
            pattern_dir = (out / "patterns" / f"{method}_{seed}"
                           if plan.save_patterns else None)
            try:
                results.append(execute_run(plan, method, seed,
                                           pattern_dir=pattern_dir))
            except Exception as exc:  # noqa: BLE001 - recorded, not fatal
                failures.append({"method": method, "seed": seed,
                                 "error": repr(exc),
                                 "traceback": traceback.format_exc()})

    if results:
        _write_bundle(out, plan, results)
    _write_manifest(out, plan, failures)
    return out


def _write_bundle(out: Path, plan: ExperimentPlan,
                  results: Sequence[RunResult]) -> None:
    basis, global_spec, constrained_spec = _fit_embedding(results)

    all_rows = []
    series_by_run: dict[tuple[str, int], np.ndarray] = {}
    for r in results:
        emb = pca_project(basis, r.eval_features)
        flags = r.history.classifications() == 1
        rows = diversity_series(emb, flags, global_spec, constrained_spec)
        series_by_run[(r.method, r.seed)] = np.array(
            [(g, c) for _, g, c, _ in rows])
        all_rows.extend([(r.method, r.seed) + row for row in rows])

        patterns_rel = (f"../patterns/{r.method}_{r.seed}"
                        if plan.save_patterns else None)
        _write_history_jsonl(out / "runs" / f"{r.method}_{r.seed}.jsonl",
                             r, patterns_rel)

    write_diversity_csv(out / "diversity.csv", all_rows,
                        extra_columns=("method", "seed"))

    # Per-method mean/std curves over seeds.
    with open(out / "diversity_summary.csv", "w", newline="") as fh:
        fh.write("method,sample_index,global_mean,global_std,"
                 "constrained_mean,constrained_std\n")
        for method in plan.methods:
            stacks = [series_by_run[k] for k in series_by_run
                      if k[0] == method]
            if not stacks:
                continue
            arr = np.stack(stacks)  # (n_seeds, budget, 2)
            mean = arr.mean(axis=0)
            std = arr.std(axis=0)
            for i in range(arr.shape[1]):
                fh.write(f"{method},{i},{mean[i, 0]:.6f},{std[i, 0]:.6f},"
                         f"{mean[i, 1]:.6f},{std[i, 1]:.6f}\n")

    with open(out / "acceptance.csv", "w", newline="") as fh:
        fh.write("method,seed,acceptance_rate,"
                 "time_per_sample_s,time_per_inlier_s\n")
        for r in results:
            per_inlier = (r.mean_time_per_sample / r.acceptance
                          if r.acceptance > 0 else float("inf"))
            fh.write(f"{r.method},{r.seed},{r.acceptance:.6f},"
                     f"{r.mean_time_per_sample:.6f},{per_inlier:.6f}\n")


def summarize(result_dir: Path | str) -> dict[str, dict[str, float]]:
    """Aggregate acceptance.csv per method: acceptance rate, mean time per
    sample, and time per inlier (time/sample divided by acceptance)."""
    import csv

    path = Path(result_dir) / "acceptance.csv"
    per_method: dict[str, list[tuple[float, float]]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            per_method.setdefault(row["method"], []).append(
                (float(row["acceptance_rate"]),
                 float(row["time_per_sample_s"])))

    summary = {}
    for method, vals in per_method.items():
        acc = float(np.mean([v[0] for v in vals]))
        tps = float(np.mean([v[1] for v in vals]))
        summary[method] = {
            "acceptance_rate": acc,
            "time_per_sample_s": tps,
            "time_per_inlier_s": tps / acc if acc > 0 else float("inf"),
            "n_runs": len(vals),
        }
    return summary


def run_balance_sweep(plan: ExperimentPlan) -> Path:
    """NRAB runs across the plan's balance_sweep values; writes final
    diversity and acceptance per (balance, seed) to balance_sweep.csv."""
    if not plan.balance_sweep:
        raise ValueError("plan has no balance_sweep values")
    out = Path(plan.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    results: list[RunResult] = []
    failures: list[dict] = []
    for balance in plan.balance_sweep:
        for seed in plan.seeds:
            try:
                results.append(execute_run(plan, "NRAB", seed,
                                           balance_prob=balance))
            except Exception as exc:  # noqa: BLE001
                failures.append({"balance_prob": balance, "seed": seed,
                                 "error": repr(exc),
                                 "traceback": traceback.format_exc()})

    if results:
        basis, global_spec, constrained_spec = _fit_embedding(results)
        with open(out / "balance_sweep.csv", "w", newline="") as fh:
            fh.write("balance_prob,seed,acceptance_rate,"
                     "global_diversity,constrained_diversity\n")
            for r in results:
                emb = pca_project(basis, r.eval_features)
                flags = r.history.classifications() == 1
                rows = diversity_series(emb, flags, global_spec,
                                        constrained_spec)
                _, g, c, _ = rows[-1]
                fh.write(f"{r.balance_prob},{r.seed},{r.acceptance:.6f},"
                         f"{g},{c}\n")
    _write_manifest(out, plan, failures)
    return out
