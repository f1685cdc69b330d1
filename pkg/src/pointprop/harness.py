"""Batch experiment runner: propagation over a dataset tree with reports.

Dataset layout: ``<root>/features/*.ftns``, ``<root>/masks/*.png`` and
optionally ``<root>/images/*.png``, matched by filename stem.  A run
covers every (sweep value x budget x image) cell, derives labels per the
configured placement, propagates, scores against ground truth, and writes
a self-contained JSON report (plus a flat CSV) whose echoed config
reproduces the same numbers when re-run.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import metrics, placement, tensor_io
from .embedding import FeatureField, build_field
from .errors import MaskShapeMismatchError, MissingFeatureFileError
from .expert import SimulatedExpert
from .propagation import LabeledPointSet, propagate
from .proposal import (
    DEFAULT_INITIAL_POINTS,
    DEFAULT_SIGMA,
    DEFAULT_SIMILARITY_WEIGHT,
    HilConfig,
    run_hil_session,
)

PLACEMENTS = ("random", "grid", "hil")
SWEEP_AXES = ("lambda", "sigma", "k", "initial_points", "none")


@dataclass
class ExperimentSpec:
    dataset_root: str
    placement: str = "grid"
    budgets: list[int] = field(default_factory=lambda: [5, 10, 25, 300])
    k: int = 1
    similarity_weight: float = DEFAULT_SIMILARITY_WEIGHT
    sigma: float = DEFAULT_SIGMA
    initial_points: int = DEFAULT_INITIAL_POINTS
    sweep_axis: str = "none"
    sweep_values: list[float] = field(default_factory=list)
    seed: int = 0
    ignore_ids: list[int] = field(default_factory=lambda: [tensor_io.RESERVED_ID])
    num_classes: int | None = None
    exclusion_list: str | None = None
    output: str | None = None
    workers: int = 1
    normalize_before_upsample: bool = False  # comparison switch; default order
                                             # is upsample then normalize

    def __post_init__(self):
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}")
        if self.sweep_axis not in SWEEP_AXES:
            raise ValueError(f"sweep axis must be one of {SWEEP_AXES}")
        if any(b < 1 for b in self.budgets):
            raise ValueError("budgets must be >= 1")
        if self.sweep_axis != "none" and not self.sweep_values:
            raise ValueError("sweep axis set but no sweep values given")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def image_seed(master_seed: int, stem: str, budget: int, sweep_value) -> int:
    """Stable per-cell seed independent of worker scheduling."""
    key = f"{master_seed}|{stem}|{budget}|{sweep_value}".encode()
    return int.from_bytes(hashlib.blake2s(key, digest_size=8).digest(), "little")


def load_exclusions(path: str | Path | None) -> set[str]:
    if path is None:
        return set()
    lines = Path(path).read_text().splitlines()
    return {line.strip() for line in lines if line.strip()}


def dataset_stems(root: str | Path) -> list[str]:
    masks = sorted(Path(root, "masks").glob("*.png"))
    stems = []
    for mask_path in masks:
        stem = mask_path.stem
        if not Path(root, "features", f"{stem}.ftns").exists():
            raise MissingFeatureFileError(f"no feature tensor for mask {stem}")
        stems.append(stem)
    return stems


def load_pair(
    root: str | Path, stem: str, normalize_first: bool = False
) -> tuple[FeatureField, np.ndarray]:
    """Load a (field, mask) pair, upsampling patch features to mask size."""
    gt = tensor_io.read_mask(Path(root, "masks", f"{stem}.png"))
    patch = tensor_io.read_tensor(Path(root, "features", f"{stem}.ftns"))
    if patch.shape[0] > gt.shape[0] or patch.shape[1] > gt.shape[1]:
        raise MaskShapeMismatchError(
            f"{stem}: mask {gt.shape} smaller than patch grid {patch.shape[:2]}"
        )
    field = build_field(patch, gt.shape[0], gt.shape[1], normalize_first)
    return field, gt


def labels_for_placement(
    field: FeatureField,
    gt: np.ndarray,
    spec_placement: str,
    budget: int,
    seed: int,
    hil_cfg: HilConfig,
) -> LabeledPointSet:
    """Derive the label set one annotator pass would produce."""
    h, w = gt.shape
    if spec_placement == "random":
        coords = placement.random_points(h, w, budget, seed)
        points = [(x, y, int(gt[y, x])) for x, y in coords]
        return LabeledPointSet.from_points(field, points)
    if spec_placement == "grid":
        coords = placement.grid_points(h, w, budget)
        points = [(x, y, int(gt[y, x])) for x, y in coords]
        return LabeledPointSet.from_points(field, points)
    expert = SimulatedExpert(gt)
    return run_hil_session(field, expert, hil_cfg)


def _resolve_cell(spec: ExperimentSpec, sweep_value) -> tuple[int, float, float, int]:
    k = spec.k
    weight = spec.similarity_weight
    sigma = spec.sigma
    initial = spec.initial_points
    if spec.sweep_axis == "k":
        k = int(sweep_value)
    elif spec.sweep_axis == "lambda":
        weight = float(sweep_value)
    elif spec.sweep_axis == "sigma":
        sigma = float(sweep_value)
    elif spec.sweep_axis == "initial_points":
        initial = int(sweep_value)
    return k, weight, sigma, initial


def run_image(
    spec: ExperimentSpec,
    root: Path,
    stem: str,
    budget: int,
    sweep_value,
    num_classes: int,
) -> dict:
    started = time.perf_counter()
    field, gt = load_pair(root, stem, spec.normalize_before_upsample)
    k, weight, sigma, initial = _resolve_cell(spec, sweep_value)
    hil_cfg = HilConfig(
        budget=budget,
        similarity_weight=weight,
        sigma=sigma,
        initial_points=initial,
        k=k,
    )
    seed = image_seed(spec.seed, stem, budget, sweep_value)
    labels = labels_for_placement(field, gt, spec.placement, budget, seed, hil_cfg)
    pred = propagate(field, labels, k=k)
    cm = metrics.accumulate(gt, pred, num_classes, frozenset(spec.ignore_ids))
    wall = time.perf_counter() - started
    record = {
        "stem": stem,
        "budget": budget,
        "sweep_value": sweep_value,
        "labels": len(labels),
        "seed": seed,
        "wall_s": wall,
        "pa": metrics.pa(cm),
        "mpa": metrics.mpa(cm),
        "miou": metrics.miou(cm),
    }
    return {"record": record, "cm": cm}


def infer_num_classes(root: Path, stems: list[str]) -> int:
    top = 0
    for stem in stems:
        mask = tensor_io.read_mask(Path(root, "masks", f"{stem}.png"))
        values = np.unique(mask)
        values = values[values != tensor_io.RESERVED_ID]
        if values.size:
            top = max(top, int(values.max()))
    return top + 1


def run(spec: ExperimentSpec) -> dict:
    """Execute an experiment spec and return (and optionally write) the report."""
    root = Path(spec.dataset_root)
    all_stems = dataset_stems(root)
    excluded = load_exclusions(spec.exclusion_list)
    stems = [s for s in all_stems if s not in excluded]
    excluded_present = sorted(set(all_stems) & excluded)
    num_classes = spec.num_classes or infer_num_classes(root, stems)

    sweep_values = spec.sweep_values if spec.sweep_axis != "none" else [None]
    cells = [
        (stem, budget, value)
        for value in sweep_values
        for budget in spec.budgets
        for stem in stems
    ]

    def work(cell):
        stem, budget, value = cell
        return run_image(spec, root, stem, budget, value, num_classes)

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(work, cells))
    else:
        results = [work(cell) for cell in cells]

    records = [r["record"] for r in results]
    aggregates = []
    for value in sweep_values:
        for budget in spec.budgets:
            group = [
                r for r in results
                if r["record"]["budget"] == budget
                and r["record"]["sweep_value"] == value
            ]
            if not group:
                continue
            merged = metrics.ConfusionMatrix(num_classes)
            for r in group:
                merged.merge(r["cm"])
            recs = [r["record"] for r in group]
            aggregates.append({
                "budget": budget,
                "sweep_value": value,
                "images": len(group),
                "dataset": {
                    "pa": metrics.pa(merged),
                    "mpa": metrics.mpa(merged),
                    "miou": metrics.miou(merged),
                },
                "per_image_mean": {
                    "pa": float(np.mean([r["pa"] for r in recs])),
                    "mpa": float(np.mean([r["mpa"] for r in recs])),
                    "miou": float(np.mean([r["miou"] for r in recs])),
                },
                "mean_wall_s": float(np.mean([r["wall_s"] for r in recs])),
            })

    report = {
        "config": spec.to_dict(),
        "num_classes": num_classes,
        "evaluated": len(stems),
        "excluded": len(excluded_present),
        "excluded_stems": excluded_present,
        "images": records,
        "aggregates": aggregates,
    }
    if spec.output:
        write_report(report, Path(spec.output))
    return report


def write_report(report: dict, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(report, indent=2))
    with open(out_dir / "report.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["stem", "budget", "sweep_value", "labels", "seed", "wall_s",
             "pa", "mpa", "miou"]
        )
        for r in report["images"]:
            writer.writerow([
                r["stem"], r["budget"], r["sweep_value"], r["labels"],
                r["seed"], f"{r['wall_s']:.6f}",
                f"{r['pa']:.9f}", f"{r['mpa']:.9f}", f"{r['miou']:.9f}",
            ])
