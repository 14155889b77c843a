"""Experiment orchestration: config parsing, dataset ingest, the
simulate -> prescreen -> fit -> evaluate pipeline, and report emission."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import evalkit, hypotest, learners
from .learners import ModelSpec
from .screen import GeneRanking, cut_to, rsquare_rank
from .simkit import (
    DISEASE_IDS,
    ExpressionMatrix,
    LabeledDataset,
    gen_cohort,
    label,
    make_disease_spec,
    oversample,
    raw_scale_params,
)

__all__ = [
    "ExperimentConfig",
    "ReportBundle",
    "DatasetParseError",
    "load_dataset",
    "save_dataset",
    "run",
    "emit_report",
    "emit_importance_chart",
]

VERSION = "0.1.0"


class DatasetParseError(ValueError):
    pass


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class SyntheticSource:
    disease_ids: tuple[int, ...]
    ns: tuple[int, ...]
    p: int
    raw_scale: bool = False  # keep X1..X3 on the uniform noise scale


@dataclass(frozen=True)
class FileSource:
    path: str


@dataclass(frozen=True)
class PrescreenConfig:
    kind: str = "none"  # none | rsquare | importance_cut | genes
    k: int = 0
    genes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("none", "rsquare", "importance_cut", "genes"):
            raise ConfigError(f"unknown prescreen kind {self.kind!r}")
        if self.kind in ("rsquare", "importance_cut") and self.k < 1:
            raise ConfigError("prescreen k must be at least 1")
        if self.kind == "genes" and not self.genes:
            raise ConfigError("prescreen kind 'genes' needs a gene list")
        object.__setattr__(self, "genes", tuple(self.genes))


@dataclass(frozen=True)
class EvaluationConfig:
    scheme: str = "split"  # loocv | split | kfold
    train_fraction: float = 0.75
    k: int = 10

    def __post_init__(self):
        if self.scheme not in ("loocv", "split", "kfold"):
            raise ConfigError(f"unknown evaluation scheme {self.scheme!r}")


@dataclass(frozen=True)
class StabilityConfig:
    subsample_fraction: float = 0.1
    n_replicates: int = 4
    prescreen_k: int = 3


@dataclass(frozen=True)
class ExperimentConfig:
    master_seed: int
    source: SyntheticSource | FileSource
    models: tuple[ModelSpec, ...]
    prescreen: PrescreenConfig = PrescreenConfig()
    evaluation: EvaluationConfig = EvaluationConfig()
    q: float = 0.05
    select_top_k: int | None = None
    rebalance: bool = False
    stability: StabilityConfig | None = None
    output_dir: str = "out"

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ConfigError("q must lie in (0, 1)")
        if isinstance(self.source, SyntheticSource):
            bad = [d for d in self.source.disease_ids if d not in DISEASE_IDS]
            if bad:
                raise ConfigError(f"unknown disease ids {bad}")
            if self.prescreen.kind != "none" and self.prescreen.k > self.source.p:
                raise ConfigError("prescreen k exceeds the number of genes")

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        try:
            data = raw["data"]
            if "synthetic" in data and "file" in data:
                raise ConfigError("data must name exactly one of 'synthetic' or 'file'")
            if "synthetic" in data:
                s = data["synthetic"]
                ids = s["disease_id"]
                ids = tuple(ids) if isinstance(ids, (list, tuple)) else (ids,)
                ns = s["n"]
                ns = tuple(ns) if isinstance(ns, (list, tuple)) else (ns,)
                source = SyntheticSource(disease_ids=ids, ns=ns, p=int(s["p"]),
                                         raw_scale=bool(s.get("raw_scale", False)))
            elif "file" in data:
                source = FileSource(path=str(data["file"]["path"]))
            else:
                raise ConfigError("data must name exactly one of 'synthetic' or 'file'")
            models = tuple(ModelSpec(**m) for m in raw.get("models", []))
            prescreen = PrescreenConfig(**raw.get("prescreen", {}))
            evaluation = EvaluationConfig(**raw.get("evaluation", {}))
            stability = StabilityConfig(**raw["stability"]) if "stability" in raw else None
            return ExperimentConfig(
                master_seed=int(raw.get("master_seed", 0)),
                source=source,
                models=models,
                prescreen=prescreen,
                evaluation=evaluation,
                q=float(raw.get("q", 0.05)),
                select_top_k=raw.get("select_top_k"),
                rebalance=bool(raw.get("rebalance", False)),
                stability=stability,
                output_dir=str(raw.get("output_dir", "out")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad config: {exc}") from exc

    @staticmethod
    def from_json(path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return ExperimentConfig.from_dict(raw)

    def canonical_dict(self) -> dict:
        def scrub(obj):
            if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
                return {f.name: scrub(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
            if isinstance(obj, (list, tuple)):
                return [scrub(x) for x in obj]
            return obj
        return scrub(self)

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def cell_seed(master_seed: int, cell_index: int) -> int:
    """Stable per-cell seed: adding cells or models never moves another
    cell's stream."""
    digest = hashlib.sha256(f"{master_seed}:{cell_index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


# ---------------------------------------------------------------------------
# dataset files


def save_dataset(data: LabeledDataset, path) -> None:
    path = Path(path)
    header = ",".join(data.matrix.gene_ids) + ",label"
    lines = [header]
    for row, y in zip(data.matrix.values, data.labels):
        lines.append(",".join(repr(float(v)) for v in row) + f",{int(y)}")
    path.write_text("\n".join(lines) + "\n")


def load_dataset(path) -> LabeledDataset:
    """Read the plain CSV format: header of gene names plus 'label', one
    patient per row, labels in {0, 1}.  Errors carry the offending line."""
    path = Path(path)
    if not path.exists():
        raise DatasetParseError(f"{path}: no such file")
    text = path.read_text()
    lines = [ln for ln in text.splitlines()]
    if not lines or not lines[0].strip():
        raise DatasetParseError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) < 2 or header[-1] != "label":
        raise DatasetParseError(f"{path}: line 1: header must end with 'label'")
    gene_ids = header[:-1]
    if len(set(gene_ids)) != len(gene_ids):
        raise DatasetParseError(f"{path}: line 1: duplicate gene names")
    p = len(gene_ids)

    values, labels = [], []
    for ln_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != p + 1:
            raise DatasetParseError(
                f"{path}: line {ln_no}: expected {p + 1} fields, got {len(parts)}")
        try:
            row = [float(x) for x in parts[:-1]]
        except ValueError:
            raise DatasetParseError(f"{path}: line {ln_no}: non-numeric expression value")
        if not all(math.isfinite(v) for v in row):
            raise DatasetParseError(f"{path}: line {ln_no}: non-finite expression value")
        if any(v < 0 for v in row):
            raise DatasetParseError(f"{path}: line {ln_no}: negative expression value")
        lab = parts[-1].strip()
        if lab not in ("0", "1"):
            raise DatasetParseError(f"{path}: line {ln_no}: label must be 0 or 1, got {lab!r}")
        values.append(row)
        labels.append(int(lab))
    if not values:
        raise DatasetParseError(f"{path}: no data rows")
    matrix = ExpressionMatrix(values=np.array(values, dtype=float), gene_ids=tuple(gene_ids))
    return LabeledDataset(matrix=matrix, labels=np.array(labels))


# ---------------------------------------------------------------------------
# execution


@dataclass
class ReportBundle:
    provenance: dict
    cells: list[dict]
    stability: dict | None = None

    @property
    def n_failures(self) -> int:
        return sum(1 for c in self.cells if "error" in c)

    def to_dict(self) -> dict:
        out = {"provenance": self.provenance, "cells": self.cells}
        if self.stability is not None:
            out["stability"] = self.stability
        return _round_floats(out)


def _round_floats(obj):
    """Fix numeric formatting at 6 significant digits for byte-stable output."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        return float(f"{obj:.6g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return _round_floats(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _sorted_genes(genes) -> list[str]:
    def key(g):
        tail = g[1:] if g[:1] == "X" and g[1:].isdigit() else None
        return (0, int(tail), g) if tail else (1, 0, g)
    return sorted(genes, key=key)


def _evaluate(model_spec, data, pool, evaluation, seed):
    if evaluation.scheme == "loocv":
        return evalkit.loocv(model_spec, data, pool, seed=seed)
    if evaluation.scheme == "split":
        return evalkit.split_eval(model_spec, data, pool,
                                  train_fraction=evaluation.train_fraction, seed=seed)
    accuracy = evalkit.kfold_accuracy(model_spec, data, pool, k=evaluation.k, seed=seed)
    full = learners.fit(model_spec, data, pool, seed=seed)
    selected = learners.selected_genes(full)
    if data.truth:
        fd, fnd = evalkit.selection_metrics(selected, data.truth)
    else:
        fd, fnd = None, frozenset()
    return evalkit.EvalReport(
        scheme=f"kfold({evaluation.k})", error_rate=1.0 - accuracy, accuracy=accuracy,
        posteriors=np.array([]), selected_genes=selected, fd_rate=fd, fnd_set=fnd)


def _model_entry(config, model_spec, data, pool, seed):
    if model_spec.family == "logistic_stepwise":
        return _stepwise_entry(config, model_spec, data, pool, seed)
    report = _evaluate(model_spec, data, pool, config.evaluation, seed)
    full = learners.fit(model_spec, data, pool, seed=seed)
    ranking = learners.gene_importance(full)
    if config.select_top_k:
        selected = frozenset(ranking.gene_ids()[: config.select_top_k])
        if data.truth:
            fd, fnd = evalkit.selection_metrics(selected, data.truth)
        else:
            fd, fnd = None, frozenset()
    else:
        selected, fd, fnd = report.selected_genes, report.fd_rate, report.fnd_set
    name = model_spec.family
    if model_spec.family == "svm":
        name = f"svm({model_spec.kernel})"
    return {
        "model": name,
        "family": model_spec.family,
        "scheme": report.scheme,
        "pool_size": len(pool),
        "error": report.error_rate,
        "accuracy": report.accuracy,
        "train_error": report.train_error,
        "selected_genes": _sorted_genes(selected),
        "fd_rate": report.fd_rate if not config.select_top_k else fd,
        "fnd_set": _sorted_genes(report.fnd_set if not config.select_top_k else fnd),
        "posteriors": [float(x) for x in report.posteriors],
        "importance_top": [[g, s] for g, s in ranking.entries[:50]],
        "diagnostics": {
            "converged": full.diagnostics.converged,
            "separation": full.diagnostics.separation,
        },
    }


def _stepwise_entry(config, model_spec, data, pool, seed):
    """Backward p-value elimination, then evaluate the surviving model;
    an empty selection is the 'None' outcome with no error to report."""
    selected = learners.stepwise_select(model_spec, data, pool, seed=seed)
    if data.truth:
        fd, fnd = evalkit.selection_metrics(selected, data.truth)
    else:
        fd, fnd = None, frozenset()
    entry = {
        "model": "logistic_stepwise",
        "family": "logistic_stepwise",
        "scheme": config.evaluation.scheme,
        "pool_size": len(pool),
        "error": None,
        "accuracy": None,
        "train_error": None,
        "selected_genes": _sorted_genes(selected),
        "fd_rate": fd,
        "fnd_set": _sorted_genes(fnd),
        "posteriors": [],
        "importance_top": [],
        "diagnostics": {},
    }
    if selected:
        report = _evaluate(model_spec, data, tuple(_sorted_genes(selected)),
                           config.evaluation, seed)
        entry["error"] = report.error_rate
        entry["accuracy"] = report.accuracy
        entry["train_error"] = report.train_error
        entry["posteriors"] = [float(x) for x in report.posteriors]
    return entry


def _fdr_entry(config, data, pool, seed):
    cols = [data.matrix.gene_ids.index(g) for g in pool]
    matrix = ExpressionMatrix(values=data.matrix.values[:, cols], gene_ids=tuple(pool))
    pruned = LabeledDataset(matrix=matrix, labels=data.labels, truth=data.truth)
    result = hypotest.scan_rejections(pruned, method="bh", q=config.q)
    selected = result.rejected
    if data.truth:
        fd, fnd = evalkit.selection_metrics(selected, data.truth)
    else:
        fd, fnd = None, frozenset()
    return {
        "model": f"fdr(bh,q={config.q:g})",
        "family": "fdr",
        "scheme": "testwise",
        "pool_size": len(pool),
        "error": None,
        "accuracy": None,
        "train_error": None,
        "selected_genes": _sorted_genes(selected),
        "fd_rate": fd,
        "fnd_set": _sorted_genes(fnd),
        "posteriors": [],
        "importance_top": [],
        "diagnostics": {},
    }


def _cells(config: ExperimentConfig):
    if isinstance(config.source, SyntheticSource):
        idx = 0
        for d in config.source.disease_ids:
            for n in config.source.ns:
                yield idx, {"disease_id": d, "n": n, "p": config.source.p}
                idx += 1
    else:
        yield 0, {"file": config.source.path}


def _load_cell(config, cell, seed):
    if "file" in cell:
        return load_dataset(cell["file"])
    params = raw_scale_params() if config.source.raw_scale else None
    matrix = gen_cohort(cell["n"], cell["p"], params=params, seed=seed)
    spec = make_disease_spec(cell["disease_id"], matrix)
    data = label(spec, matrix)
    if config.rebalance:
        data = oversample(data, seed=seed)
    return data


def _prescreen_pool(config, data, seed):
    if config.prescreen.kind == "none":
        return tuple(data.matrix.gene_ids)
    if config.prescreen.kind == "genes":
        missing = [g for g in config.prescreen.genes if g not in data.matrix.gene_ids]
        if missing:
            raise ConfigError(f"prescreen genes absent from the data: {missing}")
        return config.prescreen.genes
    if config.prescreen.kind == "rsquare":
        return cut_to(rsquare_rank(data), config.prescreen.k)
    ranker = learners.fit(ModelSpec(family="boosting"), data, data.matrix.gene_ids, seed=seed)
    return cut_to(learners.gene_importance(ranker), config.prescreen.k)


def run(config: ExperimentConfig, write: bool = True) -> ReportBundle:
    """Execute every (model x cell) combination.

    Individual cell failures are recorded in the bundle and never abort
    sibling cells.  Deterministic given (config, master_seed).
    """
    cells_out = []
    cell_iter = _cells(config) if config.models else ()
    for idx, cell in cell_iter:
        seed = cell_seed(config.master_seed, idx)
        entry = {"cell_index": idx, "cell": dict(cell), "seed": seed}
        try:
            data = _load_cell(config, cell, seed)
            pool = _prescreen_pool(config, data, seed)
            entry["pool_size"] = len(pool)
            entry["n_patients"] = data.n_patients
            entry["truth"] = _sorted_genes(data.truth) if data.truth else []
            results = []
            for model_spec in config.models:
                results.append(_model_entry(config, model_spec, data, pool, seed))
            results.append(_fdr_entry(config, data, pool, seed))
            entry["results"] = results
        except Exception as exc:
            entry["error"] = f"{type(exc).__name__}: {exc}"
        cells_out.append(entry)

    stability_out = None
    if config.stability is not None:
        if not config.models:
            raise ConfigError("stability study needs at least one model")
        idx0_seed = cell_seed(config.master_seed, 0)
        first_cell = next(_cells(config))[1]
        data = _load_cell(config, first_cell, idx0_seed)
        pipeline = evalkit.PipelineConfig(
            model=config.models[0],
            prescreen_k=config.stability.prescreen_k,
            select_top_k=config.select_top_k,
        )
        rep = evalkit.stability_study(
            pipeline, data, config.stability.subsample_fraction,
            config.stability.n_replicates, master_seed=config.master_seed)
        stability_out = {
            "selections": [_sorted_genes(s) for s in rep.selections],
            "jaccard_matrix": [[float(x) for x in row] for row in rep.jaccard_matrix],
            "mean_jaccard": rep.mean_jaccard,
            "accuracies": list(rep.accuracies),
            "n_warnings": rep.n_warnings,
        }

    bundle = ReportBundle(
        provenance={
            "config_hash": config.config_hash(),
            "master_seed": config.master_seed,
            "version": VERSION,
        },
        cells=cells_out,
        stability=stability_out,
    )
    if write:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bundle.json").write_text(
            json.dumps(bundle.to_dict(), indent=1, sort_keys=True) + "\n")
    return bundle


# ---------------------------------------------------------------------------
# emission


def _fmt(x) -> str:
    if x is None:
        return "n/a"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


_COLUMNS = ("model", "pool size", "n", "cell", "selected genes", "error",
            "accuracy", "fd_rate", "fnd_set")


def _table_rows(bundle: ReportBundle):
    rows = []
    for cell in bundle.cells:
        if "error" in cell:
            rows.append([f"FAILED: {cell['error']}", "", "", str(cell.get("cell", "")),
                         "", "", "", "", ""])
            continue
        desc = cell["cell"]
        cell_name = (f"disease{desc['disease_id']} (n={desc['n']})"
                     if "disease_id" in desc else desc.get("file", "?"))
        for res in cell["results"]:
            rows.append([
                res["model"],
                str(res["pool_size"]),
                str(cell["n_patients"]),
                cell_name,
                ";".join(res["selected_genes"]),
                _fmt(res["error"]),
                _fmt(res["accuracy"]),
                _fmt(res["fd_rate"]),
                ";".join(res["fnd_set"]) or "-",
            ])
    return rows


def emit_report(bundle: ReportBundle, fmt: str, output_dir) -> list[Path]:
    """Write the per-grid summary table; csv and markdown carry identical
    numeric content."""
    if fmt not in ("csv", "markdown"):
        raise ValueError("format must be 'csv' or 'markdown'")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = _table_rows(bundle)
    if fmt == "csv":
        path = out / "report.csv"
        lines = [",".join(_COLUMNS)]
        for row in rows:
            lines.append(",".join('"' + c.replace('"', "'") + '"' if ("," in c or ";" in c) else c
                                  for c in row))
        path.write_text("\n".join(lines) + "\n")
    else:
        path = out / "report.md"
        lines = ["| " + " | ".join(_COLUMNS) + " |",
                 "| " + " | ".join("---" for _ in _COLUMNS) + " |"]
        for row in rows:
            lines.append("| " + " | ".join(c.replace("|", "/") for c in row) + " |")
        path.write_text("\n".join(lines) + "\n")
    return [path]


def emit_importance_chart(ranking: GeneRanking, truth, top_k: int, path) -> list[Path]:
    """Bar chart of the top_k importance scores with causal genes highlighted,
    plus a sidecar CSV of (gene_id, score, is_causal)."""
    if not ranking.entries:
        raise ValueError("ranking must be nonempty")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    truth = frozenset(truth)
    entries = ranking.entries[: max(1, top_k)]
    genes = [g for g, _ in entries]
    scores = [s for _, s in entries]
    colors = ["#1f4e9c" if g in truth else "#7fbf7f" for g in genes]

    fig, ax = plt.subplots(figsize=(max(6, 0.35 * len(genes)), 4))
    ax.bar(range(len(genes)), scores, color=colors)
    ax.set_xticks(range(len(genes)))
    ax.set_xticklabels(genes, rotation=90, fontsize=7)
    ax.set_ylabel(f"score ({ranking.score_kind})")
    ax.set_title(f"top {len(genes)} genes (dark = causal)")
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)

    sidecar = path.with_suffix(path.suffix + ".csv")
    lines = ["gene_id,score,is_causal"]
    for g, s in entries:
        lines.append(f"{g},{_fmt(float(s))},{int(g in truth)}")
    sidecar.write_text("\n".join(lines) + "\n")
    return [path, sidecar]
