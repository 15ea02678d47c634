"""Experiment runner: split a corpus, fit an extractor, classify, time and report."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Optional, Sequence


from .dataset import SPLIT_POLICIES, Dataset, load_corpus, split, vectorize
from .kernel import fit_keca, fit_kpca
from .linear import fit_2deca, fit_2dpca, fit_eca, fit_pca
from .recognition import accuracy, classify
from .robust import (
    L1_INITS,
    WEIGHTS,
    ConvergenceTrace,
    fit_2dl1pca,
    fit_2dr1pca,
    fit_l1pca,
    fit_r1pca,
)

ALGORITHMS = ("pca", "2dpca", "eca", "2deca", "r1pca", "2dr1pca", "l1pca", "2dl1pca", "kpca", "keca")
TWO_D = frozenset({"2dpca", "2deca", "2dr1pca", "2dl1pca"})
ITERATIVE = frozenset({"r1pca", "2dr1pca", "l1pca", "2dl1pca"})

DEFAULT_SWEEP_1D = (10, 20, 30, 40, 50, 60)
DEFAULT_SWEEP_2D = (2, 4, 6, 8, 10, 12)

# knob -> algorithms that accept it
KNOBS = {
    "max_iter": frozenset({"r1pca", "2dr1pca"}),
    "tol": frozenset({"r1pca", "2dr1pca"}),
    "weight": frozenset({"r1pca", "2dr1pca"}),
    "center": frozenset({"r1pca", "2dr1pca", "l1pca", "2dl1pca"}),
    "init": frozenset({"l1pca", "2dl1pca"}),
    "degree": frozenset({"kpca", "keca"}),
    "center_kernel": frozenset({"kpca", "keca"}),
}
KNOB_DEFAULTS = {
    "max_iter": 120,
    "tol": 1e-4,
    "weight": "cauchy",
    "center": True,
    "init": "max_norm_sample",
    "degree": 2,
    "center_kernel": False,
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    algorithm: str
    data: Optional[str] = None
    layout: str = "orl_style"
    train_per_subject: int = 5
    split_policy: str = "first_k"
    components: Optional[int] = None
    sweep: Optional[list[int]] = None
    seed: int = 0
    metric: Optional[str] = None
    max_iter: Optional[int] = None
    tol: Optional[float] = None
    weight: Optional[str] = None
    center: Optional[bool] = None
    init: Optional[str] = None
    degree: Optional[int] = None
    center_kernel: Optional[bool] = None
    trace: Optional[str] = None

    @classmethod
    def from_dict(cls, values: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "algorithm" not in values:
            raise ConfigError("config is missing 'algorithm'")
        return cls(**values)

    def to_dict(self) -> dict:
        return asdict(self)

    def knob(self, name: str):
        value = getattr(self, name)
        return KNOB_DEFAULTS[name] if value is None else value

    @property
    def two_d(self) -> bool:
        return self.algorithm in TWO_D

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        for name, allowed in KNOBS.items():
            if getattr(self, name) is not None and self.algorithm not in allowed:
                raise ConfigError(f"option {name!r} does not apply to {self.algorithm}")
        if self.components is not None and self.sweep is not None:
            raise ConfigError("give either 'components' or 'sweep', not both")
        ks = [self.components] if self.components is not None else (self.sweep or [])
        if self.sweep is not None and not self.sweep:
            raise ConfigError("sweep is empty")
        if any(not isinstance(k, int) or isinstance(k, bool) or k < 1 for k in ks):
            raise ConfigError(f"component counts must be positive integers, got {ks}")
        if not isinstance(self.train_per_subject, int) or self.train_per_subject < 1:
            raise ConfigError(f"train_per_subject must be a positive integer, got {self.train_per_subject!r}")
        if self.split_policy not in SPLIT_POLICIES:
            raise ConfigError(f"unknown split policy {self.split_policy!r}")
        if self.metric is not None:
            allowed = ("frobenius", "colsum") if self.two_d else ("euclidean",)
            if self.metric not in allowed:
                raise ConfigError(f"metric {self.metric!r} does not apply to {self.algorithm}; use one of {allowed}")
        if self.weight is not None and self.weight not in WEIGHTS:
            raise ConfigError(f"unknown weight {self.weight!r}; expected one of {WEIGHTS}")
        if self.init is not None and self.init not in L1_INITS:
            raise ConfigError(f"unknown init {self.init!r}; expected one of {L1_INITS}")
        if self.max_iter is not None and (not isinstance(self.max_iter, int) or self.max_iter < 1):
            raise ConfigError(f"max_iter must be a positive integer, got {self.max_iter!r}")
        if self.tol is not None and not (isinstance(self.tol, (int, float)) and self.tol >= 0):
            raise ConfigError(f"tol must be >= 0, got {self.tol!r}")
        if self.degree is not None and (not isinstance(self.degree, int) or self.degree < 1):
            raise ConfigError(f"degree must be a positive integer, got {self.degree!r}")


@dataclass
class ExperimentReport:
    config: dict
    per_k: list[dict] = field(default_factory=list)
    best_k: Optional[int] = None
    best_accuracy: Optional[float] = None
    fit_time_s: Optional[float] = None
    eval_time_s: Optional[float] = None
    eigenproblem_shape: Optional[list[int]] = None
    converged_at: Optional[int] = None
    trace_path: Optional[str] = None
    n_train: Optional[int] = None
    n_test: Optional[int] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


# ---------------------------------------------------------------------------

def _fitter(cfg: ExperimentConfig) -> Callable:
    a = cfg.algorithm
    if a == "pca":
        return lambda X, k: fit_pca(X, k)
    if a == "eca":
        return lambda X, k: fit_eca(X, k)
    if a == "2dpca":
        return lambda F, k: fit_2dpca(F, k)
    if a == "2deca":
        return lambda F, k: fit_2deca(F, k)
    if a in ("r1pca", "2dr1pca"):
        fn = fit_r1pca if a == "r1pca" else fit_2dr1pca
        opts = dict(
            max_iter=cfg.knob("max_iter"), tol=cfg.knob("tol"),
            weight=cfg.knob("weight"), center=cfg.knob("center"),
        )
        return lambda X, k: fn(X, k, **opts)[0]
    if a in ("l1pca", "2dl1pca"):
        fn = fit_l1pca if a == "l1pca" else fit_2dl1pca
        return lambda X, k: fn(X, k, seed=cfg.seed, init=cfg.knob("init"), center=cfg.knob("center"))
    fn = fit_kpca if a == "kpca" else fit_keca
    return lambda X, k: fn(X, k, p=cfg.knob("degree"), center_kernel=cfg.knob("center_kernel"))


def _max_components(cfg: ExperimentConfig, train: Dataset) -> int:
    n = len(train)
    rows, cols = train.shape
    if cfg.two_d:
        return rows
    if cfg.algorithm in ("kpca", "keca"):
        return n
    return min(rows * cols, n - 1)


def _component_counts(cfg: ExperimentConfig, train: Dataset) -> list[int]:
    if cfg.components is not None:
        return [cfg.components]
    if cfg.sweep is not None:
        return list(cfg.sweep)
    default = DEFAULT_SWEEP_2D if cfg.two_d else DEFAULT_SWEEP_1D
    top = _max_components(cfg, train)
    ks = [k for k in default if k <= top]
    return ks or [min(default[0], top)]


def export_trace(trace: ConvergenceTrace, path) -> Path:
    """Write a trace as CSV: iteration,subspace_change,off_diagonality,objective."""
    if len(trace) == 0:
        raise ValueError("cannot export an empty trace")
    path = Path(path)

    def cell(v):
        return "" if v is None else format(v, ".17g")

    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "subspace_change", "off_diagonality", "objective"])
        for r in trace.records:
            writer.writerow([r.iteration, cell(r.subspace_change), cell(r.off_diagonality), cell(r.objective)])
    return path


def read_trace(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def run_experiment(cfg: ExperimentConfig, dataset: Optional[Dataset] = None) -> ExperimentReport:
    """Fit, project and classify one configuration, once per component count.

    The reported best k is the most accurate one (smallest k on ties); its
    timings, eigenproblem size and convergence data go in the top-level
    fields. Pass ``dataset`` to bypass loading ``cfg.data``.
    """
    cfg.validate()
    if dataset is None:
        if not cfg.data:
            raise ConfigError("no dataset given: set 'data' to a corpus directory")
        dataset = load_corpus(cfg.data, cfg.layout)
    sp = split(dataset, cfg.train_per_subject, cfg.split_policy, cfg.seed)
    if cfg.two_d:
        train, test = sp.train.images, sp.test.images
    else:
        train, test = vectorize(sp.train)[0], vectorize(sp.test)[0]
    metric = cfg.metric or ("frobenius" if cfg.two_d else "euclidean")
    ks = _component_counts(cfg, sp.train)
    fit = _fitter(cfg)

    report = ExperimentReport(config=cfg.to_dict(), n_train=len(sp.train), n_test=len(sp.test))
    results = []
    for k in ks:
        t0 = time.perf_counter()
        model = fit(train, k)
        t1 = time.perf_counter()
        preds = classify(model.transform(train), sp.train.labels, model.transform(test), metric)
        acc = accuracy(preds, list(sp.test.labels))
        t2 = time.perf_counter()
        trace = getattr(model, "trace", None)
        report.per_k.append({
            "k": k,
            "accuracy": acc,
            "fit_time_s": t1 - t0,
            "eval_time_s": t2 - t1,
            "converged_at": None if trace is None else trace.converged_at,
        })
        results.append(model)
    best = max(range(len(ks)), key=lambda i: (report.per_k[i]["accuracy"], -i))
    row, model = report.per_k[best], results[best]
    report.best_k = row["k"]
    report.best_accuracy = row["accuracy"]
    report.fit_time_s = row["fit_time_s"]
    report.eval_time_s = row["eval_time_s"]
    shape = getattr(model, "eigenproblem_shape", None)
    report.eigenproblem_shape = None if shape is None else [int(s) for s in shape]
    trace = getattr(model, "trace", None)
    if trace is not None:
        report.converged_at = trace.converged_at
        if cfg.trace:
            report.trace_path = str(export_trace(trace, cfg.trace))
    return report


def run_suite(
    cfgs: Sequence[ExperimentConfig],
    parallel: bool = False,
    max_workers: Optional[int] = None,
) -> tuple[list[ExperimentReport], list[dict]]:
    """Run several experiments; a failing config yields an error row, not an abort.

    Reports and table rows come back in input order.
    """
    cache: dict[tuple, Dataset] = {}

    def one(cfg: ExperimentConfig) -> ExperimentReport:
        try:
            cfg.validate()
            key = (cfg.data, cfg.layout)
            if cfg.data and key not in cache:
                cache[key] = load_corpus(cfg.data, cfg.layout)
            return run_experiment(cfg, cache.get(key))
        except (ValueError, OSError) as exc:
            return ExperimentReport(config=cfg.to_dict(), error=str(exc))

    if parallel and len(cfgs) > 1:
        # load shared corpora up front so worker threads only read the cache
        for cfg in cfgs:
            key = (cfg.data, cfg.layout)
            if cfg.data and key not in cache:
                try:
                    cache[key] = load_corpus(cfg.data, cfg.layout)
                except (ValueError, OSError):
                    pass
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            reports = list(pool.map(one, cfgs))
    else:
        reports = [one(cfg) for cfg in cfgs]
    return reports, [table_row(r) for r in reports]


TABLE_COLUMNS = ("algorithm", "data", "accuracy", "time_s", "best_k", "eval_time_s", "converged_at", "error")


def table_row(report: ExperimentReport) -> dict:
    cfg = report.config
    return {
        "algorithm": cfg.get("algorithm"),
        "data": cfg.get("data"),
        "accuracy": report.best_accuracy,
        "time_s": report.fit_time_s,
        "best_k": report.best_k,
        "eval_time_s": report.eval_time_s,
        "converged_at": report.converged_at,
        "error": report.error,
    }


def write_table(rows: Sequence[dict], path) -> Path:
    """Write suite rows as CSV, or JSON when ``path`` ends in ``.json``."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(list(rows), indent=2))
        return path
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: "" if row.get(k) is None else row[k] for k in TABLE_COLUMNS})
    return path


def default_suite(data: str, **common) -> list[ExperimentConfig]:
    """All ten algorithms on one corpus with default knobs."""
    return [ExperimentConfig(algorithm=a, data=data, **common) for a in ALGORITHMS]
