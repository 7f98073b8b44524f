"""Experiment orchestration: data variants x models x measured replicates.

Pipeline: clean -> split -> {benchmark, anonymize per k, synthesize} on the
training split -> per variant per model, ``replicates`` measured train+predict
runs. Test data is always the held-out split of the original cleaned data,
recoded through the variant's generalization node for k-anonymous variants.
"""

from __future__ import annotations

import csv
import json
import logging
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .anonymizer import AnonymizationConfig, anonymize, generalize_dataset
from .config import ExperimentConfig
from .data import Encoder, split
from .energy import EnergyMeter, IdleBaseline, Measurement, aggregate, make_probe
from .models import accuracy, predict, train
from .stats import mann_whitney_u
from .synthesizer import SynthesizerConfig, synthesize

log = logging.getLogger(__name__)

BENCHMARK = "benchmark"
SYNTHETIC = "synthetic"


class ReportError(ValueError):
    pass


@dataclass
class Variant:
    name: str
    kind: str  # benchmark | kanon | synthetic
    k: int | None = None
    n_train: int = 0
    preparation: list[Measurement] = field(default_factory=list)
    suppressed_cell_fraction: float | None = None
    node: dict | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name, "kind": self.kind, "k": self.k, "n_train": self.n_train,
            "preparation": [m.to_dict() for m in self.preparation],
            "suppressed_cell_fraction": self.suppressed_cell_fraction,
            "node": self.node, "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Variant":
        return cls(d["name"], d["kind"], d["k"], d["n_train"],
                   [Measurement.from_dict(m) for m in d["preparation"]],
                   d["suppressed_cell_fraction"], d["node"], d["error"])


@dataclass
class Cell:
    variant: str
    model: str
    measurements: list[Measurement] = field(default_factory=list)
    accuracies: list[float] = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and bool(self.measurements)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant, "model": self.model,
            "measurements": [m.to_dict() for m in self.measurements],
            "accuracies": list(self.accuracies), "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Cell":
        return cls(d["variant"], d["model"], [Measurement.from_dict(m) for m in d["measurements"]],
                   list(d["accuracies"]), d["error"])


@dataclass
class BenchReport:
    name: str
    seed: int
    replicates: int
    baseline: IdleBaseline
    variants: list[Variant]
    cells: list[Cell]
    settings: dict = field(default_factory=dict)

    def variant(self, name: str) -> Variant:
        return next(v for v in self.variants if v.name == name)

    def cell(self, variant: str, model: str) -> Cell:
        return next(c for c in self.cells if c.variant == variant and c.model == model)

    @property
    def models(self) -> list[str]:
        return list(dict.fromkeys(c.model for c in self.cells))

    @property
    def complete(self) -> bool:
        return all(v.error is None for v in self.variants) and all(c.ok for c in self.cells)

    def summary(self) -> list[dict]:
        rows = []
        for c in self.cells:
            row = {"variant": c.variant, "model": c.model, "error": c.error}
            if c.ok:
                agg = aggregate(c.measurements)
                row.update(mean_energy_j=agg.mean, std_energy_j=agg.std,
                           mean_duration_s=agg.mean_duration,
                           mean_accuracy=float(np.mean(c.accuracies)))
            rows.append(row)
        return rows

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "replicates": self.replicates,
            "settings": self.settings,
            "baseline": self.baseline.to_dict(),
            "variants": [v.to_dict() for v in self.variants],
            "cells": [c.to_dict() for c in self.cells],
            # derived, recomputable from the raw records above
            "summary": self.summary(),
            "deviations": deviation_table(self) if self._has_benchmark() else [],
            "utests": utest_table(self),
        }

    def _has_benchmark(self) -> bool:
        return any(v.name == BENCHMARK for v in self.variants)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "BenchReport":
        return cls(
            name=d["name"], seed=d["seed"], replicates=d["replicates"],
            baseline=IdleBaseline.from_dict(d["baseline"]),
            variants=[Variant.from_dict(v) for v in d["variants"]],
            cells=[Cell.from_dict(c) for c in d["cells"]],
            settings=d.get("settings", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "BenchReport":
        return cls.from_dict(json.loads(text))


def _pct(value: float, reference: float) -> float | None:
    if reference == 0:
        return None
    return (value - reference) / reference * 100.0


def deviation_table(r: BenchReport) -> list[dict]:
    """Percent deviation of mean duration and mean net energy from the benchmark, per cell."""
    if not r._has_benchmark():
        raise ReportError("report has no benchmark variant")
    rows = []
    for model in r.models:
        try:
            ref_cell = r.cell(BENCHMARK, model)
        except StopIteration:
            continue
        if not ref_cell.ok:
            continue
        ref = aggregate(ref_cell.measurements)
        for v in r.variants:
            c = next((c for c in r.cells if c.variant == v.name and c.model == model), None)
            if c is None or not c.ok:
                continue
            agg = aggregate(c.measurements)
            rows.append({
                "variant": v.name, "model": model,
                "mean_duration_s": agg.mean_duration, "mean_energy_j": agg.mean,
                "duration_dev_pct": _pct(agg.mean_duration, ref.mean_duration),
                "energy_dev_pct": _pct(agg.mean, ref.mean),
            })
    return rows


def _energies(c: Cell) -> list[float]:
    return [m.net_energy_j if m.net_energy_j is not None else m.total_j for m in c.measurements]


def utest_table(r: BenchReport) -> list[dict]:
    """One-sided p that the row variant's energy is greater than the column variant's, per model."""
    rows = []
    for model in r.models:
        cells = [c for c in r.cells if c.model == model and c.ok]
        for a in cells:
            for b in cells:
                if a.variant == b.variant:
                    continue
                res = mann_whitney_u(_energies(a), _energies(b), "greater")
                rows.append({"model": model, "row": a.variant, "column": b.variant, **res.to_dict()})
    return rows


# --- running ----------------------------------------------------------------

def _error_text(exc: BaseException) -> str:
    return f"{type(exc).__name__}: {exc}"


def prepare_variants(cfg: ExperimentConfig, train_set, test_set, meter: EnergyMeter, baseline):
    """Yield (Variant, train data, test data) for benchmark, each k, and synthetic."""
    yield Variant(BENCHMARK, "benchmark", n_train=train_set.n), train_set, test_set

    hierarchies = cfg.load_hierarchies()
    for k in cfg.k_values:
        v = Variant(f"k={k}", "kanon", k=k)
        anon_cfg = AnonymizationConfig(k, cfg.quasi_identifiers, hierarchies, cfg.suppression_limit)
        try:
            solution = None
            for rep in range(cfg.prep_replicates):
                m, solution = meter.measure(lambda: anonymize(train_set, anon_cfg), v.name, rep, baseline)
                v.preparation.append(m)
            v.n_train = solution.output.n
            v.suppressed_cell_fraction = solution.suppressed_cell_fraction
            v.node = dict(zip(solution.quasi_identifiers, solution.node))
            test_v = generalize_dataset(test_set, anon_cfg, solution.node)
        except Exception as exc:  # recorded; other variants proceed
            log.warning("variant %s failed: %s", v.name, exc)
            v.error = _error_text(exc)
            yield v, None, None
            continue
        yield v, solution.output, test_v

    v = Variant(SYNTHETIC, "synthetic")
    syn_cfg = SynthesizerConfig(
        degree=cfg.synthesizer.degree, n_out=cfg.synthesizer.n_out, seed=cfg.seed,
        bins=cfg.synthesizer.bins, smoothing=cfg.synthesizer.smoothing,
    )
    try:
        synthetic = None
        for rep in range(cfg.prep_replicates):
            m, (synthetic, _) = meter.measure(lambda: synthesize(train_set, syn_cfg), v.name, rep, baseline)
            v.preparation.append(m)
        v.n_train = synthetic.n
    except Exception as exc:
        log.warning("variant %s failed: %s", v.name, exc)
        v.error = _error_text(exc)
        yield v, None, None
        return
    yield v, synthetic, test_set


def run_cell(cfg: ExperimentConfig, variant: Variant, spec, data, meter, baseline, labels) -> Cell:
    cell = Cell(variant.name, spec.name)
    train_v, test_v = data
    try:
        encoder = Encoder().fit(train_v, labels)
        X_train, y_train = encoder.transform(train_v)
        X_test, y_test = encoder.transform(test_v)
        for rep in range(cfg.replicates):
            rep_spec = spec.with_seed(cfg.seed + rep)

            def stage():
                model = train(rep_spec, X_train, y_train)
                return predict(model, X_test)

            m, predicted = meter.measure(stage, f"{variant.name}/{spec.name}", rep, baseline)
            cell.measurements.append(m)
            cell.accuracies.append(accuracy(predicted, y_test))
    except Exception as exc:
        log.warning("cell %s/%s failed: %s", variant.name, spec.name, exc)
        log.debug("%s", traceback.format_exc())
        cell.error = _error_text(exc)
    return cell


def run_experiment(cfg: ExperimentConfig, probe=None) -> BenchReport:
    probe = probe if probe is not None else make_probe(cfg.probe)
    meter = EnergyMeter(probe)
    log.info("measuring idle baseline (%d replicates)", cfg.idle_replicates)
    baseline = meter.idle_baseline(cfg.idle_replicates)

    data = cfg.dataset.load()
    labels = sorted(set(data.column(data.target)))
    train_set, test_set = split(data, cfg.test_fraction, cfg.seed)
    log.info("%s: %d cleaned rows, %d train / %d test", cfg.name, data.n, train_set.n, test_set.n)

    variants, cells = [], []
    for variant, train_v, test_v in prepare_variants(cfg, train_set, test_set, meter, baseline):
        variants.append(variant)
        for spec in cfg.models:
            if variant.error is not None:
                cells.append(Cell(variant.name, spec.name, error=f"variant failed: {variant.error}"))
                continue
            log.info("cell %s / %s", variant.name, spec.name)
            cells.append(run_cell(cfg, variant, spec, (train_v, test_v), meter, baseline, labels))

    settings = {
        "version": __version__,
        "dataset": str(cfg.dataset.path.name),
        "n_clean": data.n, "n_train": train_set.n, "n_test": test_set.n,
        "k_values": list(cfg.k_values), "suppression_limit": cfg.suppression_limit,
        "test_fraction": cfg.test_fraction,
        "models": [dict(spec.__dict__, hidden=list(spec.hidden)) for spec in cfg.models],
        "synthesizer": dict(cfg.synthesizer.__dict__),
        "probe": cfg.probe if isinstance(cfg.probe, dict) else str(cfg.probe),
        "quasi_identifiers": cfg.quasi_identifiers,
    }
    return BenchReport(cfg.name, cfg.seed, cfg.replicates, baseline, variants, cells, settings)


# --- output -----------------------------------------------------------------

def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _fmt(x):
    return "" if x is None else x


def emit(r: BenchReport, fmt: str, output_dir: str | Path) -> list[Path]:
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc

    if fmt == "json":
        path = out / "report.json"
        try:
            path.write_text(r.to_json())
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        return [path]

    if fmt == "scatter_csv":
        path = out / "scatter.csv"
        rows = [[c.variant, c.model, m.replicate, m.duration_s, m.net_energy_j]
                for c in r.cells for m in c.measurements]
        _write_csv(path, ["variant", "model", "replicate", "duration_s", "net_energy_j"], rows)
        return [path]

    if fmt != "csv_tables":
        raise ValueError(f"unknown format {fmt!r}")

    paths = []
    prep_rows = []
    for v in r.variants:
        if not v.preparation:
            continue
        agg = aggregate(v.preparation)
        prep_rows.append([v.name, agg.mean_duration, agg.mean, agg.std, len(v.preparation)])
    paths.append(out / "table2_preparation.csv")
    _write_csv(paths[-1], ["variant", "mean_duration_s", "mean_net_energy_j", "std_net_energy_j",
                           "replicates"], prep_rows)

    paths.append(out / "table3_suppression.csv")
    _write_csv(paths[-1], ["variant", "k", "suppressed_cell_fraction"],
               [[v.name, v.k, v.suppressed_cell_fraction] for v in r.variants if v.kind == "kanon"
                and v.error is None])

    paths.append(out / "table4_deviation.csv")
    dev = deviation_table(r) if r._has_benchmark() else []
    _write_csv(paths[-1], ["variant", "model", "mean_duration_s", "mean_net_energy_j",
                           "duration_dev_pct", "energy_dev_pct"],
               [[d["variant"], d["model"], d["mean_duration_s"], d["mean_energy_j"],
                 _fmt(d["duration_dev_pct"]), _fmt(d["energy_dev_pct"])] for d in dev])

    paths.append(out / "table5_mannwhitney.csv")
    _write_csv(paths[-1], ["model", "row", "column", "u_statistic", "p_value", "alternative", "method"],
               [[u["model"], u["row"], u["column"], u["u_statistic"], u["p_value"],
                 u["alternative"], u["method"]] for u in utest_table(r)])

    paths.append(out / "table6_accuracy.csv")
    acc_rows = []
    for c in r.cells:
        if c.ok:
            acc_rows.append([c.variant, c.model, float(np.mean(c.accuracies)),
                             " ".join(repr(a) for a in c.accuracies)])
    _write_csv(paths[-1], ["variant", "model", "mean_accuracy", "replicate_accuracies"], acc_rows)
    return paths


def emit_all(r: BenchReport, output_dir: str | Path) -> list[Path]:
    return [p for fmt in ("json", "csv_tables", "scatter_csv") for p in emit(r, fmt, output_dir)]
