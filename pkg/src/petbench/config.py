"""Experiment configuration, read from YAML."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .data import AttributeSchema, Dataset, binarize_target, clean, drop_columns, load_csv
from .hierarchy import Hierarchy, load_hierarchy
from .models import ModelSpec
from .synthesizer import SynthesizerConfig


@dataclass
class DatasetConfig:
    path: Path
    schema: list[AttributeSchema]
    target: str
    delimiter: str = ","
    binarize_threshold: float | None = None
    max_rows: int | None = None
    exclude: list[str] = field(default_factory=list)

    def load(self) -> Dataset:
        """Load, drop ``exclude`` columns, clean, binarize the target if configured,
        and keep the first ``max_rows`` cleaned rows."""
        d = load_csv(self.path, self.schema, self.target, self.delimiter)
        if self.exclude:
            d = drop_columns(d, self.exclude)
        d = clean(d)
        if self.binarize_threshold is not None:
            d = binarize_target(d, self.binarize_threshold)
        if self.max_rows is not None:
            d = d.with_rows(d.rows[: self.max_rows])
        return d


@dataclass
class ExperimentConfig:
    name: str
    dataset: DatasetConfig
    hierarchies: dict[str, Path]
    k_values: list[int] = field(default_factory=lambda: [3, 10, 27])
    suppression_limit: float = 0.20
    synthesizer: SynthesizerConfig = field(default_factory=SynthesizerConfig)
    models: list[ModelSpec] = field(default_factory=lambda: [
        ModelSpec("knn"), ModelSpec("logreg"), ModelSpec("nn")])
    replicates: int = 10
    idle_replicates: int = 10
    prep_replicates: int = 1
    test_fraction: float = 0.2
    seed: int = 42
    probe: dict | str = field(default_factory=lambda: {"kind": "hardware"})
    output_dir: Path = Path("results")
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.k_values or any(k < 2 for k in self.k_values):
            raise ValueError(f"k_values must be nonempty and each >= 2, got {self.k_values}")
        if self.replicates < 1 or self.idle_replicates < 1 or self.prep_replicates < 1:
            raise ValueError("replicate counts must be >= 1")

    @property
    def quasi_identifiers(self) -> list[str]:
        return [a.name for a in self.dataset.schema
                if a.privacy_class == "quasi_identifying" and a.name not in self.dataset.exclude]

    def load_hierarchies(self) -> dict[str, Hierarchy]:
        missing = [q for q in self.quasi_identifiers if q not in self.hierarchies]
        if missing:
            raise ValueError(f"no hierarchy file for quasi-identifiers {missing}")
        return {q: load_hierarchy(self.hierarchies[q], q) for q in self.quasi_identifiers}


def _resolve(base: Path, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else (base / p)


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    """Parse a YAML experiment file; relative paths resolve against the file's directory."""
    path = Path(path)
    raw = yaml.safe_load(path.read_text()) or {}
    raw.update(overrides or {})
    return config_from_dict(raw, path.parent)


def config_from_dict(raw: dict, base: Path = Path(".")) -> ExperimentConfig:
    ds = raw["dataset"]
    dataset = DatasetConfig(
        path=_resolve(base, ds["path"]),
        schema=[AttributeSchema.from_dict(a) for a in ds["schema"]],
        target=ds["target"],
        delimiter=ds.get("delimiter", ","),
        binarize_threshold=ds.get("binarize_threshold"),
        max_rows=ds.get("max_rows"),
        exclude=list(ds.get("exclude") or []),
    )
    synth = dict(raw.get("synthesizer") or {})
    models = [ModelSpec.from_dict(m) for m in raw.get("models", [])] or None
    kwargs = dict(
        name=raw.get("name", base.name or "experiment"),
        dataset=dataset,
        hierarchies={q: _resolve(base, p) for q, p in (raw.get("hierarchies") or {}).items()},
        synthesizer=SynthesizerConfig(**synth),
        probe=raw.get("probe", {"kind": "hardware"}),
        output_dir=_resolve(base, raw.get("output_dir", "results")),
        raw=raw,
    )
    for key in ("k_values", "suppression_limit", "replicates", "idle_replicates",
                "prep_replicates", "test_fraction", "seed"):
        if key in raw:
            kwargs[key] = raw[key]
    if models:
        kwargs["models"] = models
    return ExperimentConfig(**kwargs)
