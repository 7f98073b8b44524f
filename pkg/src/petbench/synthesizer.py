"""Degree-bounded Bayesian-network synthesizer, correlated mode, no noise.

Structure is learned greedily: the root is the highest-entropy attribute, then
each step adds the (attribute, parent set) pair with the largest mutual
information, parents drawn from attributes already in the network.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import AttributeSchema, Dataset

# MI values closer than this count as ties and fall back to name order.
MI_TIE_EPS = 1e-12


@dataclass(frozen=True)
class SynthesizerConfig:
    degree: int = 2
    n_out: int | None = None
    seed: int = 0
    bins: int = 20
    smoothing: float = 0.1

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")
        if self.n_out is not None and self.n_out < 0:
            raise ValueError(f"n_out must be >= 0, got {self.n_out}")
        if self.bins < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")
        if self.smoothing < 0:
            raise ValueError(f"smoothing must be >= 0, got {self.smoothing}")


@dataclass
class Column:
    """A discretized attribute: category labels, or equal-width bin edges."""

    name: str
    kind: str
    categories: list[str] = field(default_factory=list)
    edges: list[float] | None = None

    @property
    def binned(self) -> bool:
        return self.edges is not None

    @property
    def size(self) -> int:
        return len(self.edges) - 1 if self.binned else len(self.categories)

    def encode(self, values: Sequence[str]) -> np.ndarray:
        if self.binned:
            x = np.array([float(v) for v in values])
            inner = np.asarray(self.edges[1:-1])
            return np.searchsorted(inner, x, side="right").astype(np.int64)
        lookup = {c: i for i, c in enumerate(self.categories)}
        return np.array([lookup[v] for v in values], dtype=np.int64)

    def decode(self, codes: np.ndarray, rng: np.random.Generator) -> list[str]:
        if not self.binned:
            return [self.categories[c] for c in codes]
        lo = np.asarray(self.edges[:-1])[codes]
        hi = np.asarray(self.edges[1:])[codes]
        if self.kind == "integer":
            lo_i = np.ceil(lo).astype(np.int64)
            hi_i = np.floor(hi).astype(np.int64)
            # half-open bins except the last, which includes the maximum
            last = codes == self.size - 1
            hi_i = np.where(~last & (hi_i == hi), hi_i - 1, hi_i)
            hi_i = np.maximum(hi_i, lo_i)
            return [str(v) for v in rng.integers(lo_i, hi_i + 1)]
        return [repr(float(v)) for v in rng.uniform(lo, hi)]


def discretize(d: Dataset, bins: int = 20) -> tuple[list[Column], np.ndarray]:
    """Code every attribute as small integers.

    Numeric attributes with more than ``bins`` distinct values are cut into
    ``bins`` equal-width bins; everything else keeps its observed categories.
    """
    columns, coded = [], []
    for a in d.schema:
        values = d.column(a.name)
        distinct = sorted(set(values))
        if a.numeric and len(distinct) > bins:
            x = np.array([float(v) for v in values])
            lo, hi = float(x.min()), float(x.max())
            edges = np.linspace(lo, hi, bins + 1).tolist()
            col = Column(a.name, a.kind, edges=edges)
        else:
            if a.numeric:
                distinct = sorted(distinct, key=float)
            col = Column(a.name, a.kind, categories=distinct)
        columns.append(col)
        coded.append(col.encode(values))
    matrix = np.stack(coded, axis=1) if coded else np.zeros((d.n, 0), dtype=np.int64)
    return columns, matrix


def _joint_codes(matrix: np.ndarray, cols: Sequence[int], sizes: Sequence[int]) -> np.ndarray:
    key = np.zeros(matrix.shape[0], dtype=np.int64)
    for c in cols:
        key = key * sizes[c] + matrix[:, c]
    return key


def entropy(codes: np.ndarray) -> float:
    _, counts = np.unique(codes, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


def mutual_information_codes(x: np.ndarray, y: np.ndarray) -> float:
    """I(X;Y) in bits from paired integer samples."""
    n = len(x)
    if n == 0:
        raise ValueError("mutual information of zero rows is undefined")
    _, xi = np.unique(x, return_inverse=True)
    _, yi = np.unique(y, return_inverse=True)
    nx, ny = xi.max() + 1, yi.max() + 1
    joint = np.bincount(xi * ny + yi, minlength=nx * ny).reshape(nx, ny).astype(float)
    pxy = joint / n
    px = pxy.sum(axis=1, keepdims=True)
    py = pxy.sum(axis=0, keepdims=True)
    nz = pxy > 0
    mi = float((pxy[nz] * np.log2(pxy[nz] / (px @ py)[nz])).sum())
    return max(mi, 0.0)


def mutual_information(d: Dataset, a: str, b: str | Sequence[str], bins: int = 20) -> float:
    """Empirical I(a; b) in bits, with b a single attribute or a set of attributes."""
    parents = [b] if isinstance(b, str) else list(b)
    if not parents:
        raise ValueError("parent set must be nonempty")
    if d.n == 0:
        raise ValueError("mutual information of zero rows is undefined")
    columns, matrix = discretize(d, bins)
    names = [c.name for c in columns]
    sizes = [c.size for c in columns]
    child = matrix[:, names.index(a)]
    joint = _joint_codes(matrix, [names.index(p) for p in parents], sizes)
    return mutual_information_codes(child, joint)


@dataclass
class BayesianNetwork:
    columns: list[Column]
    order: list[str]
    parents: dict[str, tuple[str, ...]]
    degree: int
    # cpts[name] has shape (prod(parent sizes), child size)
    cpts: dict[str, np.ndarray] = field(default_factory=dict)
    target: str = ""
    schema: tuple[AttributeSchema, ...] = ()
    _matrix: np.ndarray | None = field(default=None, repr=False)

    def column(self, name: str) -> Column:
        return next(c for c in self.columns if c.name == name)

    def describe(self) -> dict:
        return {
            "degree": self.degree,
            "order": list(self.order),
            "parents": {a: list(self.parents[a]) for a in self.order},
            "domain_sizes": {c.name: c.size for c in self.columns},
            "cpt_shapes": {a: list(self.cpts[a].shape) for a in self.order if a in self.cpts},
        }

    def write_description(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.describe(), indent=2, sort_keys=True) + "\n")


def _greedy_structure(
    names: list[str], matrix: np.ndarray, sizes: list[int], degree: int
) -> tuple[list[str], dict[str, tuple[str, ...]]]:
    idx = {name: i for i, name in enumerate(names)}
    by_name = sorted(names)
    h = {a: entropy(matrix[:, idx[a]]) for a in by_name}
    top = max(h.values())
    root = next(a for a in by_name if h[a] >= top - MI_TIE_EPS)

    order = [root]
    parents = {root: ()}
    remaining = [a for a in by_name if a != root]
    while remaining:
        # MI never drops when a parent is added, so full-size sets dominate
        size = min(degree, len(order))
        candidates = [tuple(sorted(p)) for p in itertools.combinations(order, size)]
        candidates.sort()
        best = None
        for child in remaining:
            x = matrix[:, idx[child]]
            for pset in candidates:
                y = _joint_codes(matrix, [idx[p] for p in pset], sizes)
                mi = mutual_information_codes(x, y)
                if best is None or mi > best[0] + MI_TIE_EPS:
                    best = (mi, child, pset)
        _, child, pset = best
        order.append(child)
        parents[child] = pset
        remaining.remove(child)
    return order, parents


def greedy_bayes(d: Dataset, config: SynthesizerConfig = SynthesizerConfig()) -> BayesianNetwork:
    if not d.schema:
        raise ValueError("dataset has no attributes")
    columns, matrix = discretize(d, config.bins)
    names = [c.name for c in columns]
    sizes = [c.size for c in columns]
    if d.n == 0:
        order = sorted(names)
        parents = {a: () for a in order}
    else:
        order, parents = _greedy_structure(names, matrix, sizes, config.degree)
    return BayesianNetwork(columns, order, parents, config.degree,
                           target=d.target, schema=d.schema, _matrix=matrix)


def fit_cpts(d: Dataset, net: BayesianNetwork, smoothing: float = 0.1) -> BayesianNetwork:
    """Laplace-smoothed conditional tables, one row per parent combination."""
    matrix = net._matrix
    if matrix is None or matrix.shape[0] != d.n:
        names = [c.name for c in net.columns]
        matrix = np.stack([net.columns[i].encode(d.column(n)) for i, n in enumerate(names)],
                          axis=1) if d.n else np.zeros((0, len(names)), dtype=np.int64)
    idx = {c.name: i for i, c in enumerate(net.columns)}
    sizes = [c.size for c in net.columns]
    cpts = {}
    for child in net.order:
        pset = net.parents[child]
        k = sizes[idx[child]]
        rows = math.prod(sizes[idx[p]] for p in pset)
        pkey = _joint_codes(matrix, [idx[p] for p in pset], sizes)
        counts = np.bincount(pkey * k + matrix[:, idx[child]], minlength=rows * k)
        counts = counts.reshape(rows, k).astype(float) + smoothing
        totals = counts.sum(axis=1, keepdims=True)
        table = np.where(totals > 0, counts / np.where(totals > 0, totals, 1), 1.0 / k)
        cpts[child] = table
    net.cpts = cpts
    return net


def sample(net: BayesianNetwork, config: SynthesizerConfig, n_out: int | None = None) -> Dataset:
    """Ancestral sampling in network order; binned numerics drawn uniformly inside their bin."""
    n = config.n_out if n_out is None else n_out
    if n is None:
        raise ValueError("n_out not set")
    rng = np.random.default_rng(config.seed)
    idx = {c.name: i for i, c in enumerate(net.columns)}
    sizes = [c.size for c in net.columns]
    codes = np.zeros((n, len(net.columns)), dtype=np.int64)
    for child in net.order:
        table = net.cpts[child]
        pkey = _joint_codes(codes, [idx[p] for p in net.parents[child]], sizes)
        cdf = np.cumsum(table, axis=1)
        cdf[:, -1] = 1.0
        u = rng.random(n)
        row_cdf = cdf[pkey]
        codes[:, idx[child]] = (u[:, None] >= row_cdf).sum(axis=1)
    columns = [c.decode(codes[:, i], rng) for i, c in enumerate(net.columns)]
    rows = list(zip(*columns)) if n else []
    return Dataset(net.schema, tuple(rows), net.target)


def synthesize(d: Dataset, config: SynthesizerConfig = SynthesizerConfig()) -> tuple[Dataset, BayesianNetwork]:
    net = fit_cpts(d, greedy_bayes(d, config), config.smoothing)
    n_out = d.n if config.n_out is None else config.n_out
    return sample(net, config, n_out), net


def total_variation(a: Sequence, b: Sequence) -> float:
    """Half L1 distance between the empirical distributions of two samples."""
    if not len(a) or not len(b):
        raise ValueError("empty sample")
    ca: dict = {}
    cb: dict = {}
    for v in a:
        ca[v] = ca.get(v, 0) + 1
    for v in b:
        cb[v] = cb.get(v, 0) + 1
    keys = set(ca) | set(cb)
    return 0.5 * sum(abs(ca.get(k, 0) / len(a) - cb.get(k, 0) / len(b)) for k in keys)


def marginal_tvd(original: Dataset, synthetic: Dataset, bins: int = 20) -> dict[str, float]:
    """Per-attribute TVD, binned numerics compared on the original's bins."""
    columns, orig = discretize(original, bins)
    out = {}
    for i, col in enumerate(columns):
        values = synthetic.column(col.name)
        if col.binned:
            x = np.clip(np.array([float(v) for v in values]), col.edges[0], col.edges[-1])
            syn = np.searchsorted(np.asarray(col.edges[1:-1]), x, side="right")
        else:
            lookup = {c: j for j, c in enumerate(col.categories)}
            syn = np.array([lookup.get(v, -1) for v in values])
        out[col.name] = total_variation(orig[:, i].tolist(), syn.tolist())
    return out
