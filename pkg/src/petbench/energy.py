"""Stage energy measurement from cumulative CPU/DRAM counters.

Two probes share one interface: ``RaplProbe`` reads the Linux powercap tree,
``SimulatedProbe`` integrates a constant or trace-driven power draw over a clock.
Counter pairs are differenced modulo their wrap range. Only one stage may be
measured at a time because the counters are machine-global.
"""

from __future__ import annotations

import csv
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

UJ_PER_J = 1_000_000
POWERCAP_ROOT = Path("/sys/class/powercap")


class ProbeError(RuntimeError):
    pass


class ProbeUnavailableError(ProbeError):
    pass


class ConcurrentMeasurementError(RuntimeError):
    pass


@dataclass(frozen=True)
class EnergySample:
    timestamp: float
    counters: dict[str, int]  # cumulative microjoules per domain
    max_range: dict[str, int]

    def __post_init__(self):
        for domain, value in self.counters.items():
            if not 0 <= value < self.max_range[domain]:
                raise ProbeError(f"{domain}: counter {value} outside [0, {self.max_range[domain]})")


@dataclass(frozen=True)
class Measurement:
    label: str
    duration_s: float
    energy_j: dict[str, float]
    replicate: int = 0
    net_energy_j: float | None = None

    @property
    def total_j(self) -> float:
        return float(sum(self.energy_j.values()))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "replicate": self.replicate,
            "duration_s": self.duration_s,
            "energy_j": dict(sorted(self.energy_j.items())),
            "net_energy_j": self.net_energy_j,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Measurement":
        return cls(d["label"], d["duration_s"], dict(d["energy_j"]), d["replicate"], d["net_energy_j"])


@dataclass(frozen=True)
class IdleBaseline:
    joules_per_s: float
    replicates: tuple[Measurement, ...] = ()

    def to_dict(self) -> dict:
        return {"joules_per_s": self.joules_per_s,
                "replicates": [m.to_dict() for m in self.replicates]}

    @classmethod
    def from_dict(cls, d: dict) -> "IdleBaseline":
        return cls(d["joules_per_s"], tuple(Measurement.from_dict(m) for m in d["replicates"]))


# --- clocks -----------------------------------------------------------------

class WallClock:
    def now(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds)


class VirtualClock:
    """Deterministic clock: advances only by ``sleep`` and a fixed tick per reading."""

    def __init__(self, tick_s: float = 1e-3, start: float = 0.0):
        self.tick_s = tick_s
        self.t = start

    def now(self) -> float:
        self.t += self.tick_s
        return self.t

    def sleep(self, seconds: float) -> None:
        self.t += seconds


# --- probes -----------------------------------------------------------------

class SimulatedProbe:
    """Counters driven by a power model in watts over ``clock`` time.

    ``watts`` is a constant, or ``trace`` gives (timestamp_s, watts) steps
    relative to probe creation; power holds its last value past the trace end.
    The draw is split over domains by ``shares``.
    """

    def __init__(self, watts: float | None = None, trace: Sequence[tuple[float, float]] | None = None,
                 clock=None, shares: dict[str, float] | None = None,
                 max_range_uj: int = 262_143_328_850):
        if (watts is None) == (trace is None):
            raise ValueError("give exactly one of watts or trace")
        self.clock = clock or WallClock()
        self.shares = shares or {"package": 1.0}
        self.max_range_uj = max_range_uj
        if trace is not None:
            trace = sorted((float(t), float(w)) for t, w in trace)
            if not trace:
                raise ValueError("empty power trace")
        self.trace = trace
        self.watts = watts
        self.t0 = self.clock.now()

    @classmethod
    def from_trace_file(cls, path: str | Path, **kwargs) -> "SimulatedProbe":
        rows = []
        with Path(path).open(newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    continue  # header line
        return cls(trace=rows, **kwargs)

    def _energy_j(self, elapsed: float) -> float:
        if self.trace is None:
            return self.watts * elapsed
        total, t_prev, w_prev = 0.0, 0.0, self.trace[0][1]
        for t, w in self.trace:
            if t >= elapsed:
                break
            if t > t_prev:
                total += w_prev * (t - t_prev)
                t_prev = t
            w_prev = w
        return total + w_prev * (elapsed - t_prev)

    def read(self) -> EnergySample:
        now = self.clock.now()
        energy_uj = self._energy_j(now - self.t0) * UJ_PER_J
        counters = {d: int(round(energy_uj * s)) % self.max_range_uj for d, s in self.shares.items()}
        return EnergySample(now, counters, {d: self.max_range_uj for d in self.shares})


class RaplProbe:
    """Reads ``energy_uj`` / ``max_energy_range_uj`` under the powercap tree.

    Top-level ``intel-rapl:N`` zones are packages; their ``intel-rapl:N:M``
    children named ``dram`` are DRAM domains.
    """

    def __init__(self, root: str | Path = POWERCAP_ROOT, clock=None):
        self.root = Path(root)
        self.clock = clock or WallClock()
        self.domains = self._discover()
        if not self.domains:
            raise ProbeUnavailableError(f"no readable RAPL domains under {self.root}")

    def _discover(self) -> dict[str, Path]:
        domains = {}
        if not self.root.is_dir():
            return domains
        for zone in sorted(self.root.glob("intel-rapl:*")):
            parts = zone.name.split(":")
            if len(parts) != 2 or not (zone / "energy_uj").exists():
                continue
            domains[f"package-{parts[1]}"] = zone
            for sub in sorted(zone.glob(f"{zone.name}:*")):
                sub_name = (sub / "name").read_text().strip() if (sub / "name").exists() else ""
                if sub_name == "dram" and (sub / "energy_uj").exists():
                    domains[f"dram-{parts[1]}"] = sub
        for path in domains.values():
            try:
                int((path / "energy_uj").read_text())
            except (OSError, ValueError) as exc:
                raise ProbeUnavailableError(f"cannot read {path / 'energy_uj'}: {exc}") from exc
        return domains

    def read(self) -> EnergySample:
        counters, ranges = {}, {}
        for name, path in self.domains.items():
            counters[name] = int((path / "energy_uj").read_text())
            ranges[name] = int((path / "max_energy_range_uj").read_text())
        return EnergySample(self.clock.now(), counters, ranges)


def rapl_available(root: str | Path = POWERCAP_ROOT) -> bool:
    try:
        RaplProbe(root)
    except ProbeError:
        return False
    return True


_active_probe = None


def configure_probe(probe) -> None:
    global _active_probe
    _active_probe = probe


def read_counters(probe=None) -> EnergySample:
    probe = probe or _active_probe
    if probe is None:
        raise ProbeUnavailableError("no energy probe configured and no simulation set up")
    return probe.read()


def delta(before: EnergySample, after: EnergySample) -> dict[str, float]:
    """Per-domain joules between two samples, corrected for counter wraparound."""
    if set(before.counters) != set(after.counters):
        raise ProbeError(f"domain mismatch: {sorted(before.counters)} vs {sorted(after.counters)}")
    if after.timestamp < before.timestamp:
        raise ProbeError("samples out of order")
    return {
        d: ((after.counters[d] - before.counters[d]) % after.max_range[d]) / UJ_PER_J
        for d in after.counters
    }


# --- measuring --------------------------------------------------------------

_measure_token = threading.Lock()


class EnergyMeter:
    def __init__(self, probe):
        self.probe = probe

    @property
    def clock(self):
        return self.probe.clock

    def measure(self, stage: Callable[[], object], label: str, replicate: int = 0,
                baseline: IdleBaseline | None = None) -> tuple[Measurement, object]:
        """Run ``stage`` between two counter reads; returns (measurement, stage result)."""
        if not _measure_token.acquire(blocking=False):
            raise ConcurrentMeasurementError("another stage is being measured")
        try:
            before = self.probe.read()
            result = stage()
            after = self.probe.read()
        finally:
            _measure_token.release()
        duration = after.timestamp - before.timestamp
        if duration <= 0:
            duration = np.nextafter(0.0, 1.0)
        m = Measurement(label, duration, delta(before, after), replicate)
        if baseline is not None:
            m = Measurement(m.label, m.duration_s, m.energy_j, m.replicate, net_energy(m, baseline))
        return m, result

    def idle_baseline(self, replicates: int = 10, sleep_s: float = 1.0) -> IdleBaseline:
        if replicates < 1:
            raise ValueError("replicates must be >= 1")
        ms = tuple(
            self.measure(lambda: self.clock.sleep(sleep_s), "idle", r)[0]
            for r in range(replicates)
        )
        power = float(np.mean([m.total_j / m.duration_s for m in ms]))
        return IdleBaseline(power, ms)


def measure(stage: Callable[[], object], label: str, probe=None, replicate: int = 0) -> Measurement:
    return EnergyMeter(probe or _require_probe()).measure(stage, label, replicate)[0]


def idle_baseline(replicates: int = 10, probe=None) -> IdleBaseline:
    return EnergyMeter(probe or _require_probe()).idle_baseline(replicates)


def _require_probe():
    if _active_probe is None:
        raise ProbeUnavailableError("no energy probe configured and no simulation set up")
    return _active_probe


def net_energy(m: Measurement, b: IdleBaseline) -> float:
    return m.total_j - b.joules_per_s * m.duration_s


@dataclass(frozen=True)
class Aggregate:
    mean: float
    std: float
    mean_duration: float


def aggregate(ms: Sequence[Measurement]) -> Aggregate:
    """Mean and sample std (ddof=1; 0 for one element) of net energies, plus mean duration."""
    if not ms:
        raise ValueError("cannot aggregate an empty measurement list")
    energies = np.array([m.net_energy_j if m.net_energy_j is not None else m.total_j for m in ms])
    durations = np.array([m.duration_s for m in ms])
    std = float(np.std(energies, ddof=1)) if len(ms) > 1 else 0.0
    return Aggregate(float(np.mean(energies)), std, float(np.mean(durations)))


def make_probe(spec: str | dict | None):
    """Probe from ``"hardware"``, ``"simulated:<watts>"`` or a config mapping.

    Mapping keys: kind (hardware|simulated), watts, trace, clock (virtual|wall),
    tick_s, root. The string form ``simulated:<watts>`` uses the virtual clock.
    """
    if spec is None or spec == "hardware":
        return RaplProbe()
    if isinstance(spec, str):
        kind, _, rest = spec.partition(":")
        if kind != "simulated":
            raise ValueError(f"unknown probe spec {spec!r}")
        watts, _, clock = rest.partition(":")
        return make_probe({"kind": "simulated", "watts": float(watts), "clock": clock or "virtual"})
    kind = spec.get("kind", "simulated")
    if kind == "hardware":
        return RaplProbe(spec.get("root", POWERCAP_ROOT))
    if kind != "simulated":
        raise ValueError(f"unknown probe kind {kind!r}")
    clock_kind = spec.get("clock", "virtual")
    if clock_kind == "virtual":
        clock = VirtualClock(spec.get("tick_s", 1e-3))
    elif clock_kind == "wall":
        clock = WallClock()
    else:
        raise ValueError(f"unknown clock {clock_kind!r}")
    if spec.get("trace"):
        return SimulatedProbe.from_trace_file(spec["trace"], clock=clock)
    return SimulatedProbe(float(spec["watts"]), clock=clock)
