import csv
import json

import numpy as np
import pytest

from petbench.bench import (
    BENCHMARK, BenchReport, Cell, ReportError, Variant, deviation_table, emit, emit_all,
    run_experiment, utest_table,
)
from petbench.config import load_config
from petbench.energy import IdleBaseline, Measurement, aggregate
from petbench.stats import mann_whitney_u

from conftest import TEST_DATA

TOY = TEST_DATA / "toy.yaml"


@pytest.fixture(scope="module")
def toy_report():
    return run_experiment(load_config(TOY))


def read_csv(path):
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def test_config_resolves_relative_paths():
    cfg = load_config(TOY)
    assert cfg.dataset.path == TEST_DATA / "toy.csv"
    assert cfg.hierarchies["zip"] == TEST_DATA / "hierarchies" / "zip.csv"
    assert cfg.quasi_identifiers == ["zip", "age", "sex"]


def test_config_rejects_bad_k():
    with pytest.raises(ValueError):
        load_config(TOY, {"k_values": [1]})
    with pytest.raises(ValueError):
        load_config(TOY, {"k_values": []})


def test_structure(toy_report):
    r = toy_report
    assert [v.name for v in r.variants] == ["benchmark", "k=2", "k=3", "k=5", "synthetic"]
    assert len(r.cells) == 5 * 3
    assert r.complete
    for c in r.cells:
        assert len(c.measurements) == len(c.accuracies) == 2
        assert all(0.0 <= a <= 1.0 for a in c.accuracies)


def test_single_replicate_run():
    r = run_experiment(load_config(TOY, {"replicates": 1}))
    assert r.complete and all(len(c.measurements) == 1 for c in r.cells)


def test_preparation_measured_apart_from_cells(toy_report):
    for v in toy_report.variants:
        expected = 0 if v.name == BENCHMARK else 1
        assert len(v.preparation) == expected
        assert all(m.label == v.name for m in v.preparation)
    for c in toy_report.cells:
        assert all(m.label == f"{c.variant}/{c.model}" for m in c.measurements)


def test_anonymized_variants_record_node_and_fraction(toy_report):
    for v in toy_report.variants:
        if v.kind == "kanon":
            assert set(v.node) == {"zip", "age", "sex"}
            assert 0.0 <= v.suppressed_cell_fraction <= 1.0


def test_net_energy_uses_session_baseline(toy_report):
    b = toy_report.baseline.joules_per_s
    assert b == pytest.approx(7.512, rel=1e-6)
    for c in toy_report.cells:
        for m in c.measurements:
            assert m.net_energy_j == pytest.approx(m.total_j - b * m.duration_s)


def test_replicate_seeds_differ():
    cfg = load_config(TOY)
    assert [s.with_seed(cfg.seed + r).seed for s in cfg.models[:1] for r in range(2)] == [42, 43]


def test_failing_variant_is_recorded_and_others_proceed():
    r = run_experiment(load_config(TOY, {"k_values": [2, 27]}))
    failed = r.variant("k=27")
    assert failed.error and "InfeasibleError" in failed.error
    assert all(not c.ok for c in r.cells if c.variant == "k=27")
    assert all(c.ok for c in r.cells if c.variant != "k=27")
    assert not r.complete


def test_json_is_deterministic():
    first = run_experiment(load_config(TOY)).to_json()
    second = run_experiment(load_config(TOY)).to_json()
    assert first == second


def test_json_round_trip(toy_report):
    again = BenchReport.from_json(toy_report.to_json())
    assert again.to_json() == toy_report.to_json()
    assert again.cells == toy_report.cells


def fake_report(bench_j, other_j, duration=1.0):
    def cell(variant, joules):
        ms = [Measurement(f"{variant}/knn", duration, {"package": j}, r, j)
              for r, j in enumerate(joules)]
        return Cell(variant, "knn", ms, [0.5] * len(joules))

    return BenchReport("t", 0, len(bench_j), IdleBaseline(0.0),
                       [Variant(BENCHMARK, "benchmark"), Variant("other", "kanon", k=3)],
                       [cell(BENCHMARK, bench_j), cell("other", other_j)])


def test_deviation_zero_for_identical_variant():
    dev = {d["variant"]: d for d in deviation_table(fake_report([4.0, 6.0], [4.0, 6.0]))}
    assert dev["other"]["energy_dev_pct"] == 0.0
    assert dev["other"]["duration_dev_pct"] == 0.0


def test_deviation_half_energy():
    dev = {d["variant"]: d for d in deviation_table(fake_report([10.0, 10.0], [5.0, 5.0]))}
    assert dev["other"]["energy_dev_pct"] == -50.0


def test_deviation_requires_benchmark():
    r = fake_report([1.0], [1.0])
    r.variants = r.variants[1:]
    with pytest.raises(ReportError):
        deviation_table(r)


def test_utest_direction():
    r = fake_report([10.0, 11, 12, 13, 14], [1.0, 2, 3, 4, 5])
    rows = {(u["row"], u["column"]): u for u in utest_table(r)}
    assert rows[(BENCHMARK, "other")]["p_value"] == pytest.approx(1 / 252)
    assert rows[("other", BENCHMARK)]["p_value"] == 1.0


def test_emit_formats(toy_report, tmp_path):
    paths = emit_all(toy_report, tmp_path)
    names = sorted(p.name for p in paths)
    assert names == sorted(["report.json", "scatter.csv", "table2_preparation.csv",
                            "table3_suppression.csv", "table4_deviation.csv",
                            "table5_mannwhitney.csv", "table6_accuracy.csv"])
    scatter = read_csv(tmp_path / "scatter.csv")
    assert len(scatter) == len(toy_report.cells) * toy_report.replicates
    for row in read_csv(tmp_path / "table3_suppression.csv"):
        assert 0.0 <= float(row["suppressed_cell_fraction"]) <= 1.0
    with pytest.raises(ValueError):
        emit(toy_report, "xml", tmp_path)


def test_scatter_row_count_two_cells(tmp_path):
    r = fake_report([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    emit(r, "scatter_csv", tmp_path)
    assert len(read_csv(tmp_path / "scatter.csv")) == 2 * 3


def test_tables_recomputable_from_raw_json(toy_report, tmp_path):
    emit_all(toy_report, tmp_path)
    raw = json.loads((tmp_path / "report.json").read_text())
    cells = {(c["variant"], c["model"]): c for c in raw["cells"]}

    for row in read_csv(tmp_path / "table6_accuracy.csv"):
        accs = cells[(row["variant"], row["model"])]["accuracies"]
        assert float(row["mean_accuracy"]) == pytest.approx(np.mean(accs))

    for row in read_csv(tmp_path / "table4_deviation.csv"):
        mine = [m["net_energy_j"] for m in cells[(row["variant"], row["model"])]["measurements"]]
        ref = [m["net_energy_j"] for m in cells[(BENCHMARK, row["model"])]["measurements"]]
        expected = (np.mean(mine) - np.mean(ref)) / np.mean(ref) * 100
        assert float(row["energy_dev_pct"]) == pytest.approx(expected)

    for row in read_csv(tmp_path / "table2_preparation.csv"):
        prep = next(v for v in raw["variants"] if v["name"] == row["variant"])["preparation"]
        agg = aggregate([Measurement.from_dict(m) for m in prep])
        assert float(row["mean_net_energy_j"]) == pytest.approx(agg.mean)

    for row in read_csv(tmp_path / "table5_mannwhitney.csv"):
        a = [m["net_energy_j"] for m in cells[(row["row"], row["model"])]["measurements"]]
        b = [m["net_energy_j"] for m in cells[(row["column"], row["model"])]["measurements"]]
        assert float(row["p_value"]) == pytest.approx(mann_whitney_u(a, b, "greater").p_value)


def test_emit_reports_unwritable_path(toy_report, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        emit(toy_report, "json", blocker / "sub")
