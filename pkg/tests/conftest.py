from pathlib import Path

import pytest

from petbench.data import AttributeSchema, Dataset

ROOT = Path(__file__).resolve().parent.parent
TEST_DATA = Path(__file__).resolve().parent / "data"
ADULT_CSV = ROOT / "data" / "adult" / "adult.csv"
STUDENT_CSV = ROOT / "data" / "student" / "student-por.csv"


def make_dataset(columns: dict[str, list], target: str, kinds: dict | None = None,
                 classes: dict | None = None) -> Dataset:
    """Small in-memory dataset; every column is categorical/insensitive unless overridden."""
    kinds, classes = kinds or {}, classes or {}
    schema = tuple(
        AttributeSchema(name, kinds.get(name, "categorical"), classes.get(name, "insensitive"))
        for name in columns
    )
    rows = tuple(zip(*[[str(v) for v in values] for values in columns.values()]))
    return Dataset(schema, rows, target)


@pytest.fixture(scope="session")
def adult_config():
    from petbench.config import load_config

    if not ADULT_CSV.exists():
        pytest.skip("data/adult/adult.csv missing (run scripts/fetch_adult.py)")
    return load_config(ROOT / "configs" / "adult.yaml")


@pytest.fixture(scope="session")
def adult(adult_config):
    return adult_config.dataset.load()


@pytest.fixture(scope="session")
def adult_split(adult, adult_config):
    from petbench.data import split

    return split(adult, adult_config.test_fraction, adult_config.seed)
