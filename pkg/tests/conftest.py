from __future__ import annotations

import random
from pathlib import Path

import pytest

from datacause.tabular import ColumnType, Dataset, from_columns, load_csv

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def people_fail() -> Dataset:
    return load_csv(FIXTURES / "people_fail.csv")


@pytest.fixture(scope="session")
def people_pass() -> Dataset:
    return load_csv(FIXTURES / "people_pass.csv")


def random_dataset(seed: int, min_rows: int = 8, max_rows: int = 40) -> Dataset:
    """Small mixed-type dataset with seeded content and missing cells."""
    rng = random.Random(seed)
    n = rng.randint(min_rows, max_rows)
    cols = []
    n_cat = rng.randint(1, 2)
    n_num = rng.randint(1, 2)
    n_text = rng.randint(0, 1)
    for c in range(n_cat):
        values = [rng.choice("abcd") for _ in range(n)]
        for _ in range(rng.randint(0, n // 4)):
            values[rng.randrange(n)] = None
        cols.append((f"cat_{c}", ColumnType.CATEGORICAL, values))
    for c in range(n_num):
        values = [round(rng.uniform(-30, 70), 3) for _ in range(n)]
        for _ in range(rng.randint(0, n // 5)):
            values[rng.randrange(n)] = None
        cols.append((f"num_{c}", ColumnType.NUMERICAL, values))
    for c in range(n_text):
        values = ["".join(rng.choice("xyz") for _ in range(rng.randint(2, 14)))
                  for _ in range(n)]
        for _ in range(rng.randint(0, n // 5)):
            values[rng.randrange(n)] = None
        cols.append((f"text_{c}", ColumnType.TEXT, values))
    if all(v is None for _, _, vals in cols for v in vals):  # pragma: no cover
        cols[0][2][0] = "a"
    return from_columns(cols)
