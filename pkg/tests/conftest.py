import pytest

from strata.dataset import Dataset, FieldDescriptor, FieldKind
from strata.scenario import seattle_dataset


@pytest.fixture(scope="session")
def seattle() -> Dataset:
    return seattle_dataset()


def make_dataset(columns: dict[str, list[float]], keys: list[str] | None = None) -> Dataset:
    """Small numeric dataset with key column 'k'; columns given as name -> values."""
    n = len(next(iter(columns.values())))
    keys = keys or [f"r{i}" for i in range(n)]
    schema = [FieldDescriptor(name="k", kind=FieldKind.KEY)]
    schema += [FieldDescriptor(name=name, kind=FieldKind.NUMERIC) for name in columns]
    rows = []
    for i in range(n):
        row: dict = {"k": keys[i]}
        for name, values in columns.items():
            row[name] = float(values[i])
        rows.append(row)
    return Dataset(
        name="test",
        nl_description="synthetic test table",
        schema=tuple(schema),
        rows=tuple(rows),
    )
