import json
from fractions import Fraction

import pytest
from hypothesis import settings

from polyharmonic_markov.measures import DiscreteMeasure

settings.register_profile("default", deadline=None, print_blob=True)
settings.load_profile("default")


@pytest.fixture
def circle4():
    """Four unit-weight-quarter atoms at the fourth roots of unity."""
    quarter = Fraction(1, 4)
    return DiscreteMeasure.from_pairs(
        2,
        [
            ((1, 0), quarter),
            ((0, 1), quarter),
            ((-1, 0), quarter),
            ((0, -1), quarter),
        ],
        radius=1,
    )


@pytest.fixture
def measure_file(tmp_path):
    """Write a measure to a JSON file and return its path."""

    def write(mu, name="measure.json"):
        path = tmp_path / name
        path.write_text(json.dumps(mu.to_json()))
        return str(path)

    return write
