"""Regression check of every figure recipe against stored CSVs.

Regenerate the files after an intentional change with
``waveguide-atoms figure <id> --no-plot --out tests/golden``.
"""

from pathlib import Path

import numpy as np
import pytest

from waveguide_atoms.csvio import read_csv
from waveguide_atoms.figures import FIGURE_IDS, build

GOLDEN = Path(__file__).parent / "golden"


def _split(rows):
    labels = [[v for v in r if isinstance(v, str)] for r in rows]
    numbers = np.array([[v for v in r if not isinstance(v, str)] for r in rows], dtype=float)
    return labels, numbers


@pytest.mark.parametrize("figure_id", FIGURE_IDS)
def test_figure_matches_golden(figure_id):
    (panel,) = build(figure_id, seed=0, threads=2)
    header, rows = read_csv(GOLDEN / f"fig{figure_id}.csv")
    assert tuple(header) == tuple(panel.header)
    assert len(rows) == len(panel.rows)
    want_labels, want = _split(rows)
    got_labels, got = _split([[str(v) if isinstance(v, str) else float(v) for v in r] for r in panel.rows])
    assert got_labels == want_labels
    np.testing.assert_allclose(got, want, rtol=1e-8, atol=1e-12, equal_nan=True)
