"""Figure helpers write closed, non-empty PNG files."""

import matplotlib.pyplot as plt
import numpy as np

from sparsevar import figures
from sparsevar.bootstrap import ConfidenceInterval


def _png(path):
    data = path.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(data) > 1000


def test_all_helpers_render_and_close(tmp_path):
    before = plt.get_fignums()
    intervals = [
        ConfidenceInterval((1, 1, 1), 0.8, 0.6, 0.7, 0.9, 0.95),
        ConfidenceInterval((2, 4, 2), 0.3, 0.5, 0.1, 0.5, 0.95),
    ]
    figures.ci_forest(intervals, tmp_path / "forest.png")
    _png(tmp_path / "forest.png")

    class Result:
        null_stats = np.abs(np.random.default_rng(0).normal(size=200))
        critical_value = 2.1
        statistic = 2.6
        p_value = 0.02
        alpha = 0.05

    figures.null_histogram(Result(), tmp_path / "null.png")
    _png(tmp_path / "null.png")

    figures.lambda_sweep([(0.05, 0.4), (0.1, 0.02)], 0.05, tmp_path / "sweep.png")
    _png(tmp_path / "sweep.png")

    figures.coverage_heatmap(np.full((3, 3), 0.93), 0.95, "bootstrap",
                             tmp_path / "heat.png")
    _png(tmp_path / "heat.png")

    figures.rejection_bars(["H0", "H1"], np.array([[0.05, 0.1], [0.9, 0.95]]),
                           (0.05, 0.10), tmp_path / "bars.png")
    _png(tmp_path / "bars.png")

    assert plt.get_fignums() == before
