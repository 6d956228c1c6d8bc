"""Figure rendering: every schema produces a non-empty PNG."""

import math

import pytest

from svqsim import plots


def test_each_schema_renders(tmp_path):
    cases = {
        "train": [
            (1, "00", 0.999, 0.998, "training-state"),
            (1, "rand000", 0.997, float("nan"), "random-state"),
            (2, "00", 0.998, 0.996, "training-state"),
            (2, "rand000", 0.995, float("nan"), "random-state"),
        ],
        "compare-fewer": [
            ("full", 1, "00", 0.999, 0.998, "training-state"),
            ("basis-only", 1, "00", 0.99, 0.98, "training-state"),
            ("single-state", 1, "00", 0.9, 0.8, "training-state"),
        ],
        "bound-surface": [
            (t, p, 0.9, 1, 1e-9)
            for t in (0.0, math.pi / 2, math.pi)
            for p in (0.0, math.pi, 2 * math.pi)
        ],
        "sweep": [
            (eps, math.pi / 2, p, nf, 0.9, 1, 1e-9)
            for eps in (0.01, 0.05)
            for nf in (3, 4)
            for p in (0.0, math.pi, 2 * math.pi)
        ],
        "entanglement": [
            (t, m, 0.2, 0.21, 0.2)
            for t in (0.0, math.pi / 2)
            for m in (0, 1, 2)
        ],
        "warmstart": [
            (12, 0.1, 0.5, 0.02, 3.49, "ZI", 0.667, 0.33, 0.085, 0.01,
             7.5e-07, 1.8e-07, 2.0e-04, 5e-06, 100),
        ],
    }
    for schema, rows in cases.items():
        out = tmp_path / f"{schema}.png"
        path = plots.render(schema, rows, str(out))
        assert path == str(out)
        assert out.stat().st_size > 1000


def test_unknown_schema_rejected(tmp_path):
    with pytest.raises(ValueError):
        plots.render("novel", [], str(tmp_path / "x.png"))
