import csv

import numpy as np
import pytest


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return str(path)


@pytest.fixture
def radial_csvs(tmp_path):
    """Three synthetic radial profiles, one per dimension."""
    paths = []
    r = np.linspace(0.0, 10.0, 201)
    for k in (1, 2, 3):
        u = 0.5 * r**2 + 0.5 * k
        rows = zip(r, u, r, np.ones_like(r), 1e-10 * np.sin(r))
        paths.append(write_csv(tmp_path / f"radial_N{k}.csv", ["r", "u", "s", "upp", "residual"], rows))
    return paths


@pytest.fixture
def grid2d_csv(tmp_path):
    xs = np.linspace(-2.0, 2.0, 21)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    u = 0.5 * (X**2 + Y**2) + 0.5
    exact = u + 1e-3 * np.cos(X) * np.cos(Y)
    rows = zip(X.ravel(), Y.ravel(), u.ravel(), exact.ravel(), np.abs(u - exact).ravel())
    return write_csv(tmp_path / "grid2d.csv", ["x", "y", "u", "exact", "abs_err"], rows)


def _paths_rows(n_paths, dim, regimes):
    rng = np.random.default_rng(0)
    t = np.round(np.arange(0.0, 2.0, 0.1), 10)
    rows = []
    for pid in range(n_paths):
        x = rng.normal(size=(t.size, dim)).cumsum(axis=0)
        reg = rng.integers(1, 3, size=t.size) if regimes else np.zeros(t.size, dtype=int)
        for k, tk in enumerate(t):
            rows.append((tk, pid, *x[k], reg[k]))
    return rows


@pytest.fixture
def paths_csv(tmp_path):
    header = ["t", "path_id", "x1", "regime"]
    return write_csv(tmp_path / "paths.csv", header, _paths_rows(8, 1, regimes=False))


@pytest.fixture
def regime_paths_csv(tmp_path):
    header = ["t", "path_id", "x1", "x2", "regime"]
    return write_csv(tmp_path / "rpaths.csv", header, _paths_rows(5, 2, regimes=True))


@pytest.fixture
def convergence_csv(tmp_path):
    R = np.array([4.0, 6.0, 8.0, 10.0])
    err = 5.0 * np.exp(-1.2 * R)
    rows = zip(R, 1.0 / (R / 2.0), err, np.full(R.size, 1e-13))
    return write_csv(tmp_path / "convergence.csv", ["R_n", "eps_n", "error", "min_monotone_gap"], rows)
