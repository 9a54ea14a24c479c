"""The six figure kinds, each a pure function of CSV tables."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from hjbfigures.io import CsvError, read_table, to_grid

RADIAL_COLUMNS = ("r", "u", "s", "upp", "residual")
PANEL_TITLES = ("u(r)", "u'(r)", "u''(r)", "residual")


def radial_profiles(inputs):
    """Panel grid: one row per input profile, columns u, u', u'', residual."""
    tables = [read_table(p, required=RADIAL_COLUMNS) for p in inputs]
    fig, axes = plt.subplots(
        len(tables), 4, figsize=(14, 3.0 * len(tables)), squeeze=False
    )
    for i, tab in enumerate(tables):
        for j, (col, title) in enumerate(zip(RADIAL_COLUMNS[1:], PANEL_TITLES)):
            ax = axes[i, j]
            ax.plot(tab["r"], tab[col], lw=1.2)
            if i == 0:
                ax.set_title(title)
            if i == len(tables) - 1:
                ax.set_xlabel("r")
            if col == "residual":
                ax.set_yscale("symlog", linthresh=1e-12)
        axes[i, 0].set_ylabel(f"profile {i + 1}")
    fig.tight_layout()
    return fig


def surface_compare(inputs):
    """Numerical solution as a solid surface, exact as an overlaid wireframe."""
    tab = read_table(inputs[0], required=("x", "y", "u", "exact"))
    if not np.all(np.isfinite(tab["exact"])):
        raise CsvError("'exact' column has non-finite entries; no overlay possible", inputs[0])
    xs, ys, U = to_grid(tab, "u")
    _, _, E = to_grid(tab, "exact")
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    fig = plt.figure(figsize=(8, 6))
    ax = fig.add_subplot(111, projection="3d")
    ax.plot_surface(X, Y, U, cmap="viridis", alpha=0.9, linewidth=0)
    stride = max(1, xs.size // 20)
    ax.plot_wireframe(X, Y, E, rstride=stride, cstride=stride, color="k", linewidth=0.5)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title("numerical (solid) vs exact (wireframe)")
    return fig


def nonradial_contours(inputs):
    tab = read_table(inputs[0], required=("x", "y", "u"))
    xs, ys, U = to_grid(tab, "u")
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    fig, ax = plt.subplots(figsize=(7, 6))
    cs = ax.contourf(X, Y, U, levels=30, cmap="viridis")
    ax.contour(X, Y, U, levels=12, colors="k", linewidths=0.4)
    fig.colorbar(cs, ax=ax, label="u")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    return fig


def _split_paths(tab):
    """Group rows by path_id; returns times plus per-path state arrays."""
    coords = sorted(
        (k for k in tab if k.startswith("x") and k[1:].isdigit()),
        key=lambda k: int(k[1:]),
    )
    if not coords:
        raise CsvError("no coordinate columns x1..xN found")
    ids = np.unique(tab["path_id"])
    out = []
    for pid in ids:
        mask = tab["path_id"] == pid
        order = np.argsort(tab["t"][mask])
        t = tab["t"][mask][order]
        states = np.column_stack([tab[c][mask][order] for c in coords])
        regime = tab["regime"][mask][order] if "regime" in tab else None
        out.append((pid, t, states, regime))
    return coords, out


def trajectories(inputs):
    """Fan of sample paths, first coordinate versus time."""
    tab = read_table(inputs[0], required=("t", "path_id", "x1"))
    _, paths = _split_paths(tab)
    fig, ax = plt.subplots(figsize=(8, 5))
    for _, t, states, _ in paths:
        ax.plot(t, states[:, 0], lw=0.7, alpha=0.7)
    ax.axhline(0.0, color="k", lw=0.8, ls="--")
    ax.set_xlabel("t")
    ax.set_ylabel("x")
    ax.set_title(f"{len(paths)} controlled sample paths")
    return fig


def regime_trajectories(inputs):
    """Two-panel trajectory figure with the background shaded by regime.

    Shading follows the regime sequence of the first stored path; the state
    panels overlay every stored path.
    """
    tab = read_table(inputs[0], required=("t", "path_id", "x1", "regime"))
    coords, paths = _split_paths(tab)
    _, t0, _, regime0 = paths[0]
    if regime0 is None or np.all(regime0 == 0):
        raise CsvError("'regime' column carries no regime labels", inputs[0])
    fig, axes = plt.subplots(2, 1, figsize=(9, 6.4), sharex=True)
    axes = np.atleast_1d(axes)
    shades = {1: "#d8e8f8", 2: "#f8e0d0", 3: "#e0f0d8", 4: "#f0d8f0"}
    # contiguous runs of equal regime become axvspan bands
    change = np.flatnonzero(np.diff(regime0)) + 1
    starts = np.concatenate(([0], change))
    stops = np.concatenate((change, [regime0.size - 1]))
    for ax in axes:
        for s, e in zip(starts, stops):
            lab = int(regime0[s])
            ax.axvspan(t0[s], t0[min(e, t0.size - 1)], color=shades.get(lab, "#eeeeee"), lw=0)
    for k in range(min(2, len(coords))):
        for _, t, states, _ in paths:
            axes[k].plot(t, states[:, k], lw=0.8)
        axes[k].set_ylabel(coords[k])
    if len(coords) == 1:
        axes[1].step(t0, regime0, where="post", color="k")
        axes[1].set_ylabel("regime")
    axes[-1].set_xlabel("t")
    fig.tight_layout()
    return fig


def convergence_curve(inputs):
    """Semilog error versus ball radius with a fitted exponential line."""
    tab = read_table(inputs[0], required=("R_n", "eps_n", "error"))
    R, err = tab["R_n"], tab["error"]
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.semilogy(R, err, "o-", label="measured error")
    pos = err > 0
    if np.count_nonzero(pos) >= 2:
        slope, intercept = np.polyfit(R[pos], np.log(err[pos]), 1)
        Rf = np.linspace(R.min(), R.max(), 100)
        ax.semilogy(Rf, np.exp(intercept + slope * Rf), "k--", label=f"fit slope {slope:.2f}")
    ax.set_xlabel("ball radius")
    ax.set_ylabel("sup error on observation ball")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return fig


FIGURE_KINDS = {
    "radial_profiles": radial_profiles,
    "surface_compare": surface_compare,
    "nonradial_contours": nonradial_contours,
    "trajectories": trajectories,
    "regime_trajectories": regime_trajectories,
    "convergence_curve": convergence_curve,
}


def render(kind: str, inputs, out) -> None:
    """Render one figure kind from its input CSVs and write the image.

    The image format follows the output path's extension.
    """
    if kind not in FIGURE_KINDS:
        raise CsvError(f"unknown figure kind {kind!r}; choose from {sorted(FIGURE_KINDS)}")
    if not inputs:
        raise CsvError("at least one input CSV is required")
    fig = FIGURE_KINDS[kind](list(inputs))
    try:
        fig.savefig(out, dpi=150)
    finally:
        plt.close(fig)
