"""Figures and plain-text rasters for experiment reports."""
from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams.update({
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "figure.dpi": 120,
    "savefig.bbox": "tight",
})


def write_pgm(path, values: np.ndarray, maxval: int = 255) -> tuple[float, float]:
    """Plain (P2) graymap of a 2-D array, first row at the top; nonfinite cells are 0.

    Returns the (lo, hi) range mapped to 0..maxval.
    """
    v = np.asarray(values, float)[::-1]
    fin = np.isfinite(v)
    lo, hi = (float(v[fin].min()), float(v[fin].max())) if fin.any() else (0.0, 1.0)
    span = hi - lo if hi > lo else 1.0
    g = np.zeros(v.shape, dtype=int)
    g[fin] = np.rint((v[fin] - lo) / span * maxval).astype(int)
    rows, cols = g.shape
    with open(path, "w") as fh:
        fh.write(f"P2\n# range {lo!r} {hi!r}\n{cols} {rows}\n{maxval}\n")
        for row in g:
            # plain pnm lines stay under 70 characters
            for i in range(0, cols, 16):
                fh.write(" ".join(str(x) for x in row[i:i + 16]) + "\n")
    return lo, hi


def read_pgm(path) -> np.ndarray:
    toks = []
    with open(path) as fh:
        for line in fh:
            toks += line.split("#")[0].split()
    if toks[0] != "P2":
        raise ValueError("not a plain graymap")
    cols, rows = int(toks[1]), int(toks[2])
    return np.array([int(t) for t in toks[4:4 + rows * cols]]).reshape(rows, cols)


def field_figure(path, xs, ys, values, title="", label="", cmap="magma"):
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    im = ax.imshow(values, origin="lower", extent=(xs[0], xs[-1], ys[0], ys[-1]), cmap=cmap, aspect="equal")
    fig.colorbar(im, ax=ax, label=label)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    if title:
        ax.set_title(title)
    fig.savefig(path)
    plt.close(fig)


def decay_figure(path, ns, means, rate=None, title=""):
    fig, ax = plt.subplots(figsize=(4.2, 3.0))
    ns = np.asarray(ns)
    means = np.asarray(means, float)
    ax.semilogy(ns, means, "o-", ms=3, lw=1, label="mean |u_n|")
    if rate is not None and np.isfinite(rate) and np.isfinite(means[0]) and means[0] > 0:
        ax.semilogy(ns, means[0] * np.exp(rate * (ns - ns[0])), "--", lw=0.8, label=f"fit, rate {rate:.3f}")
    ax.set_xlabel("n")
    ax.legend(frameon=False)
    if title:
        ax.set_title(title)
    fig.savefig(path)
    plt.close(fig)


def lelong_figure(path, log_r, sups, slope, intercept, fit_count):
    fig, ax = plt.subplots(figsize=(4.2, 3.0))
    ax.plot(log_r, sups, "o", ms=3, label="sup over ball")
    x = np.asarray(log_r)[-fit_count:]
    if np.isfinite(slope):
        ax.plot(x, slope * x + intercept, "-", lw=0.8, label=f"slope {slope:.3f}")
    ax.set_xlabel("log r")
    ax.legend(frameon=False)
    fig.savefig(path)
    plt.close(fig)


def atoms_figure(path, t, weights):
    fig, ax = plt.subplots(figsize=(3.6, 3.6))
    ax.scatter(t.real, t.imag, s=np.clip(2e3 * weights, 0.2, 20), c="k", lw=0)
    ax.set_aspect("equal")
    ax.set_xlabel("Re t")
    ax.set_ylabel("Im t")
    fig.savefig(path)
    plt.close(fig)


def contraction_figure(path, ns, normalized, flagged):
    fig, ax = plt.subplots(figsize=(4.2, 3.0))
    ns = np.asarray(ns)
    v = np.asarray(normalized, float)
    fl = np.asarray(flagged, bool)
    ax.plot(ns, v, "-", lw=0.8, color="0.4")
    ax.plot(ns[~fl], v[~fl], "o", ms=3, label="rows")
    if fl.any():
        ax.plot(ns[fl], v[fl], "x", ms=4, label="flagged")
    ax.set_xlabel("n")
    ax.set_ylabel("d^-n log r_n")
    ax.legend(frameon=False)
    fig.savefig(path)
    plt.close(fig)
