"""Raster figures with CSV twins holding exactly the plotted numbers."""
import csv

import numpy as np


def _agg():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def log_moduli(X, base=0):
    """Chart coordinates ``(log|z_i / z_base|)`` for the two other indices, clipped to [-12, 12]."""
    X = np.atleast_2d(X)
    others = [i for i in range(X.shape[1]) if i != base]
    with np.errstate(divide="ignore", invalid="ignore"):
        L = np.log(np.abs(X[:, others])) - np.log(np.abs(X[:, [base]]))
    return np.clip(np.nan_to_num(L, nan=0.0, posinf=12.0, neginf=-12.0), -12, 12)


def write_csv(path, header, rows):
    if not path.endswith(".csv"):
        path += ".csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def scatter(stem, X, weights, title, base=0, max_points=50_000):
    """Weighted cloud in log-modulus chart coordinates as ``stem.png`` plus ``stem.csv``."""
    plt = _agg()
    X = np.atleast_2d(X)
    w = np.asarray(weights, dtype=float)
    if X.shape[0] > max_points:
        idx = np.linspace(0, X.shape[0] - 1, max_points).astype(int)
        X, w = X[idx], w[idx]
    C = log_moduli(X, base)
    others = [i for i in range(X.shape[1]) if i != base]
    write_csv(stem, [f"log|z{others[0]}/z{base}|", f"log|z{others[1]}/z{base}|", "weight"],
              zip(C[:, 0], C[:, 1], w))
    fig, ax = plt.subplots(figsize=(5, 5), dpi=100)
    sc = ax.scatter(C[:, 0], C[:, 1], c=w, s=2, cmap="viridis", linewidths=0)
    fig.colorbar(sc, ax=ax, label="weight")
    ax.set_xlabel(f"log|z{others[0]}/z{base}|")
    ax.set_ylabel(f"log|z{others[1]}/z{base}|")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(f"{stem}.png", metadata={"Software": None})
    plt.close(fig)


def series(stem, x, ys, labels, title, xlabel="n", ylabel="value", logy=False):
    """Line plot of several series against ``x`` plus the CSV twin."""
    plt = _agg()
    write_csv(stem, [xlabel] + list(labels), zip(x, *ys))
    fig, ax = plt.subplots(figsize=(6, 4), dpi=100)
    for y, lab in zip(ys, labels):
        ax.plot(x, y, marker="o", label=lab)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(f"{stem}.png", metadata={"Software": None})
    plt.close(fig)
