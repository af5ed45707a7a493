"""Static figures for the command-line reports (matplotlib, Agg backend)."""
from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# byte-stable SVG output: fixed id salt, no timestamp
matplotlib.rcParams["svg.hashsalt"] = "nestedsir"
_META = {"Date": None}

_MARKERS = {
    "certified-subcritical-at-p": ("v", "tab:blue", "certified subcritical (GW)"),
    "percolating-at-p": ("^", "tab:red", "percolating signature"),
    "unclassified": ("o", "0.5", "unclassified"),
}


def phase_diagram(cells, z: int, d: int, path, p=None) -> None:
    """alpha on x, rho on y; the line ``rho = alpha / z^d`` separates the
    trivial region (above) from the region with positive threshold."""
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    a = np.linspace(1.0, float(z ** d), 200)
    ax.plot(a, a / z ** d, "k-", lw=1.2, label=r"$\rho = \alpha / z^d$")
    for cls, (mk, col, lab) in _MARKERS.items():
        pts = [(c.alpha, c.rho) for c in cells if c.classification == cls]
        if pts:
            x, y = zip(*pts)
            ax.scatter(x, y, marker=mk, c=col, s=40, label=lab, zorder=3)
    ax.set_xlim(1.0, float(z ** d))
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel(r"$\alpha$")
    ax.set_ylabel(r"$\rho$")
    title = f"z={z}, d={d}" + (f", p={p:g}" if p is not None else "")
    ax.set_title(title)
    ax.legend(loc="upper left", fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)


def degree_ccdf(samples, path, gamma_minus_1=None, h_range=None) -> None:
    """Empirical ``P(D >= h)`` on log-log axes with the fitted slope."""
    s = np.sort(np.asarray(samples))
    h = np.unique(s)
    cc = 1.0 - np.searchsorted(s, h, side="left") / len(s)
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.loglog(h, cc, ".", ms=3, c="k", label="empirical")
    if gamma_minus_1 is not None and h_range is not None:
        lo, hi = h_range
        ref = np.geomspace(lo, hi, 20)
        c0 = np.interp(lo, h, cc)
        ax.loglog(ref, c0 * (ref / lo) ** -gamma_minus_1, "r-",
                  label=rf"slope $-{gamma_minus_1:.3f}$")
    ax.set_xlabel("h")
    ax.set_ylabel(r"$P(D \geq h)$")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
