"""Static figures written next to the CSV output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

RCPARAMS = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.figsize": (6.0, 4.2),
    "savefig.dpi": 150,
}

# deterministic output: no timestamps or software tags in the files
SAVE_METADATA = {"png": {"Software": None}, "pdf": {"CreationDate": None, "Producer": None}}

SERIES_STYLE = {
    "homodyne": {"color": "tab:blue"},
    "kennedy": {"color": "tab:green"},
    "helstrom": {"color": "tab:red", "lw": 2.0},
}
GRAYS = ["0.75", "0.5", "0.25", "0.1"]


def _save(fig, path):
    fmt = str(path).rsplit(".", 1)[-1].lower()
    fig.savefig(path, metadata=SAVE_METADATA.get(fmt))
    plt.close(fig)


def plot_error_curves(series: dict[str, list[tuple[float, float]]], path) -> None:
    """Error rate against mean photon number on a log axis, one line per receiver."""
    with plt.rc_context(RCPARAMS):
        fig, ax = plt.subplots()
        n_receivers = 0
        for name, points in series.items():
            if not points:
                continue
            ms, eps = zip(*points)
            style = SERIES_STYLE.get(name)
            if style is None:
                style = {"color": GRAYS[min(n_receivers, len(GRAYS) - 1)]}
                n_receivers += 1
            ax.semilogy(ms, eps, label=name, **style)
        ax.set_xlabel("mean photon number m")
        ax.set_ylabel("error rate")
        ax.legend()
        fig.tight_layout()
        _save(fig, path)


def plot_beta_sweep(betas, eps, path, reference: dict[str, float] | None = None) -> None:
    """Error rate against displacement increment, with optional horizontal references."""
    with plt.rc_context(RCPARAMS):
        fig, ax = plt.subplots()
        ax.plot(betas, eps, color="k")
        for label, value in (reference or {}).items():
            ax.axhline(value, ls="--", lw=1.0, label=label)
        ax.set_xlabel("displacement increment beta")
        ax.set_ylabel("error rate")
        if reference:
            ax.legend()
        fig.tight_layout()
        _save(fig, path)
