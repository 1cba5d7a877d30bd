"""Figure rendering for the CLI report path.

Takes the CSV series written by a run and draws the standard panels
(energy/dissipation, norm decay against the predicted slope, identity
residuals, decay fit).  Kept separate from diagnostics so the library
emits only delimited output and the plotting dependency stays at the
edge.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .diagnostics import IDENTITY_NAMES, DecayFit

plt.rcParams.update({"figure.dpi": 110, "axes.grid": True, "grid.alpha": 0.3})


def _save(fig, path: str) -> str:
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def render_energy_figure(series: dict[str, np.ndarray], path: str) -> str:
    t = series["t"]
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.5, 3.6))
    ax0.semilogy(t, np.maximum(series["E"], 1e-300), label="E")
    ax0.semilogy(t, np.maximum(series["D"], 1e-300), label="D", ls="--")
    ax0.set_xlabel("t")
    ax0.set_title("energy and dissipation")
    ax0.legend()
    res = series["lyap_residual"]
    ok = np.isfinite(res)
    ax1.plot(t[ok], res[ok], lw=0.9)
    ax1.axhline(0.0, color="k", lw=0.7)
    ax1.set_xlabel("t")
    ax1.set_title("dE/dt + D/2")
    return _save(fig, path)


def render_norms_figure(
    series: dict[str, np.ndarray],
    hs: tuple[float, ...],
    path: str,
    predicted: float | None = None,
    beta: float | None = None,
) -> str:
    t1 = 1.0 + series["t"]
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    for s in hs:
        total = series[f"hs_u_{s:g}"] + series[f"hs_b_{s:g}"]
        ax.loglog(t1, np.maximum(total, 1e-300), label=f"H^{s:g}")
    if predicted is not None and beta is not None:
        total = series[f"hs_u_{beta:g}"] + series[f"hs_b_{beta:g}"]
        ref = total[0] * t1 ** (-predicted)
        ax.loglog(t1, np.maximum(ref, 1e-300), "k:", label=f"slope -{predicted:g}")
    ax.set_xlabel("1 + t")
    ax.set_ylabel("||u|| + ||b||")
    ax.set_title("Sobolev norm decay")
    ax.legend(fontsize=8)
    return _save(fig, path)


def render_identity_figure(series: dict[str, np.ndarray], path: str) -> str:
    t = series["t"]
    fig, ax = plt.subplots(figsize=(6.2, 4.0))
    for name in IDENTITY_NAMES:
        ax.semilogy(t, np.maximum(series[name], 1e-300), label=name, lw=0.9)
    ax.semilogy(t, np.maximum(series["div_max"], 1e-300), label="div_max", lw=0.9, ls="--")
    ax.semilogy(t, np.maximum(series["mean_max"], 1e-300), label="mean_max", lw=0.9, ls="--")
    ax.set_xlabel("t")
    ax.set_title("cancellation and constraint residuals")
    ax.legend(fontsize=7, ncol=2)
    return _save(fig, path)


def render_decay_figure(
    ts: np.ndarray, norms: np.ndarray, fit: DecayFit, path: str
) -> str:
    t1 = 1.0 + np.asarray(ts)
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    ax.loglog(t1, np.maximum(norms, 1e-300), label="data")
    lo, hi = fit.window
    mask = (ts >= lo) & (ts <= hi)
    if np.isfinite(fit.fitted_alpha) and mask.any():
        anchor = norms[mask][0] if norms[mask][0] > 0 else 1.0
        ref = anchor * (t1[mask] / t1[mask][0]) ** (-fit.fitted_alpha)
        ax.loglog(t1[mask], ref, "r--", label=f"fit alpha={fit.fitted_alpha:.3f}")
    ax.loglog(
        t1,
        np.maximum(norms[0] * t1 ** (-fit.predicted_alpha), 1e-300),
        "k:",
        label=f"predicted {fit.predicted_alpha:.3f}",
    )
    ax.set_xlabel("1 + t")
    ax.set_title("decay fit")
    ax.legend(fontsize=8)
    return _save(fig, path)


def render_run_figures(
    series: dict[str, np.ndarray],
    hs: tuple[float, ...],
    out_dir: str,
    predicted: float | None = None,
    beta: float | None = None,
) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    return [
        render_energy_figure(series, os.path.join(out_dir, "energy.png")),
        render_norms_figure(
            series, hs, os.path.join(out_dir, "norms.png"), predicted=predicted, beta=beta
        ),
        render_identity_figure(series, os.path.join(out_dir, "identities.png")),
    ]
