"""Figure builders over the harness's CSV outputs.

Rendering is a pure function of the input bytes and the spec: fixed figure
size, dpi, fonts and a pinned PNG metadata block, so identical inputs give
byte-identical images.
"""

from __future__ import annotations

import glob
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .readers import SchemaError, read_csv

FIGURE_IDS = (
    "fig2_diffusivity",
    "fig3_profile",
    "fig4_slippage",
    "fig5_impact_decay",
    "appendix_price_path",
)

_SAVE_KW = dict(dpi=120, metadata={"Software": "bookfigs"})

plt.rcParams.update({
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "figure.autolayout": True,
    "svg.hashsalt": "bookfigs",
})


@dataclass
class FigureSpec:
    """One figure request: id, input directory/overrides, output path."""

    figure: str
    indir: str
    out: str
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.figure not in FIGURE_IDS:
            raise SchemaError(
                f"unknown figure {self.figure!r}; choose from {FIGURE_IDS}"
            )

    def path(self, name, default):
        return self.inputs.get(name, os.path.join(self.indir, default))


def fig2_diffusivity(spec: FigureSpec):
    data = read_csv(spec.path("map", "diffusion_map.csv"),
                    required=("gamma", "zeta", "ratio"))
    gammas = np.unique(data["gamma"])
    zetas = np.unique(data["zeta"])
    grid = np.full((zetas.size, gammas.size), np.nan)
    for g, z, r in zip(data["gamma"], data["zeta"], data["ratio"]):
        grid[np.searchsorted(zetas, z), np.searchsorted(gammas, g)] = r
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    finite = grid[np.isfinite(grid)]
    vmin = float(finite.min()) if finite.size else 0.0
    vmax = max(2.0 - vmin, 1.05, vmin + 0.01)
    mesh = ax.pcolormesh(gammas, zetas, grid, shading="nearest",
                         cmap="RdBu", vmin=vmin, vmax=vmax)
    fig.colorbar(mesh, ax=ax, label="sigma(10)/sigma(1000)")
    line_path = spec.path("line", "diffusion_line.csv")
    if os.path.exists(line_path):
        line = read_csv(line_path, required=("gamma", "zeta_star"))
        ax.plot(line["gamma"], line["zeta_star"], "kx", ms=9, mew=2,
                label="diffusive line")
        ax.legend(loc="upper right")
    ax.set_xlabel("sign memory exponent gamma")
    ax.set_ylabel("volume exponent zeta")
    ax.set_title("diffusivity map")
    return fig


def fig3_profile(spec: FigureSpec):
    measured = read_csv(spec.path("measured", "profile_measured.csv"),
                        required=("u", "rho"))
    theory = read_csv(spec.path("theory", "profile_theory.csv"),
                      required=("u", "rho"))
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(measured["u"], measured["rho"], "o", ms=3, label="measured")
    ax.plot(theory["u"], theory["rho"], "-", lw=1.2, label="closed form")
    ax.set_xlabel("distance from midpoint u (ticks)")
    ax.set_ylabel("mean latent volume per tick")
    ax.set_title("stationary book profile")
    ax.legend()
    return fig


def _impact_inputs(spec: FigureSpec):
    paths = sorted(glob.glob(os.path.join(spec.indir, "impact_curve_*.csv")))
    named = [(os.path.basename(p)[len("impact_curve_"):-4], p) for p in paths]
    for key, path in spec.inputs.items():
        if key.startswith("curve:"):
            named.append((key.split(":", 1)[1], path))
    if not named:
        raise SchemaError(
            "no impact_curve_*.csv found in the input directory")
    return named


def fig4_slippage(spec: FigureSpec):
    named = _impact_inputs(spec)
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    anchor = None
    for label, path in named:
        c = read_csv(path, required=("qv", "impact", "se"))
        sel = c["impact"] > 0
        ax.errorbar(c["qv"][sel], c["impact"][sel], yerr=c["se"][sel],
                    fmt="o-", ms=3, lw=0.9, capsize=2, label=label)
        if anchor is None and sel.any():
            anchor = (c["qv"][sel][0], c["impact"][sel][0])
    ax.set_xscale("log")
    ax.set_yscale("log")
    if anchor:
        xs = np.array(ax.get_xlim())
        for slope, style in ((0.5, "k-"), (1.0, "k--")):
            ys = anchor[1] * (xs / anchor[0]) ** slope
            ax.plot(xs, ys, style, lw=0.9, label=f"slope {slope:g}")
        ax.set_xlim(*xs)
    ax.set_xlabel("metaorder size Q / V")
    ax.set_ylabel("impact / sigma")
    ax.set_title("metaorder impact")
    ax.legend(fontsize=7)
    return fig


def fig5_impact_decay(spec: FigureSpec):
    named = _impact_inputs(spec)
    fig, (left, right) = plt.subplots(1, 2, figsize=(9.2, 3.8))

    label, path = named[0]
    c = read_csv(path, required=("qv", "impact", "se"))
    sel = c["impact"] > 0
    left.errorbar(c["qv"][sel], c["impact"][sel], yerr=c["se"][sel],
                  fmt="ko", ms=3, capsize=2, label=f"metaorders {label}")
    naive_path = spec.path("naive", "naive_impact.csv")
    if os.path.exists(naive_path):
        nv = read_csv(naive_path, required=("qv", "impact"))
        left.plot(nv["qv"], nv["impact"], "b-", lw=1.1,
                  label="naive book integral")
    imb_path = spec.path("imbalance", "imbalance.csv")
    if os.path.exists(imb_path):
        imb = read_csv(imb_path, required=("q_imbalance", "dp_mean"))
        if "qv" in imb and "dp_over_sigma" in imb:
            pos = (imb["qv"] > 0) & (imb["dp_over_sigma"] > 0)
            left.plot(imb["qv"][pos], imb["dp_over_sigma"][pos], "r^",
                      ms=4, label="global imbalance")
    left.set_xscale("log")
    left.set_yscale("log")
    left.set_xlabel("Q / V")
    left.set_ylabel("impact / sigma")
    left.set_title("true vs naive impact")
    left.legend(fontsize=7)

    decay_paths = sorted(glob.glob(os.path.join(spec.indir, "decay_g*.csv")))
    if not decay_paths:
        raise SchemaError("no decay_g*.csv found in the input directory")
    for path in decay_paths:
        tag = os.path.basename(path)[len("decay_g"):-4]
        d = read_csv(path, required=("tau_over_T", "decay", "se"))
        right.errorbar(d["tau_over_T"], d["decay"], yerr=d["se"],
                       fmt="o-", ms=2.5, lw=0.9, label=f"gamma={tag}")
    right.axhline(1.0, color="k", lw=0.6, ls=":")
    right.set_xlabel("tau / T")
    right.set_ylabel("impact / impact at completion")
    right.set_title("decay after completion")
    right.legend(fontsize=7)
    return fig


def appendix_price_path(spec: FigureSpec):
    p_with = read_csv(spec.path("with", "prices_with.csv"),
                      required=("step", "midpoint"))
    p_without = read_csv(spec.path("without", "prices_without.csv"),
                         required=("step", "midpoint"))
    trades = read_csv(spec.path("trades", "trades_with.csv"),
                      required=("step", "is_metaorder", "vwap"))
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(p_without["step"], p_without["midpoint"], "k-", lw=0.8,
            label="without metaorder")
    ax.plot(p_with["step"], p_with["midpoint"], "g-", lw=0.8,
            label="with metaorder")
    child = trades["is_metaorder"] == 1
    ax.plot(trades["step"][child], trades["vwap"][child], "bx", ms=4,
            label="metaorder trades")
    ax.set_xlabel("step")
    ax.set_ylabel("price (ticks)")
    ax.set_title("same-seed price paths")
    ax.legend(fontsize=7)
    return fig


_BUILDERS = {
    "fig2_diffusivity": fig2_diffusivity,
    "fig3_profile": fig3_profile,
    "fig4_slippage": fig4_slippage,
    "fig5_impact_decay": fig5_impact_decay,
    "appendix_price_path": appendix_price_path,
}


def render(spec: FigureSpec) -> str:
    """Build the requested figure and write the image; returns the path."""
    fig = _BUILDERS[spec.figure](spec)
    try:
        fig.savefig(spec.out, **_SAVE_KW)
    finally:
        plt.close(fig)
    return spec.out
