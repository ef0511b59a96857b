"""Figure rendering for scenario outputs.

Each report renders matplotlib figures to PNG files next to the delimited
output: fidelity heatmaps for the prepare/scan grids, fidelity-vs-time lines
for protect, and the leakage-vs-noise-ratio plot with its perturbative lines.
Figures are a convenience view; the CSV/JSON files remain the canonical,
byte-deterministic artifacts.
"""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def _heatmap(ax, rows, title):
    """rows: (dt_ns, n, fidelity)."""
    dts = sorted({r[0] for r in rows})
    ns = sorted({r[1] for r in rows})
    grid = np.full((len(dts), len(ns)), np.nan)
    for dt, n, fid in rows:
        grid[dts.index(dt), ns.index(n)] = fid
    mesh = ax.pcolormesh(ns, dts, grid, shading="nearest", vmin=0.0, vmax=1.0,
                         cmap="viridis")
    ax.set_xlabel("depth N")
    ax.set_ylabel("dt (ns)")
    ax.set_title(title)
    return mesh


def _render_prepare(result, base):
    rows = result.tables[0].rows
    noisy_flags = sorted({r[2] for r in rows})
    fig, axes = plt.subplots(1, len(noisy_flags),
                             figsize=(5.2 * len(noisy_flags), 4.2),
                             squeeze=False)
    for ax, noisy in zip(axes[0], noisy_flags):
        sub = [(r[0], r[1], r[3]) for r in rows if r[2] == noisy]
        mesh = _heatmap(ax, sub, "with noise" if noisy else "noiseless")
        fig.colorbar(mesh, ax=ax, label="fidelity")
        contour = [(c["dt_ns"], c["simulated_n95"], c["theory_n95"])
                   for c in result.summary.get("contour", [])]
        sim = [(n, dt) for dt, n, _ in contour if n is not None]
        theory = [(n, dt) for dt, _, n in contour if n is not None]
        if sim:
            ax.plot(*zip(*sim), "w-o", ms=3, lw=1.2, label="simulated 0.95")
        if theory:
            ax.plot(*zip(*theory), "w--", lw=1.2, label="theory 0.95")
        if sim or theory:
            ax.legend(loc="upper right", fontsize=7)
    fig.suptitle(f"state preparation: {result.summary.get('target_family', '')}")
    fig.tight_layout()
    path = f"{base}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def _render_protect(result, base):
    rows = result.tables[0].rows
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    styles = {"no-qec": ("C0", "no QEC"), "single-qec": ("C1", "single QEC"),
              "interleaved-qec": ("C2", "interleaved QEC")}
    for strategy, (color, label) in styles.items():
        line = [(r[0], r[3]) for r in rows if r[1] == strategy and r[2] == 0]
        points = [(r[0], r[3]) for r in rows if r[1] == strategy and r[2] == 1]
        if line:
            ax.plot(*zip(*line), color=color, label=label)
        if points:
            ax.plot(*zip(*points), color=color, marker="o", ls="none", ms=4,
                    label=f"{label} (noisy ops)")
    ax.set_xlabel("storage time (us)")
    ax.set_ylabel("fidelity")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = f"{base}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def _render_scan(result, base):
    paths = []
    for table in result.tables:
        fig, ax = plt.subplots(figsize=(5.2, 4.2))
        mesh = _heatmap(ax, table.rows, table.name.strip("_"))
        fig.colorbar(mesh, ax=ax, label="fidelity")
        fig.tight_layout()
        path = f"{base}{table.name}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths


def _render_leakage(result, base):
    main = result.tables[0].rows
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    markers = {"st": "o", "bsb": "^", "sbs": "s"}
    for scheme in sorted({r[0] for r in main}):
        pts = [(r[1], r[2]) for r in main if r[0] == scheme]
        line = [(r[1], r[3]) for r in main if r[0] == scheme]
        color = f"C{list(markers).index(scheme) if scheme in markers else 3}"
        ax.plot(*zip(*pts), marker=markers.get(scheme, "x"), ls="none",
                color=color, label=scheme.upper())
        ax.plot(*zip(*line), color=color, lw=1.0, alpha=0.7)
    ax.set_xlabel("noise ratio eps")
    ax.set_ylabel("steady-state leakage")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = f"{base}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths = [path]

    acoeff = next((t for t in result.tables if t.name == "_acoeff"), None)
    if acoeff is not None:
        fig, ax = plt.subplots(figsize=(5.2, 4.0))
        for r in sorted({row[0] for row in acoeff.rows}):
            pts = [(row[1], row[2]) for row in acoeff.rows if row[0] == r]
            ax.plot(*zip(*pts), marker="o", ms=4, label=f"r = {r:g}")
        ax.set_xlabel("cat amplitude alpha")
        ax.set_ylabel("leakage coefficient A")
        ax.legend(fontsize=8)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        apath = f"{base}_acoeff.png"
        fig.savefig(apath, dpi=150)
        plt.close(fig)
        paths.append(apath)
    return paths


def _render_depth_theory(result, base):
    rows = result.tables[0].rows
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    for dt in sorted({r[1] for r in rows}):
        pts = [(r[0], r[4]) for r in rows if r[1] == dt and r[4] is not None]
        if pts:
            ax.plot(*zip(*pts), marker="o", ms=4, label=f"dt = {dt:g} ns")
    ax.set_xlabel("level (dB)")
    ax.set_ylabel("estimated depth N")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = f"{base}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


_RENDERERS = {
    "prepare": _render_prepare,
    "protect": _render_protect,
    "scan": _render_scan,
    "leakage": _render_leakage,
    "depth-theory": _render_depth_theory,
}


def render(result, base) -> list[str]:
    renderer = _RENDERERS.get(result.kind)
    if renderer is None:
        return []
    return renderer(result, base)
