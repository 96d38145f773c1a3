"""PNG figures of a flow trace (optional; needs matplotlib)."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise ValueError("figure output needs matplotlib (pip install 'artifact[report]')") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_flow_report(trace, out_dir):
    """Write energies.png and tension.png (and rho.png for extrinsic runs); return the paths."""
    plt = _pyplot()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t = trace.column("time")
    paths = []

    fig, ax = plt.subplots(figsize=(6, 4))
    for name in ("E_HH", "E_LH", "E_HL", "E_LL", "K"):
        ax.plot(t, trace.column(name), label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.legend(frameon=False)
    fig.tight_layout()
    paths.append(out_dir / "energies.png")
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    for name in ("tau_HH_sup", "tau_HL_sup"):
        col = trace.column(name)
        ax.semilogy(t, np.maximum(col, 1e-300), label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("sup |tau|")
    ax.legend(frameon=False)
    fig.tight_layout()
    paths.append(out_dir / "tension.png")
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)

    rho = trace.column("rho_sq")
    if not np.all(np.isnan(rho)):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(t, rho)
        ax.set_xlabel("t")
        ax.set_ylabel("int |rho|^2")
        fig.tight_layout()
        paths.append(out_dir / "rho.png")
        fig.savefig(paths[-1], dpi=120)
        plt.close(fig)
    return paths
