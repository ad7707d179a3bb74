"""Static figures for trajectories and sweeps (Agg backend, written to files)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .algebra import FieldPoint
from .bloch import equilibrium_bvector
from .thermo import entropy_energy

_META = {"Software": None}
_COLORS = {"AB": "tab:red", "BC": "tab:orange", "CD": "tab:blue", "DA": "tab:green"}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, metadata=_META)
    return path


def equilibrium_entropy_curve(spec, bath, omegas):
    return np.array([entropy_energy(equilibrium_bvector(FieldPoint(w, spec.j_coupling), bath), FieldPoint(w, spec.j_coupling)) for w in omegas])


def plot_field_entropy(samples, spec, path):
    """Cycle in the (omega, S_E) plane with S_VN and the two equilibrium entropy curves."""
    fig = Figure(figsize=(6, 4.5))
    ax = fig.add_subplot()
    w = np.linspace(0.8 * spec.omega_a, 1.1 * spec.omega_b, 200)
    ax.plot(w, equilibrium_entropy_curve(spec, spec.hot_bath, w), color="tab:red", lw=0.8, label="hot equilibrium")
    ax.plot(w, equilibrium_entropy_curve(spec, spec.cold_bath, w), color="tab:blue", lw=0.8, label="cold equilibrium")
    for name, color in _COLORS.items():
        pts = [s for s in samples if s.branch == name]
        if pts:
            ax.plot([s.omega for s in pts], [s.entropy_energy for s in pts], color=color, lw=1.6, label=f"{name} S_E")
            ax.plot([s.omega for s in pts], [s.entropy_vn for s in pts], color=color, lw=0.8, ls="--")
    ax.set_xlabel("omega")
    ax.set_ylabel("entropy")
    ax.set_title("field-entropy plane (dashed: S_VN)")
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_entropy_temperature(samples, path):
    fig = Figure(figsize=(6, 4.5))
    ax = fig.add_subplot()
    for name, color in _COLORS.items():
        pts = [s for s in samples if s.branch == name and np.isfinite(s.dyn_temperature)]
        if pts:
            ax.plot([s.entropy_energy for s in pts], [s.dyn_temperature for s in pts], ".-", ms=2, color=color, label=name)
    ax.set_xlabel("S_E")
    ax.set_ylabel("T_dyn")
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_bloch_views(samples, path):
    fig = Figure(figsize=(11, 3.6))
    pairs = (("b1", "b2"), ("b1", "b3"), ("b2", "b3"))
    for k, (x, y) in enumerate(pairs):
        ax = fig.add_subplot(1, 3, k + 1)
        for name, color in _COLORS.items():
            pts = [s for s in samples if s.branch == name]
            if pts:
                ax.plot([getattr(s.b, x) for s in pts], [getattr(s.b, y) for s in pts], color=color, lw=1.2, label=name)
        ax.set_xlabel(x)
        ax.set_ylabel(y)
    fig.axes[0].legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_phase(samples, path):
    pts = [s for s in samples if np.isfinite(s.time)]
    fig = Figure(figsize=(6, 5))
    ax1 = fig.add_subplot(2, 1, 1)
    ax2 = fig.add_subplot(2, 1, 2, sharex=ax1)
    t = np.array([s.time for s in pts])
    ax1.plot(t, [s.phase_modulus for s in pts], color="k", lw=1)
    ax2.plot(t, [s.phase for s in pts], ".", ms=2, color="k")
    ax1.set_ylabel("|<L+>|")
    ax2.set_ylabel("phi")
    ax2.set_xlabel("t")
    return _save(fig, path)


def plot_sweep(tables, parameter, path):
    """``tables`` maps a variant label to its rows; power and DS_cycle against the swept value."""
    fig = Figure(figsize=(6, 5.5))
    ax1 = fig.add_subplot(2, 1, 1)
    ax2 = fig.add_subplot(2, 1, 2, sharex=ax1)
    for label, rows in tables.items():
        ok = [r for r in rows if r["ok"]]
        x = [r["value"] for r in ok]
        ax1.plot(x, [r["power"] for r in ok], lw=1, label=label)
        ax2.plot(x, [r["DS_cycle"] for r in ok], lw=1, label=label)
    ax1.axhline(0.0, color="0.6", lw=0.6)
    ax1.set_ylabel("power")
    ax2.set_ylabel("DS_cycle")
    ax2.set_xlabel(parameter)
    ax1.legend(fontsize=7)
    return _save(fig, path)


def trajectory_figures(samples, spec, stem):
    """Render the standard trajectory figures next to ``stem``; returns the written paths."""
    stem = Path(stem)
    base = stem.with_suffix("")
    return [
        plot_field_entropy(samples, spec, f"{base}_field_entropy.png"),
        plot_entropy_temperature(samples, f"{base}_entropy_temperature.png"),
        plot_bloch_views(samples, f"{base}_bloch.png"),
        plot_phase(samples, f"{base}_phase.png"),
    ]
