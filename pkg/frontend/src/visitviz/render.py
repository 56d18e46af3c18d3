"""Figure rendering from validated run directories.

All inputs for a figure set are loaded and checked before the first file is
written, so a failed render leaves the output directory untouched. Output
names are fixed functions of the manifest contents and the options:

    V_p<bitstring>.png           value heatmap, one per state
    density_k<level>.png         per-state density panels plus the total
    flow_p<bitstring>_k<level>.png   control quiver (left), switch mask (right)
    <trajectory stem>.png        path overlay with switch events

Color scales are shared across the states of one figure set so panels can
be compared side by side.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .manifest import (RunManifest, VizError, read_ledger,  # noqa: E402
                       read_trajectory)

_DPI = 110


def _extent(manifest: RunManifest):
    if len(manifest.shape) != 2:
        raise VizError("only 2-D runs can be rendered")
    axes = manifest.node_axes()
    return [axes[0][0], axes[0][-1], axes[1][0], axes[1][-1]]


def _mark_targets(ax, manifest: RunManifest) -> None:
    for tgt in manifest.targets:
        c = tgt["center"]
        r = float(tgt.get("radius", 0.0))
        if r > 0:
            ax.add_patch(plt.Circle(c, r, fill=False, color="white",
                                    lw=1.2, ls="--"))
            ax.add_patch(plt.Circle(c, r, fill=False, color="black",
                                    lw=0.6, ls=":"))
        ax.plot([c[0]], [c[1]], marker="x", color="red", ms=7, mew=1.5)


def _heat(ax, manifest: RunManifest, field: np.ndarray, vmin, vmax):
    im = ax.imshow(field.T, origin="lower", extent=_extent(manifest),
                   vmin=vmin, vmax=vmax, cmap="viridis", aspect="equal")
    _mark_targets(ax, manifest)
    return im


def state_labels(manifest: RunManifest) -> list[str]:
    n = manifest.n_targets
    return [format(p, f"0{n}b") for p in range(manifest.n_states)]


def _require_state_slices(manifest: RunManifest, kind: str, level: int):
    """All-states slice row at one level, loaded; lists every gap at once."""
    have = {ref.p_label: ref.name for ref in manifest.slices_of(kind)
            if ref.level == level}
    wanted = state_labels(manifest)
    missing = [f"{kind}: no slice for state {lbl} at level {level} "
               f"(expected {_slice_name(kind, lbl, level)})"
               for lbl in wanted if lbl not in have]
    if missing:
        raise VizError("run directory is missing slices:\n  "
                       + "\n  ".join(missing))
    return {lbl: manifest.read_slice(have[lbl]) for lbl in wanted}


_KIND_PREFIX = {"values": "V", "density": "mu", "switch": "sigma"}


def _slice_name(kind: str, lbl: str, level: int) -> str:
    return f"{_KIND_PREFIX.get(kind, kind)}_p{lbl}_k{level}.csv"


def state_masses(manifest: RunManifest, level: int) -> dict[str, float]:
    """Integrated density mass per state label at one level."""
    loaded = _require_state_slices(manifest, "density", level)
    w = manifest.cell_weights()
    return {lbl: float((arr * w).sum()) for lbl, (_, arr) in loaded.items()}


def render_values(manifest: RunManifest, level: int, out_dir) -> list[Path]:
    """One value heatmap per state at the given time level."""
    if not manifest.files_of("values"):
        raise VizError("manifest lists no value slices; run solve-hjb first")
    loaded = _require_state_slices(manifest, "values", level)
    fields = {lbl: arr for lbl, (_, arr) in loaded.items()}
    vmin = min(float(a.min()) for a in fields.values())
    vmax = max(float(a.max()) for a in fields.values())
    t = manifest.time_of(level)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for lbl, arr in fields.items():
        fig, ax = plt.subplots(figsize=(4.6, 4.2))
        im = _heat(ax, manifest, arr, vmin, vmax)
        ax.set_title(f"V  p={lbl}  t={t:g}")
        fig.colorbar(im, ax=ax, shrink=0.85)
        path = out_dir / f"V_p{lbl}.png"
        fig.savefig(path, dpi=_DPI)
        plt.close(fig)
        written.append(path)
    return written


def _load_flow(manifest: RunManifest, level: int):
    """Per-state (a0, a1, switch mask) when control and switch slices exist."""
    ctl = {(r.p_label, r.name.split("_")[0]): r.name
           for r in manifest.slices_of("control") if r.level == level}
    sw = {r.p_label: r.name for r in manifest.slices_of("switch")
          if r.level == level}
    out = {}
    for lbl in state_labels(manifest):
        key0, key1 = (lbl, "alpha0"), (lbl, "alpha1")
        if key0 in ctl and key1 in ctl and lbl in sw:
            _, a0 = manifest.read_slice(ctl[key0])
            _, a1 = manifest.read_slice(ctl[key1])
            _, sg = manifest.read_slice(sw[lbl])
            out[lbl] = (a0, a1, sg)
    return out


def render_transport(manifest: RunManifest, levels, out_dir) -> list[Path]:
    """Density panel figures per level, flow panels where maps exist."""
    if not manifest.files_of("density"):
        raise VizError("manifest lists no density slices; run transport or "
                       "mfg first")
    labels = state_labels(manifest)
    per_level = {}
    for k in levels:
        loaded = _require_state_slices(manifest, "density", k)
        per_level[k] = {lbl: arr for lbl, (_, arr) in loaded.items()}
    flows = {k: _load_flow(manifest, k) for k in levels}
    trajectories = _load_trajectories(manifest)
    ledger_initial = None
    if manifest.files_of("ledger"):
        ledger_initial, _ = read_ledger(manifest.path(
            manifest.files_of("ledger")[0]))
    w = manifest.cell_weights()

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for k in levels:
        fields = per_level[k]
        total = sum(fields.values())
        vmax = max(float(total.max()), 1e-30)
        t = manifest.time_of(k)
        ncol = len(labels) + 1
        fig, axs = plt.subplots(1, ncol, figsize=(3.1 * ncol, 3.4),
                                squeeze=False)
        for j, lbl in enumerate(labels):
            ax = axs[0, j]
            _heat(ax, manifest, fields[lbl], 0.0, vmax)
            mass = float((fields[lbl] * w).sum())
            ax.set_title(f"p={lbl}  mass={mass:.6f}", fontsize=9)
        ax = axs[0, -1]
        _heat(ax, manifest, total, 0.0, vmax)
        head = f"total  t={t:g}"
        if ledger_initial is not None:
            head += f"  (initial {ledger_initial:.6f})"
        ax.set_title(head, fontsize=9)
        path = out_dir / f"density_k{k}.png"
        fig.savefig(path, dpi=_DPI)
        plt.close(fig)
        written.append(path)

        for lbl, (a0, a1, sg) in flows[k].items():
            fig, (axq, axs_) = plt.subplots(1, 2, figsize=(8.6, 3.9))
            axes = manifest.node_axes()
            stride = max(1, len(axes[0]) // 20)
            X, Y = np.meshgrid(axes[0][::stride], axes[1][::stride],
                               indexing="ij")
            u = a0[::stride, ::stride]
            v = a1[::stride, ::stride]
            if float(np.hypot(u, v).max()) > 0.0:
                axq.quiver(X, Y, u, v, scale_units="xy", angles="xy")
            else:
                axq.text(0.5, 0.5, "zero control", transform=axq.transAxes,
                         ha="center", va="center", fontsize=9, color="gray")
            _mark_targets(axq, manifest)
            axq.set_xlim(_extent(manifest)[:2])
            axq.set_ylim(_extent(manifest)[2:])
            axq.set_aspect("equal")
            axq.set_title(f"control  p={lbl}  t={t:g}", fontsize=9)
            axs_.imshow((sg >= 0).T, origin="lower",
                        extent=_extent(manifest), cmap="gray_r",
                        vmin=0, vmax=1, aspect="equal")
            _mark_targets(axs_, manifest)
            axs_.set_title("switch region", fontsize=9)
            path = out_dir / f"flow_p{lbl}_k{k}.png"
            fig.savefig(path, dpi=_DPI)
            plt.close(fig)
            written.append(path)

    written.extend(_draw_trajectories(manifest, trajectories, out_dir))
    return written


def _load_trajectories(manifest: RunManifest) -> list[tuple]:
    out = []
    for name in manifest.files_of("trajectory"):
        times, pos, labels = read_trajectory(manifest.path(name))
        out.append((Path(name).stem, times, pos, labels))
    return out


def _draw_trajectories(manifest: RunManifest, loaded, out_dir: Path):
    written = []
    for stem, times, pos, labels in loaded:
        fig, ax = plt.subplots(figsize=(4.6, 4.2))
        ax.plot(pos[:, 0], pos[:, 1], color="tab:blue", lw=1.4)
        ax.plot([pos[0, 0]], [pos[0, 1]], marker="o", color="tab:blue")
        changes = [m for m in range(1, len(labels))
                   if labels[m] != labels[m - 1]]
        for m in changes:
            ax.plot([pos[m, 0]], [pos[m, 1]], marker="s", color="tab:orange",
                    ms=6)
        _mark_targets(ax, manifest)
        ax.set_xlim(_extent(manifest)[:2])
        ax.set_ylim(_extent(manifest)[2:])
        ax.set_aspect("equal")
        ax.set_title(f"{stem}  ({len(changes)} switches)", fontsize=9)
        path = Path(out_dir) / f"{stem}.png"
        fig.savefig(path, dpi=_DPI)
        plt.close(fig)
        written.append(path)
    return written


def render_trajectory(manifest: RunManifest, out_dir) -> list[Path]:
    """Path overlays for every trajectory CSV in the run."""
    if not manifest.files_of("trajectory"):
        raise VizError("manifest lists no trajectory files; run trajectory "
                       "first")
    loaded = _load_trajectories(manifest)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return _draw_trajectories(manifest, loaded, out_dir)
