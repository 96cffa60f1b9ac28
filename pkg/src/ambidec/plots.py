"""Equirectangular heatmaps and panning-grid renderings of decoder metrics.

Colormap and level choices are recorded in the PNG metadata rather than
matching any particular published rendering.  Direction-error clipping is a
presentation parameter applied here only; stored metric tables are unclipped.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .metrics import compute_fields, source_sh_matrix, split_bands

DEFAULT_CLIP_DEG = 20.0
DEFAULT_RESOLUTION_DEG = 2.5
_SOFTWARE_TAG = "ambidec"


def _mesh(resolution_deg: float):
    az = np.arange(-180.0, 180.0 + resolution_deg / 2, resolution_deg)
    el = np.arange(-90.0, 90.0 + resolution_deg / 2, resolution_deg)
    az_grid, el_grid = np.meshgrid(az, el)
    return az, el, az_grid, el_grid


def field_maps(decoder, resolution_deg: float = DEFAULT_RESOLUTION_DEG, source_set=None):
    """Metric fields on an equirectangular az/el mesh, shape (n_el, n_az)."""
    lf, hf = split_bands(decoder)
    az, el, az_grid, el_grid = _mesh(resolution_deg)
    az_flat = np.radians(az_grid.ravel())
    el_flat = np.radians(el_grid.ravel())
    ce = np.cos(el_flat)
    targets = np.column_stack([ce * np.cos(az_flat), ce * np.sin(az_flat), np.sin(el_flat)])
    y = source_sh_matrix(lf.signal_set, source_set, az_flat, el_flat)
    fields = compute_fields(lf.matrix, hf.matrix, y, lf.array.real_unit_vectors, targets)
    shaped = {k: v.reshape(az_grid.shape) for k, v in fields.items() if v.ndim == 1}
    return az, el, shaped


def _save_map(path, az, el, values, title, cmap, vmin, vmax, speakers, description):
    fig, ax = plt.subplots(figsize=(8.0, 4.2), dpi=110)
    image = ax.imshow(
        values,
        origin="lower",
        extent=(az[0], az[-1], el[0], el[-1]),
        aspect="auto",
        cmap=cmap,
        vmin=vmin,
        vmax=vmax,
        interpolation="nearest",
    )
    ax.scatter(
        [s.az_deg for s in speakers],
        [s.el_deg for s in speakers],
        s=18,
        c="white",
        edgecolors="black",
        linewidths=0.7,
        zorder=3,
    )
    ax.set_xlabel("azimuth (deg)")
    ax.set_ylabel("elevation (deg)")
    ax.set_title(title)
    fig.colorbar(image, ax=ax, shrink=0.9)
    fig.tight_layout()
    fig.savefig(
        path,
        metadata={"Software": _SOFTWARE_TAG, "Description": description},
    )
    plt.close(fig)


def render_heatmaps(
    decoder,
    out_dir,
    clip_deg: float = DEFAULT_CLIP_DEG,
    resolution_deg: float = DEFAULT_RESOLUTION_DEG,
    source_set=None,
) -> list[Path]:
    """Write the four standard maps; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lf, _hf = split_bands(decoder)
    design_order = lf.signal_set.order_h
    az, el, fields = field_maps(decoder, resolution_deg, source_set)
    speakers = lf.array.real_speakers

    relative = np.round(fields["effective_order"]) - design_order
    jobs = [
        (
            "relative_order.png",
            relative,
            f"reproduction quality relative to order {design_order}",
            "coolwarm",
            -design_order,
            design_order,
            f"relative ambisonic order; cmap=coolwarm range=[-{design_order},{design_order}]",
        ),
        (
            "direction_error.png",
            np.minimum(fields["dir_err_e_deg"], clip_deg),
            f"direction error (deg, clipped at {clip_deg:g})",
            "inferno",
            0.0,
            clip_deg,
            f"energy-vector direction error; cmap=inferno clip={clip_deg:g}deg",
        ),
        (
            "rv_magnitude.png",
            fields["rv_mag"],
            "velocity-vector magnitude |rV|",
            "viridis",
            0.0,
            1.5,
            "velocity-vector magnitude; cmap=viridis range=[0,1.5]",
        ),
        (
            "rv_re_angle.png",
            np.minimum(fields["rv_re_angle_deg"], clip_deg),
            f"rV vs rE direction mismatch (deg, clipped at {clip_deg:g})",
            "inferno",
            0.0,
            clip_deg,
            f"angle between rV and rE; cmap=inferno clip={clip_deg:g}deg",
        ),
    ]
    paths = []
    for fname, values, title, cmap, vmin, vmax, description in jobs:
        path = out_dir / fname
        _save_map(path, az, el, values, title, cmap, vmin, vmax, speakers, description)
        paths.append(path)
    return paths


def pan_grid_lines(
    decoder,
    az_lines_deg=(-180.0, -135.0, -90.0, -45.0, 0.0, 45.0, 90.0, 135.0),
    el_lines_deg=(-30.0, 0.0, 30.0, 60.0),
    step_deg: float = 2.0,
    source_set=None,
):
    """Rendered (rE) directions for sources moving along constant-az/el lines.

    Returns rows of (kind, line_deg, az_deg, el_deg, rendered_az_deg,
    rendered_el_deg).
    """
    lf, hf = split_bands(decoder)
    rows = []
    segments = []
    for az_line in az_lines_deg:
        els = np.arange(-90.0, 90.0 + step_deg / 2, step_deg)
        segments.append(("az", float(az_line), np.full_like(els, az_line), els))
    for el_line in el_lines_deg:
        azs = np.arange(-180.0, 180.0 + step_deg / 2, step_deg)
        segments.append(("el", float(el_line), azs, np.full_like(azs, el_line)))

    for kind, value, az_deg, el_deg in segments:
        az = np.radians(az_deg)
        el = np.radians(el_deg)
        ce = np.cos(el)
        targets = np.column_stack([ce * np.cos(az), ce * np.sin(az), np.sin(el)])
        y = source_sh_matrix(lf.signal_set, source_set, az, el)
        fields = compute_fields(lf.matrix, hf.matrix, y, lf.array.real_unit_vectors, targets)
        re = fields["re_vectors"]
        norms = np.linalg.norm(re, axis=1)
        with np.errstate(invalid="ignore"):
            unit = re / np.where(norms > 0, norms, np.nan)[:, None]
        rendered_az = np.degrees(np.arctan2(unit[:, 1], unit[:, 0]))
        rendered_el = np.degrees(np.arcsin(np.clip(unit[:, 2], -1.0, 1.0)))
        for i in range(len(az_deg)):
            rows.append(
                (
                    kind,
                    value,
                    float(az_deg[i]),
                    float(el_deg[i]),
                    float(rendered_az[i]),
                    float(rendered_el[i]),
                )
            )
    return rows


def pan_grid_csv(rows, seed: int | None = None) -> str:
    lines = []
    if seed is not None:
        lines.append(f"# seed: {seed}")
    lines.append("kind,line_deg,az_deg,el_deg,rendered_az_deg,rendered_el_deg")
    for kind, value, az, el, raz, rel in rows:
        lines.append(f"{kind},{value!r},{az!r},{el!r},{raz!r},{rel!r}")
    return "\n".join(lines) + "\n"
