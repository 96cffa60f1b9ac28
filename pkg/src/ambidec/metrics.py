"""Reproduction-quality metrics: pressure/energy gains, localization vectors,
direction errors, and effective-order maps."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .arrays import CoverageWeighting, coverage_weights
from .design import DecoderMatrix, max_re_magnitude
from .grids import SphericalGrid
from .spherical import Direction, SignalSetSpec, sh_matrix

PRESSURE_EPS = 1e-12
ENERGY_EPS = 1e-18
MAX_EFFECTIVE_ORDER = 30

CSV_HEADER = (
    "az_deg,el_deg,weight,P,E,rV_mag,rE_mag,dir_err_E_deg,dir_err_V_deg,"
    "rv_re_angle_deg,eff_order"
)


def speaker_gains(decoder: DecoderMatrix, direction: Direction) -> np.ndarray:
    """Per-speaker gains g = M y(u) for one source direction."""
    y = sh_matrix(
        decoder.signal_set.channels,
        [direction.azimuth],
        [direction.elevation],
        decoder.signal_set.normalization,
    )[:, 0]
    return decoder.matrix @ y


def velocity_vector(gains, speaker_unit_vectors) -> tuple[np.ndarray, float]:
    """Gerzon velocity vector rV = sum(g u) / sum(g) and its magnitude.

    Near-zero total gain makes the vector undefined; NaNs are returned so the
    caller can treat the entry as missing rather than failing.
    """
    g = np.asarray(gains, dtype=float)
    total = g.sum()
    if abs(total) < PRESSURE_EPS:
        return np.full(3, np.nan), float("nan")
    vec = (g @ np.asarray(speaker_unit_vectors)) / total
    return vec, float(np.linalg.norm(vec))


def energy_vector(gains, speaker_unit_vectors) -> tuple[np.ndarray, float]:
    """Gerzon energy vector rE = sum(g^2 u) / sum(g^2) and its magnitude."""
    g2 = np.square(np.asarray(gains, dtype=float))
    total = g2.sum()
    if total < ENERGY_EPS:
        return np.full(3, np.nan), float("nan")
    vec = (g2 @ np.asarray(speaker_unit_vectors)) / total
    return vec, float(np.linalg.norm(vec))


def _max_re_knots():
    knots = getattr(_max_re_knots, "_cache", None)
    if knots is None:
        orders = np.arange(MAX_EFFECTIVE_ORDER + 1, dtype=float)
        mags = np.array([max_re_magnitude(n) for n in range(MAX_EFFECTIVE_ORDER + 1)])
        knots = (mags, orders)
        _max_re_knots._cache = knots
    return knots


def effective_order(re_mag: float) -> float:
    """The real-valued order whose max-rE magnitude equals ``re_mag``.

    Monotone inverse interpolation of max_re_magnitude over orders 0..30;
    values at or beyond the order-30 magnitude clamp to 30.
    """
    if isinstance(re_mag, float) and math.isnan(re_mag):
        return float("nan")
    if re_mag < 0:
        raise ValueError("|rE| cannot be negative")
    mags, orders = _max_re_knots()
    return float(np.interp(re_mag, mags, orders))


def effective_orders(re_mags: np.ndarray) -> np.ndarray:
    mags, orders = _max_re_knots()
    out = np.interp(np.nan_to_num(re_mags, nan=0.0), mags, orders)
    return np.where(np.isnan(re_mags), np.nan, out)


def _angles_deg(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Great-circle angle in degrees between rows of two (n, 3) arrays."""
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    denom = na * nb
    ok = denom > 0
    cosine = np.full(len(a), np.nan)
    cosine[ok] = np.einsum("ij,ij->i", a, b)[ok] / denom[ok]
    return np.degrees(np.arccos(np.clip(cosine, -1.0, 1.0)))


@dataclass(frozen=True)
class RenderMetrics:
    """Per-direction rendering metrics over an evaluation grid.

    For a two-band decoder, pressure and rV come from the LF matrix while
    energy and rE come from the HF matrix; a single matrix supplies both.
    Undefined localization vectors are NaN and excluded from the summaries.
    """

    grid: SphericalGrid
    coverage: CoverageWeighting
    pressure: np.ndarray
    energy: np.ndarray
    rv_vectors: np.ndarray
    rv_mag: np.ndarray
    re_vectors: np.ndarray
    re_mag: np.ndarray
    dir_err_e_deg: np.ndarray
    dir_err_v_deg: np.ndarray
    rv_re_angle_deg: np.ndarray
    effective_order: np.ndarray

    FIELDS = (
        "pressure",
        "energy",
        "rv_mag",
        "re_mag",
        "dir_err_e_deg",
        "dir_err_v_deg",
        "rv_re_angle_deg",
        "effective_order",
    )

    def summary(self) -> dict[str, dict[str, float]]:
        """Coverage-weighted mean/min/max/RMS per field, skipping missing."""
        weights = self.coverage.weights
        out = {}
        for name in self.FIELDS:
            values = getattr(self, name)
            ok = ~np.isnan(values)
            stats = {"missing": int(np.sum(~ok))}
            if np.any(ok):
                v, w = values[ok], weights[ok]
                wsum = w.sum()
                stats.update(
                    mean=float((w * v).sum() / wsum),
                    rms=float(math.sqrt((w * v * v).sum() / wsum)),
                    min=float(v.min()),
                    max=float(v.max()),
                )
            out[name] = stats
        return out

    def weighted_rms(self, name: str) -> float:
        values = getattr(self, name)
        ok = ~np.isnan(values)
        w = self.coverage.weights[ok]
        return float(math.sqrt((w * values[ok] ** 2).sum() / w.sum()))


def compute_fields(
    lf_matrix: np.ndarray,
    hf_matrix: np.ndarray,
    y: np.ndarray,
    speaker_unit_vectors: np.ndarray,
    target_vectors: np.ndarray,
) -> dict[str, np.ndarray]:
    """Vectorized metric fields for source SH matrix y (channels x dirs)."""
    u = np.asarray(speaker_unit_vectors).T  # 3 x S
    g_lf = lf_matrix @ y
    g_hf = hf_matrix @ y

    pressure = g_lf.sum(axis=0)
    g2 = np.square(g_hf)
    energy = g2.sum(axis=0)

    with np.errstate(invalid="ignore", divide="ignore"):
        rv = np.where(
            np.abs(pressure) < PRESSURE_EPS, np.nan, (u @ g_lf) / pressure
        ).T
        re = np.where(energy < ENERGY_EPS, np.nan, (u @ g2) / energy).T

    rv_mag = np.linalg.norm(rv, axis=1)
    re_mag = np.linalg.norm(re, axis=1)
    return {
        "pressure": pressure,
        "energy": energy,
        "rv_vectors": rv,
        "rv_mag": rv_mag,
        "re_vectors": re,
        "re_mag": re_mag,
        "dir_err_e_deg": _angles_deg(re, target_vectors),
        "dir_err_v_deg": _angles_deg(rv, target_vectors),
        "rv_re_angle_deg": _angles_deg(rv, re),
        "effective_order": effective_orders(re_mag),
    }


def source_sh_matrix(
    decoder_set: SignalSetSpec,
    source_set: SignalSetSpec | None,
    azimuths,
    elevations,
) -> np.ndarray:
    """SH matrix in decoder channel order; channels outside the source set
    are zero-filled (a signal with those channels silent)."""
    if source_set is None or source_set.channels == decoder_set.channels:
        return sh_matrix(
            decoder_set.channels, azimuths, elevations, decoder_set.normalization
        )
    source_acns = set(source_set.acns)
    if not source_acns <= set(decoder_set.acns):
        raise ValueError(
            f"source set {source_set.name} is not a subset of decoder set "
            f"{decoder_set.name}"
        )
    y = np.zeros((decoder_set.n_channels, np.atleast_1d(azimuths).size))
    keep = [i for i, c in enumerate(decoder_set.channels) if c.acn in source_acns]
    y[keep] = sh_matrix(
        [decoder_set.channels[i] for i in keep],
        azimuths,
        elevations,
        decoder_set.normalization,
    )
    return y


def evaluate_grid(
    decoder,
    grid: SphericalGrid,
    coverage: CoverageWeighting | None = None,
    source_set: SignalSetSpec | None = None,
) -> RenderMetrics:
    """Evaluate a DecoderMatrix or TwoBandDecoder over a grid.

    Deterministic: identical inputs produce identical tables.  Stored values
    are never clipped; clipping belongs to presentation only.
    """
    lf, hf = split_bands(decoder)
    if lf.array is not hf.array and lf.array != hf.array:
        raise ValueError("LF and HF matrices reference different arrays")
    if coverage is None:
        coverage = coverage_weights(lf.array, grid)
    y = source_sh_matrix(lf.signal_set, source_set, grid.azimuths, grid.elevations)
    fields = compute_fields(
        lf.matrix, hf.matrix, y, lf.array.real_unit_vectors, grid.unit_vectors
    )
    return RenderMetrics(grid=grid, coverage=coverage, **fields)


def split_bands(decoder) -> tuple[DecoderMatrix, DecoderMatrix]:
    """(LF, HF) matrices of a DecoderMatrix or TwoBandDecoder."""
    if isinstance(decoder, DecoderMatrix):
        return decoder, decoder
    lf = getattr(decoder, "lf", None)
    hf = getattr(decoder, "hf", None)
    if isinstance(lf, DecoderMatrix) and isinstance(hf, DecoderMatrix):
        return lf, hf
    raise TypeError(f"cannot evaluate object of type {type(decoder).__name__}")


def metrics_to_csv(metrics: RenderMetrics) -> str:
    """CSV table of the per-direction metrics (weight column is coverage)."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    az_deg = np.degrees(metrics.grid.azimuths)
    el_deg = np.degrees(metrics.grid.elevations)
    columns = [
        az_deg,
        el_deg,
        metrics.coverage.weights,
        metrics.pressure,
        metrics.energy,
        metrics.rv_mag,
        metrics.re_mag,
        metrics.dir_err_e_deg,
        metrics.dir_err_v_deg,
        metrics.rv_re_angle_deg,
        metrics.effective_order,
    ]
    for row in zip(*columns):
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()
