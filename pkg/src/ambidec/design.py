"""Classical decoder construction: pseudoinverse, max-rE weighting, and AllRAD."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .arrays import SpeakerArray
from .grids import SphericalGrid
from .spherical import SignalSetSpec, sh_matrix

CONDITION_WARN_THRESHOLD = 1e4
DEFAULT_TRUNCATION_TOL = 1e-7


@dataclass(frozen=True)
class EncodingMatrix:
    """K (channels x speakers): spherical harmonics sampled at the speakers."""

    matrix: np.ndarray
    signal_set: SignalSetSpec
    array: SpeakerArray

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=float)
        expected = (self.signal_set.n_channels, self.array.n_real)
        if m.shape != expected:
            raise ValueError(f"encoding matrix shape {m.shape}, expected {expected}")
        if not np.all(np.isfinite(m)):
            raise ValueError("encoding matrix has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class DecoderMatrix:
    """M (speakers x channels) for one band of a decoder."""

    matrix: np.ndarray
    signal_set: SignalSetSpec
    array: SpeakerArray
    band: str = "single"

    def __post_init__(self):
        if self.band not in ("LF", "HF", "single"):
            raise ValueError(f"unknown band label {self.band!r}")
        m = np.ascontiguousarray(self.matrix, dtype=float)
        expected = (self.array.n_real, self.signal_set.n_channels)
        if m.shape != expected:
            raise ValueError(f"decoder matrix shape {m.shape}, expected {expected}")
        if not np.all(np.isfinite(m)):
            raise ValueError("decoder matrix has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_speakers(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_channels(self) -> int:
        return self.matrix.shape[1]

    def with_matrix(self, matrix, band: str | None = None) -> "DecoderMatrix":
        return DecoderMatrix(matrix, self.signal_set, self.array, band or self.band)


def encoding_matrix(signal_set: SignalSetSpec, array: SpeakerArray) -> EncodingMatrix:
    """Sample the signal set's spherical harmonics at the real speakers."""
    speakers = array.real_speakers
    k = sh_matrix(
        signal_set.channels,
        [s.dir.azimuth for s in speakers],
        [s.dir.elevation for s in speakers],
        signal_set.normalization,
    )
    return EncodingMatrix(k, signal_set, array)


def pinv_decoder(
    encoding: EncodingMatrix, truncation_tol: float = DEFAULT_TRUNCATION_TOL
) -> DecoderMatrix:
    """Basic decoder M = K+ via SVD with small singular values truncated.

    With full row rank, K @ M is the identity to 1e-9.  Warns when there are
    fewer speakers than channels (exact reconstruction impossible) and when
    the condition number of K exceeds 1e4.
    """
    k = encoding.matrix
    if not np.any(k):
        raise ValueError("encoding matrix is all zero; cannot invert")
    n_channels, n_speakers = k.shape
    if n_speakers < n_channels:
        warnings.warn(
            f"{n_speakers} speakers for {n_channels} channels: "
            "exact reconstruction is impossible",
            stacklevel=2,
        )
    u, sing, vt = np.linalg.svd(k, full_matrices=False)
    keep = sing > truncation_tol * sing[0]
    cond = sing[0] / sing[keep][-1]
    if cond > CONDITION_WARN_THRESHOLD:
        warnings.warn(
            f"encoding matrix condition number {cond:.3g} exceeds "
            f"{CONDITION_WARN_THRESHOLD:g}; decoder may be fragile",
            stacklevel=2,
        )
    inv_sing = np.where(keep, 1.0 / np.where(keep, sing, 1.0), 0.0)
    m = (vt.T * inv_sing) @ u.T
    return DecoderMatrix(m, encoding.signal_set, encoding.array)


def _legendre_value(n: int, x):
    """P_n(x) by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev
    p = x.copy()
    for k in range(1, n):
        p, p_prev = ((2 * k + 1) * x * p - k * p_prev) / (k + 1), p
    return p


def max_re_magnitude(n: int, dims: int = 3) -> float:
    """Largest achievable |rE| at order n: the largest zero of P_{n+1}.

    Found by bisection to 1e-12.  For dims=2 the 2-D result
    cos(pi / (2n + 2)) is returned instead.
    """
    if n < 0:
        raise ValueError("order must be >= 0")
    if dims == 2:
        return math.cos(math.pi / (2 * n + 2))
    if dims != 3:
        raise ValueError("dims must be 2 or 3")
    if n == 0:
        return 0.0
    # The largest zero of P_{n+1} lies above every zero of P_n; scan from
    # x=1 down for the first sign change, then bisect.
    deg = n + 1
    xs = np.linspace(1.0, 0.0, 8 * deg + 8)
    vals = _legendre_value(deg, xs)
    idx = int(np.argmax(vals[0] * vals < 0))
    lo, hi = float(xs[idx]), float(xs[idx - 1])
    f_hi = _legendre_value(deg, hi)
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if _legendre_value(deg, mid) * f_hi > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def max_re_gains(n: int) -> np.ndarray:
    """Per-degree gains g_l = P_l(x_max) that maximize |rE| at order n."""
    x = max_re_magnitude(n)
    return np.array([float(_legendre_value(l, np.array(x))) for l in range(n + 1)])


def _scale_columns_by_degree(matrix, channels, gains) -> np.ndarray:
    degrees = [c.degree for c in channels]
    if max(degrees) >= len(gains):
        raise ValueError(
            f"gains cover degrees < {len(gains)} but the set uses degree {max(degrees)}"
        )
    scaled = matrix * np.asarray(gains, dtype=float)[degrees]
    # Mean energy gain over the full sphere equals ||M||_F^2 under the
    # unit-power convention, so preserving it is a Frobenius rescale.
    before = np.linalg.norm(matrix)
    after = np.linalg.norm(scaled)
    if after == 0.0:
        return scaled
    return scaled * (before / after)


def apply_degree_gains(decoder: DecoderMatrix, gains) -> DecoderMatrix:
    """Scale each channel column by its degree gain, preserving mean energy."""
    return decoder.with_matrix(
        _scale_columns_by_degree(decoder.matrix, decoder.signal_set.channels, gains)
    )


def canonical_energy_norm(matrix: np.ndarray, n_channels: int, n_speakers: int) -> np.ndarray:
    """Rescale so the full-sphere mean energy gain is n_channels / n_speakers.

    That is the level a pseudoinverse decoder has on a spherical-design array,
    used as the common reference level for every design method here.
    """
    target = math.sqrt(n_channels / n_speakers)
    norm = np.linalg.norm(matrix)
    if norm == 0.0:
        raise ValueError("cannot normalize an all-zero matrix")
    return matrix * (target / norm)


# ---------------------------------------------------------------------------
# VBAP and AllRAD


def _is_coplanar(vectors: np.ndarray) -> bool:
    centered = vectors - vectors.mean(axis=0)
    sing = np.linalg.svd(centered, compute_uv=False)
    return sing[-1] < 1e-9 * max(sing[0], 1.0)


def vbap_gain_matrix(speaker_vectors: np.ndarray, source_vectors: np.ndarray) -> np.ndarray:
    """Per-source VBAP gains over the speaker set, shape (speakers, sources).

    Each column has at most 3 nonnegative nonzero gains and unit power.
    Coplanar speaker sets fall back to 2-D pairwise panning with a warning.
    """
    spk = np.asarray(speaker_vectors, dtype=float)
    src = np.atleast_2d(np.asarray(source_vectors, dtype=float))
    if _is_coplanar(spk):
        warnings.warn(
            "speaker set is coplanar; falling back to 2-D pairwise panning",
            stacklevel=2,
        )
        return _vbap_2d(spk, src)
    try:
        simplices = ConvexHull(spk, qhull_options="Qt").simplices
    except QhullError:
        warnings.warn(
            "convex hull failed (degenerate geometry); falling back to 2-D panning",
            stacklevel=2,
        )
        return _vbap_2d(spk, src)

    bases = spk[simplices].transpose(0, 2, 1)  # (T, 3, 3), columns are vertices
    inv_bases = np.linalg.inv(bases)
    cand = np.einsum("tij,vj->tiv", inv_bases, src)  # (T, 3, V)
    min_gain = cand.min(axis=1)  # (T, V)
    best = np.argmax(min_gain, axis=0)  # (V,)
    n_src = src.shape[0]
    gains = np.zeros((spk.shape[0], n_src))
    sel = cand[best, :, np.arange(n_src)]  # (V, 3)
    sel = np.maximum(sel, 0.0)
    norms = np.linalg.norm(sel, axis=1)
    norms[norms == 0.0] = 1.0
    sel = sel / norms[:, None]
    for v in range(n_src):
        gains[simplices[best[v]], v] = sel[v]
    return gains


def _vbap_2d(speaker_vectors: np.ndarray, source_vectors: np.ndarray) -> np.ndarray:
    az = np.arctan2(speaker_vectors[:, 1], speaker_vectors[:, 0])
    order = np.argsort(az, kind="stable")
    n = len(order)
    pairs = [(order[i], order[(i + 1) % n]) for i in range(n)]
    if n == 2:
        pairs = pairs[:1]
    planar = np.column_stack([np.cos(az), np.sin(az)])
    src_az = np.arctan2(source_vectors[:, 1], source_vectors[:, 0])
    src_planar = np.column_stack([np.cos(src_az), np.sin(src_az)])

    n_src = source_vectors.shape[0]
    gains = np.zeros((speaker_vectors.shape[0], n_src))
    inv_bases = []
    for i, k in pairs:
        base = np.column_stack([planar[i], planar[k]])
        try:
            inv_bases.append(np.linalg.inv(base))
        except np.linalg.LinAlgError:
            inv_bases.append(np.linalg.pinv(base))
    cand = np.einsum("pij,vj->piv", np.array(inv_bases), src_planar)
    best = np.argmax(cand.min(axis=1), axis=0)
    for v in range(n_src):
        i, k = pairs[best[v]]
        g = np.maximum(cand[best[v], :, v], 0.0)
        norm = np.linalg.norm(g)
        if norm == 0.0:
            g = np.array([1.0, 0.0])
            norm = 1.0
        gains[i, v], gains[k, v] = g / norm
    return gains


_IMAGINARY_POLICIES = {
    "none": (),
    "nadir": ((0.0, 0.0, -1.0),),
    "nadir+zenith": ((0.0, 0.0, -1.0), (0.0, 0.0, 1.0)),
}


def allrad_decoder(
    signal_set: SignalSetSpec,
    array: SpeakerArray,
    virtual_grid: SphericalGrid,
    imaginary_policy: str = "nadir",
) -> DecoderMatrix:
    """AllRAD: max-rE decode to a virtual design array, map to real via VBAP.

    The hull is built from the real speakers, any imaginary speakers in the
    config, and extra imaginary points per ``imaginary_policy``; imaginary
    rows are dropped afterwards and the matrix is rescaled to the common
    full-sphere reference level.
    """
    if imaginary_policy not in _IMAGINARY_POLICIES:
        raise ValueError(
            f"unknown imaginary policy {imaginary_policy!r}; "
            f"choose from {sorted(_IMAGINARY_POLICIES)}"
        )
    min_degree = 2 * signal_set.order_h + 1
    if virtual_grid.t_degree < min_degree:
        raise ValueError(
            f"virtual grid degree {virtual_grid.t_degree} too low; "
            f"order {signal_set.order_h} needs at least {min_degree}"
        )

    hull_vecs = [array.real_unit_vectors]
    for s in array.speakers:
        if s.is_imaginary:
            hull_vecs.append(s.dir.unit_vector[None, :])
    existing = np.vstack(hull_vecs)
    for vec in _IMAGINARY_POLICIES[imaginary_policy]:
        vec = np.asarray(vec)
        # skip policy points already represented in the layout
        if np.max(existing @ vec) < math.cos(math.radians(1.0)):
            existing = np.vstack([existing, vec[None, :]])

    gains = vbap_gain_matrix(existing, virtual_grid.unit_vectors)
    n_real = array.n_real

    y_virtual = sh_matrix(
        signal_set.channels,
        virtual_grid.azimuths,
        virtual_grid.elevations,
        signal_set.normalization,
    )
    d_virtual = np.linalg.pinv(y_virtual)
    d_virtual = _scale_columns_by_degree(
        d_virtual, signal_set.channels, max_re_gains(signal_set.order_h)
    )

    m = gains[:n_real] @ d_virtual
    m = canonical_energy_norm(m, signal_set.n_channels, n_real)
    return DecoderMatrix(m, signal_set, array)
