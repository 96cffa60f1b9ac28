"""Real spherical harmonics, ACN channel indexing, and mixed-order signal sets.

Conventions used throughout:

* Coordinates: azimuth in radians, counterclockwise from front; elevation in
  radians, up positive.  Unit vectors are ``x`` front, ``y`` left, ``z`` up.
* Channel ordering: ACN, ``acn = l*l + l + m``.
* Normalization: N3D in the unit-power sense, i.e. the mean of ``Y_i * Y_k``
  over the sphere is ``delta_ik`` (equivalently the integral is
  ``4*pi*delta_ik``), so ``Y_00 == 1``.  SN3D divides degree ``l`` by
  ``sqrt(2*l + 1)``.
* Condon-Shortley phase is omitted.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.special import lpmv

FURSE_MALHAM_NAMES = {
    "W": 0, "Y": 1, "Z": 2, "X": 3,
    "V": 4, "T": 5, "R": 6, "S": 7, "U": 8,
}

_SIGNAL_SET_RE = re.compile(r"^(\d+)(?:[Hh](\d+)[Vv])?$")


@dataclass(frozen=True)
class Direction:
    """A direction on the sphere (azimuth CCW from front, elevation up)."""

    azimuth: float
    elevation: float

    def __post_init__(self):
        if not -math.pi / 2 - 1e-12 <= self.elevation <= math.pi / 2 + 1e-12:
            raise ValueError(
                f"elevation {self.elevation!r} outside [-pi/2, pi/2]"
            )

    @property
    def unit_vector(self) -> np.ndarray:
        vec = self.__dict__.get("_unit_vector")
        if vec is None:
            ce = math.cos(self.elevation)
            vec = np.array(
                [
                    ce * math.cos(self.azimuth),
                    ce * math.sin(self.azimuth),
                    math.sin(self.elevation),
                ]
            )
            vec.setflags(write=False)
            self.__dict__["_unit_vector"] = vec
        return vec

    @classmethod
    def from_vector(cls, xyz) -> "Direction":
        x, y, z = np.asarray(xyz, dtype=float)
        norm = math.sqrt(x * x + y * y + z * z)
        if norm < 1e-300:
            raise ValueError("cannot derive a direction from the zero vector")
        return cls(math.atan2(y, x), math.asin(min(1.0, max(-1.0, z / norm))))

    @classmethod
    def from_degrees(cls, az_deg: float, el_deg: float) -> "Direction":
        return cls(math.radians(az_deg), math.radians(el_deg))


@dataclass(frozen=True, order=True)
class ChannelSpec:
    """One spherical-harmonic channel: ACN index, degree l, order m."""

    acn: int
    degree: int
    order: int

    def __post_init__(self):
        if self.degree < 0 or abs(self.order) > self.degree:
            raise ValueError(f"invalid (degree, order) = ({self.degree}, {self.order})")
        if self.acn != acn_index(self.degree, self.order):
            raise ValueError(
                f"acn {self.acn} inconsistent with (l={self.degree}, m={self.order})"
            )

    @classmethod
    def from_degree_order(cls, degree: int, order: int) -> "ChannelSpec":
        return cls(acn_index(degree, order), degree, order)

    @classmethod
    def from_acn(cls, acn: int) -> "ChannelSpec":
        degree, order = degree_order(acn)
        return cls(acn, degree, order)


def acn_index(l: int, m: int) -> int:
    """Ambisonic Channel Number for degree l and order m."""
    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid (degree, order) = ({l}, {m})")
    return l * l + l + m


def degree_order(acn: int) -> tuple[int, int]:
    """Recover (degree, order) from an Ambisonic Channel Number."""
    if acn < 0:
        raise ValueError(f"invalid ACN {acn}")
    l = math.isqrt(acn)
    return l, acn - l * l - l


def mixed_order_mask(order_h: int, order_v: int, convention: str = "HV") -> tuple[ChannelSpec, ...]:
    """ACN-ascending channels of an (order_h)H(order_v)V mixed-order set.

    A channel (l, m) is kept iff ``l <= order_h`` and ``l - |m| <= order_v``;
    with H == V this is the full (H+1)^2 set.  For H=2, V=1 exactly the
    degree-2, order-0 channel (ACN 6) is dropped.
    """
    if convention != "HV":
        raise ValueError(f"unknown mixed-order convention {convention!r}")
    if not 0 <= order_v <= order_h:
        raise ValueError(
            f"vertical order {order_v} must satisfy 0 <= V <= H = {order_h}"
        )
    channels = []
    for l in range(order_h + 1):
        for m in range(-l, l + 1):
            if l - abs(m) <= order_v:
                channels.append(ChannelSpec.from_degree_order(l, m))
    return tuple(channels)


@dataclass(frozen=True)
class SignalSetSpec:
    """An Ambisonic signal set: orders, convention, and its channel list."""

    order_h: int
    order_v: int
    convention: str = "HV"
    normalization: str = "N3D"
    channels: tuple[ChannelSpec, ...] = field(default=())

    def __post_init__(self):
        if self.normalization not in ("N3D", "SN3D"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        mask = mixed_order_mask(self.order_h, self.order_v, self.convention)
        if not self.channels:
            object.__setattr__(self, "channels", mask)
        elif tuple(self.channels) != mask:
            raise ValueError("channel list does not match the mixed-order mask")

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def acns(self) -> tuple[int, ...]:
        return tuple(c.acn for c in self.channels)

    @property
    def name(self) -> str:
        return f"{self.order_h}H{self.order_v}V"


def parse_signal_set(text: str, normalization: str = "N3D") -> SignalSetSpec:
    """Parse a signal-set string like ``"3H2V"``; a bare ``"3"`` means 3H3V."""
    match = _SIGNAL_SET_RE.match(text.strip())
    if not match:
        raise ValueError(f"cannot parse signal set {text!r} (expected e.g. '3H2V')")
    order_h = int(match.group(1))
    order_v = int(match.group(2)) if match.group(2) is not None else order_h
    return SignalSetSpec(order_h, order_v, normalization=normalization)


def _norm_constant(l: int, abs_m: int, normalization: str) -> float:
    # Unit-power N3D: mean of Y^2 over the sphere is 1.
    semi = math.sqrt(
        (2.0 if abs_m else 1.0)
        * math.factorial(l - abs_m)
        / math.factorial(l + abs_m)
    )
    if normalization == "SN3D":
        return semi
    if normalization == "N3D":
        return semi * math.sqrt(2 * l + 1)
    raise ValueError(f"unknown normalization {normalization!r}")


def _assoc_legendre(l: int, abs_m: int, z):
    # Condon-Shortley phase removed from scipy's lpmv.
    return (-1.0) ** abs_m * lpmv(abs_m, l, z)


def real_sh(channel: ChannelSpec, direction: Direction, normalization: str = "N3D") -> float:
    """Real spherical harmonic of one channel at one direction."""
    values = sh_matrix([channel], [direction.azimuth], [direction.elevation], normalization)
    return float(values[0, 0])


def sh_vector(signal_set: SignalSetSpec, direction: Direction) -> np.ndarray:
    """Channel-gain vector y(u): one real_sh value per channel, channel order."""
    return sh_matrix(
        signal_set.channels,
        [direction.azimuth],
        [direction.elevation],
        signal_set.normalization,
    )[:, 0]


def sh_matrix(channels, azimuths, elevations, normalization: str = "N3D") -> np.ndarray:
    """Spherical-harmonic matrix, shape (n_channels, n_directions).

    Row c holds channel c sampled at every (azimuth, elevation) pair.
    """
    az = np.atleast_1d(np.asarray(azimuths, dtype=float))
    el = np.atleast_1d(np.asarray(elevations, dtype=float))
    if az.shape != el.shape:
        raise ValueError("azimuth and elevation arrays must have the same shape")
    z = np.sin(el)
    out = np.empty((len(channels), az.size))
    for row, ch in enumerate(channels):
        abs_m = abs(ch.order)
        norm = _norm_constant(ch.degree, abs_m, normalization)
        leg = _assoc_legendre(ch.degree, abs_m, z)
        if ch.order > 0:
            trig = np.cos(ch.order * az)
        elif ch.order < 0:
            trig = np.sin(abs_m * az)
        else:
            trig = 1.0
        out[row] = norm * leg * trig
    return out
