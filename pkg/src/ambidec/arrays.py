"""Loudspeaker-array description, JSON config parsing, and coverage weighting."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .grids import SphericalGrid
from .spherical import Direction

MIN_SPEAKER_SEPARATION_DEG = 0.5


class ArrayConfigError(ValueError):
    """A speaker-array config is malformed; the message names the speaker."""


@dataclass(frozen=True)
class Speaker:
    """One loudspeaker.  Angles are stored in degrees as given in the config;
    the radian Direction is derived.  Imaginary speakers take part in hull
    construction only and never appear in output matrices."""

    id: str
    az_deg: float
    el_deg: float
    radius: float = 1.0
    sparseness_weight: float = 1.0
    is_imaginary: bool = False

    def __post_init__(self):
        if self.radius <= 0:
            raise ArrayConfigError(f"speaker {self.id!r}: radius must be > 0")
        if self.sparseness_weight < 0:
            raise ArrayConfigError(
                f"speaker {self.id!r}: sparseness_weight must be >= 0"
            )
        if not -90.0 <= self.el_deg <= 90.0:
            raise ArrayConfigError(
                f"speaker {self.id!r}: elevation {self.el_deg} outside [-90, 90]"
            )

    @property
    def dir(self) -> Direction:
        d = self.__dict__.get("_dir")
        if d is None:
            d = Direction.from_degrees(self.az_deg, self.el_deg)
            self.__dict__["_dir"] = d
        return d


def angular_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Great-circle angle in radians between two unit vectors."""
    return math.atan2(float(np.linalg.norm(np.cross(u, v))), float(np.dot(u, v)))


@dataclass(frozen=True)
class SpeakerArray:
    """An ordered speaker list with derived geometry.

    ``real_speakers`` (non-imaginary) define matrix rows; at least 2 are
    required and no two may lie within 0.5 degrees of each other.
    """

    name: str
    speakers: tuple[Speaker, ...]

    def __post_init__(self):
        seen = set()
        for spk in self.speakers:
            if spk.id in seen:
                raise ArrayConfigError(f"duplicate speaker id {spk.id!r}")
            seen.add(spk.id)
        real = self.real_speakers
        if len(real) < 2:
            raise ArrayConfigError("an array needs at least 2 real speakers")
        vecs = self.real_unit_vectors
        cosines = vecs @ vecs.T
        np.fill_diagonal(cosines, -1.0)
        i, k = np.unravel_index(np.argmax(cosines), cosines.shape)
        if cosines[i, k] > math.cos(math.radians(MIN_SPEAKER_SEPARATION_DEG)):
            raise ArrayConfigError(
                f"speakers {real[i].id!r} and {real[k].id!r} are closer "
                f"than {MIN_SPEAKER_SEPARATION_DEG} degrees"
            )

    @property
    def real_speakers(self) -> tuple[Speaker, ...]:
        return tuple(s for s in self.speakers if not s.is_imaginary)

    @property
    def n_real(self) -> int:
        return len(self.real_speakers)

    @property
    def real_unit_vectors(self) -> np.ndarray:
        """Unit vectors of the real speakers, shape (n_real, 3)."""
        vecs = self.__dict__.get("_real_unit_vectors")
        if vecs is None:
            vecs = np.array([s.dir.unit_vector for s in self.real_speakers])
            vecs.setflags(write=False)
            self.__dict__["_real_unit_vectors"] = vecs
        return vecs

    @property
    def sparseness_weights(self) -> np.ndarray:
        w = np.array([s.sparseness_weight for s in self.real_speakers])
        w.setflags(write=False)
        return w

    def nearest_neighbor_spacings(self) -> np.ndarray:
        """Per real speaker, the angle in radians to its nearest real neighbor."""
        vecs = self.real_unit_vectors
        cosines = np.clip(vecs @ vecs.T, -1.0, 1.0)
        np.fill_diagonal(cosines, -1.0)
        return np.arccos(cosines.max(axis=1))

    def median_spacing(self) -> float:
        return float(np.median(self.nearest_neighbor_spacings()))


def parse_array_config(text: str) -> SpeakerArray:
    """Parse a JSON speaker-array config (angles in degrees).

    Schema: ``{"name": str, "speakers": [{"id", "az_deg", "el_deg",
    "radius_m"?, "sparseness_weight"?, "imaginary"?}]}``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArrayConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ArrayConfigError("top level must be a JSON object")
    unknown = set(doc) - {"name", "speakers"}
    if unknown:
        raise ArrayConfigError(f"unknown top-level fields: {sorted(unknown)}")
    entries = doc.get("speakers")
    if not isinstance(entries, list) or not entries:
        raise ArrayConfigError("'speakers' must be a non-empty list")

    allowed = {"id", "az_deg", "el_deg", "radius_m", "sparseness_weight", "imaginary"}
    speakers = []
    for idx, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ArrayConfigError(f"speaker #{idx}: expected an object")
        label = entry.get("id", f"#{idx}")
        unknown = set(entry) - allowed
        if unknown:
            raise ArrayConfigError(
                f"speaker {label!r}: unknown fields {sorted(unknown)}"
            )
        for key in ("id", "az_deg", "el_deg"):
            if key not in entry:
                raise ArrayConfigError(f"speaker {label!r}: missing field {key!r}")
        speakers.append(
            Speaker(
                id=str(entry["id"]),
                az_deg=float(entry["az_deg"]),
                el_deg=float(entry["el_deg"]),
                radius=float(entry.get("radius_m", 1.0)),
                sparseness_weight=float(entry.get("sparseness_weight", 1.0)),
                is_imaginary=bool(entry.get("imaginary", False)),
            )
        )
    return SpeakerArray(str(doc.get("name", "array")), tuple(speakers))


def serialize_array_config(array: SpeakerArray) -> str:
    """Inverse of parse_array_config; parse(serialize(a)) equals a exactly."""
    entries = []
    for s in array.speakers:
        entry = {"id": s.id, "az_deg": s.az_deg, "el_deg": s.el_deg, "radius_m": s.radius}
        if s.sparseness_weight != 1.0:
            entry["sparseness_weight"] = s.sparseness_weight
        if s.is_imaginary:
            entry["imaginary"] = True
        entries.append(entry)
    return json.dumps({"name": array.name, "speakers": entries}, indent=2) + "\n"


def load_array(path) -> SpeakerArray:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_array_config(fh.read())


DEFAULT_TAPER_FACTOR = 0.75


@dataclass(frozen=True)
class CoverageParams:
    """Raised-cosine taper on angular distance to the nearest real speaker.

    Weight is 1 inside ``taper_start``, falls to ``floor`` at ``taper_end``.
    Defaults: taper_start = 0.75 x median nearest-neighbor spacing,
    taper_end = taper_start + 30 degrees, floor 0.1.  The 0.75 factor keeps
    every direction of a full-sphere design array at weight 1 while placing
    the nadir of a dome beyond the taper end (weight = floor).
    """

    taper_start: float | None = None
    taper_end: float | None = None
    floor: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.floor <= 1.0:
            raise ValueError("coverage floor must be in (0, 1]")


@dataclass(frozen=True)
class CoverageWeighting:
    """Per-grid-direction weights in [floor, 1] with the taper parameters."""

    weights: np.ndarray
    taper_start: float
    taper_end: float
    floor: float

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def coverage_weights(
    array: SpeakerArray, grid: SphericalGrid, params: CoverageParams | None = None
) -> CoverageWeighting:
    """Down-weight grid directions far from every real speaker.

    Weight is 1 within ``taper_start`` of the nearest speaker, then follows a
    raised cosine down to ``floor`` at ``taper_end``; monotone non-increasing
    in the nearest-speaker distance and rotation invariant.
    """
    params = params or CoverageParams()
    start = params.taper_start
    if start is None:
        start = 1.5 * array.median_spacing()
    end = params.taper_end
    if end is None:
        end = start + math.radians(30.0)
    if end <= start:
        raise ValueError("taper_end must exceed taper_start")

    cosines = np.clip(grid.unit_vectors @ array.real_unit_vectors.T, -1.0, 1.0)
    nearest = np.arccos(cosines.max(axis=1))
    t = np.clip((nearest - start) / (end - start), 0.0, 1.0)
    weights = params.floor + (1.0 - params.floor) * 0.5 * (1.0 + np.cos(math.pi * t))
    # cos(pi*0)=1 keeps weight exactly 1 inside the taper start
    weights[nearest <= start] = 1.0
    return CoverageWeighting(weights, float(start), float(end), params.floor)
