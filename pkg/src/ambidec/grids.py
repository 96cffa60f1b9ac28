"""Spherical quadrature grids: shipped designs, platonic solids, and fallbacks.

Shipped point sets live in ``ambidec/data/grids`` (override the directory with
the ``AMBIDEC_GRID_DIR`` environment variable).  They were computed by
``tools/generate_grids.py`` with Gauss-Newton refinement of the quadrature
moments and carry their exactness degree in a header line.

The Fibonacci generator is a fallback only: its equal weights are *not* an
exact quadrature (``t_degree`` is 0), so orthonormality-based shortcuts do not
apply to it.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .spherical import Direction

FOUR_PI = 4.0 * math.pi

BUILTIN_GRID_FILES = {
    "design48": "design48_d7.txt",
    "design240": "design240_d21.txt",
    "design5200": "design5200_d21.txt",
}


class GridParseError(ValueError):
    """A grid file could not be parsed; the message names the line."""


@dataclass(frozen=True)
class SphericalGrid:
    """Quadrature directions and weights; t_degree is the exactness degree."""

    name: str
    azimuths: np.ndarray
    elevations: np.ndarray
    weights: np.ndarray
    t_degree: int = 0

    def __post_init__(self):
        az = np.ascontiguousarray(self.azimuths, dtype=float)
        el = np.ascontiguousarray(self.elevations, dtype=float)
        w = np.ascontiguousarray(self.weights, dtype=float)
        if not (az.shape == el.shape == w.shape) or az.ndim != 1:
            raise ValueError("azimuths, elevations, weights must be equal-length 1-D")
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be positive")
        total = float(np.sum(w))
        if abs(total - FOUR_PI) > 1e-9:
            raise ValueError(f"weights sum to {total!r}, expected 4*pi")
        for arr in (az, el, w):
            arr.setflags(write=False)
        object.__setattr__(self, "azimuths", az)
        object.__setattr__(self, "elevations", el)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.azimuths.size

    @property
    def n_points(self) -> int:
        return self.azimuths.size

    @property
    def unit_vectors(self) -> np.ndarray:
        """Unit vectors, shape (n_points, 3)."""
        vecs = self.__dict__.get("_unit_vectors")
        if vecs is None:
            ce = np.cos(self.elevations)
            vecs = np.column_stack(
                [ce * np.cos(self.azimuths), ce * np.sin(self.azimuths), np.sin(self.elevations)]
            )
            vecs.setflags(write=False)
            self.__dict__["_unit_vectors"] = vecs
        return vecs

    @property
    def directions(self) -> tuple[Direction, ...]:
        dirs = self.__dict__.get("_directions")
        if dirs is None:
            dirs = tuple(
                Direction(float(a), float(e))
                for a, e in zip(self.azimuths, self.elevations)
            )
            self.__dict__["_directions"] = dirs
        return dirs

    @classmethod
    def from_unit_vectors(cls, name, vectors, weights=None, t_degree=0) -> "SphericalGrid":
        vecs = np.asarray(vectors, dtype=float)
        norms = np.linalg.norm(vecs, axis=1)
        vecs = vecs / norms[:, None]
        az = np.arctan2(vecs[:, 1], vecs[:, 0])
        el = np.arcsin(np.clip(vecs[:, 2], -1.0, 1.0))
        if weights is None:
            weights = np.full(len(vecs), FOUR_PI / len(vecs))
        return cls(name, az, el, np.asarray(weights, dtype=float), t_degree)


def fibonacci_grid(n_points: int) -> SphericalGrid:
    """Fibonacci-spiral point set with equal weights; t_degree is 0.

    Quadrature exactness is lost with this fallback; prefer a shipped design.
    """
    if n_points < 4:
        raise ValueError(f"a spherical grid needs at least 4 points, got {n_points}")
    k = np.arange(n_points)
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    az = np.mod(2.0 * math.pi * k / golden, 2.0 * math.pi) - math.pi
    el = np.arcsin(1.0 - (2.0 * k + 1.0) / n_points)
    weights = np.full(n_points, FOUR_PI / n_points)
    return SphericalGrid(f"fibonacci{n_points}", az, el, weights, t_degree=0)


def octahedron_grid() -> SphericalGrid:
    """The six octahedron vertices: an exact degree-3 design."""
    vecs = np.array(
        [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
        dtype=float,
    )
    return SphericalGrid.from_unit_vectors("octahedron", vecs, t_degree=3)


def cube_grid() -> SphericalGrid:
    """The eight cube vertices: an exact degree-3 design."""
    vecs = np.array(
        [[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)], dtype=float
    ) / math.sqrt(3.0)
    return SphericalGrid.from_unit_vectors("cube", vecs, t_degree=3)


def icosahedron_grid() -> SphericalGrid:
    """The twelve icosahedron vertices: an exact degree-5 design."""
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    base = []
    for a in (-1.0, 1.0):
        for b in (-phi, phi):
            base.extend([[0.0, a, b], [a, b, 0.0], [b, 0.0, a]])
    return SphericalGrid.from_unit_vectors("icosahedron", np.array(base), t_degree=5)


_ANALYTIC_GRIDS = {
    "octahedron": octahedron_grid,
    "cube": cube_grid,
    "icosahedron": icosahedron_grid,
}


def grid_data_dir() -> Path:
    override = os.environ.get("AMBIDEC_GRID_DIR")
    if override:
        return Path(override)
    return Path(resources.files("ambidec").joinpath("data", "grids"))


def builtin_grid(name: str) -> SphericalGrid:
    """Load a built-in grid by name (see ``builtin_grid_names``)."""
    if name in _ANALYTIC_GRIDS:
        return _ANALYTIC_GRIDS[name]()
    if name in BUILTIN_GRID_FILES:
        return load_grid(grid_data_dir() / BUILTIN_GRID_FILES[name], name=name)
    raise ValueError(
        f"unknown builtin grid {name!r}; choose from {sorted(builtin_grid_names())}"
    )


def builtin_grid_names() -> tuple[str, ...]:
    return tuple(sorted(set(_ANALYTIC_GRIDS) | set(BUILTIN_GRID_FILES)))


def load_grid(path, name: str | None = None, t_degree: int | None = None) -> SphericalGrid:
    """Load a grid file: one ``x y z [weight]`` unit vector per line.

    Lines starting with ``#`` are comments; a ``# t-design degree: N`` header
    sets the exactness degree unless ``t_degree`` is passed explicitly.  A
    missing weight column means equal weights.
    """
    path = Path(path)
    header_degree = 0
    vectors: list[list[float]] = []
    weights: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line.startswith("#"):
                lowered = line.lstrip("#").strip().lower()
                if lowered.startswith("t-design degree:"):
                    header_degree = int(lowered.split(":", 1)[1])
                continue
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (3, 4):
                raise GridParseError(
                    f"{path.name}:{lineno}: expected 'x y z [weight]', got {len(parts)} fields"
                )
            try:
                values = [float(p) for p in parts]
            except ValueError as exc:
                raise GridParseError(f"{path.name}:{lineno}: {exc}") from None
            norm = math.sqrt(values[0] ** 2 + values[1] ** 2 + values[2] ** 2)
            if abs(norm - 1.0) > 1e-6:
                raise GridParseError(
                    f"{path.name}:{lineno}: vector norm {norm!r} is not 1"
                )
            vectors.append(values[:3])
            if len(parts) == 4:
                if values[3] <= 0:
                    raise GridParseError(
                        f"{path.name}:{lineno}: weight {values[3]!r} is not positive"
                    )
                weights.append(values[3])
    if len(vectors) < 4:
        raise GridParseError(f"{path.name}: only {len(vectors)} points; at least 4 required")
    if weights and len(weights) != len(vectors):
        raise GridParseError(
            f"{path.name}: {len(weights)} weights for {len(vectors)} points; "
            "the weight column must be all-or-none"
        )
    degree = t_degree if t_degree is not None else header_degree
    return SphericalGrid.from_unit_vectors(
        name or path.stem,
        np.array(vectors),
        np.array(weights) if weights else None,
        t_degree=degree,
    )


def save_grid(grid: SphericalGrid, path, comment: str | None = None) -> None:
    """Write a grid in the ``x y z weight`` text format with a degree header."""
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append(f"# t-design degree: {grid.t_degree}")
    for vec, w in zip(grid.unit_vectors, grid.weights):
        lines.append(f"{vec[0]:.17g} {vec[1]:.17g} {vec[2]:.17g} {w:.17g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
