"""Two-stage decoder optimization: an HF stage shaping the energy vector
toward a per-direction goal field, then an LF stage aligning the velocity
vector with the HF result.

Both stages run bound-constrained L-BFGS on analytic gradients (checked
against finite differences in the test suite).  Objective sums over grid
directions combine the quadrature weights with the coverage weights, so
weighted grids integrate without bias; for equal-weight grids this is the
plain coverage-weighted sum up to a constant factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .arrays import CoverageParams, CoverageWeighting, Speaker, SpeakerArray, coverage_weights
from .design import (
    DecoderMatrix,
    allrad_decoder,
    apply_degree_gains,
    canonical_energy_norm,
    encoding_matrix,
    max_re_gains,
    max_re_magnitude,
    pinv_decoder,
)
from .grids import SphericalGrid, builtin_grid
from .metrics import compute_fields, evaluate_grid
from .spherical import SignalSetSpec, sh_matrix

_NORM_EPS = 1e-30


class GoalFieldError(RuntimeError):
    """The goal-field optimization did not converge; the goal is untrusted."""


@dataclass(frozen=True)
class ObjectiveSpec:
    """Objective term weights and the entry bound for the optimizer."""

    alpha_dir: float = 10.0
    alpha_mag: float = 1.0
    alpha_energy: float = 1.0
    alpha_amp: float = 1.0
    tikhonov: float = 1e-3
    sparseness: float = 0.0
    bound: float = 4.0

    def __post_init__(self):
        values = (
            self.alpha_dir,
            self.alpha_mag,
            self.alpha_energy,
            self.alpha_amp,
            self.tikhonov,
            self.sparseness,
        )
        if not all(math.isfinite(v) and v >= 0 for v in values):
            raise ValueError("objective weights must be finite and >= 0")
        if not self.bound > 0:
            raise ValueError("entry bound must be positive")


@dataclass(frozen=True)
class GoalField:
    """Per-direction |rE| targets plus the design-array decoder behind them."""

    grid: SphericalGrid
    goals: np.ndarray
    reference: DecoderMatrix | None = None

    def __post_init__(self):
        goals = np.ascontiguousarray(self.goals, dtype=float)
        if goals.shape != (self.grid.n_points,):
            raise ValueError("goal field length must match the grid")
        if np.any(goals <= 0):
            raise ValueError("goal magnitudes must be positive")
        if self.reference is not None:
            cap = max_re_magnitude(self.reference.signal_set.order_h) + 1e-6
            if np.any(goals > cap):
                raise ValueError(
                    f"goal magnitudes exceed the order "
                    f"{self.reference.signal_set.order_h} bound {cap:.6f}"
                )
        goals.setflags(write=False)
        object.__setattr__(self, "goals", goals)

    @classmethod
    def uniform(cls, grid: SphericalGrid, magnitude: float) -> "GoalField":
        return cls(grid, np.full(grid.n_points, float(magnitude)))


@dataclass(frozen=True)
class OptimizationResult:
    decoder: DecoderMatrix
    iterations: int
    objective: float
    breakdown: dict[str, float]
    converged: bool
    gradient_check: dict
    objective_history: tuple[float, ...]
    seed: int
    message: str


@dataclass(frozen=True)
class TwoBandDecoder:
    """Paired LF/HF matrices; the crossover frequency is export metadata."""

    lf: DecoderMatrix
    hf: DecoderMatrix
    crossover_hz: float = 400.0

    def __post_init__(self):
        if self.lf.matrix.shape != self.hf.matrix.shape:
            raise ValueError("LF and HF matrices must share dimensions")
        if self.lf.signal_set != self.hf.signal_set:
            raise ValueError("LF and HF matrices must share the signal set")
        if self.lf.array != self.hf.array:
            raise ValueError("LF and HF matrices must share the array")

    @property
    def signal_set(self) -> SignalSetSpec:
        return self.lf.signal_set

    @property
    def array(self) -> SpeakerArray:
        return self.lf.array


class _StageObjective:
    """Shared precomputation for one optimization stage on one grid."""

    def __init__(self, signal_set, array, grid, spec, coverage=None):
        self.signal_set = signal_set
        self.array = array
        self.grid = grid
        self.spec = spec
        if coverage is None:
            coverage = coverage_weights(array, grid)
        self.coverage = coverage
        self.y = sh_matrix(
            signal_set.channels, grid.azimuths, grid.elevations, signal_set.normalization
        )
        self.u = array.real_unit_vectors.T  # 3 x S
        self.targets = grid.unit_vectors.T  # 3 x J
        self.weights = grid.weights * coverage.weights
        self.wsum = float(self.weights.sum())
        self.sparse_weights = array.sparseness_weights
        self.shape = (array.n_real, signal_set.n_channels)

    def _sparseness(self, m):
        """Hinge penalty pushing row norms up toward the mean row norm."""
        beta = self.spec.sparseness
        row_norms = np.linalg.norm(m, axis=1)
        mean_norm = row_norms.mean()
        if beta == 0.0 or mean_norm <= _NORM_EPS:
            return 0.0, np.zeros_like(m)
        hinge = np.maximum(0.0, 1.0 - row_norms / mean_norm)
        value = beta * float(self.sparse_weights @ (hinge * hinge))
        n_rows = m.shape[0]
        common = (2.0 * beta / (n_rows * mean_norm**2)) * float(
            np.sum(self.sparse_weights * hinge * row_norms)
        )
        per_row = -2.0 * beta * self.sparse_weights * hinge / mean_norm + common
        safe = np.maximum(row_norms, _NORM_EPS)
        grad = (per_row / safe)[:, None] * m
        grad[row_norms <= _NORM_EPS] = 0.0  # subgradient at the kink
        return value, grad

    def _regularizers(self, m):
        tik = self.spec.tikhonov * float(np.sum(m * m))
        sparse_val, sparse_grad = self._sparseness(m)
        grad = 2.0 * self.spec.tikhonov * m + sparse_grad
        return tik, sparse_val, grad


class HfObjective(_StageObjective):
    """HF stage: energy-vector direction, magnitude goal, energy uniformity."""

    def __init__(self, signal_set, array, grid, goal: GoalField, spec, coverage=None):
        super().__init__(signal_set, array, grid, spec, coverage)
        if goal.grid.n_points != grid.n_points:
            raise ValueError("goal field was built for a different grid")
        self.goals = goal.goals

    def value_and_gradient(self, m):
        spec = self.spec
        w = self.weights
        g = m @ self.y  # S x J
        g2 = g * g
        energy = g2.sum(axis=0)  # J
        e_vec = self.u @ g2  # 3 x J
        e_norm = np.linalg.norm(e_vec, axis=0)

        safe_e = np.maximum(e_norm, _NORM_EPS)
        safe_energy = np.maximum(energy, _NORM_EPS)

        dots = np.einsum("ij,ij->j", e_vec, self.targets)
        dir_resid = 1.0 - dots / safe_e
        re_mag = e_norm / safe_energy
        mag_resid = re_mag - self.goals
        mean_energy = float((w * energy).sum() / self.wsum)
        safe_mean = max(mean_energy, _NORM_EPS)
        en_resid = energy / safe_mean - 1.0

        f_dir = spec.alpha_dir * float((w * dir_resid).sum())
        f_mag = spec.alpha_mag * float((w * mag_resid**2).sum())
        f_energy = spec.alpha_energy * float((w * en_resid**2).sum())
        tik, sparse_val, reg_grad = self._regularizers(m)
        total = f_dir + f_mag + f_energy + tik + sparse_val

        # dF/de (3 x J) and dF/dE (J) accumulated over the three field terms
        b = spec.alpha_dir * w * (-1.0 / safe_e) * self.targets
        b += spec.alpha_dir * w * (dots / safe_e**3) * e_vec
        b += (2.0 * spec.alpha_mag * w * mag_resid / (safe_energy * safe_e)) * e_vec

        a = -2.0 * spec.alpha_mag * w * mag_resid * re_mag / safe_energy
        a += (2.0 * spec.alpha_energy / safe_mean) * w * (
            en_resid - float((w * en_resid * energy).sum()) / (safe_mean * self.wsum)
        )

        dg = 2.0 * g * (a[None, :] + self.u.T @ b)
        grad = dg @ self.y.T + reg_grad
        breakdown = {
            "direction": f_dir,
            "magnitude": f_mag,
            "energy": f_energy,
            "tikhonov": tik,
            "sparseness": sparse_val,
        }
        return total, grad, breakdown

    def value(self, m):
        return self.value_and_gradient(m)[0]

    def gradient(self, m):
        return self.value_and_gradient(m)[1]

    def breakdown(self, m):
        return self.value_and_gradient(m)[2]


class LfObjective(_StageObjective):
    """LF stage: velocity vector aligned with the HF energy vector, unit
    magnitude, and uniform pressure."""

    def __init__(self, signal_set, array, grid, hf_decoder: DecoderMatrix, spec, coverage=None):
        super().__init__(signal_set, array, grid, spec, coverage)
        if hf_decoder.signal_set != signal_set or hf_decoder.array != array:
            raise ValueError("HF decoder does not match the LF stage inputs")
        fields = compute_fields(
            hf_decoder.matrix,
            hf_decoder.matrix,
            self.y,
            array.real_unit_vectors,
            grid.unit_vectors,
        )
        re = fields["re_vectors"]
        norms = np.linalg.norm(re, axis=1)
        bad = ~np.isfinite(norms) | (norms <= _NORM_EPS)
        # directions with no usable HF energy vector fall back to the source
        re = np.where(bad[:, None], grid.unit_vectors, re)
        norms = np.where(bad, 1.0, norms)
        self.lf_targets = (re / norms[:, None]).T  # 3 x J

    def value_and_gradient(self, m):
        spec = self.spec
        w = self.weights
        g = m @ self.y
        pressure = g.sum(axis=0)  # J
        v_vec = self.u @ g  # 3 x J
        v_norm = np.linalg.norm(v_vec, axis=0)

        safe_v = np.maximum(v_norm, _NORM_EPS)
        sign_p = np.where(pressure >= 0.0, 1.0, -1.0)
        abs_p = np.maximum(np.abs(pressure), _NORM_EPS)

        dots = np.einsum("ij,ij->j", v_vec, self.lf_targets)
        dir_resid = 1.0 - sign_p * dots / safe_v
        rv_mag = v_norm / abs_p
        mag_resid = rv_mag - 1.0
        mean_p = float((w * pressure).sum() / self.wsum)
        safe_mean = mean_p if abs(mean_p) > _NORM_EPS else _NORM_EPS
        amp_resid = pressure / safe_mean - 1.0

        f_dir = spec.alpha_dir * float((w * dir_resid).sum())
        f_mag = spec.alpha_mag * float((w * mag_resid**2).sum())
        f_amp = spec.alpha_amp * float((w * amp_resid**2).sum())
        tik, sparse_val, reg_grad = self._regularizers(m)
        total = f_dir + f_mag + f_amp + tik + sparse_val

        b = spec.alpha_dir * w * sign_p * (-1.0 / safe_v) * self.lf_targets
        b += spec.alpha_dir * w * sign_p * (dots / safe_v**3) * v_vec
        b += (2.0 * spec.alpha_mag * w * mag_resid / (abs_p * safe_v)) * v_vec

        a = -2.0 * spec.alpha_mag * w * mag_resid * v_norm * sign_p / abs_p**2
        a += (2.0 * spec.alpha_amp / safe_mean) * w * (
            amp_resid - float((w * amp_resid * pressure).sum()) / (safe_mean * self.wsum)
        )

        dg = a[None, :] + self.u.T @ b
        grad = dg @ self.y.T + reg_grad
        breakdown = {
            "direction": f_dir,
            "magnitude": f_mag,
            "amplitude": f_amp,
            "tikhonov": tik,
            "sparseness": sparse_val,
        }
        return total, grad, breakdown

    def value(self, m):
        return self.value_and_gradient(m)[0]

    def gradient(self, m):
        return self.value_and_gradient(m)[1]


def hf_objective(m, signal_set, array, grid, goal, spec, coverage=None):
    """Objective value and per-term breakdown for an HF candidate matrix."""
    obj = HfObjective(signal_set, array, grid, goal, spec, coverage)
    total, _, breakdown = obj.value_and_gradient(np.asarray(m, dtype=float))
    return total, breakdown


def objective_gradient(m, signal_set, array, grid, goal, spec, coverage=None):
    """Analytic gradient of the HF objective with respect to matrix entries."""
    obj = HfObjective(signal_set, array, grid, goal, spec, coverage)
    return obj.gradient(np.asarray(m, dtype=float))


def lf_objective(m, signal_set, array, grid, hf_decoder, spec, coverage=None):
    obj = LfObjective(signal_set, array, grid, hf_decoder, spec, coverage)
    total, _, breakdown = obj.value_and_gradient(np.asarray(m, dtype=float))
    return total, breakdown


def lf_objective_gradient(m, signal_set, array, grid, hf_decoder, spec, coverage=None):
    obj = LfObjective(signal_set, array, grid, hf_decoder, spec, coverage)
    return obj.gradient(np.asarray(m, dtype=float))


def _probe_gradient(objective, m, seed):
    """Directional finite-difference spot check recorded with each result."""
    rng = np.random.default_rng(seed ^ 0x5EED)
    direction = rng.standard_normal(m.shape)
    direction /= np.linalg.norm(direction)
    step = 1e-6 * (1.0 + float(np.max(np.abs(m))))
    f_plus = objective.value(m + step * direction)
    f_minus = objective.value(m - step * direction)
    numeric = (f_plus - f_minus) / (2.0 * step)
    analytic = float(np.sum(objective.gradient(m) * direction))
    denom = max(abs(numeric), abs(analytic), 1e-12)
    return {
        "directional_analytic": analytic,
        "directional_numeric": numeric,
        "relative_error": abs(numeric - analytic) / denom,
    }


def _resolve_x0(x0, signal_set, array, seed, goal_grid=None):
    if isinstance(x0, DecoderMatrix):
        return x0.matrix.copy()
    if isinstance(x0, np.ndarray):
        return np.array(x0, dtype=float)
    if x0 == "pinv":
        dec = pinv_decoder(encoding_matrix(signal_set, array))
        return apply_degree_gains(dec, max_re_gains(signal_set.order_h)).matrix.copy()
    if x0 == "allrad":
        virtual = goal_grid if goal_grid is not None else builtin_grid("design240")
        return allrad_decoder(signal_set, array, virtual).matrix.copy()
    if x0 == "random":
        rng = np.random.default_rng(seed)
        return rng.uniform(-0.01, 0.01, size=(array.n_real, signal_set.n_channels))
    raise ValueError(f"unknown initial-guess policy {x0!r}")


def _run_lbfgs(objective, x0, spec, max_iterations, gradient_tol, relative_tol):
    shape = objective.shape
    history = []
    last_f = [np.inf]

    def fun(x):
        total, grad, _ = objective.value_and_gradient(x.reshape(shape))
        last_f[0] = total
        return total, grad.ravel()

    def record(_xk):
        # the accepted iterate is the line search's final evaluation
        history.append(last_f[0])

    bounds = [(-spec.bound, spec.bound)] * (shape[0] * shape[1])
    x0 = np.clip(x0, -spec.bound, spec.bound)
    history.append(objective.value(x0))
    result = minimize(
        fun,
        x0.ravel(),
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        callback=record,
        options={
            "maxiter": max_iterations,
            "ftol": relative_tol,
            "gtol": gradient_tol,
            "maxls": 60,
            "maxcor": 30,
        },
    )
    converged = bool(result.success)
    message = result.message if isinstance(result.message, str) else str(result.message)
    return result.x.reshape(shape), int(result.nit), converged, message, history


def optimize_hf(
    signal_set: SignalSetSpec,
    array: SpeakerArray,
    grid: SphericalGrid,
    goal: GoalField,
    spec: ObjectiveSpec | None = None,
    x0="allrad",
    seed: int = 0,
    coverage: CoverageWeighting | None = None,
    max_iterations: int = 2000,
    gradient_tol: float = 1e-6,
    relative_tol: float = 1e-10,
) -> OptimizationResult:
    """Optimize the HF matrix against the goal |rE| field.

    The returned matrix is rescaled to the common full-sphere energy level
    (the objective itself is invariant to overall scale, so the optimizer
    does not pin it).  Non-convergence is reported, not raised.
    """
    spec = spec or ObjectiveSpec()
    objective = HfObjective(signal_set, array, grid, goal, spec, coverage)
    start = _resolve_x0(x0, signal_set, array, seed)
    matrix, iters, converged, message, history = _run_lbfgs(
        objective, start, spec, max_iterations, gradient_tol, relative_tol
    )
    matrix = canonical_energy_norm(matrix, signal_set.n_channels, array.n_real)
    total, _, breakdown = objective.value_and_gradient(matrix)
    decoder = DecoderMatrix(matrix, signal_set, array, band="HF")
    return OptimizationResult(
        decoder=decoder,
        iterations=iters,
        objective=total,
        breakdown=breakdown,
        converged=converged,
        gradient_check=_probe_gradient(objective, matrix, seed),
        objective_history=tuple(history),
        seed=seed,
        message=message,
    )


def optimize_lf(
    signal_set: SignalSetSpec,
    array: SpeakerArray,
    grid: SphericalGrid,
    hf_decoder: DecoderMatrix,
    spec: ObjectiveSpec | None = None,
    x0=None,
    seed: int = 0,
    coverage: CoverageWeighting | None = None,
    max_iterations: int = 2000,
    gradient_tol: float = 1e-6,
    relative_tol: float = 1e-10,
) -> OptimizationResult:
    """Optimize the LF matrix toward the HF decoder's energy-vector field.

    x0 defaults to the HF matrix.  The result is rescaled so the weighted
    mean pressure gain is 1.
    """
    spec = spec or ObjectiveSpec()
    objective = LfObjective(signal_set, array, grid, hf_decoder, spec, coverage)
    if x0 is None:
        start = hf_decoder.matrix.copy()
    else:
        start = _resolve_x0(x0, signal_set, array, seed)
    matrix, iters, converged, message, history = _run_lbfgs(
        objective, start, spec, max_iterations, gradient_tol, relative_tol
    )
    pressure = (matrix @ objective.y).sum(axis=0)
    mean_p = float((objective.weights * pressure).sum() / objective.wsum)
    if abs(mean_p) > _NORM_EPS:
        matrix = matrix / mean_p
    total, _, breakdown = objective.value_and_gradient(matrix)
    decoder = DecoderMatrix(matrix, signal_set, array, band="LF")
    return OptimizationResult(
        decoder=decoder,
        iterations=iters,
        objective=total,
        breakdown=breakdown,
        converged=converged,
        gradient_check=_probe_gradient(objective, matrix, seed),
        objective_history=tuple(history),
        seed=seed,
        message=message,
    )


def design_array_from_grid(grid: SphericalGrid) -> SpeakerArray:
    """A virtual speaker array sitting on the grid points."""
    speakers = tuple(
        Speaker(
            id=f"v{i:04d}",
            az_deg=math.degrees(float(az)),
            el_deg=max(-90.0, min(90.0, math.degrees(float(el)))),
        )
        for i, (az, el) in enumerate(zip(grid.azimuths, grid.elevations))
    )
    return SpeakerArray(f"{grid.name}-array", speakers)


def _class_gain_start(objective: HfObjective, signal_set, design_array):
    """Per-(degree, |order|) channel gains on a design array, optimized against
    the full-order ceiling.  Rotational symmetry about z makes this tiny
    problem carry nearly all of the design-array optimum; it supplies the
    initial matrix and an achievable target field for the full optimization.
    """
    base = encoding_matrix(signal_set, design_array).matrix.T / design_array.n_real
    col_class = np.zeros(signal_set.n_channels, dtype=int)
    class_index: dict[tuple[int, int], int] = {}
    for i, ch in enumerate(signal_set.channels):
        key = (ch.degree, abs(ch.order))
        col_class[i] = class_index.setdefault(key, len(class_index))
    degree_gains = max_re_gains(signal_set.order_h)
    c0 = np.array([degree_gains[key[0]] for key in class_index])

    def fun(c):
        total, grad_m, _ = objective.value_and_gradient(base * c[col_class])
        grad_c = np.bincount(
            col_class, weights=(grad_m * base).sum(axis=0), minlength=len(c0)
        )
        return total, grad_c

    result = minimize(
        fun, c0, jac=True, method="L-BFGS-B",
        options={"maxiter": 2000, "ftol": 1e-14, "gtol": 1e-10},
    )
    return base * result.x[col_class]


def goal_re_field(
    signal_set: SignalSetSpec,
    eval_grid: SphericalGrid,
    design_grid: SphericalGrid | None = None,
    spec: ObjectiveSpec | None = None,
    seed: int = 0,
    max_iterations: int = 2000,
) -> GoalField:
    """Achievable |rE| targets for a signal set, per evaluation direction.

    Optimizes a matched decoder on a spherical-design array (a well-behaved
    problem thanks to the design's integration properties) and reads its |rE|
    off at each evaluation direction.  Chasing the full-order closed-form
    maximum directly stalls for mixed-order sets (the target is unreachable
    vertically), so the stage runs in two passes: symmetric per-class gains
    toward the ceiling, then the full matrix toward the field those gains
    achieve.  Failure to converge is a hard error: the goals must be trusted.
    """
    spec = spec or ObjectiveSpec()
    if design_grid is None:
        design_grid = builtin_grid("design240")
    min_degree = 2 * signal_set.order_h + 1
    if design_grid.t_degree < min_degree:
        raise ValueError(
            f"design grid degree {design_grid.t_degree} too low; "
            f"order {signal_set.order_h} needs at least {min_degree}"
        )
    ceiling = max_re_magnitude(signal_set.order_h)
    design_array = design_array_from_grid(design_grid)
    # The design-array problem is regular, so the regularizers that guard
    # irregular layouts are switched off; only the |rE| field is extracted
    # from this stage and it is invariant to the matrix scale they control.
    # Its objective runs on the design grid itself, whose quadrature is exact
    # for fields of this order; the goals are then read off the eval grid.
    inner_spec = replace(spec, sparseness=0.0, tikhonov=0.0)
    inner = HfObjective(
        signal_set,
        design_array,
        design_grid,
        GoalField.uniform(design_grid, ceiling),
        inner_spec,
    )
    start = _class_gain_start(inner, signal_set, design_array)
    if signal_set.order_h == signal_set.order_v:
        # full order: the closed-form ceiling is attainable, target it directly
        target = GoalField.uniform(design_grid, ceiling)
    else:
        start_decoder = DecoderMatrix(
            canonical_energy_norm(start, signal_set.n_channels, design_array.n_real),
            signal_set,
            design_array,
            band="HF",
        )
        reachable = np.minimum(
            evaluate_grid(start_decoder, design_grid).re_mag, ceiling
        )
        target = GoalField(design_grid, reachable)
    result = optimize_hf(
        signal_set,
        design_array,
        design_grid,
        target,
        spec=inner_spec,
        x0=start,
        seed=seed,
        max_iterations=max_iterations,
    )
    if not result.converged:
        raise GoalFieldError(
            f"goal-field optimization did not converge: {result.message}"
        )
    rendered = evaluate_grid(result.decoder, eval_grid)
    # fp-level overshoot of the theoretical bound is clipped away
    goals = np.minimum(rendered.re_mag, ceiling)
    return GoalField(eval_grid, goals, reference=result.decoder)


@dataclass(frozen=True)
class DesignConfig:
    """Everything a two-band design run needs, for reproducibility."""

    objective: ObjectiveSpec = field(default_factory=ObjectiveSpec)
    eval_grid: str = "design5200"
    goal_grid: str = "design240"
    x0: str = "allrad"
    seed: int = 0
    max_iterations: int = 2000
    crossover_hz: float = 400.0
    coverage: CoverageParams = field(default_factory=CoverageParams)


@dataclass(frozen=True)
class DesignResult:
    two_band: TwoBandDecoder
    goal: GoalField
    hf_result: OptimizationResult
    lf_result: OptimizationResult
    config: DesignConfig
    warnings: tuple[str, ...]


def _grid_from_name(name) -> SphericalGrid:
    if isinstance(name, SphericalGrid):
        return name
    return builtin_grid(name)


def design_two_band(
    signal_set: SignalSetSpec,
    array: SpeakerArray,
    config: DesignConfig | None = None,
) -> DesignResult:
    """Full pipeline: goal field, HF stage, LF stage, two-band decoder.

    A goal-field failure aborts; stage non-convergence is recorded as a
    warning but the best matrices are still returned.
    """
    config = config or DesignConfig()
    eval_grid = _grid_from_name(config.eval_grid)
    goal_grid = _grid_from_name(config.goal_grid)
    coverage = coverage_weights(array, eval_grid, config.coverage)

    goal = goal_re_field(
        signal_set,
        eval_grid,
        design_grid=goal_grid,
        spec=config.objective,
        seed=config.seed,
        max_iterations=config.max_iterations,
    )
    notes = []
    hf_result = optimize_hf(
        signal_set,
        array,
        eval_grid,
        goal,
        spec=config.objective,
        x0=config.x0,
        seed=config.seed,
        coverage=coverage,
        max_iterations=config.max_iterations,
    )
    if not hf_result.converged:
        notes.append(f"HF stage did not converge: {hf_result.message}")
    lf_result = optimize_lf(
        signal_set,
        array,
        eval_grid,
        hf_result.decoder,
        spec=config.objective,
        seed=config.seed,
        coverage=coverage,
        max_iterations=config.max_iterations,
    )
    if not lf_result.converged:
        notes.append(f"LF stage did not converge: {lf_result.message}")
    two_band = TwoBandDecoder(
        lf=lf_result.decoder, hf=hf_result.decoder, crossover_hz=config.crossover_hz
    )
    return DesignResult(
        two_band=two_band,
        goal=goal,
        hf_result=hf_result,
        lf_result=lf_result,
        config=config,
        warnings=tuple(notes),
    )
