"""Extract σ_Φ (and Γ₀) from measured T₂*(Φ) by residual minimization.

The search is a grid scan whose samples are exported as the error
landscape, followed by a local refinement started from the best cell.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import optimize

from ..qubit.ramsey import Gamma1Source, dephasing_time_from_rate, t2_star_many
from ..qubit.transmon import DEGENERACY_GUARD, TransmonDispersion, d1_d2
from ..utils import DatasetError, ParameterDomainError

logger = logging.getLogger(__name__)

MIN_POINTS_ONE_PARAM = 3
MIN_POINTS_TWO_PARAM = 5
UNBOUNDED_CAP_FACTOR = 10.0
MICROSECOND = 1e-6


def default_sigma_grid() -> np.ndarray:
    """61 log-spaced σ_Φ values over [1e-6, 1e-3] Φ₀."""
    return np.geomspace(1e-6, 1e-3, 61)


def default_gamma0_grid() -> np.ndarray:
    """41 linearly spaced Γ₀ values over [0, 2e5] 1/s."""
    return np.linspace(0.0, 2e5, 41)


class T2StarPoint(BaseModel):
    """One measured bias point; times in microseconds as recorded."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    phi_bias: float
    t2_star_us: float = Field(gt=0)
    t1_us: Optional[float] = Field(None, gt=0)
    weight: float = Field(1.0, gt=0)


class T2StarDataset(BaseModel):
    """Measured T₂*(Φ) curve, sorted by |Φ| (stable for repeated biases)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    points: List[T2StarPoint]
    device_label: str = ""

    @field_validator("points")
    @classmethod
    def _sort_by_bias(cls, points: List[T2StarPoint]) -> List[T2StarPoint]:
        for point in points:
            if abs(math.cos(math.pi * point.phi_bias)) <= DEGENERACY_GUARD:
                raise ParameterDomainError(f"bias {point.phi_bias!r} Φ₀ lies on the half-flux-quantum degeneracy")
        return sorted(points, key=lambda p: abs(p.phi_bias))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def phi(self) -> np.ndarray:
        return np.array([p.phi_bias for p in self.points])

    @property
    def t2_star_s(self) -> np.ndarray:
        return np.array([p.t2_star_us for p in self.points]) * MICROSECOND

    @property
    def weights(self) -> np.ndarray:
        return np.array([p.weight for p in self.points])

    @property
    def has_t1(self) -> bool:
        return any(p.t1_us is not None for p in self.points)

    def gamma1_rates(self, fallback: Optional[Gamma1Source] = None) -> np.ndarray:
        """Γ₁ per point: measured 1/T₁ where present, else ``fallback`` (0 when absent)."""
        default = fallback.rates(self.phi) if fallback is not None else np.zeros(len(self.points))
        return np.array([
            1.0 / (p.t1_us * MICROSECOND) if p.t1_us is not None else default[i]
            for i, p in enumerate(self.points)
        ])


@dataclass(frozen=True)
class FitOutcome:
    """Best-fit parameters and the sampled error landscape (Err in s²)."""

    sigma_phi_hat: float
    gamma0_hat: Optional[float]
    err_min: float
    sigma_grid: np.ndarray
    gamma0_grid: np.ndarray
    landscape: np.ndarray  # Err[i_sigma, j_gamma0]
    optimum_cell: Tuple[int, int]
    refined: bool
    boundary_flags: Dict[str, bool] = field(default_factory=dict)
    capped_points: int = 0

    @property
    def two_parameter(self) -> bool:
        return self.gamma0_hat is not None

    @property
    def t_phi_f(self) -> Optional[float]:
        """Bias-independent dephasing time 1/Γ₀ (two-parameter fits only)."""
        if self.gamma0_hat is None:
            return None
        return dephasing_time_from_rate(self.gamma0_hat)

    @property
    def boundary_warning(self) -> bool:
        return any(self.boundary_flags.values())

    def landscape_rows(self) -> List[Tuple[float, float, float]]:
        """(σ_Φ, Γ₀, Err) per cell, σ-major."""
        return [
            (float(s), float(g), float(self.landscape[i, j]))
            for i, s in enumerate(self.sigma_grid)
            for j, g in enumerate(self.gamma0_grid)
        ]


class ResidualModel:
    """Evaluates Err(σ_Φ, Γ₀) for one dataset, dispersion and Γ₁ source."""

    def __init__(self, dataset: T2StarDataset, disp: TransmonDispersion,
                 gamma1_source: Optional[Gamma1Source] = None):
        if len(dataset) == 0:
            raise DatasetError("dataset has no points")
        self.dataset = dataset
        self.phi = dataset.phi
        self.d1, self.d2 = d1_d2(disp, self.phi)
        self.gamma1 = dataset.gamma1_rates(gamma1_source)
        self.t_exp = dataset.t2_star_s
        self.weights = dataset.weights
        self.cap = (UNBOUNDED_CAP_FACTOR * float(np.max(self.t_exp))) ** 2

    def evaluate(self, sigma_phi: float, gamma0: float) -> Tuple[float, int]:
        """Weighted squared residual and the number of capped (unbounded) points."""
        if sigma_phi < 0 or gamma0 < 0:
            raise ParameterDomainError("sigma_phi and gamma0 must be non-negative")
        model = t2_star_many(self.d1, self.d2, sigma_phi, gamma0, self.gamma1)
        unbounded = ~np.isfinite(model)
        squared = np.where(unbounded, self.cap, (self.t_exp - np.where(unbounded, 0.0, model)) ** 2)
        return math.fsum(self.weights * squared), int(np.count_nonzero(unbounded))

    def __call__(self, sigma_phi: float, gamma0: float = 0.0) -> float:
        return self.evaluate(sigma_phi, gamma0)[0]

    def model_curve(self, sigma_phi: float, gamma0: float) -> np.ndarray:
        return t2_star_many(self.d1, self.d2, sigma_phi, gamma0, self.gamma1)


def residual(dataset: T2StarDataset, disp: TransmonDispersion, sigma_phi: float, gamma0: float = 0.0,
             gamma1_source: Optional[Gamma1Source] = None) -> float:
    """Err(σ_Φ, Γ₀) = Σⱼ wⱼ[T₂*,exp(Φⱼ) − T₂*,model(Φⱼ)]² in s²."""
    return ResidualModel(dataset, disp, gamma1_source)(sigma_phi, gamma0)


def _check_grid(name: str, grid: Sequence[float], positive: bool) -> np.ndarray:
    values = np.asarray(grid, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ParameterDomainError(f"{name} grid must be a non-empty 1D sequence")
    if np.any(np.diff(values) <= 0):
        raise ParameterDomainError(f"{name} grid must be strictly increasing")
    if positive and np.any(values <= 0):
        raise ParameterDomainError(f"{name} grid must be positive")
    if not positive and np.any(values < 0):
        raise ParameterDomainError(f"{name} grid must be non-negative")
    return values


def _scan(model: ResidualModel, sigma_grid: np.ndarray, gamma0_grid: np.ndarray,
          max_workers: Optional[int]) -> np.ndarray:
    cells = [(s, g) for s in sigma_grid for g in gamma0_grid]

    def evaluate(cell: Tuple[float, float]) -> float:
        return model(cell[0], cell[1])

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            values = list(pool.map(evaluate, cells))
    else:
        values = [evaluate(cell) for cell in cells]
    return np.array(values).reshape(sigma_grid.size, gamma0_grid.size)


def _is_boundary(index: int, size: int) -> bool:
    return size > 1 and index in (0, size - 1)


def _refine_sigma(model: ResidualModel, sigma_grid: np.ndarray, i: int, gamma0: float,
                  xtol: float) -> Optional[float]:
    """Golden-section search on the bracket formed by the neighbours of cell ``i``."""
    if i == 0 or i == sigma_grid.size - 1:
        return None
    bracket = (sigma_grid[i - 1], sigma_grid[i], sigma_grid[i + 1])
    try:
        result = optimize.minimize_scalar(lambda s: model(s, gamma0), bracket=bracket,
                                          method="golden", options={"xtol": xtol})
    except (ValueError, RuntimeError) as e:
        logger.debug(f"Golden-section refinement skipped: {e}")
        return None
    if not getattr(result, "success", True):
        return None
    return float(result.x)


def _line_search(func, lower: float, upper: float, xtol: float) -> Optional[float]:
    if upper <= lower:
        return None
    result = optimize.minimize_scalar(func, bounds=(lower, upper), method="bounded",
                                      options={"xatol": xtol * max(abs(upper), 1e-300)})
    return float(result.x) if result.success else None


def _window(grid: np.ndarray, index: int) -> Tuple[float, float]:
    return float(grid[max(index - 1, 0)]), float(grid[min(index + 1, grid.size - 1)])


def _outcome(model: ResidualModel, sigma_hat: float, gamma0_hat: float, two_parameter: bool,
             sigma_grid: np.ndarray, gamma0_grid: np.ndarray, landscape: np.ndarray,
             cell: Tuple[int, int], refined: bool, boundary: Dict[str, bool]) -> FitOutcome:
    err_min, capped = model.evaluate(sigma_hat, gamma0_hat)
    if capped:
        logger.warning(f"{capped} bias point(s) have unbounded model T2* at the optimum; residual capped")
    return FitOutcome(
        sigma_phi_hat=sigma_hat,
        gamma0_hat=gamma0_hat if two_parameter else None,
        err_min=err_min,
        sigma_grid=sigma_grid,
        gamma0_grid=gamma0_grid,
        landscape=landscape,
        optimum_cell=cell,
        refined=refined,
        boundary_flags=boundary,
        capped_points=capped,
    )


def fit_sigma(dataset: T2StarDataset, disp: TransmonDispersion, gamma1_source: Optional[Gamma1Source] = None,
              sigma_grid: Optional[Sequence[float]] = None, xtol: float = 1e-10,
              max_workers: Optional[int] = None) -> FitOutcome:
    """One-parameter fit: σ_Φ with Γ₀ fixed at zero."""
    if len(dataset) < MIN_POINTS_ONE_PARAM:
        raise DatasetError(f"one-parameter fit needs at least {MIN_POINTS_ONE_PARAM} points, got {len(dataset)}")
    sigmas = _check_grid("sigma_phi", default_sigma_grid() if sigma_grid is None else sigma_grid, positive=True)
    return _fit_sigma_row(ResidualModel(dataset, disp, gamma1_source), sigmas, 0.0, xtol, max_workers,
                          two_parameter=False)


def _fit_sigma_row(model: ResidualModel, sigmas: np.ndarray, gamma0: float, xtol: float,
                   max_workers: Optional[int], two_parameter: bool) -> FitOutcome:
    gammas = np.array([gamma0])
    landscape = _scan(model, sigmas, gammas, max_workers)
    i = int(np.argmin(landscape[:, 0]))
    best_err = float(landscape[i, 0])
    boundary = {"sigma_phi": _is_boundary(i, sigmas.size)}
    if boundary["sigma_phi"]:
        logger.warning(f"Best sigma_phi {sigmas[i]:.3e} lies on the grid boundary; widen the grid")

    sigma_hat, refined = float(sigmas[i]), False
    candidate = _refine_sigma(model, sigmas, i, gamma0, xtol)
    if candidate is not None and model(candidate, gamma0) <= best_err:
        sigma_hat, refined = candidate, True

    logger.info(f"sigma_phi fit: {sigma_hat:.4e} Phi0 (grid best {sigmas[i]:.4e}, refined={refined})")
    if two_parameter:
        boundary["gamma0"] = False
    return _outcome(model, sigma_hat, gamma0, two_parameter, sigmas, gammas, landscape, (i, 0), refined, boundary)


def fit_sigma_gamma0(dataset: T2StarDataset, disp: TransmonDispersion,
                     gamma1_source: Optional[Gamma1Source] = None,
                     sigma_grid: Optional[Sequence[float]] = None,
                     gamma0_grid: Optional[Sequence[float]] = None,
                     xtol: float = 1e-10, max_iter: int = 100,
                     max_workers: Optional[int] = None) -> FitOutcome:
    """Two-parameter fit of (σ_Φ, Γ₀): exhaustive grid then coordinate descent."""
    if len(dataset) < MIN_POINTS_TWO_PARAM:
        raise DatasetError(f"two-parameter fit needs at least {MIN_POINTS_TWO_PARAM} points, got {len(dataset)}")
    sigmas = _check_grid("sigma_phi", default_sigma_grid() if sigma_grid is None else sigma_grid, positive=True)
    gammas = _check_grid("gamma0", default_gamma0_grid() if gamma0_grid is None else gamma0_grid, positive=False)
    model = ResidualModel(dataset, disp, gamma1_source)

    if gammas.size == 1:
        return _fit_sigma_row(model, sigmas, float(gammas[0]), xtol, max_workers, two_parameter=True)

    landscape = _scan(model, sigmas, gammas, max_workers)
    # argmin on the σ-major flattening: ties go to the smallest σ, then the smallest Γ₀
    i, j = np.unravel_index(int(np.argmin(landscape)), landscape.shape)
    i, j = int(i), int(j)
    best_err = float(landscape[i, j])
    boundary = {"sigma_phi": _is_boundary(i, sigmas.size), "gamma0": _is_boundary(j, gammas.size)}
    for axis, flagged in boundary.items():
        if flagged:
            logger.warning(f"Best {axis} lies on the grid boundary; widen the grid")

    sigma_lo, sigma_hi = _window(sigmas, i)
    gamma_lo, gamma_hi = _window(gammas, j)
    sigma_hat, gamma_hat = float(sigmas[i]), float(gammas[j])
    current = best_err
    for iteration in range(max_iter):
        previous = current
        s = _line_search(lambda x: model(x, gamma_hat), sigma_lo, sigma_hi, xtol)
        if s is not None:
            err = model(s, gamma_hat)
            if err <= current:
                sigma_hat, current = s, err
        g = _line_search(lambda x: model(sigma_hat, x), gamma_lo, gamma_hi, xtol)
        if g is not None:
            err = model(sigma_hat, g)
            if err <= current:
                gamma_hat, current = g, err
        if previous - current <= 1e-14 * max(previous, 1e-300):
            logger.debug(f"Coordinate descent settled after {iteration + 1} sweeps")
            break

    refined = current < best_err or (sigma_hat, gamma_hat) != (float(sigmas[i]), float(gammas[j]))
    logger.info(f"(sigma_phi, gamma0) fit: ({sigma_hat:.4e} Phi0, {gamma_hat:.4e} 1/s), Err={current:.3e} s^2")
    return _outcome(model, sigma_hat, gamma_hat, True, sigmas, gammas, landscape, (i, j), refined, boundary)
