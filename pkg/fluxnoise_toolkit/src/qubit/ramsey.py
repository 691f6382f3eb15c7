"""Quasi-static Gaussian flux-noise Ramsey envelope and T₂* extraction."""

import logging
import math
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..utils import ConvergenceError, ParameterDomainError
from .transmon import DEGENERACY_GUARD, FLUX_QUANTUM, TransmonDispersion, d1_d2

logger = logging.getLogger(__name__)

T2_RTOL = 1e-9
_INV_E = math.exp(-1.0)
_MAX_BRACKET_STEPS = 200
_MAX_BISECTIONS = 200


class DephasingParams(BaseModel):
    """σ_Φ, Γ₀ and Γ₁ feeding the Ramsey envelope."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    sigma_phi: float = Field(1e-4, ge=0, description="rms quasi-static flux noise")
    gamma0: float = Field(0.0, ge=0, description="bias-independent pure-dephasing rate, 1/s")
    gamma1: float = Field(0.0, ge=0, description="energy-relaxation rate, 1/s")
    flux_unit: Literal["phi0", "weber"] = "phi0"

    def sigma_phi_in_phi0(self) -> float:
        if self.flux_unit == "weber":
            return self.sigma_phi / FLUX_QUANTUM
        return self.sigma_phi


class Gamma1Source(BaseModel):
    """Energy-relaxation rate: a constant or a (Φ/Φ₀, Γ₁) table interpolated linearly."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    constant: Optional[float] = Field(None, ge=0)
    table: Optional[List[Tuple[float, float]]] = None

    @field_validator("table")
    @classmethod
    def _sort_table(cls, table):
        if table is None:
            return table
        if len(table) < 2:
            raise ParameterDomainError("gamma1 table needs at least two (phi, rate) rows")
        if any(rate < 0 for _, rate in table):
            raise ParameterDomainError("gamma1 table rates must be non-negative")
        return sorted(table)

    @model_validator(mode="after")
    def _exactly_one(self) -> "Gamma1Source":
        if (self.constant is None) == (self.table is None):
            raise ParameterDomainError("gamma1 source needs exactly one of 'constant' or 'table'")
        return self

    def rates(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        if self.constant is not None:
            return np.full(phi.shape, self.constant)
        xs, ys = zip(*self.table)
        return np.interp(phi, xs, ys)


Gamma1Like = Union[None, float, Gamma1Source, Sequence[float], np.ndarray]


def coherence_factor(d1, d2, sigma_phi, t) -> np.ndarray:
    """|W_flux(t)| after the Gaussian average over a quasi-static δΦ."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ParameterDomainError("delay must be non-negative")
    if np.any(np.asarray(sigma_phi) < 0):
        raise ParameterDomainError("sigma_phi must be non-negative")

    sigma2 = np.asarray(sigma_phi, dtype=float) ** 2
    quad = (np.asarray(d2, dtype=float) * sigma2 * t) ** 2
    lin = np.asarray(d1, dtype=float) ** 2 * sigma2 * t * t
    return (1.0 + quad) ** -0.25 * np.exp(-lin / (2.0 * (1.0 + quad)))


def _envelope(d1, d2, sigma_phi, gamma0, gamma1, t) -> np.ndarray:
    decay = np.exp(-(0.5 * np.asarray(gamma1) + np.asarray(gamma0)) * t)
    return decay * coherence_factor(d1, d2, sigma_phi, t)


def total_envelope(d1, d2, params: DephasingParams, t) -> np.ndarray:
    """E(t) = exp[−(Γ₁/2 + Γ₀)t]·|W_flux(t)|; ``d1``, ``d2`` in the unit of ``params.sigma_phi``."""
    return _envelope(d1, d2, params.sigma_phi, params.gamma0, params.gamma1, np.asarray(t, dtype=float))


def envelope_trace(disp: TransmonDispersion, params: DephasingParams, phi: float, t_grid) -> np.ndarray:
    """E(t) at bias ``phi`` (Φ₀ units) over ``t_grid``."""
    d1, d2 = d1_d2(disp, phi)
    return _envelope(d1, d2, params.sigma_phi_in_phi0(), params.gamma0, params.gamma1,
                     np.asarray(t_grid, dtype=float))


def t2_star_many(d1, d2, sigma_phi, gamma0, gamma1, rtol: float = T2_RTOL) -> np.ndarray:
    """Solve E(T₂*) = e⁻¹ elementwise; ``inf`` where no decay channel is active.

    Exponential bracket expansion from t = 1/(Γ₁/2 + Γ₀ + |D₁|σ + |D₂|σ²),
    then bisection until the bracket is narrower than ``rtol`` of its upper end.
    """
    arrays = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (d1, d2, sigma_phi, gamma0, gamma1)))
    shape = arrays[0].shape
    d1, d2, sigma, g0, g1 = (np.ravel(a) for a in arrays)
    rate_scale = 0.5 * g1 + g0 + np.abs(d1) * sigma + np.abs(d2) * sigma ** 2
    result = np.full(d1.shape, math.inf)
    active = rate_scale > 0
    if not np.any(active):
        return result.reshape(shape)

    d1, d2, sigma, g0, g1 = (a[active] for a in (d1, d2, sigma, g0, g1))

    def above(t: np.ndarray) -> np.ndarray:
        return _envelope(d1, d2, sigma, g0, g1, t) > _INV_E

    lo = np.zeros(d1.shape)
    hi = 1.0 / rate_scale[active]
    for _ in range(_MAX_BRACKET_STEPS):
        grow = above(hi)
        if not np.any(grow):
            break
        lo = np.where(grow, hi, lo)
        hi = np.where(grow, 2.0 * hi, hi)
    else:
        raise ConvergenceError("could not bracket the e^-1 crossing of the Ramsey envelope")

    for _ in range(_MAX_BISECTIONS):
        if np.all(hi - lo <= rtol * hi):
            break
        mid = 0.5 * (lo + hi)
        up = above(mid)
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)

    result[active] = 0.5 * (lo + hi)
    return result.reshape(shape)


def t2_star(d1: float, d2: float, params: DephasingParams) -> float:
    """T₂* from E(T₂*) = e⁻¹; ``math.inf`` when the envelope never decays."""
    return float(t2_star_many(d1, d2, params.sigma_phi, params.gamma0, params.gamma1).reshape(()))


def _gamma1_rates(params: DephasingParams, phi: np.ndarray, gamma1: Gamma1Like) -> np.ndarray:
    if gamma1 is None:
        return np.full(phi.shape, params.gamma1)
    if isinstance(gamma1, Gamma1Source):
        return gamma1.rates(phi)
    rates = np.broadcast_to(np.asarray(gamma1, dtype=float), phi.shape)
    if np.any(rates < 0):
        raise ParameterDomainError("gamma1 rates must be non-negative")
    return rates


def t2_star_values(disp: TransmonDispersion, params: DephasingParams, phi_grid,
                   gamma1: Gamma1Like = None) -> np.ndarray:
    """T₂* (s) at each bias in ``phi_grid`` (Φ₀ units); ``nan`` where the bias is invalid."""
    phi = np.atleast_1d(np.asarray(phi_grid, dtype=float))
    rates = _gamma1_rates(params, phi, gamma1)
    values = np.full(phi.shape, math.nan)

    valid = np.abs(np.cos(math.pi * phi)) > DEGENERACY_GUARD
    if not np.all(valid):
        logger.warning(f"Skipping {int(np.sum(~valid))} bias point(s) at the half-flux-quantum degeneracy")
    if np.any(valid):
        d1, d2 = d1_d2(disp, phi[valid])
        values[valid] = t2_star_many(d1, d2, params.sigma_phi_in_phi0(), params.gamma0, rates[valid])
    return values


def t2_star_curve(disp: TransmonDispersion, params: DephasingParams, phi_grid,
                  gamma1: Gamma1Like = None) -> List[Tuple[float, float]]:
    """(Φ/Φ₀, T₂*) pairs; Γ₁ is ``params.gamma1`` unless a per-point source is given."""
    phi = np.atleast_1d(np.asarray(phi_grid, dtype=float))
    values = t2_star_values(disp, params, phi, gamma1)
    return [(float(p), float(v)) for p, v in zip(phi, values)]


def dephasing_time_from_rate(gamma0: float) -> float:
    """T_φᶠ = 1/Γ₀."""
    return math.inf if gamma0 <= 0 else 1.0 / gamma0
