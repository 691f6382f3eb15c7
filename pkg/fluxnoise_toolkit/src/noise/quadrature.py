"""Panel Gauss–Legendre quadrature for oscillatory radial integrals."""

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from ..utils import ConvergenceError

logger = logging.getLogger(__name__)

RadialIntegrand = Callable[[np.ndarray], np.ndarray]

GAUSS_ORDER = 16
_NODES, _WEIGHTS = special.roots_legendre(GAUSS_ORDER)


@dataclass(frozen=True)
class QuadratureResult:
    """Integral estimate together with the refinement record."""

    value: float
    error: float
    n_panels: int
    upper: float


def panel_integrate(func: RadialIntegrand, upper: float, n_panels: int) -> float:
    """Integrate ``func`` over [0, upper] with ``n_panels`` equal Gauss–Legendre panels."""
    edges = np.linspace(0.0, upper, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = mid[:, None] + half[:, None] * _NODES[None, :]
    values = func(nodes)
    return float(np.sum(values * _WEIGHTS[None, :] * half[:, None]))


def find_upper_limit(func: RadialIntegrand, start: float, rel_cutoff: float = 1e-12,
                     growth: float = 1.25, max_steps: int = 200) -> float:
    """Extend ``start`` until ``func`` stays below ``rel_cutoff`` of its sampled peak."""
    samples = np.linspace(0.0, start, 4097)[1:]
    peak = float(np.max(np.abs(func(samples))))
    if peak == 0.0:
        return start

    upper = start
    for _ in range(max_steps):
        tail = np.linspace(upper, growth * upper, 65)
        if float(np.max(np.abs(func(tail)))) <= rel_cutoff * peak:
            return upper
        upper *= growth
    logger.warning(f"Integrand tail still above cutoff at k={upper:.3e}; truncating there")
    return upper


def adaptive_radial_integral(func: RadialIntegrand, upper: float, panel_width: float,
                             rtol: float = 1e-6, max_doublings: int = 8) -> QuadratureResult:
    """Integrate over [0, upper], doubling the panel count until two passes agree.

    The reported error is the difference between the last two passes.
    """
    n_panels = max(1, int(math.ceil(upper / panel_width)))
    previous = panel_integrate(func, upper, n_panels)

    current = previous
    for _ in range(max_doublings):
        n_panels *= 2
        current = panel_integrate(func, upper, n_panels)
        error = abs(current - previous)
        if error <= rtol * abs(current):
            logger.debug(f"Radial quadrature converged: {n_panels} panels, value={current:.6e}, err={error:.2e}")
            return QuadratureResult(value=current, error=error, n_panels=n_panels, upper=upper)
        previous = current

    raise ConvergenceError(
        f"radial quadrature did not reach rtol={rtol:g} with {n_panels} panels on [0, {upper:.3e}]",
        partial_estimate=current,
    )
