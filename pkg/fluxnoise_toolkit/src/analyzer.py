"""Run orchestration: one method per CLI command, config in, artifacts out."""

import logging
import math
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

from .. import __version__
from .config import RunConfig, Settings, get_settings
from .fitting.fit import FitOutcome, ResidualModel, T2StarDataset, fit_sigma, fit_sigma_gamma0
from .montecarlo.field import McEstimate, mc_flux_variance
from .noise.variance import flux_variance, suppression_point, suppression_sweep, variance_sweep
from .processors.artifact_writer import write_csv, write_json
from .processors.dataset_parser import load_dataset
from .qubit.ramsey import coherence_factor, envelope_trace, t2_star, t2_star_values
from .qubit.transmon import d1_d2
from .utils import ParameterDomainError, finite_or_none

logger = logging.getLogger(__name__)

TOOL_NAME = "fluxnoise-toolkit"


class FluxNoiseAnalyzer:
    """Evaluates a ``RunConfig`` and writes the resulting artifacts."""

    def __init__(self, config: RunConfig, settings: Optional[Settings] = None,
                 output_dir: Optional[Path] = None):
        self.config = config
        self.settings = settings or get_settings()
        self.output_dir = Path(output_dir) if output_dir else config.output_directory(self.settings)
        self.max_workers = self.settings.max_workers
        logger.info(f"Analyzer ready (config {config.config_hash()[:12]}, output {self.output_dir})")

    def metadata(self, command: str, units: Dict[str, str], seed: Optional[int] = None) -> Dict[str, Any]:
        return {
            "tool": TOOL_NAME,
            "version": __version__,
            "command": command,
            "config_hash": self.config.config_hash(),
            "seed": seed,
            "applied_defaults": self.config.applied_defaults(),
            "units": units,
            "flux_unit": "phi0",
        }

    def _path(self, name: str) -> Path:
        return self.output_dir / f"{self.config.output.prefix}{name}"

    def _xi_grid(self, xi_min: Optional[float], xi_max: Optional[float], points: Optional[int]) -> np.ndarray:
        if xi_min is None and xi_max is None and points is None:
            return self.config.spectrum.xi_values()
        if xi_min is None or xi_max is None or points is None:
            raise ParameterDomainError("--xi-min, --xi-max and --points must be given together")
        if not 0 < xi_min < xi_max or points < 2:
            raise ParameterDomainError("xi grid needs 0 < xi-min < xi-max and at least 2 points")
        return np.geomspace(xi_min, xi_max, points)

    # -- noise ------------------------------------------------------------

    def variance(self, xi_min: Optional[float] = None, xi_max: Optional[float] = None,
                 points: Optional[int] = None) -> pd.DataFrame:
        geometry = self.config.geometry
        section = self.config.spectrum
        spec = section.spectrum()
        if spec.is_white:
            result = flux_variance(geometry, spec, section.rtol)
            rows = [(math.nan, result.value, result.estimated_quadrature_error, result.regime_tag.value, "")]
        else:
            grid = self._xi_grid(xi_min, xi_max, points)
            sweep = variance_sweep(geometry, grid, spec.amplitude, section.rtol, self.max_workers)
            rows = [(xi, r.value, r.estimated_quadrature_error, r.regime_tag.value, r.failure or "")
                    for xi, r in sweep]
        frame = pd.DataFrame(rows, columns=["xi_m", "variance", "quad_err", "regime", "failure"])
        write_csv(self._path("variance.csv"), frame,
                  self.metadata("variance", {"xi_m": "m", "variance": "Wb^2 per amplitude unit"}))
        return frame

    def suppression(self, xi_min: Optional[float] = None, xi_max: Optional[float] = None,
                    points: Optional[int] = None) -> pd.DataFrame:
        section = self.config.spectrum
        spec = section.spectrum()
        if spec.is_white:
            sweep = [suppression_point(self.config.geometry, spec, section.rtol)]
        else:
            grid = self._xi_grid(xi_min, xi_max, points)
            sweep = suppression_sweep(self.config.geometry, grid, section.amplitude, section.rtol, self.max_workers)
        frame = pd.DataFrame(
            [(p.correlation_length, p.s_factor, p.variance_single, p.variance_pair, p.regime_tag.value,
              p.failure or "") for p in sweep],
            columns=["xi_m", "s_factor", "variance_x", "variance_8", "regime", "failure"],
        )
        write_csv(self._path("suppression.csv"), frame,
                  self.metadata("suppression", {"xi_m": "m", "s_factor": "1", "variance_x": "Wb^2",
                                                "variance_8": "Wb^2"}))
        return frame

    # -- qubit ------------------------------------------------------------

    def spectrum_curve(self) -> pd.DataFrame:
        phi = self.config.curves.phi_values()
        frame = pd.DataFrame({"phi": phi, "f01_ghz": self.config.transmon.frequency_ghz(phi)})
        write_csv(self._path("spectrum_curve.csv"), frame,
                  self.metadata("spectrum-curve", {"phi": "Phi0", "f01_ghz": "GHz"}))
        return frame

    def ramsey(self) -> Dict[str, Any]:
        phi = self.config.curves.ramsey_phi
        params = self.config.dephasing.params(phi)
        delays = self.config.curves.delay_values()
        d1, d2 = d1_d2(self.config.transmon, phi)
        sigma = params.sigma_phi_in_phi0()
        frame = pd.DataFrame({
            "t_s": delays,
            "envelope": envelope_trace(self.config.transmon, params, phi, delays),
            "flux_factor": coherence_factor(d1, d2, sigma, delays),
        })
        t2 = t2_star(float(d1), float(d2), params.model_copy(update={"sigma_phi": sigma, "flux_unit": "phi0"}))
        meta = self.metadata("ramsey", {"t_s": "s", "envelope": "1", "flux_factor": "1"})
        meta["ramsey_phi"] = phi
        meta["t2_star_s"] = finite_or_none(t2)
        write_csv(self._path("ramsey.csv"), frame, meta)
        return {"frame": frame, "t2_star_s": t2, "phi": phi}

    def t2star_curve(self) -> pd.DataFrame:
        phi = self.config.curves.phi_values()
        dephasing = self.config.dephasing
        values = t2_star_values(self.config.transmon, dephasing.params(), phi, dephasing.gamma1)
        frame = pd.DataFrame({"phi": phi, "t2_star_us": values * 1e6})
        write_csv(self._path("t2star_curve.csv"), frame,
                  self.metadata("t2star-curve", {"phi": "Phi0", "t2_star_us": "us"}))
        return frame

    # -- fit --------------------------------------------------------------

    def load_dataset(self, path: Path) -> T2StarDataset:
        return load_dataset(path, self.config.fit.calibration)

    def fit(self, dataset: T2StarDataset, two_param: bool = False) -> FitOutcome:
        section = self.config.fit
        gamma1 = self.config.dephasing.gamma1
        disp = self.config.transmon
        if two_param:
            outcome = fit_sigma_gamma0(dataset, disp, gamma1, section.sigma_grid(), section.gamma0_grid(),
                                       xtol=section.xtol, max_iter=section.max_iter, max_workers=self.max_workers)
        else:
            outcome = fit_sigma(dataset, disp, gamma1, section.sigma_grid(), xtol=section.xtol,
                                max_workers=self.max_workers)

        meta = self.metadata("fit", {"sigma_phi": "Phi0", "gamma0": "1/s", "err": "s^2"})
        meta["two_param"] = two_param
        write_json(self._path("fit_outcome.json"), self.outcome_payload(outcome), meta)
        write_csv(self._path("fit_landscape.csv"), self.landscape_frame(outcome), meta)

        model = ResidualModel(dataset, disp, gamma1)
        curve = model.model_curve(outcome.sigma_phi_hat, outcome.gamma0_hat or 0.0)
        write_csv(self._path("fit_curve.csv"),
                  pd.DataFrame({"phi": model.phi, "t2_star_us": model.t_exp * 1e6, "model_us": curve * 1e6}),
                  self.metadata("fit", {"phi": "Phi0", "t2_star_us": "us", "model_us": "us"}))
        return outcome

    @staticmethod
    def outcome_payload(outcome: FitOutcome) -> Dict[str, Any]:
        return {
            "sigma_phi_hat": outcome.sigma_phi_hat,
            "gamma0_hat": outcome.gamma0_hat,
            "t_phi_f": finite_or_none(outcome.t_phi_f) if outcome.t_phi_f is not None else None,
            "err_min": outcome.err_min,
            "refined": outcome.refined,
            "boundary_flags": outcome.boundary_flags,
            "capped_points": outcome.capped_points,
            "optimum_cell": list(outcome.optimum_cell),
        }

    @staticmethod
    def landscape_frame(outcome: FitOutcome) -> pd.DataFrame:
        rows = outcome.landscape_rows()
        frame = pd.DataFrame(rows, columns=["sigma_phi", "gamma0", "err"])
        with np.errstate(divide="ignore"):
            frame["log10_err"] = np.log10(frame["err"].to_numpy())
        return frame

    # -- Monte Carlo ------------------------------------------------------

    def montecarlo(self) -> Dict[str, Any]:
        section = self.config.mc
        geometry = self.config.geometry
        spec = self.config.spectrum.spectrum()
        estimate: McEstimate = mc_flux_variance(geometry, spec, section.extent, section.n, section.n_realizations,
                                                section.seed, section.supersample, self.max_workers)
        analytic = flux_variance(geometry, spec, self.config.spectrum.rtol).value
        z_score = (estimate.mean_sq - analytic) / estimate.std_error if estimate.std_error > 0 else 0.0
        payload = {
            "mean_sq": estimate.mean_sq,
            "std_error": estimate.std_error,
            "n_realizations": estimate.n_realizations,
            "analytic_variance": analytic,
            "z_score": z_score,
            "within_3_sigma": abs(z_score) <= 3.0,
        }
        meta = self.metadata("montecarlo", {"mean_sq": "Wb^2", "std_error": "Wb^2"}, seed=section.seed)
        write_json(self._path("mc_estimate.json"), payload, meta)
        if section.write_samples:
            frame = pd.DataFrame({"realization": np.arange(estimate.n_realizations), "phi_wb": estimate.samples})
            write_csv(self._path("mc_samples.csv"), frame,
                      self.metadata("montecarlo", {"phi_wb": "Wb"}, seed=section.seed))
        return payload

    # -- validation -------------------------------------------------------

    def validate(self, datasets: Sequence[Path] = ()) -> Dict[str, Any]:
        summary: Dict[str, Any] = {
            "config_hash": self.config.config_hash(),
            "applied_defaults": self.config.applied_defaults(),
            "datasets": {},
        }
        for path in datasets:
            dataset = self.load_dataset(path)
            summary["datasets"][str(path)] = {"points": len(dataset), "has_t1": dataset.has_t1}
        return summary
