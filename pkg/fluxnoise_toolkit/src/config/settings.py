"""Configuration management for the flux-noise toolkit.

Two layers: environment-driven application ``Settings`` and the YAML run
configuration (``RunConfig``) that records everything a computed artifact
depends on.
"""

import hashlib
import logging
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..noise.geometry import LoopGeometry
from ..noise.spectrum import NoiseSpectrum, SpectrumKind
from ..processors.dataset_parser import BiasCalibration
from ..qubit.ramsey import DephasingParams, Gamma1Source
from ..qubit.transmon import TransmonDispersion
from ..utils import ConfigError

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Application settings with environment variable support."""

    model_config = SettingsConfigDict(env_prefix="FLUXNOISE_", env_file=".env", case_sensitive=False, extra="ignore")

    log_level: str = Field("INFO", description="Logging level for the CLI")
    output_dir: str = Field("results", description="Directory for artifacts when the config names none")
    max_workers: int = Field(1, ge=1, description="Threads for sweeps, fit grids and Monte Carlo")


def get_settings() -> Settings:
    """Get application settings instance."""
    return Settings()


def load_env_file(env_path: Optional[Path] = None) -> None:
    """Load environment variables from a .env file."""
    from dotenv import load_dotenv

    if env_path:
        load_dotenv(env_path)
        return
    # nearest .env in the current directory or its parents
    current = Path.cwd()
    for parent in [current] + list(current.parents):
        env_file = parent / ".env"
        if env_file.exists():
            load_dotenv(env_file)
            logger.debug(f"Loaded environment from {env_file}")
            break


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class XiGrid(_Section):
    minimum: float = Field(gt=0)
    maximum: float = Field(gt=0)
    points: int = Field(ge=2)
    spacing: Literal["log", "linear"] = "log"

    @model_validator(mode="after")
    def _ordered(self) -> "XiGrid":
        if self.maximum <= self.minimum:
            raise ValueError("xi_grid.maximum must exceed xi_grid.minimum")
        return self

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.minimum, self.maximum, self.points)
        return np.linspace(self.minimum, self.maximum, self.points)


class SpectrumSection(_Section):
    kind: SpectrumKind = SpectrumKind.GAUSSIAN_CORRELATED
    correlation_length: Optional[float] = Field(1e-6, gt=0)
    amplitude: float = Field(1.0, ge=0)
    xi_grid: Optional[XiGrid] = None
    rtol: float = Field(1e-6, gt=0, lt=1)

    @model_validator(mode="after")
    def _valid_spectrum(self) -> "SpectrumSection":
        self.spectrum()
        return self

    def spectrum(self) -> NoiseSpectrum:
        return NoiseSpectrum(kind=self.kind, correlation_length=self.correlation_length, amplitude=self.amplitude)

    def xi_values(self) -> np.ndarray:
        if self.xi_grid is not None:
            return self.xi_grid.values()
        return np.array([self.correlation_length])


class DephasingSection(_Section):
    sigma_phi: float = Field(1e-4, ge=0)
    gamma0: float = Field(0.0, ge=0)
    flux_unit: Literal["phi0", "weber"] = "phi0"
    gamma1: Gamma1Source = Field(default_factory=lambda: Gamma1Source(constant=0.0))

    def params(self, phi: float = 0.0) -> DephasingParams:
        """Dephasing parameters with Γ₁ evaluated at ``phi``."""
        rate = float(self.gamma1.rates(phi))
        return DephasingParams(sigma_phi=self.sigma_phi, gamma0=self.gamma0, gamma1=rate, flux_unit=self.flux_unit)


class CurvesSection(_Section):
    phi_min: float = -0.45
    phi_max: float = 0.45
    phi_points: int = Field(91, ge=2)
    ramsey_phi: float = 0.1
    delay_max: float = Field(100e-6, gt=0, description="Longest Ramsey delay in seconds")
    delay_points: int = Field(201, ge=2)

    @model_validator(mode="after")
    def _ordered(self) -> "CurvesSection":
        if self.phi_max <= self.phi_min:
            raise ValueError("curves.phi_max must exceed curves.phi_min")
        return self

    def phi_values(self) -> np.ndarray:
        return np.linspace(self.phi_min, self.phi_max, self.phi_points)

    def delay_values(self) -> np.ndarray:
        return np.linspace(0.0, self.delay_max, self.delay_points)


class FitSection(_Section):
    sigma_min: float = Field(1e-6, gt=0)
    sigma_max: float = Field(1e-3, gt=0)
    sigma_points: int = Field(61, ge=1)
    gamma0_min: float = Field(0.0, ge=0)
    gamma0_max: float = Field(2e5, ge=0)
    gamma0_points: int = Field(41, ge=1)
    xtol: float = Field(1e-10, gt=0)
    max_iter: int = Field(100, ge=1)
    calibration: Optional[BiasCalibration] = None

    @model_validator(mode="after")
    def _ordered(self) -> "FitSection":
        if self.sigma_points > 1 and self.sigma_max <= self.sigma_min:
            raise ValueError("fit.sigma_max must exceed fit.sigma_min")
        if self.gamma0_points > 1 and self.gamma0_max <= self.gamma0_min:
            raise ValueError("fit.gamma0_max must exceed fit.gamma0_min")
        return self

    def sigma_grid(self) -> np.ndarray:
        if self.sigma_points == 1:
            return np.array([self.sigma_min])
        return np.geomspace(self.sigma_min, self.sigma_max, self.sigma_points)

    def gamma0_grid(self) -> np.ndarray:
        if self.gamma0_points == 1:
            return np.array([self.gamma0_min])
        return np.linspace(self.gamma0_min, self.gamma0_max, self.gamma0_points)


class McSection(_Section):
    extent: float = Field(80e-6, gt=0, description="Side length L of the periodic domain in metres")
    n: int = Field(512, ge=2)
    n_realizations: int = Field(4000, ge=2)
    seed: int = Field(20240917, ge=0)
    supersample: int = Field(1, ge=1)
    write_samples: bool = False

    @model_validator(mode="after")
    def _power_of_two(self) -> "McSection":
        if self.n & (self.n - 1):
            raise ValueError(f"mc.n must be a power of two, got {self.n}")
        return self


class OutputSection(_Section):
    directory: Optional[str] = None
    prefix: str = ""


class RunConfig(_Section):
    """Validated run configuration; ``geometry`` and ``spectrum`` are required."""

    geometry: LoopGeometry
    spectrum: SpectrumSection
    transmon: TransmonDispersion = Field(default_factory=TransmonDispersion)
    dephasing: DephasingSection = Field(default_factory=DephasingSection)
    curves: CurvesSection = Field(default_factory=CurvesSection)
    fit: FitSection = Field(default_factory=FitSection)
    mc: McSection = Field(default_factory=McSection)
    output: OutputSection = Field(default_factory=OutputSection)

    def applied_defaults(self) -> List[str]:
        """Dotted paths of every field filled from a default."""
        return _defaulted_paths(self, "")

    def config_hash(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode("utf-8")).hexdigest()

    def output_directory(self, settings: Optional[Settings] = None) -> Path:
        if self.output.directory:
            return Path(self.output.directory)
        return Path((settings or get_settings()).output_dir)


def _defaulted_paths(model: BaseModel, prefix: str) -> List[str]:
    paths = []
    for name in type(model).model_fields:
        path = f"{prefix}{name}"
        value = getattr(model, name)
        if name not in model.model_fields_set:
            if isinstance(value, BaseModel):
                paths.extend(_defaulted_paths(value, f"{path}."))
            else:
                paths.append(path)
        elif isinstance(value, BaseModel):
            paths.extend(_defaulted_paths(value, f"{path}."))
    return paths


def _format_validation_error(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item["loc"]) or "<root>"
        if item["type"] == "extra_forbidden":
            parts.append(f"unknown key '{item['loc'][-1]}' at {location}")
        else:
            parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def parse_config(data: Union[dict, None], source: str = "<config>") -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping of sections")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{source}: {_format_validation_error(e)}") from e


def load_config(path: Union[str, Path]) -> RunConfig:
    """Read and validate a YAML run configuration."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e

    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        problem = getattr(e, "problem", None) or str(e)
        if mark is not None:
            raise ConfigError(f"{path}:{mark.line + 1}:{mark.column + 1}: {problem}") from e
        raise ConfigError(f"{path}: {problem}") from e

    config = parse_config(data, str(path))
    logger.info(f"Loaded config {path} (hash {config.config_hash()[:12]})")
    defaults = config.applied_defaults()
    if defaults:
        logger.debug(f"Defaults applied: {', '.join(defaults)}")
    return config
