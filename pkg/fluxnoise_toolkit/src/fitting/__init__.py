from .fit import FitOutcome, T2StarDataset, T2StarPoint, fit_sigma, fit_sigma_gamma0, residual

__all__ = ["FitOutcome", "T2StarDataset", "T2StarPoint", "fit_sigma", "fit_sigma_gamma0", "residual"]
