"""Data generation and posterior-probability test statistics.

The statistic for hypothesis i is h_i = P(theta_i >= bound_i | y) under the
analyst's assumed model. Two noise modes are supported: known noise variance
(Gaussian posterior) and unknown noise variance with an inverse-gamma prior
(multivariate-t posterior).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, stdtr

from .covariance import CovarianceMatrix
from .errors import ParameterError
from .linalg import chol_psd, psd_solve
from .rng import as_generator


@dataclass(frozen=True)
class TrueProcess:
    """Data-generating triple: true mean, true noise variance, true latent covariance."""

    theta0: np.ndarray
    sigma0_sq: float
    sigma1: CovarianceMatrix

    def __post_init__(self) -> None:
        theta0 = np.asarray(self.theta0, dtype=float)
        object.__setattr__(self, "theta0", theta0)
        if self.sigma0_sq <= 0:
            raise ParameterError("true noise variance must be positive")
        if self.sigma1.dim != theta0.shape[0]:
            raise ParameterError("sigma1 dimension does not match theta0")

    @property
    def m(self) -> int:
        return self.theta0.shape[0]


@dataclass(frozen=True)
class KnownVariance:
    sigma0_sq: float

    def __post_init__(self) -> None:
        if self.sigma0_sq <= 0:
            raise ParameterError("noise variance must be positive")


@dataclass(frozen=True)
class UnknownVariance:
    """Inverse-gamma prior IG(alpha, beta) on the noise variance."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if self.alpha <= 0 or self.beta <= 0:
            raise ParameterError("inverse-gamma parameters must be positive")


@dataclass(frozen=True)
class ModelSpec:
    """The analyst's assumed model: prior mean, scale g, specified covariance, noise mode."""

    theta0: np.ndarray
    g: float
    sigma_spec: CovarianceMatrix
    noise: KnownVariance | UnknownVariance

    def __post_init__(self) -> None:
        theta0 = np.asarray(self.theta0, dtype=float)
        object.__setattr__(self, "theta0", theta0)
        if self.g <= 0:
            raise ParameterError("prior scale g must be positive")
        if self.sigma_spec.dim != theta0.shape[0]:
            raise ParameterError("sigma_spec dimension does not match theta0")

    @property
    def m(self) -> int:
        return self.theta0.shape[0]


@dataclass(frozen=True)
class Hypotheses:
    """Per-coordinate thresholds for H0i: theta_i >= bound_i."""

    theta_bound: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "theta_bound", np.asarray(self.theta_bound, dtype=float)
        )


@dataclass(frozen=True)
class Dataset:
    y: np.ndarray
    theta: np.ndarray
    seed: object = None

    def __post_init__(self) -> None:
        if np.asarray(self.y).shape != np.asarray(self.theta).shape:
            raise ParameterError("y and theta must have equal length")


def draw_dataset(truth: TrueProcess, rng) -> Dataset:
    """One draw: theta ~ N(theta0, Sigma1), y = theta + N(0, sigma0^2 I)."""
    seed = rng if not isinstance(rng, np.random.Generator) else None
    gen = as_generator(rng)
    z = gen.standard_normal(truth.m)
    theta = truth.theta0 + truth.sigma1.chol @ z
    eps = np.sqrt(truth.sigma0_sq) * gen.standard_normal(truth.m)
    return Dataset(y=theta + eps, theta=theta, seed=seed)


def draw_replications(truth: TrueProcess, streams) -> tuple[np.ndarray, np.ndarray]:
    """Stack draws from per-replication streams into (n, m) arrays.

    Row r is bit-identical to draw_dataset(truth, streams[r]).
    """
    n = len(streams)
    z_theta = np.empty((n, truth.m))
    z_eps = np.empty((n, truth.m))
    for r, gen in enumerate(streams):
        z_theta[r] = gen.standard_normal(truth.m)
        z_eps[r] = gen.standard_normal(truth.m)
    theta = truth.theta0 + z_theta @ truth.sigma1.chol.T
    y = theta + np.sqrt(truth.sigma0_sq) * z_eps
    return theta, y


def _resolve_bound(spec: ModelSpec, hyp: Hypotheses | None) -> np.ndarray:
    if hyp is None:
        return spec.theta0
    bound = hyp.theta_bound
    if bound.shape != spec.theta0.shape:
        raise ParameterError("theta_bound length does not match the model")
    if not np.array_equal(bound, spec.theta0):
        # The sampling-distribution theory assumes the bound equals the
        # prior mean; posterior probabilities themselves remain valid.
        warnings.warn(
            "theta_bound differs from the prior mean; marginal/joint "
            "sampling laws do not apply to these statistics",
            stacklevel=3,
        )
    return bound


class KnownVarPosterior:
    """Precomputed posterior operator for the known-variance model.

    Factors the posterior precision once; evaluating the statistics for a
    batch of datasets is then a single triangular solve.
    """

    def __init__(self, spec: ModelSpec):
        if not isinstance(spec.noise, KnownVariance):
            raise ParameterError("spec must use the known-variance noise mode")
        self.spec = spec
        m = spec.m
        sigma0_sq = spec.noise.sigma0_sq
        sigma_inv = psd_solve(spec.sigma_spec.chol, np.eye(m))
        precision = np.eye(m) / sigma0_sq + sigma_inv / spec.g
        self._prec_chol, _ = chol_psd(precision)
        self.post_cov = psd_solve(self._prec_chol, np.eye(m))
        self.post_cov = 0.5 * (self.post_cov + self.post_cov.T)
        self._prior_pull = sigma_inv @ spec.theta0 / spec.g
        self._sigma0_sq = sigma0_sq
        self._post_sd = np.sqrt(np.diag(self.post_cov))

    def posterior_mean(self, y: np.ndarray) -> np.ndarray:
        """Posterior mean of theta given y; accepts (m,) or (n, m)."""
        y = np.asarray(y, dtype=float)
        rhs = y / self._sigma0_sq + self._prior_pull
        return psd_solve(self._prec_chol, rhs.T).T

    def standardized(self, y: np.ndarray, theta_bound: np.ndarray | None = None) -> np.ndarray:
        """(posterior mean - bound) / posterior sd; equals Phi^{-1}(h) exactly.

        Downstream density evaluations work with this quantity directly so
        that tail values are not lost to Phi saturating at 1.0 in float64.
        """
        bound = self.spec.theta0 if theta_bound is None else theta_bound
        return (self.posterior_mean(y) - bound) / self._post_sd

    def probs(self, y: np.ndarray, theta_bound: np.ndarray | None = None) -> np.ndarray:
        return ndtr(self.standardized(y, theta_bound))


class UnknownVarPosterior:
    """Precomputed posterior operator for the unknown-variance model.

    The posterior of theta is multivariate t with m + 2 alpha degrees of
    freedom; its scale depends on y only through one quadratic form.
    """

    def __init__(self, spec: ModelSpec):
        if not isinstance(spec.noise, UnknownVariance):
            raise ParameterError("spec must use the unknown-variance noise mode")
        self.spec = spec
        m = spec.m
        sigma_inv = psd_solve(spec.sigma_spec.chol, np.eye(m))
        precision = np.eye(m) + sigma_inv / spec.g
        self._prec_chol, _ = chol_psd(precision)
        self.shape_matrix = psd_solve(self._prec_chol, np.eye(m))
        self.shape_matrix = 0.5 * (self.shape_matrix + self.shape_matrix.T)
        self._prior_pull = sigma_inv @ spec.theta0 / spec.g
        self._marginal_chol, _ = chol_psd(np.eye(m) + spec.g * spec.sigma_spec.entries)
        self.dof = m + 2 * spec.noise.alpha
        self._shape_diag = np.diag(self.shape_matrix)

    def posterior_mean(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        rhs = y + self._prior_pull
        return psd_solve(self._prec_chol, rhs.T).T

    def probs(self, y: np.ndarray, theta_bound: np.ndarray | None = None) -> np.ndarray:
        spec = self.spec
        bound = spec.theta0 if theta_bound is None else theta_bound
        y = np.asarray(y, dtype=float)
        mean = self.posterior_mean(y)
        resid = y - spec.theta0
        quad = np.sum(resid * psd_solve(self._marginal_chol, resid.T).T, axis=-1)
        scale = (2 * spec.noise.beta + quad) / self.dof
        v_diag = np.expand_dims(scale, -1) * self._shape_diag
        return stdtr(self.dof, (mean - bound) / np.sqrt(v_diag))


def posterior_probs_known_var(
    y: np.ndarray, spec: ModelSpec, hyp: Hypotheses | None = None
) -> np.ndarray:
    """h_i = P(H0i | y) under a known-variance model spec."""
    return KnownVarPosterior(spec).probs(y, _resolve_bound(spec, hyp))


def posterior_probs_unknown_var(
    y: np.ndarray, spec: ModelSpec, hyp: Hypotheses | None = None
) -> np.ndarray:
    """h_i = P(H0i | y) under an unknown-variance (IG prior) model spec."""
    return UnknownVarPosterior(spec).probs(y, _resolve_bound(spec, hyp))


def dataset_to_csv(path, dataset: Dataset, h: np.ndarray | None = None) -> None:
    """Write one row per index: i, y, theta, h (h blank if not given)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["i", "y", "theta", "h"])
        for i in range(len(dataset.y)):
            hval = repr(float(h[i])) if h is not None else ""
            writer.writerow([i, repr(float(dataset.y[i])), repr(float(dataset.theta[i])), hval])


def dataset_from_csv(path) -> tuple[Dataset, np.ndarray | None]:
    """Inverse of dataset_to_csv; returns the dataset and h (or None)."""
    y, theta, h = [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            y.append(float(row["y"]))
            theta.append(float(row["theta"]))
            h.append(float(row["h"]) if row.get("h") else np.nan)
    h_arr = np.asarray(h)
    return (
        Dataset(y=np.asarray(y), theta=np.asarray(theta)),
        None if np.isnan(h_arr).all() else h_arr,
    )
