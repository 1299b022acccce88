"""Interaction-matrix training by probabilistic interaction.

Each training feature x interacts with a single memory index mu drawn
from the posterior softmax(beta xi x); the emission back into feature
space is a shared diagonal Gaussian centered on the row xi_mu. Training
maximizes, per sample, the log of

    O(x) = sum_mu p(x | mu) q(mu | x),

by stochastic gradient ascent on xi and the emission log-variances.
For small models (n_memories <= EXACT_ENUMERATION_MAX) the sum over mu
is enumerated exactly; larger models draw mc_samples posterior indices
per sample and use a self-normalized estimator whose gradient is the
weighted Gaussian gradient plus a score-function term for the posterior.
Runs are bitwise deterministic given (data, config, seed).
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .kernels import log_mean_exp, stable_log_sum_exp
from .probability import DensityModel
from .validation import check_positive

EXACT_ENUMERATION_MAX = 64
LOG_2PI = math.log(2.0 * math.pi)


class TrainingDivergedError(RuntimeError):
    """The training objective became non-finite."""

    def __init__(self, epoch, batch):
        super().__init__(
            f"non-finite training objective at epoch {epoch}, batch {batch}"
        )
        self.epoch = epoch
        self.batch = batch


@dataclass
class Dataset:
    """Feature vectors with optional labels and classifier logits."""

    features: np.ndarray
    labels: Optional[np.ndarray] = None
    logits: Optional[np.ndarray] = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError(
                f"features must be 2-d, got shape {self.features.shape}"
            )
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain non-finite entries")
        n = self.features.shape[0]
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != (n,):
                raise ValueError("labels length does not match features")
        if self.logits is not None:
            self.logits = np.asarray(self.logits, dtype=np.float64)
            if self.logits.ndim != 2 or self.logits.shape[0] != n:
                raise ValueError("logits shape does not match features")
            if not np.all(np.isfinite(self.logits)):
                raise ValueError("logits contain non-finite entries")

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]


@dataclass
class GaussianEmission:
    """Shared diagonal Gaussian emission, parameterized by log variances."""

    log_variances: np.ndarray

    def __post_init__(self):
        self.log_variances = np.asarray(self.log_variances, dtype=np.float64)
        if self.log_variances.ndim != 1:
            raise ValueError("log_variances must be 1-d")
        if not np.all(np.isfinite(self.log_variances)):
            raise ValueError("log_variances contain non-finite entries")

    @property
    def variances(self):
        return np.exp(self.log_variances)


@dataclass
class TrainerConfig:
    """Hyperparameters for probabilistic-interaction training.

    Defaults follow the reference operating point: 250 memory neurons,
    beta 5.0, 5 Monte Carlo indices, 100 epochs, batch 128, features
    rescaled to L2 norm 10. gamma defaults to 2 * n_memories (a knob for
    attractor experiments; score rankings do not depend on it).
    """

    n_memories: int = 250
    epochs: int = 100
    learning_rate: float = 0.05
    mc_samples: int = 5
    beta: float = 5.0
    gamma: Optional[float] = None
    batch_size: int = 128
    seed: int = 0
    init: str = "from_data"          # "from_data" | "gaussian"
    init_scale: float = 1.0
    feature_norm_target: float = 10.0
    estimator: str = "auto"          # "auto" | "exact" | "sampled"
    sphere_radius_margin: float = 1.5

    def __post_init__(self):
        if self.n_memories < 1:
            raise ValueError("n_memories must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        check_positive(self.learning_rate, "learning_rate")
        check_positive(self.beta, "beta")
        check_positive(self.feature_norm_target, "feature_norm_target")
        if self.gamma is not None:
            check_positive(self.gamma, "gamma")
        if self.init not in ("from_data", "gaussian"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.estimator not in ("auto", "exact", "sampled"):
            raise ValueError(f"unknown estimator {self.estimator!r}")


@dataclass
class TrainResult:
    model: DensityModel
    emission: GaussianEmission
    history: List[float] = field(default_factory=list)


def normalize_features(data, target_norm):
    """Rescale every feature vector to the given L2 norm."""
    check_positive(target_norm, "target_norm")
    norms = np.linalg.norm(data.features, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ValueError(
            f"sample {int(zero[0])} has zero norm and cannot be normalized"
        )
    scaled = data.features * (target_norm / norms)[:, None]
    return Dataset(features=scaled, labels=data.labels, logits=data.logits)


def gaussian_log_emission(emission, x, mean_row):
    """log N(x; mean_row, diag(variances)) for one feature vector."""
    x = np.asarray(x, dtype=np.float64)
    mean_row = np.asarray(mean_row, dtype=np.float64)
    log_var = emission.log_variances
    if x.shape != mean_row.shape or x.shape != log_var.shape:
        raise ValueError("x, mean_row, and log_variances disagree on length")
    quad = np.sum((x - mean_row) ** 2 / np.exp(log_var))
    return -0.5 * float(x.size * LOG_2PI + np.sum(log_var) + quad)


def _log_emission_matrix(xi, log_var, x_batch):
    """(n, N_H) matrix of log p(x | mu) via the expanded quadratic."""
    var = np.exp(log_var)
    inv = 1.0 / var
    x2 = (x_batch ** 2) @ inv
    cross = x_batch @ (xi * inv[None, :]).T
    m2 = np.sum(xi ** 2 * inv[None, :], axis=1)
    quad = x2[:, None] - 2.0 * cross + m2[None, :]
    const = xi.shape[1] * LOG_2PI + float(np.sum(log_var))
    return -0.5 * (const + quad)


def _log_posterior_matrix(xi, beta, x_batch):
    a = beta * (x_batch @ xi.T)
    return a - stable_log_sum_exp(a, axis=-1)[:, None]


def exact_log_objective(xi, emission, beta, features):
    """Per-sample log O(x) with the memory sum enumerated exactly."""
    features = np.asarray(features, dtype=np.float64)
    log_w = _log_emission_matrix(xi, emission.log_variances, features) \
        + _log_posterior_matrix(xi, beta, features)
    return stable_log_sum_exp(log_w, axis=-1)


def exact_objective(xi, emission, beta, features):
    """Sum over samples of O(x), enumerated exactly (small models)."""
    return float(np.sum(np.exp(exact_log_objective(xi, emission, beta,
                                                   features))))


def mc_objective(xi, emission, beta, features, m_samples, seed=0):
    """Monte Carlo estimate of sum_x O(x) with sampled memory indices.

    For each sample, m_samples indices are drawn from the posterior and
    the Gaussian emission is averaged over them; per-sample values are
    formed in log space before the final sum. Unbiased in expectation
    and deterministic given seed.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError("batch must be a nonempty 2-d array")
    if m_samples < 1:
        raise ValueError("m_samples must be >= 1")
    rng = np.random.default_rng(seed)
    idx = _sample_posterior_indices(xi, beta, features, m_samples, rng)
    log_p = _log_emission_for_indices(xi, emission.log_variances, features,
                                      idx)
    per_sample = log_mean_exp(log_p, axis=1)
    return float(np.sum(np.exp(per_sample)))


def _sample_posterior_indices(xi, beta, x_batch, m, rng):
    """(n, m) posterior index draws via inverse-CDF on each row."""
    log_q = _log_posterior_matrix(xi, beta, x_batch)
    cdf = np.cumsum(np.exp(log_q), axis=1)
    cdf[:, -1] = 1.0
    u = rng.random((x_batch.shape[0], m))
    idx = np.empty((x_batch.shape[0], m), dtype=np.int64)
    for i in range(x_batch.shape[0]):
        idx[i] = np.searchsorted(cdf[i], u[i], side="right")
    return np.minimum(idx, xi.shape[0] - 1)


def _log_emission_for_indices(xi, log_var, x_batch, idx):
    """(n, m) log p(x | mu) at the sampled index pairs."""
    var = np.exp(log_var)
    diff = x_batch[:, None, :] - xi[idx]
    quad = np.sum(diff ** 2 / var[None, None, :], axis=-1)
    const = xi.shape[1] * LOG_2PI + float(np.sum(log_var))
    return -0.5 * (const + quad)


def _batch_gradients(xi, log_var, x_batch, beta, resp, q):
    """Mean-over-batch gradients of log O(x) w.r.t. xi and log variances.

    resp holds the per-sample weights on memory indices: the normalized
    posterior-times-emission weights on the exact path, or the sampled
    responsibilities on the Monte Carlo path. Rows of resp sum to one.
    """
    n = x_batch.shape[0]
    var = np.exp(log_var)
    resp_col = np.sum(resp, axis=0)
    grad_xi = ((resp.T @ x_batch) - xi * resp_col[:, None]) / var[None, :] \
        + beta * ((resp - q).T @ x_batch)
    sq = np.sum(x_batch ** 2, axis=0) \
        - 2.0 * np.sum(x_batch * (resp @ xi), axis=0) \
        + resp_col @ (xi ** 2)
    grad_log_var = sq / (2.0 * var) - n / 2.0
    return grad_xi / n, grad_log_var / n


def _exact_step(xi, log_var, x_batch, beta):
    """Per-sample log objective and gradients with one matrix pass."""
    log_q = _log_posterior_matrix(xi, beta, x_batch)
    log_w = _log_emission_matrix(xi, log_var, x_batch) + log_q
    per_sample = np.atleast_1d(stable_log_sum_exp(log_w, axis=-1))
    resp = np.exp(log_w - per_sample[:, None])
    q = np.exp(log_q)
    grad_xi, grad_log_var = _batch_gradients(xi, log_var, x_batch, beta,
                                             resp, q)
    return per_sample, grad_xi, grad_log_var


def exact_log_objective_gradients(xi, emission, beta, features):
    """Analytic gradients of the mean exact log objective.

    Returns (grad_xi, grad_log_variances) for mean_x log O(x); matches
    central finite differences of :func:`exact_log_objective`.
    """
    features = np.asarray(features, dtype=np.float64)
    _, grad_xi, grad_log_var = _exact_step(xi, emission.log_variances,
                                           features, beta)
    return grad_xi, grad_log_var


def _sampled_step(xi, log_var, x_batch, beta, m, rng):
    """Per-sample MC log objective and its gradients (score-function form)."""
    log_q = _log_posterior_matrix(xi, beta, x_batch)
    q = np.exp(log_q)
    idx = _sample_posterior_indices(xi, beta, x_batch, m, rng)
    log_p = _log_emission_for_indices(xi, log_var, x_batch, idx)
    per_sample = log_mean_exp(log_p, axis=1)
    omega = np.exp(log_p - stable_log_sum_exp(log_p, axis=-1)[:, None])
    resp = np.zeros_like(q)
    np.add.at(resp, (np.arange(x_batch.shape[0])[:, None], idx), omega)
    grad_xi, grad_log_var = _batch_gradients(xi, log_var, x_batch, beta,
                                             resp, q)
    return per_sample, grad_xi, grad_log_var


def _init_interaction(data_features, cfg, rng):
    n, dim = data_features.shape
    if cfg.init == "from_data":
        replace = cfg.n_memories > n
        idx = rng.choice(n, size=cfg.n_memories, replace=replace)
        return data_features[idx].copy()
    return cfg.init_scale * rng.standard_normal((cfg.n_memories, dim))


def train(data, cfg):
    """Fit the interaction matrix and emission to a dataset.

    Features are rescaled to cfg.feature_norm_target, the interaction
    matrix is initialized per cfg.init, and epochs x batches of plain
    SGD ascend the mean per-sample log objective. Returns a TrainResult
    with the DensityModel (gamma from config or 2 * n_memories, covering
    radius sphere_radius_margin times the largest feature norm), the
    emission, and the per-epoch mean log objective.
    """
    if len(data) == 0:
        raise ValueError("training data is empty")
    normalized = normalize_features(data, cfg.feature_norm_target)
    x_all = normalized.features
    n, dim = x_all.shape

    rng = np.random.default_rng(cfg.seed)
    xi = _init_interaction(x_all, cfg, rng)
    log_var = np.zeros(dim)

    exact = cfg.estimator == "exact" or (
        cfg.estimator == "auto" and cfg.n_memories <= EXACT_ENUMERATION_MAX
    )

    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_logobj = 0.0
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            batch = x_all[order[start:start + cfg.batch_size]]
            if exact:
                per_sample, grad_xi, grad_lv = _exact_step(
                    xi, log_var, batch, cfg.beta)
            else:
                per_sample, grad_xi, grad_lv = _sampled_step(
                    xi, log_var, batch, cfg.beta, cfg.mc_samples, rng)
            if not (np.all(np.isfinite(per_sample))
                    and np.all(np.isfinite(grad_xi))
                    and np.all(np.isfinite(grad_lv))):
                raise TrainingDivergedError(epoch, b)
            xi = xi + cfg.learning_rate * grad_xi
            log_var = log_var + cfg.learning_rate * grad_lv
            epoch_logobj += float(np.sum(per_sample))
        history.append(epoch_logobj / n)

    gamma = cfg.gamma if cfg.gamma is not None else 2.0 * cfg.n_memories
    radius = cfg.sphere_radius_margin * float(
        np.max(np.linalg.norm(x_all, axis=1))
    )
    model = DensityModel(xi=xi, beta=cfg.beta, gamma=gamma,
                         sphere_radius=radius)
    emission = GaussianEmission(log_variances=log_var)
    return TrainResult(model=model, emission=emission, history=history)
