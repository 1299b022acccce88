"""Scikit-learn style interface to the gated-Lagrangian density detector."""

import numpy as np
from sklearn.base import BaseEstimator, OutlierMixin
from sklearn.utils.validation import check_array

from .probability import calibrate_gamma, ood_score
from .trainer import Dataset, TrainerConfig, normalize_features, train


class RecLagDetector(OutlierMixin, BaseEstimator):
    """Out-of-distribution detector backed by a rectified memory Lagrangian.

    Fits an interaction matrix to the training features by probabilistic
    interaction and scores new points with the gate value G(x), a
    monotone transform of the modeled density. Points with negative G
    fall into the origin attractor of the gated dynamics and are flagged
    as outliers.

    Parameters
    ----------
    n_memories : int, default=250
        Number of memory neurons (rows of the interaction matrix).
    beta : float, default=5.0
        Inverse temperature of the posterior over memory indices.
    gamma : float or None, default=None
        Inverse memory strength. None calibrates it on the training
        features so that about ``contamination`` of them fall inside
        the basin; larger values enlarge the basin.
    contamination : float, default=0.05
        Target fraction of training points inside the basin when gamma
        is calibrated.
    epochs, learning_rate, mc_samples, batch_size :
        Training-loop hyperparameters, see TrainerConfig.
    feature_norm : float, default=10.0
        Every feature vector (train and test) is rescaled to this L2
        norm before use.
    init : {"from_data", "gaussian"}, default="from_data"
        Interaction-matrix initialization.
    random_state : int, default=0
        Seed for all training randomness; fits are deterministic.

    Attributes
    ----------
    model_ : DensityModel
        Trained interaction matrix with beta / gamma / covering radius.
    emission_ : GaussianEmission
        Learned diagonal emission variances.
    loss_history_ : list of float
        Per-epoch mean log objective.
    gamma_ : float
        The gamma actually used for prediction.
    n_features_in_ : int
    """

    def __init__(self, n_memories=250, beta=5.0, gamma=None,
                 contamination=0.05, epochs=100, learning_rate=0.05,
                 mc_samples=5, batch_size=128, feature_norm=10.0,
                 init="from_data", random_state=0):
        self.n_memories = n_memories
        self.beta = beta
        self.gamma = gamma
        self.contamination = contamination
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.mc_samples = mc_samples
        self.batch_size = batch_size
        self.feature_norm = feature_norm
        self.init = init
        self.random_state = random_state

    def fit(self, X, y=None):
        """Fit the interaction matrix to X.

        Parameters
        ----------
        X : array-like of shape (n_samples, n_features)
        y : ignored

        Returns
        -------
        self : object
        """
        X = check_array(X, dtype=np.float64)
        cfg = TrainerConfig(
            n_memories=self.n_memories,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            mc_samples=self.mc_samples,
            beta=self.beta,
            gamma=self.gamma,
            batch_size=self.batch_size,
            seed=self.random_state,
            init=self.init,
            feature_norm_target=self.feature_norm,
        )
        result = train(Dataset(features=X), cfg)
        self.model_ = result.model
        self.emission_ = result.emission
        self.loss_history_ = result.history
        if self.gamma is None:
            train_feats = normalize_features(
                Dataset(features=X), self.feature_norm).features
            self.gamma_ = calibrate_gamma(
                self.model_.xi, self.beta, train_feats,
                target_tpr=1.0 - self.contamination)
            self.model_.gamma = self.gamma_
        else:
            self.gamma_ = float(self.gamma)
        self.n_features_in_ = X.shape[1]
        return self

    def _normalized(self, X):
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected "
                f"{self.n_features_in_}"
            )
        return normalize_features(Dataset(features=X),
                                  self.feature_norm).features

    def score_samples(self, X):
        """Gate value G for each sample; higher means more in-distribution."""
        return np.atleast_1d(ood_score(self.model_, self._normalized(X)))

    def decision_function(self, X):
        """Alias of score_samples; the inlier/outlier cut sits at 0."""
        return self.score_samples(X)

    def predict(self, X):
        """+1 for inliers (gate open), -1 for outliers (in the basin)."""
        return np.where(self.score_samples(X) >= 0.0, 1, -1)
