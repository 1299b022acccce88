"""Scalar energy functions of the two-body system and their reductions.

The general energy

    E(v, h) = v . g(v) - L_V(v) + h . f(h) - L_H(h) - f(h) . xi g(v)

decreases monotonically along the continuous-time dynamics whenever the
Lagrangian Hessians are positive semi-definite. Substituting the
adiabatic memory state h = xi g(v) specializes it to the familiar
closed-form feature energies:

  dense_energy    E(v) = -sum_mu sigma(xi_mu . sgn(v))        (additive pair)
  modern_energy   E(v) = -(1/beta) log sum_mu exp(beta xi_mu . v)
                         + (1/2) ||v||^2                      (softmax pair)

The class-conditional scores mhe_score / she_score evaluate a stored
pattern bank against a test vector; both are reported raw (low modern
Hopfield energy means in-distribution).
"""

from dataclasses import dataclass
from typing import Dict

import numpy as np

from .kernels import stable_log_sum_exp
from .lagrangians import AdditiveSigma
from .validation import (
    check_interaction_matrix,
    check_positive,
    check_vector,
)


def general_energy(xi, v, h, mem, feat):
    """Two-body energy E(v, h) for an arbitrary Lagrangian pair."""
    xi = check_interaction_matrix(xi)
    v = check_vector(v, length=xi.shape[1], name="v")
    h = check_vector(h, length=xi.shape[0], name="h")
    gv = feat.activation(v)
    fh = mem.activation(h)
    return float(
        np.dot(v, gv) - feat.value(v)
        + np.dot(h, fh) - mem.value(h)
        - fh @ xi @ gv
    )


def dense_energy(xi, v, sigma=AdditiveSigma(n=2)):
    """Additive-pair energy E(v) = -sum_mu sigma(xi_mu . sgn(v)).

    With sigma(x) = x**2 this is the classical quadratic network energy
    on the sign pattern of v; it depends on v only through sgn(v).
    """
    xi = check_interaction_matrix(xi)
    v = check_vector(v, length=xi.shape[1], name="v")
    return -float(np.sum(sigma.sigma(xi @ np.sign(v))))


def modern_energy(xi, v, beta=1.0):
    """Softmax-pair energy -(1/beta) lse(beta xi v) + ||v||^2 / 2.

    Accepts a single state (d,) or a batch (n, d).
    """
    xi = check_interaction_matrix(xi)
    beta = check_positive(beta, "beta")
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 1:
        check_vector(v, length=xi.shape[1], name="v")
        lse = stable_log_sum_exp(beta * (xi @ v))
        return -lse / beta + 0.5 * float(np.dot(v, v))
    if v.shape[-1] != xi.shape[1]:
        raise ValueError(f"v has dimension {v.shape[-1]}, expected {xi.shape[1]}")
    lse = stable_log_sum_exp(beta * (v @ xi.T), axis=-1)
    return -lse / beta + 0.5 * np.sum(v * v, axis=-1)


@dataclass
class ClassPatternBank:
    """Per-class stored pattern matrices for class-conditional scoring.

    Each class maps to a matrix of shape (n_patterns, dim); all classes
    share the same dim. The default construction keeps one row per class,
    the mean training feature, which makes the simplified score the inner
    product with the class prototype.
    """

    patterns: Dict[int, np.ndarray]

    def __post_init__(self):
        if not self.patterns:
            raise ValueError("pattern bank must hold at least one class")
        dims = set()
        for key, mat in self.patterns.items():
            mat = np.asarray(mat, dtype=np.float64)
            if mat.ndim != 2 or mat.shape[0] < 1:
                raise ValueError(f"class {key}: patterns must form a 2-d matrix")
            if not np.all(np.isfinite(mat)):
                raise ValueError(f"class {key}: non-finite pattern entries")
            self.patterns[key] = mat
            dims.add(mat.shape[1])
        if len(dims) != 1:
            raise ValueError(f"classes disagree on pattern dimension: {dims}")
        self.dim = dims.pop()

    @classmethod
    def from_class_means(cls, features, labels):
        """One prototype row per class: the mean feature vector."""
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels)
        banks = {}
        for c in np.unique(labels):
            banks[int(c)] = features[labels == c].mean(axis=0, keepdims=True)
        return cls(patterns=banks)

    @classmethod
    def from_class_features(cls, features, labels):
        """Full per-class matrices, one stored row per training sample."""
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels)
        banks = {int(c): features[labels == c].copy() for c in np.unique(labels)}
        return cls(patterns=banks)

    def matrix(self, class_id):
        try:
            return self.patterns[class_id]
        except KeyError:
            raise KeyError(f"unknown class id {class_id!r}") from None


def mhe_score(bank, class_id, v_test):
    """Modern Hopfield energy of a test vector against one class bank.

    -log sum_mu exp(S_mu . v); lower means more in-distribution.
    """
    s = bank.matrix(class_id)
    v = check_vector(v_test, length=s.shape[1], name="v_test")
    return -stable_log_sum_exp(s @ v)


def she_score(bank, class_id, v_test):
    """Simplified Hopfield energy: mean over stored rows of S_mu . v.

    Linear in the test vector; for a single-row bank this is the plain
    inner product with the class prototype.
    """
    s = bank.matrix(class_id)
    v = check_vector(v_test, length=s.shape[1], name="v_test")
    return float(np.mean(s @ v))
