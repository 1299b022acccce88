"""Detection scorers and FPR95 / ROC / AUROC computation.

Every scorer is oriented so that higher means more in-distribution:
the gate value for the density model, max softmax probability and the
logit log-sum-exp for classifier outputs, the clamped-activation energy
for the rectified variant, and the class-conditional Hopfield scores
(the modern Hopfield energy is negated to match the orientation; the
simplified score is already an inner product with the class prototype).

Thresholding uses inclusive >= comparisons throughout. The ROC sweeps
every distinct score once, so tied scores move atomically and the
trapezoidal area equals the Mann-Whitney statistic with half credit for
ties. FPR95 picks the largest threshold whose ID true-positive rate
still reaches the target.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .energy import mhe_score, she_score
from .kernels import stable_log_sum_exp, stable_softmax
from .probability import ood_score
from .validation import check_positive


@dataclass
class ScoreSet:
    """ID and OOD score populations; higher = more ID for every scorer."""

    id_scores: np.ndarray
    ood_scores: np.ndarray

    def __post_init__(self):
        self.id_scores = np.asarray(self.id_scores, dtype=np.float64)
        self.ood_scores = np.asarray(self.ood_scores, dtype=np.float64)
        for name, arr in (("id_scores", self.id_scores),
                          ("ood_scores", self.ood_scores)):
            if arr.ndim != 1 or arr.size == 0:
                raise ValueError(f"{name} must be a nonempty 1-d array")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")


@dataclass
class DetectionMetrics:
    """FPR at 95% TPR, AUROC, and the full ROC curve."""

    fpr95: float
    auroc: float
    roc: np.ndarray                  # (k, 2) columns (fpr, tpr)
    scorer: Optional[str] = None
    n_id: Optional[int] = None
    n_ood: Optional[int] = None


def msp_score(logits):
    """Maximum softmax probability of a logit vector; in (0, 1]."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.size == 0:
        raise ValueError("empty logits")
    return float(np.max(stable_softmax(logits)))


def energy_score(logits):
    """Logit log-sum-exp (negative free energy); higher = more ID."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.size == 0:
        raise ValueError("empty logits")
    return stable_log_sum_exp(logits)


def react_score(penultimate, head_weights, head_bias, clamp):
    """Energy score after clamping penultimate activations at ``clamp``."""
    check_positive(clamp, "clamp")
    penultimate = np.asarray(penultimate, dtype=np.float64)
    head_weights = np.asarray(head_weights, dtype=np.float64)
    head_bias = np.asarray(head_bias, dtype=np.float64)
    if head_weights.shape[1] != penultimate.shape[-1]:
        raise ValueError(
            f"head expects dimension {head_weights.shape[1]}, got "
            f"{penultimate.shape[-1]}"
        )
    logits = head_weights @ np.minimum(penultimate, clamp) + head_bias
    return energy_score(logits)


def fpr_at_tpr(scores, tpr_target=0.95):
    """False-positive rate on OOD at the given ID true-positive rate.

    The threshold is the largest value tau with
    fraction(id >= tau) >= tpr_target, i.e. the k-th largest ID score
    with k = ceil(tpr_target * n_id); returns fraction(ood >= tau).
    """
    if not 0.0 < tpr_target <= 1.0:
        raise ValueError("tpr_target must lie in (0, 1]")
    id_sorted = np.sort(scores.id_scores)[::-1]
    k = math.ceil(tpr_target * id_sorted.size)
    tau = id_sorted[k - 1]
    return float(np.mean(scores.ood_scores >= tau))


def roc_and_auc(scores, scorer=None):
    """ROC over all distinct thresholds and the tie-aware area under it.

    Equal scores are swept atomically (one diagonal segment), so the
    area equals the Mann-Whitney statistic with half credit for ties; it
    is computed from integer pair counts, which keeps it exact.
    """
    id_sorted = np.sort(scores.id_scores)
    ood_sorted = np.sort(scores.ood_scores)
    n_id, n_ood = id_sorted.size, ood_sorted.size

    thresholds = np.unique(np.concatenate([id_sorted, ood_sorted]))[::-1]
    # count >= tau via position in the ascending sort
    tpr = 1.0 - np.searchsorted(id_sorted, thresholds, side="left") / n_id
    fpr = 1.0 - np.searchsorted(ood_sorted, thresholds, side="left") / n_ood
    roc = np.column_stack([
        np.concatenate([[0.0], fpr]),
        np.concatenate([[0.0], tpr]),
    ])

    below = np.searchsorted(ood_sorted, id_sorted, side="left")
    at_or_below = np.searchsorted(ood_sorted, id_sorted, side="right")
    wins = int(np.sum(below))
    ties = int(np.sum(at_or_below - below))
    auroc = (wins + 0.5 * ties) / (n_id * n_ood)

    return DetectionMetrics(
        fpr95=fpr_at_tpr(scores),
        auroc=auroc,
        roc=roc,
        scorer=scorer,
        n_id=n_id,
        n_ood=n_ood,
    )


def _score_samples(scorer, data, model=None, bank=None, head=None,
                   clamp=None):
    if scorer == "reclag":
        if model is None:
            raise ValueError("scorer 'reclag' requires a density model")
        return np.atleast_1d(ood_score(model, data.features))
    if scorer in ("mhe", "she"):
        if bank is None:
            raise ValueError(f"scorer {scorer!r} requires a pattern bank")
        if data.logits is None:
            raise ValueError(
                f"scorer {scorer!r} requires logits to pick the class"
            )
        classes = np.argmax(data.logits, axis=1)
        fn = mhe_score if scorer == "mhe" else she_score
        sign = -1.0 if scorer == "mhe" else 1.0
        return np.array([
            sign * fn(bank, int(c), x)
            for c, x in zip(classes, data.features)
        ])
    if scorer in ("msp", "energy"):
        if data.logits is None:
            raise ValueError(f"scorer {scorer!r} requires logits")
        fn = msp_score if scorer == "msp" else energy_score
        return np.array([fn(row) for row in data.logits])
    if scorer == "react":
        if head is None:
            raise ValueError("scorer 'react' requires head weights and bias")
        weights, bias = head
        if clamp is None:
            raise ValueError("scorer 'react' requires a clamp value")
        return np.array([
            react_score(row, weights, bias, clamp) for row in data.features
        ])
    raise ValueError(f"unknown scorer {scorer!r}")


def evaluate_detector(scorer, id_data, ood_data, model=None, bank=None,
                      head=None, clamp=None, clamp_percentile=90.0):
    """Score both datasets with the chosen scorer and compute metrics.

    The react clamp defaults to the given percentile of the ID
    penultimate activations when not supplied explicitly.
    """
    if scorer == "react" and clamp is None:
        clamp = float(np.percentile(id_data.features, clamp_percentile))
    id_scores = _score_samples(scorer, id_data, model, bank, head, clamp)
    ood_scores = _score_samples(scorer, ood_data, model, bank, head, clamp)
    return roc_and_auc(ScoreSet(id_scores, ood_scores), scorer=scorer)
