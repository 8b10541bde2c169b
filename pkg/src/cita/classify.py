"""Linear discriminant analysis and stratified k-fold evaluation."""
from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "LdaModel",
    "EvalReport",
    "stratified_kfold",
    "lda_fit",
    "lda_predict",
    "evaluate",
]

# relative ridge added to every covariance diagonal; keeps 158-d fits solvable
COVARIANCE_FLOOR = 1e-6


def stratified_kfold(labels, k: int, seed: int) -> np.ndarray:
    """Assign every sample to one of ``k`` folds, class by class.

    Each class is shuffled with ``seed`` and dealt round-robin, so per-class
    counts in any two folds differ by at most one. The deal for each class
    starts where the previous class stopped, which also balances total fold
    sizes. Classes with fewer than ``k`` samples land in distinct folds and
    leave the remaining folds without that class (a warning is emitted).
    """
    if isinstance(k, bool) or int(k) != k or k < 2:
        raise InvalidInputError(f"k must be an integer >= 2, got {k!r}")
    k = int(k)
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size == 0:
        raise InvalidInputError("labels must be a non-empty 1D sequence")
    classes, y = np.unique(labels, return_inverse=True)
    rng = np.random.default_rng(seed)
    folds = np.empty(labels.size, dtype=np.int64)
    small = []
    offset = 0
    for c in range(classes.size):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        if idx.size < k:
            small.append(str(classes[c]))
        folds[idx] = (offset + np.arange(idx.size)) % k
        offset = (offset + idx.size) % k
    if small:
        warnings.warn(
            f"{len(small)} class(es) have fewer than k={k} samples: {', '.join(small[:5])}",
            RuntimeWarning,
            stacklevel=2,
        )
    return folds


@dataclass(frozen=True)
class LdaModel:
    """Shared-covariance Gaussian classifier.

    ``covariance`` is the pooled within-class maximum-likelihood estimate as
    fitted; ``coef`` and ``intercept`` come from its shrunk, floored version.
    """

    classes: np.ndarray
    means: np.ndarray
    covariance: np.ndarray
    priors: np.ndarray
    shrinkage: float
    coef: np.ndarray = field(repr=False)
    intercept: np.ndarray = field(repr=False)

    def decision_function(self, features) -> np.ndarray:
        x = _as_matrix(features)
        if x.shape[1] != self.means.shape[1]:
            raise InvalidInputError(
                f"model expects {self.means.shape[1]} features, got {x.shape[1]}"
            )
        return x @ self.coef.T + self.intercept


def _as_matrix(features) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise InvalidInputError(f"features must be 2D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("features contain NaN or infinity")
    return x


def lda_fit(features, labels, shrinkage: float = 0.0) -> LdaModel:
    """Fit class means, priors and the pooled within-class covariance.

    The covariance used for discrimination is
    ``(1 - shrinkage) * S + shrinkage * s * I + COVARIANCE_FLOOR * s * I`` with
    ``s = trace(S) / dim`` (``s = 1`` when ``S`` vanishes), inverted with a
    pseudo-inverse.
    """
    x = _as_matrix(features)
    labels = np.asarray(labels)
    if labels.shape != (x.shape[0],):
        raise InvalidInputError(f"{x.shape[0]} feature rows but {labels.size} labels")
    if not 0.0 <= shrinkage <= 1.0:
        raise InvalidInputError(f"shrinkage must lie in [0, 1], got {shrinkage}")
    if x.shape[0] < 2:
        raise InvalidInputError("need at least two samples")
    classes, y = np.unique(labels, return_inverse=True)
    if classes.size < 2:
        raise InvalidInputError("need at least two classes")

    n, dim = x.shape
    counts = np.bincount(y, minlength=classes.size).astype(np.float64)
    means = np.zeros((classes.size, dim))
    np.add.at(means, y, x)
    means /= counts[:, None]
    centered = x - means[y]
    cov = centered.T @ centered / n
    cov = (cov + cov.T) / 2

    scale = np.trace(cov) / dim
    if not scale > 0:
        scale = 1.0
    reg = (1.0 - shrinkage) * cov
    reg[np.diag_indices(dim)] += (shrinkage + COVARIANCE_FLOOR) * scale
    precision = np.linalg.pinv(reg, hermitian=True)

    priors = counts / n
    coef = means @ precision
    intercept = -0.5 * np.einsum("cd,cd->c", coef, means) + np.log(priors)
    return LdaModel(classes, means, cov, priors, float(shrinkage), coef, intercept)


def lda_predict(model: LdaModel, features) -> np.ndarray:
    """Class with the largest linear discriminant; ties go to the lowest class index."""
    scores = model.decision_function(features)
    return model.classes[np.argmax(scores, axis=1)]


@dataclass
class EvalReport:
    """Outcome of k-fold cross-validation.

    ``std`` is the population standard deviation of the per-fold success
    rates. ``confusion[i, j]`` counts samples of ``classes[i]`` predicted as
    ``classes[j]``. Folds that receive no test samples are left out of
    ``fold_rates``.
    """

    fold_rates: list[float]
    mean: float
    std: float
    confusion: np.ndarray
    classes: list
    k: int
    seed: int
    shrinkage: float
    n_samples: int
    correct: int

    @property
    def accuracy(self) -> float:
        return 100.0 * self.correct / self.n_samples

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "fold_rates": list(self.fold_rates),
            "k": self.k,
            "seed": self.seed,
            "shrinkage": self.shrinkage,
            "n_samples": self.n_samples,
            "correct": self.correct,
            "classes": [str(c) for c in self.classes],
            "confusion": self.confusion.tolist(),
        }

    def to_json(self, **extra) -> str:
        payload = dict(extra)
        payload.update(self.to_dict())
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def summary_row(self, method: str, dataset: str) -> list:
        return [method, dataset, repr(self.mean), repr(self.std), self.k, self.seed]


def evaluate(
    features,
    labels,
    k: int = 10,
    seed: int = 0,
    shrinkage: float = 0.0,
    test_features=None,
    threads: int = 1,
) -> EvalReport:
    """Stratified k-fold cross-validated LDA success rate, in percent.

    When ``test_features`` is given (row-aligned with ``features``), each fold
    is fitted on ``features`` and scored on the matching rows of
    ``test_features``; this pairs a clean training corpus with a perturbed
    test corpus under one fold assignment.
    """
    x = _as_matrix(features)
    labels = np.asarray(labels)
    if labels.shape != (x.shape[0],):
        raise InvalidInputError(f"{x.shape[0]} feature rows but {labels.size} labels")
    xt = x if test_features is None else _as_matrix(test_features)
    if xt.shape != x.shape:
        raise InvalidInputError(f"test features {xt.shape} do not match training features {x.shape}")
    classes, y = np.unique(labels, return_inverse=True)
    if classes.size < 2:
        raise InvalidInputError("evaluation needs at least two classes")
    folds = stratified_kfold(labels, k, seed)

    def run_fold(f):
        test = folds == f
        if not test.any():
            return None
        model = lda_fit(x[~test], y[~test], shrinkage)
        return np.flatnonzero(test), lda_predict(model, xt[test])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run_fold, range(k)))
    else:
        outcomes = [run_fold(f) for f in range(k)]

    confusion = np.zeros((classes.size, classes.size), dtype=np.int64)
    rates = []
    for outcome in outcomes:
        if outcome is None:
            continue
        idx, pred = outcome
        np.add.at(confusion, (y[idx], pred), 1)
        rates.append(100.0 * float(np.mean(pred == y[idx])))
    correct = int(np.trace(confusion))
    return EvalReport(
        fold_rates=rates,
        mean=float(np.mean(rates)),
        std=float(np.std(rates)),
        confusion=confusion,
        classes=classes.tolist(),
        k=int(k),
        seed=int(seed),
        shrinkage=float(shrinkage),
        n_samples=int(x.shape[0]),
        correct=correct,
    )
