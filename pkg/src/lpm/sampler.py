"""scikit-learn style wrapper around the local pivotal method."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_coords, check_probabilities, equal_probabilities
from .pivotal import PivotalSampler

__all__ = ["LocalPivotalSampler"]


class LocalPivotalSampler(BaseEstimator):
    """Select a well-spread subsample of the rows of ``X``.

    Parameters
    ----------
    n_samples : int, optional
        Sample size for equal inclusion probabilities ``n_samples / N``.
        Ignored when ``inclusion_probabilities`` is passed to :meth:`fit`.
    method : {"lpm2", "lpm1"}, default "lpm2"
    metric : {"euclidean", "cityblock", "chebyshev"} or callable
    random_state : None, int or numpy Generator

    Attributes
    ----------
    sample_indices_ : ndarray of int
        Selected rows, ascending and 0-based.
    inclusion_probabilities_ : ndarray of shape (N,)
    n_steps_ : int
        Pivotal updates used.
    n_features_in_ : int

    Examples
    --------
    >>> import numpy as np
    >>> X = np.random.default_rng(0).random((200, 2))
    >>> LocalPivotalSampler(n_samples=20, random_state=1).fit(X).sample_indices_.size
    20
    """

    def __init__(self, n_samples=None, method="lpm2", metric="euclidean", random_state=None):
        self.n_samples = n_samples
        self.method = method
        self.metric = metric
        self.random_state = random_state

    def fit(self, X, y=None, inclusion_probabilities=None):
        X = check_coords(X)
        N = X.shape[0]
        if inclusion_probabilities is not None:
            probs = check_probabilities(inclusion_probabilities, N)
        elif self.n_samples is None:
            raise ValueError("set n_samples or pass inclusion_probabilities")
        else:
            if not 1 <= int(self.n_samples) <= N:
                raise ValueError(f"n_samples must lie in [1, {N}], got {self.n_samples}")
            probs = equal_probabilities(int(self.n_samples), N)
        res = PivotalSampler(probs, X, self.metric, self.method).sample(self.random_state)
        self.sample_indices_ = res.selected
        self.inclusion_probabilities_ = probs
        self.n_steps_ = res.steps
        self.n_features_in_ = X.shape[1]
        return self

    def fit_resample(self, X, y=None, inclusion_probabilities=None):
        """Fit, then return the selected rows of ``X`` (and of ``y`` if given)."""
        self.fit(X, inclusion_probabilities=inclusion_probabilities)
        Xs = np.asarray(X)[self.sample_indices_]
        if y is None:
            return Xs
        return Xs, np.asarray(y)[self.sample_indices_]

    def sample_probabilities(self):
        """Inclusion probabilities of the selected rows, for Horvitz-Thompson weights."""
        check_is_fitted(self, "sample_indices_")
        return self.inclusion_probabilities_[self.sample_indices_]
