"""scikit-learn wrappers: chain parameters in, probe observables out.

Each input row is ``(t1, t2, gamma)``. The transformers are stateless, so
``fit`` only validates shapes, but they slot into pipelines and grid searches
like any other estimator.

>>> from sklearn.pipeline import make_pipeline
>>> pipe = make_pipeline(NonMarkovianityTransformer(n_cells=100, T=60), ThresholdPhaseClassifier())
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .boundstates import dephasing_bound_states, dissipative_bound_states
from .experiments import n_t_point
from .lattice import ChainSpec


def _check_params(X):
    X = check_array(X, dtype=float, ensure_min_features=3)
    if X.shape[1] != 3:
        raise ValueError(f"expected columns (t1, t2, gamma), got {X.shape[1]} features")
    if np.any(X <= 0):
        raise ValueError("t1, t2 and gamma must be positive")
    return X


class NonMarkovianityTransformer(TransformerMixin, BaseEstimator):
    """Map ``(t1, t2, gamma)`` rows to the recoherence measure ``N_T``.

    Parameters
    ----------
    n_cells : int
    model : {"dephasing", "dissipative"}
    initial : str
        Initial chain state for the dephasing model.
    T, dt : float
        Horizon and step, in units of ``1/t1``.
    t_burn : float, optional
        Start of the integration window (model-dependent default).
    """

    def __init__(self, n_cells=200, model="dephasing", initial="antisym2cell", T=150.0,
                 dt=0.02, t_burn=None):
        self.n_cells = n_cells
        self.model = model
        self.initial = initial
        self.T = T
        self.dt = dt
        self.t_burn = t_burn

    def fit(self, X, y=None):
        X = _check_params(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = _check_params(X)
        out = np.empty((len(X), 1))
        for i, (t1, t2, g) in enumerate(X):
            spec = ChainSpec(self.n_cells, t1, t2, g, self.model)
            out[i, 0] = n_t_point(spec, self.initial, self.T, self.dt, self.t_burn)["n_t"]
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array(["n_t"], dtype=object)


class BoundStateFeaturizer(TransformerMixin, BaseEstimator):
    """Closed-form bound-state summary per row.

    Columns: number of bound states, number of symmetric ones, number of
    antisymmetric ones, lowest and highest bound-state energy (NaN when
    there is none).
    """

    def __init__(self, model="dephasing"):
        self.model = model

    def fit(self, X, y=None):
        X = _check_params(X)
        if self.model not in ("dephasing", "dissipative"):
            raise ValueError(f"unknown model {self.model!r}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = _check_params(X)
        fn = dephasing_bound_states if self.model == "dephasing" else dissipative_bound_states
        out = np.full((len(X), 5), np.nan)
        for i, row in enumerate(X):
            states = fn(*row)
            e = [s.energy for s in states]
            out[i, 0] = len(states)
            out[i, 1] = sum(s.parity == "symmetric" for s in states)
            out[i, 2] = sum(s.parity == "antisymmetric" for s in states)
            if e:
                out[i, 3], out[i, 4] = min(e), max(e)
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array(["n_bound", "n_symmetric", "n_antisymmetric", "e_min", "e_max"], dtype=object)


class ThresholdPhaseClassifier(ClassifierMixin, BaseEstimator):
    """Decision stump on a single feature, e.g. ``N_T``.

    Picks the cut (midpoint between sorted feature values) and orientation
    with the fewest training errors; ties go to the widest margin.
    """

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if X.shape[1] != 1:
            raise ValueError("ThresholdPhaseClassifier expects a single feature")
        self.classes_ = np.unique(y)
        if len(self.classes_) != 2:
            raise ValueError("need exactly two classes")
        x = X[:, 0]
        order = np.argsort(x, kind="stable")
        xs, ys = x[order], (y[order] == self.classes_[1])
        cuts = np.concatenate(([xs[0] - 1.0], 0.5 * (xs[1:] + xs[:-1]), [xs[-1] + 1.0]))
        best = None
        for c in cuts:
            above = xs > c
            for high_is_pos in (True, False):
                pred = above if high_is_pos else ~above
                err = int(np.sum(pred != ys))
                margin = float(np.min(np.abs(xs - c)))
                key = (err, -margin)
                if best is None or key < best[0]:
                    best = (key, c, high_is_pos)
        _, self.threshold_, self.high_is_positive_ = best
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "threshold_")
        X = check_array(X)
        above = X[:, 0] > self.threshold_
        pos = above if self.high_is_positive_ else ~above
        return np.where(pos, self.classes_[1], self.classes_[0])
