"""scikit-learn style wrappers around the functional API.

Point clouds are ``(m, 2n)`` arrays, one phase point per row. The wrappers
only add parameter handling and fitted state; every computation is
delegated to the module functions, so results agree with them exactly.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .displacement import ArcSet, displace_inward, sullivan_function
from .flow import flow_map, system_from_name
from .hammer import hammer_between, hammer_hamiltonian
from .hopf import hopf_projection
from .hypersurface import surface_from_name


def _phase_array(X, n_features=None):
    X = check_array(X, dtype=float, ensure_all_finite=True)
    if X.shape[1] % 2:
        raise ValueError(f"phase points need an even number of columns, got {X.shape[1]}")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} columns, expected {n_features}")
    return X


class HamiltonianFlow(TransformerMixin, BaseEstimator):
    """Time-``T`` flow of a catalog Hamiltonian; ``inverse_transform`` flows back."""

    def __init__(self, system="harmonic", T=1.0, dt=1e-2, method="midpoint"):
        self.system = system
        self.T = T
        self.dt = dt
        self.method = method

    def fit(self, X, y=None):
        X = _phase_array(X)
        self.system_ = system_from_name(self.system)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "system_")
        X = _phase_array(X, self.n_features_in_)
        return flow_map(self.system_, X, self.T, self.dt, self.method)

    def inverse_transform(self, X):
        check_is_fitted(self, "system_")
        X = _phase_array(X, self.n_features_in_)
        return flow_map(self.system_, X, -self.T, self.dt, self.method)


class HopfProjector(TransformerMixin, BaseEstimator):
    """Map points of ``C^2 minus 0`` to unit 3-vectors of the Hopf base."""

    def fit(self, X, y=None):
        X = _phase_array(X, 4)
        self.n_features_in_ = 4
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        return hopf_projection(_phase_array(X, 4))


class HammerTransformer(TransformerMixin, BaseEstimator):
    """Fit a hammer between the two rows of ``X = [x; y]``, then apply its flow.

    ``fit`` runs :func:`~charfol.hammer.hammer_between`, so it raises when the
    rows are not on one characteristic leaf of the surface.
    """

    def __init__(self, surface="hyperplane", epsilon=0.05, T=1.0, dt=None, c0=0.1):
        self.surface = surface
        self.epsilon = epsilon
        self.T = T
        self.dt = dt
        self.c0 = c0

    def fit(self, X, y=None):
        X = _phase_array(X)
        if X.shape[0] != 2:
            raise ValueError("fit expects exactly two rows, the points x and y")
        self.spec_ = hammer_between(surface_from_name(self.surface), X[0], X[1],
                                    self.epsilon, c0=self.c0)
        self.system_ = hammer_hamiltonian(self.spec_)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = _phase_array(X, self.n_features_in_)
        dt = self.dt if self.dt is not None else self.T / 88
        return flow_map(self.system_, X, self.T, dt)


class SullivanDisplacer(TransformerMixin, BaseEstimator):
    """Push clouds in the closed cylinder inward along a certified displacing flow.

    ``arcs`` is the entry list accepted by :meth:`ArcSet.from_config`. After
    ``transform`` the attributes ``margin_`` and ``flagged_`` describe the
    last call.
    """

    def __init__(self, arcs=None, resolution=1e-3, tau=0.05, dt=1e-2):
        self.arcs = arcs
        self.resolution = resolution
        self.tau = tau
        self.dt = dt

    def fit(self, X=None, y=None):
        entries = self.arcs
        if entries is None:
            entries = [{"base": [0.0, 0.0], "radius": 0.0, "arcs": [[0.0, 1.5 * np.pi]]}]
        self.hamiltonian_ = sullivan_function(ArcSet.from_config(entries, self.resolution))
        self.n_features_in_ = 2 * self.hamiltonian_.arcset.n
        return self

    def transform(self, X):
        check_is_fitted(self, "hamiltonian_")
        X = _phase_array(X, self.n_features_in_)
        result = displace_inward(X, self.hamiltonian_, self.tau, self.dt)
        self.margin_ = result.margin
        self.flagged_ = result.flagged
        return result.points
