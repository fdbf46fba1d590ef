"""Numerical toolkit for characteristic foliations of hypersurfaces in R^2n.

Modules: ``symplectic`` (conventions), ``hypersurface`` (level sets and the
surface catalog), ``flow`` (Hamiltonian flows and leaf tracing), ``hammer``
(hammer construction and verification), ``displacement`` (pushing sets off
the cylinder boundary), ``hopf`` (Hopf fibration checks), ``liouville``
(radial field, primitive, extension of shell maps), ``estimators``
(scikit-learn wrappers), ``export`` and ``cli``.
"""

from .flow import HamiltonianSystem, integrate, leaf_action, same_leaf, trace_leaf
from .hammer import HammerSpec, hammer_between, verify_hammer, verify_one_sided
from .hypersurface import LevelSetSurface, characteristic_direction, surface_from_name
from .symplectic import apply_J, omega, symplecticity_defect

__version__ = "0.1.0"

__all__ = [
    "HamiltonianSystem", "HammerSpec", "LevelSetSurface", "apply_J", "characteristic_direction",
    "hammer_between", "integrate", "leaf_action", "omega", "same_leaf", "surface_from_name",
    "symplecticity_defect", "trace_leaf", "verify_hammer", "verify_one_sided",
]
