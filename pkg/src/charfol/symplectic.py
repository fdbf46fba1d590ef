"""Linear symplectic conventions on R^2n.

Coordinates are interleaved, ``(x1, y1, x2, y2, ..., xn, yn)``, so that the
symplectic form and the complex structure act pair by pair:

* ``omega(u, v) = sum_i u_xi * v_yi - u_yi * v_xi``
* ``J (a, b) = (-b, a)`` on each pair, i.e. multiplication by ``i`` on ``C^n``
* ``omega(u, v) == <J u, v>``
* Hamiltonian vector fields satisfy ``omega(X_H, .) = dH(.)``, hence
  ``X_H = -J grad H``. With this sign ``<X_H, N> = omega(X_H, J N) = dH(J N)``.

Every function broadcasts over leading axes.
"""

import numpy as np

from ._validation import as_phase, same_dim


def omega(u, v):
    """Standard symplectic form evaluated on (arrays of) tangent vectors."""
    u = as_phase(u, "u")
    v = as_phase(v, "v")
    same_dim(u, v)
    return np.sum(u[..., 0::2] * v[..., 1::2] - u[..., 1::2] * v[..., 0::2], axis=-1)


def apply_J(v):
    """Complex structure ``(x, y) -> (-y, x)`` on every coordinate pair."""
    v = as_phase(v, "v")
    out = np.empty_like(v)
    out[..., 0::2] = -v[..., 1::2]
    out[..., 1::2] = v[..., 0::2]
    return out


def hamiltonian_vector_field(gradH, p=None):
    """Return ``X_H = -J grad H``.

    ``p`` is accepted for call-site symmetry with the point the gradient
    was evaluated at; only its dimension is checked.
    """
    g = as_phase(gradH, "gradH")
    if p is not None:
        same_dim(g, as_phase(p, "p"))
    out = np.empty_like(g)
    out[..., 0::2] = g[..., 1::2]
    out[..., 1::2] = -g[..., 0::2]
    return out


def omega_matrix(n):
    """Matrix ``Omega`` with ``omega(u, v) = u @ Omega @ v``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplecticity_defect(jac):
    """Max-norm of ``jac.T @ Omega @ jac - Omega``; zero iff ``jac`` is symplectic."""
    jac = np.asarray(jac, dtype=float)
    if jac.ndim != 2 or jac.shape[0] != jac.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {jac.shape}")
    if jac.shape[0] % 2:
        raise ValueError("symplecticity defect needs an even-sized matrix")
    Om = omega_matrix(jac.shape[0] // 2)
    return float(np.max(np.abs(jac.T @ Om @ jac - Om)))


def fd_gradient(H, p, h=None):
    """Central finite-difference gradient of a scalar field.

    The step defaults to ``1e-6 * (1 + |p|)``. ``H`` must broadcast over
    leading axes.
    """
    p = as_phase(p, "p")
    if h is None:
        h = 1e-6 * (1.0 + np.linalg.norm(p, axis=-1))
    h = np.asarray(h, dtype=float)
    grad = np.empty_like(p)
    for k in range(p.shape[-1]):
        step = np.zeros_like(p)
        step[..., k] = h
        grad[..., k] = (H(p + step) - H(p - step)) / (2 * h)
    return grad
