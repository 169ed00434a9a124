"""Approximate joint diagonalization by minimizing the off-diagonal functional.

Matrices are passed as NumPy arrays. A collection is any sequence of square
arrays of one size, or a 3-d array of shape (K, n, n). Real input runs in
double precision; if any matrix is complex the whole call runs in complex
double precision.
"""

import numpy as np

from . import _core
from ._core import (
    DimensionError,
    DomainError,
    JdiagError,
    NumericError,
    ParseError,
    SingularError,
    discriminant as _discriminant,
    generate,
    load,
)

__all__ = [
    "DimensionError",
    "DomainError",
    "JdiagError",
    "NumericError",
    "ParseError",
    "SingularError",
    "differential",
    "discriminant",
    "generate",
    "gradient",
    "hessian_apply",
    "load",
    "offdiag_cost",
    "save",
    "solve",
]


def _dtype(*groups):
    for g in groups:
        if g is not None and any(np.iscomplexobj(x) for x in g):
            return np.complex128
    return np.float64


def _prepare(matrices, *extra):
    mats = [np.asarray(a) for a in matrices]
    others = [None if x is None else np.asarray(x) for x in extra]
    dtype = _dtype(mats, [x for x in others if x is not None])
    mats = [np.ascontiguousarray(a, dtype=dtype) for a in mats]
    others = [None if x is None else np.ascontiguousarray(x, dtype=dtype) for x in others]
    return mats, others


def offdiag_cost(matrices, q):
    """Half the summed squared off-diagonal mass of Q^{-1} A_k Q."""
    mats, (q,) = _prepare(matrices, q)
    return _core.offdiag_cost(mats, q)


def gradient(matrices, q):
    """Gradient of the functional at Q for the real inner product Re tr(X^* Y)."""
    mats, (q,) = _prepare(matrices, q)
    return _core.gradient(mats, q)


def hessian_apply(matrices, q, z):
    """The Hessian at Q applied to the direction Z."""
    mats, (q, z) = _prepare(matrices, q, z)
    return _core.hessian_apply(mats, q, z)


def differential(matrices, q, z, order):
    """The order-j differential of the functional at Q along Z (0 <= j <= 20)."""
    mats, (q, z) = _prepare(matrices, q, z)
    return _core.differential(mats, q, z, int(order))


def solve(matrices, q0=None, method="newton", max_iters=10000, grad_tol=1e-10, f_tol=1e-14, seed=0):
    """Minimize the functional from Q0 (identity by default).

    method is "gd", "newton" or "unitary"; the last requires self-adjoint
    matrices. Returns a dict with the final Q, the f and gradient-norm
    histories, the iteration count and the termination reason.
    """
    mats = [np.asarray(a) for a in matrices]
    if q0 is None:
        q0 = np.eye(mats[0].shape[0])
    mats, (q0,) = _prepare(mats, q0)
    return _core.solve(mats, q0, method, int(max_iters), float(grad_tol), float(f_tol), int(seed))


def discriminant(a):
    """Sylvester-matrix test for distinct eigenvalues of a single matrix."""
    a = np.asarray(a)
    dtype = np.complex128 if np.iscomplexobj(a) else np.float64
    return _discriminant(np.ascontiguousarray(a, dtype=dtype))


def save(path, matrices):
    """Write a collection file (no ground truth)."""
    mats, _ = _prepare(matrices)
    _core.save(str(path), mats)
