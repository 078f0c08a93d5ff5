"""Small dense complex matrices: the 2x2 and 4x4 arithmetic everything else runs on.

Basis ordering is |00>, |01>, |10>, |11> with Alice as the left tensor factor.
"""

import numpy as np
from scipy.linalg import ishermitian

from errors import DimensionError, DomainError

DEFAULT_TOLERANCE = 1e-10
ALLOWED_DIMS = (2, 4)


def _frozen(matrix):
    matrix = np.asarray(matrix, dtype=complex)
    matrix.setflags(write=False)
    return matrix


I2 = _frozen(np.eye(2))
I4 = _frozen(np.eye(4))
SIGMA_X = _frozen([[0, 1], [1, 0]])
SIGMA_Y = _frozen([[0, -1j], [1j, 0]])
SIGMA_Z = _frozen([[1, 0], [0, -1]])


def as_complex_mat(a, dim=None):
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in ALLOWED_DIMS:
        raise DimensionError(f"Expected a 2x2 or 4x4 matrix, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise DimensionError(f"Expected a {dim}x{dim} matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("Matrix has non-finite entries")
    return m


def _check_tol(tol):
    if not tol > 0:
        raise DomainError(f"Tolerance must be positive, got {tol}")


def mat_mul(a, b):
    a, b = as_complex_mat(a), as_complex_mat(b)
    if a.shape != b.shape:
        raise DimensionError(f"Cannot multiply {a.shape} by {b.shape}")
    return a @ b


def tensor(a, b):
    return np.kron(as_complex_mat(a, 2), as_complex_mat(b, 2))


def adjoint(a):
    return as_complex_mat(a).conj().T


def trace(a):
    return complex(np.trace(as_complex_mat(a)))


def commutator(a, b):
    return mat_mul(a, b) - mat_mul(b, a)


def anticommutator(a, b):
    return mat_mul(a, b) + mat_mul(b, a)


def is_hermitian(a, tol=DEFAULT_TOLERANCE):
    _check_tol(tol)
    return bool(ishermitian(as_complex_mat(a), atol=tol))


def hermitian_eigenvalues(a):
    """Ascending real eigenvalues of the Hermitian part of ``a``."""
    m = as_complex_mat(a)
    return np.linalg.eigvalsh((m + m.conj().T) / 2)


def is_psd(a, tol=DEFAULT_TOLERANCE):
    if not is_hermitian(a, tol):
        return False
    return bool(hermitian_eigenvalues(a)[0] >= -tol)


def partial_trace_bob(rho):
    r = as_complex_mat(rho, 4).reshape(2, 2, 2, 2)
    return np.einsum("ijkj->ik", r)


def partial_trace_alice(rho):
    r = as_complex_mat(rho, 4).reshape(2, 2, 2, 2)
    return np.einsum("ijik->jk", r)


def expectation(op, rho):
    """Real part of Tr[op rho]."""
    op, rho = as_complex_mat(op), as_complex_mat(rho)
    if op.shape != rho.shape:
        raise DimensionError(f"Cannot pair {op.shape} with {rho.shape}")
    return float(np.real(np.einsum("ij,ji->", op, rho)))


def projector(vec):
    v = np.asarray(vec, dtype=complex).reshape(-1)
    if v.shape[0] not in ALLOWED_DIMS:
        raise DimensionError(f"Expected a vector of length 2 or 4, got {v.shape[0]}")
    return np.outer(v, v.conj())
