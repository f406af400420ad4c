"""Dense complex 3-way tensor container and the linear-algebra kernels.

Matrices are plain numpy arrays (float64 or complex128). The tensor wrapper
fixes the storage layout and the unfolding conventions that the ALS code and
the file format both rely on:

* storage is frequency-major: the backing array has shape (F, m, K) and is
  C-contiguous, so ``slab(f)`` is a contiguous m x K matrix;
* ``unfold(X, mode)`` places the remaining indices in the column order
  documented on the function, matching ``khatri_rao`` row order.
"""

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "ComplexTensor",
    "unfold",
    "refold",
    "khatri_rao",
    "thin_svd",
    "lstsq",
]


class ComplexTensor:
    """Channel x frequency x trial tensor of complex128 samples.

    Parameters
    ----------
    array : ndarray, shape (m, F, K)
        Complex samples, channel-first. Copied into the internal
        frequency-major layout.
    freqs : ndarray of shape (F,), optional
        Frequency in Hz of each bin. Carried as metadata; band selection
        in the connectivity module requires it.
    """

    __slots__ = ("_slabs", "freqs")

    def __init__(self, array, freqs=None):
        array = np.asarray(array)
        if array.ndim != 3:
            raise InvalidInputError(f"expected a 3-way array, got ndim={array.ndim}")
        if min(array.shape) < 1:
            raise InvalidInputError(f"dims must be strictly positive, got {array.shape}")
        self._slabs = np.ascontiguousarray(array.transpose(1, 0, 2), dtype=np.complex128)
        if freqs is not None:
            freqs = np.asarray(freqs, dtype=float)
            if freqs.shape != (array.shape[1],):
                raise InvalidInputError(
                    f"freqs length {freqs.shape} does not match F={array.shape[1]}"
                )
        self.freqs = freqs

    @classmethod
    def from_slabs(cls, slabs, freqs=None):
        """Build from an (F, m, K) stack of per-frequency slabs."""
        slabs = np.asarray(slabs)
        return cls(slabs.transpose(1, 0, 2), freqs=freqs)

    @property
    def n_channels(self):
        return self._slabs.shape[1]

    @property
    def n_freqs(self):
        return self._slabs.shape[0]

    @property
    def n_trials(self):
        return self._slabs.shape[2]

    @property
    def dims(self):
        """(m, F, K)."""
        F, m, K = self._slabs.shape
        return (m, F, K)

    @property
    def slabs(self):
        """The (F, m, K) frequency-major backing array (read-only view)."""
        v = self._slabs.view()
        v.flags.writeable = False
        return v

    def slab(self, f):
        """The m x K complex matrix at frequency index ``f`` (a view)."""
        if not 0 <= f < self.n_freqs:
            raise InvalidInputError(f"frequency index {f} out of range [0, {self.n_freqs})")
        return self._slabs[f]

    def to_array(self):
        """Copy out as an (m, F, K) array."""
        return np.ascontiguousarray(self._slabs.transpose(1, 0, 2))

    def norm(self):
        """Frobenius norm over all entries."""
        return float(np.linalg.norm(self._slabs.ravel()))

    def sq_norm(self):
        return float(np.vdot(self._slabs, self._slabs).real)

    def __eq__(self, other):
        if not isinstance(other, ComplexTensor):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self._slabs, other._slabs)

    def __repr__(self):
        m, F, K = self.dims
        return f"ComplexTensor(m={m}, F={F}, K={K})"


def _as_mfk(X):
    if isinstance(X, ComplexTensor):
        return X._slabs.transpose(1, 0, 2)
    X = np.asarray(X)
    if X.ndim != 3:
        raise InvalidInputError(f"expected a 3-way array, got ndim={X.ndim}")
    return X


def unfold(X, mode):
    """Mode-n unfolding of an (m, F, K) tensor.

    Column orders (0-based indices, first-listed varies fastest):

    * mode 1: rows are channels, column ``k*F + f``
    * mode 2: rows are frequencies, column ``k*m + i``
    * mode 3: rows are trials, column ``f*m + i``

    These match ``khatri_rao(outer_factor, inner_factor)`` row order, i.e.
    ``unfold(X, 1) == A @ khatri_rao(Y, P).T`` for an exact CP model.
    """
    arr = _as_mfk(X)
    m, F, K = arr.shape
    if mode == 1:
        return arr.transpose(0, 2, 1).reshape(m, K * F)
    if mode == 2:
        return arr.transpose(1, 2, 0).reshape(F, K * m)
    if mode == 3:
        return arr.transpose(2, 1, 0).reshape(K, F * m)
    raise InvalidInputError(f"mode must be 1, 2 or 3, got {mode!r}")


def refold(M, mode, dims):
    """Inverse of :func:`unfold`; returns an (m, F, K) array."""
    m, F, K = dims
    M = np.asarray(M)
    if mode == 1:
        if M.shape != (m, K * F):
            raise InvalidInputError(f"mode-1 matrix shape {M.shape} != {(m, K * F)}")
        return M.reshape(m, K, F).transpose(0, 2, 1)
    if mode == 2:
        if M.shape != (F, K * m):
            raise InvalidInputError(f"mode-2 matrix shape {M.shape} != {(F, K * m)}")
        return M.reshape(F, K, m).transpose(2, 0, 1)
    if mode == 3:
        if M.shape != (K, F * m):
            raise InvalidInputError(f"mode-3 matrix shape {M.shape} != {(K, F * m)}")
        return M.reshape(K, F, m).transpose(2, 1, 0)
    raise InvalidInputError(f"mode must be 1, 2 or 3, got {mode!r}")


def khatri_rao(A, B):
    """Column-wise Khatri-Rao product.

    Row ``a * B.shape[0] + b`` holds ``A[a, r] * B[b, r]``, so the outer
    factor's index varies slowest, matching the unfolding column orders.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape[1] != B.shape[1]:
        raise InvalidInputError(f"column counts differ: {A.shape[1]} vs {B.shape[1]}")
    return (A[:, None, :] * B[None, :, :]).reshape(A.shape[0] * B.shape[0], A.shape[1])


def thin_svd(M):
    """Thin SVD  M = U @ diag(s) @ V.conj().T.

    U and V have orthonormal columns; s is nonnegative and nonincreasing.
    """
    M = np.asarray(M)
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("matrix contains non-finite entries")
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    return U, s, Vh.conj().T


# Relative singular-value cutoff for minimum-norm least squares.
LSTSQ_RCOND = 1e-12


def lstsq(A, B, real_constrained=False):
    """Least-squares solution of A @ X = B.

    With ``real_constrained`` the minimizer is restricted to real X by
    solving the stacked system [Re(A); Im(A)] X = [Re(B); Im(B)], which is
    the exact real-domain minimizer of ||A X - B||_F. Rank-deficient
    systems return the minimum-norm solution (singular values below
    ``LSTSQ_RCOND`` times the largest are dropped).
    """
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim != 2 or B.ndim not in (1, 2):
        raise InvalidInputError("A must be 2-D and B 1-D or 2-D")
    if A.shape[0] != B.shape[0]:
        raise InvalidInputError(f"row counts differ: A has {A.shape[0]}, B has {B.shape[0]}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise InvalidInputError("inputs contain non-finite entries")
    if real_constrained:
        A = np.vstack([A.real, A.imag])
        B = np.concatenate([B.real, B.imag], axis=0)
    else:
        A = A.astype(np.complex128, copy=False)
        B = B.astype(np.complex128, copy=False)
    X, _, _, _ = np.linalg.lstsq(A, B, rcond=LSTSQ_RCOND)
    return X
