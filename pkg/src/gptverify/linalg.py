"""Matrix utilities shared by every theory instance.

Conventions
-----------
* ``kron(a, b)`` puts ``a`` on the slower-varying index, so ``|i>|j>`` sits at
  index ``i * d2 + j``.
* Hermitian operators are embedded in a real vector space through an
  orthonormal Hermitian basis whose first element is ``I / sqrt(d)``.  For
  composite systems the basis is the Kronecker product of the factor bases,
  which makes parallel composition in real coordinates a plain ``np.kron``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, HermiticityError

MATRIX_TOL = 1e-9
HERMITICITY_TOL = 1e-10


def as_rng(seed) -> np.random.Generator:
    """Return a Generator for an int seed, or pass a Generator through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def kron(*mats) -> np.ndarray:
    """Kronecker product of one or more matrices, left argument slowest."""
    if not mats:
        return np.ones((1, 1))
    return reduce(np.kron, (np.asarray(m) for m in mats))


def residual(a, b) -> float:
    """Frobenius norm of ``a - b``."""
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep`` (0-based indices).

    The kept subsystems stay in their original order.  Keeping nothing
    returns the full trace as a 1x1 matrix.
    """
    m = np.asarray(m)
    dims = [int(x) for x in dims]
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    total = int(np.prod(dims)) if dims else 1
    if m.ndim != 2 or m.shape != (total, total):
        raise DimensionError(f"matrix of shape {m.shape} does not match subsystem dims {dims}")
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {n} subsystems")

    t = m.reshape(dims + dims)
    # einsum labels: row index i, column index n + i; traced pairs share a label
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    row = letters[:n]
    col = letters[n:]
    col = [row[i] if i not in keep else col[i] for i in range(n)]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    expr = "".join(row) + "".join(col) + "->" + "".join(out)
    res = np.einsum(expr, t)
    kd = int(np.prod([dims[i] for i in keep])) if keep else 1
    return res.reshape(kd, kd)


def is_hermitian(h, tol: float = HERMITICITY_TOL) -> bool:
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and np.abs(h - h.conj().T).max() <= tol


@dataclass(frozen=True)
class HermBasis:
    """Orthonormal basis of d x d Hermitian matrices under the Hilbert-Schmidt product."""

    dim: int
    elements: np.ndarray  # shape (dim**2, dim, dim), complex

    def __len__(self):
        return len(self.elements)

    def gram(self) -> np.ndarray:
        flat = self.elements.reshape(len(self), -1)
        return (flat.conj() @ flat.T).real


def _gell_mann(d: int) -> np.ndarray:
    els = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1 / np.sqrt(2)
            a = np.zeros((d, d), dtype=complex)
            a[j, k] = -1j / np.sqrt(2)
            a[k, j] = 1j / np.sqrt(2)
            els += [s, a]
    for l in range(1, d):
        z = np.zeros((d, d), dtype=complex)
        z[np.arange(l), np.arange(l)] = 1
        z[l, l] = -l
        els.append(z / np.sqrt(l * (l + 1)))
    return np.array(els)


@lru_cache(maxsize=None)
def _cached_basis(dims: tuple) -> HermBasis:
    parts = [_gell_mann(d) for d in dims]
    els = parts[0]
    for p in parts[1:]:
        els = np.einsum("aij,bkl->abikjl", els, p).reshape(
            len(els) * len(p), els.shape[1] * p.shape[1], els.shape[1] * p.shape[1]
        )
    els.setflags(write=False)
    return HermBasis(int(np.prod(dims)), els)


def herm_basis(d: int) -> HermBasis:
    """Generalized Gell-Mann basis with the normalized identity first."""
    if d < 1:
        raise DimensionError("dimension must be positive")
    return _cached_basis((int(d),))


def product_basis(dims: Sequence[int]) -> HermBasis:
    """Kronecker products of the factor bases, first factor slowest."""
    dims = tuple(int(d) for d in dims)
    if not dims or min(dims) < 1:
        raise DimensionError(f"invalid subsystem dims {dims}")
    return _cached_basis(dims)


def to_real(h, basis: HermBasis, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Real coordinates ``Tr(B_k h)`` of a Hermitian matrix."""
    h = np.asarray(h, dtype=complex)
    if h.shape != (basis.dim, basis.dim):
        raise DimensionError(f"expected {basis.dim}x{basis.dim} matrix, got {h.shape}")
    if not is_hermitian(h, tol):
        raise HermiticityError("matrix is not Hermitian within tolerance")
    return np.einsum("kij,ji->k", basis.elements, h).real


def to_coords(x, basis: HermBasis) -> np.ndarray:
    """Complex-linear extension of :func:`to_real` (no Hermiticity check)."""
    return np.einsum("kij,ji->k", basis.elements, np.asarray(x, dtype=complex))


def from_real(v, basis: HermBasis) -> np.ndarray:
    v = np.asarray(v)
    if v.shape != (len(basis),):
        raise DimensionError(f"expected vector of length {len(basis)}, got {v.shape}")
    return np.einsum("k,kij->ij", v, basis.elements)


def superop_to_real(fn, in_basis: HermBasis, out_basis: HermBasis) -> np.ndarray:
    """Real matrix of a Hermiticity-preserving linear map given as a function."""
    cols = [to_coords(fn(b), out_basis).real for b in in_basis.elements]
    return np.array(cols).T


def random_unitary(d: int, seed=None) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    rng = as_rng(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def random_ket(d: int, seed=None) -> np.ndarray:
    rng = as_rng(seed)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_density(d: int, rank: int | None = None, seed=None) -> np.ndarray:
    """Random density matrix of the given rank (full rank by default)."""
    rank = d if rank is None else rank
    if not 1 <= rank <= d:
        raise DimensionError(f"rank must lie in [1, {d}]")
    rng = as_rng(seed)
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def projector(ket) -> np.ndarray:
    ket = np.asarray(ket).reshape(-1)
    return np.outer(ket, ket.conj())


def bell_ket(d: int) -> np.ndarray:
    """Normalized ``sum_i |ii> / sqrt(d)``."""
    return np.eye(d).reshape(-1).astype(complex) / np.sqrt(d)


def top_ket(rho) -> np.ndarray:
    """Leading eigenvector of a (near) rank-one density matrix."""
    w, v = np.linalg.eigh(rho)
    return v[:, -1] * np.sqrt(max(w[-1], 0.0))


def psd_floor(rho) -> float:
    """Smallest eigenvalue of the Hermitian part."""
    rho = np.asarray(rho)
    return float(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0])


def permutation_matrix(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Matrix moving tensor factor ``perm[k]`` of the input to position ``k``.

    Acts on vectors in ``kron`` layout with the given factor dimensions.
    """
    dims = list(dims)
    total = int(np.prod(dims)) if dims else 1
    eye = np.eye(total).reshape(dims + [total]) if dims else np.eye(1)
    if not dims:
        return eye
    moved = np.transpose(eye, list(perm) + [len(dims)])
    return moved.reshape(total, total)


def null_space(a, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal columns spanning the kernel of ``a`` (relative SVD cutoff)."""
    a = np.atleast_2d(np.asarray(a))
    if a.size == 0:
        return np.eye(a.shape[1])
    _, s, vh = np.linalg.svd(a)
    scale = max(s[0], 1.0) if len(s) else 1.0
    rank = int(np.sum(s > tol * scale))
    return vh[rank:].conj().T
