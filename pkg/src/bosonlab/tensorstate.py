"""Dense first-quantised N-body states on the full tensor grid.

Amplitudes live on an (M,)*N complex array; the inner product carries the
volume element ``cell = h**d`` once per particle coordinate.  All operator
applications are matrix-free slot loops: an M x M table is contracted
against one tensor leg at a time, never materialising M^N x M^N matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

__all__ = [
    "TensorState",
    "inner",
    "apply_factor",
    "apply_one_body_sum",
    "apply_pair_diagonal",
    "apply_projector_chain",
    "apply_two_slot",
    "symmetrize",
    "transposition_residual",
    "pair_diagonal_field",
    "product_state",
    "random_symmetric",
    "projector_matrices",
]


@dataclass
class TensorState:
    """N-body amplitude tensor with its coordinate volume element.

    The ``symmetric`` flag is advisory metadata; it is validated on demand by
    :func:`transposition_residual`, not enforced per operation.
    """

    amps: np.ndarray
    cell: float
    symmetric: bool = False

    @property
    def particles(self) -> int:
        return self.amps.ndim

    @property
    def sites(self) -> int:
        return self.amps.shape[0] if self.amps.ndim else 1

    def copy(self) -> "TensorState":
        return TensorState(self.amps.copy(), self.cell, self.symmetric)

    def norm(self) -> float:
        return float(np.sqrt(self.cell**self.particles * np.vdot(self.amps, self.amps).real))

    def __add__(self, other: "TensorState") -> "TensorState":
        return TensorState(self.amps + other.amps, self.cell)

    def __sub__(self, other: "TensorState") -> "TensorState":
        return TensorState(self.amps - other.amps, self.cell)

    def __mul__(self, scalar) -> "TensorState":
        return TensorState(self.amps * scalar, self.cell)

    __rmul__ = __mul__


def _as_matrix(op) -> np.ndarray:
    return np.asarray(getattr(op, "mat", op), dtype=np.complex128)


def inner(psi: TensorState, chi: TensorState) -> complex:
    """Weighted sesquilinear product, conjugate-linear in the first slot."""
    if psi.amps.shape != chi.amps.shape or psi.cell != chi.cell:
        raise ValueError("states live on different grids")
    return complex(psi.cell**psi.particles * np.vdot(psi.amps, chi.amps))


def apply_factor(op, slot: int, psi: TensorState) -> TensorState:
    """Apply a one-body table on coordinate ``slot`` (0-based), identity elsewhere."""
    n = psi.particles
    if not 0 <= slot < n:
        raise IndexError(f"slot {slot} out of range for {n} particles")
    mat = _as_matrix(op)
    m = psi.sites
    work = np.moveaxis(psi.amps, slot, 0).reshape(m, -1)
    out = mat @ work
    out = np.moveaxis(out.reshape((m,) + psi.amps.shape[:slot] + psi.amps.shape[slot + 1 :]), 0, slot)
    return TensorState(np.ascontiguousarray(out), psi.cell)


def apply_one_body_sum(op, psi: TensorState) -> TensorState:
    """Sum of the one-body table over all coordinates."""
    mat = _as_matrix(op)
    out = np.zeros_like(psi.amps)
    m = psi.sites
    for slot in range(psi.particles):
        work = np.moveaxis(psi.amps, slot, 0).reshape(m, -1)
        piece = (mat @ work).reshape((m,) + psi.amps.shape[1:])
        out += np.moveaxis(piece, 0, slot)
    return TensorState(out, psi.cell)


def apply_two_slot(mat2, i: int, j: int, psi: TensorState) -> TensorState:
    """Apply an M^2 x M^2 table on the ordered coordinate pair (i, j)."""
    if i == j:
        raise IndexError("two-slot operator needs distinct coordinates")
    n, m = psi.particles, psi.sites
    work = np.moveaxis(psi.amps, (i, j), (0, 1)).reshape(m * m, -1)
    out = np.asarray(mat2, dtype=np.complex128) @ work
    rest = tuple(psi.amps.shape[k] for k in range(n) if k not in (i, j))
    out = np.moveaxis(out.reshape((m, m) + rest), (0, 1), (i, j))
    return TensorState(np.ascontiguousarray(out), psi.cell)


def pair_diagonal_field(pair, n_particles: int) -> np.ndarray:
    """Multiplicative field sum_{i<j} w(x_i - x_j) on the (M,)*N grid."""
    wmat = np.asarray(getattr(pair, "mat", pair))
    m = wmat.shape[0]
    shape = (m,) * n_particles
    total = np.zeros(shape)
    for i in range(n_particles):
        for j in range(i + 1, n_particles):
            view = [1] * n_particles
            view[i] = m
            view[j] = m
            total = total + wmat.reshape(view)
    return total


def apply_pair_diagonal(pair, psi: TensorState) -> TensorState:
    """Multiply amplitudes by sum_{i<j} w(x_i - x_j); no mean-field prefactor."""
    return TensorState(psi.amps * pair_diagonal_field(pair, psi.particles), psi.cell)


def projector_matrices(phi: np.ndarray, cell: float):
    """Rank-one condensate projector p = |phi><phi| and its complement q."""
    phi = np.asarray(phi, dtype=np.complex128)
    p = cell * np.outer(phi, phi.conj())
    q = np.eye(phi.size, dtype=np.complex128) - p
    return p, q


def _check_normalised(phi: np.ndarray, cell: float):
    norm = np.sqrt(cell * np.vdot(phi, phi).real)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"one-body state must be normalised, |norm - 1| = {abs(norm - 1.0):.3g}")


def apply_projector_chain(pattern, phi: np.ndarray, psi: TensorState) -> TensorState:
    """Apply p, q, or identity per coordinate according to ``pattern``.

    ``pattern`` is a length-N sequence over {'p', 'q', 'id'}.
    """
    if len(pattern) != psi.particles:
        raise ValueError(f"pattern length {len(pattern)} != particle count {psi.particles}")
    _check_normalised(phi, psi.cell)
    p, q = projector_matrices(phi, psi.cell)
    out = psi
    for slot, tag in enumerate(pattern):
        if tag == "p":
            out = apply_factor(p, slot, out)
        elif tag == "q":
            out = apply_factor(q, slot, out)
        elif tag != "id":
            raise ValueError(f"pattern entry must be 'p', 'q' or 'id', got {tag!r}")
    return out


def _canonical_index(shape, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Flat index of the sorted-digit representative for every grid tuple."""
    n = len(shape)
    dim = m**n
    idx = np.arange(dim)
    digits = np.empty((dim, n), dtype=np.int64)
    rem = idx
    for pos in range(n - 1, -1, -1):
        digits[:, pos] = rem % m
        rem = rem // m
    digits.sort(axis=1)
    powers = m ** np.arange(n - 1, -1, -1)
    canon = digits @ powers
    counts = np.bincount(canon, minlength=dim)
    return canon, counts


def symmetrize(psi: TensorState) -> TensorState:
    """Average over all coordinate permutations.

    Implemented by sorting-based canonicalisation: every grid tuple is mapped
    to its sorted representative, amplitudes are averaged per orbit, and the
    orbit mean is scattered back.  Equivalent to the explicit N!-term average
    and idempotent by construction.
    """
    m, n = psi.sites, psi.particles
    if n <= 1:
        return TensorState(psi.amps.copy(), psi.cell, symmetric=True)
    flat = psi.amps.ravel()
    canon, counts = _canonical_index(psi.amps.shape, m)
    dim = flat.size
    sums = np.bincount(canon, weights=flat.real, minlength=dim) + 1j * np.bincount(
        canon, weights=flat.imag, minlength=dim
    )
    safe = np.where(counts > 0, counts, 1)
    mean = sums / safe
    return TensorState(mean[canon].reshape(psi.amps.shape), psi.cell, symmetric=True)


def symmetrize_reference(psi: TensorState) -> TensorState:
    """Explicit N!-permutation average; small-N oracle for :func:`symmetrize`."""
    n = psi.particles
    acc = np.zeros_like(psi.amps)
    count = 0
    for perm in permutations(range(n)):
        acc += np.transpose(psi.amps, perm)
        count += 1
    return TensorState(acc / count, psi.cell, symmetric=True)


def transposition_residual(psi: TensorState) -> float:
    """Max relative deviation under adjacent coordinate swaps (generators of S_N)."""
    n = psi.particles
    if n <= 1:
        return 0.0
    norm = np.linalg.norm(psi.amps.ravel())
    if norm == 0:
        return 0.0
    worst = 0.0
    for i in range(n - 1):
        swapped = np.swapaxes(psi.amps, i, i + 1)
        worst = max(worst, float(np.linalg.norm((psi.amps - swapped).ravel()) / norm))
    return worst


def product_state(phi: np.ndarray, n_particles: int, cell: float) -> TensorState:
    """phi tensored with itself N times; symmetric by construction."""
    phi = np.asarray(phi, dtype=np.complex128)
    amps = phi
    for _ in range(n_particles - 1):
        amps = np.multiply.outer(amps, phi)
    if n_particles == 0:
        amps = np.array(1.0 + 0.0j)
    return TensorState(amps, cell, symmetric=True)


def random_symmetric(m: int, n_particles: int, cell: float, rng: np.random.Generator) -> TensorState:
    """Normalised random state in the symmetric subspace."""
    shape = (m,) * n_particles
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    sym = symmetrize(TensorState(raw.astype(np.complex128), cell))
    return (1.0 / sym.norm()) * sym
