"""Occupation-number representation of the symmetric N-boson subspace.

States are expansion coefficients over the orthonormal basis |n_1 ... n_M>
built from the site modes e_r = delta_r / cell**(1/2).  In that basis the
matrix elements of any one-body lift equal the raw M x M coefficient table,
so tables pass between representations unchanged.  The compressed dimension
C(N+M-1, N) is what makes particle numbers beyond the dense tensor ceiling
reachable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .tensorstate import TensorState, transposition_residual

__all__ = [
    "OccupationBasis",
    "FockSpace",
    "FockState",
    "enumerate_basis",
    "dgamma_apply",
    "pair_apply",
    "embed",
    "extract",
    "inner",
    "product_fock",
    "random_fock",
    "pair_diagonal",
]

BASIS_CEILING = 2_000_000


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class OccupationBasis:
    """Deterministic (lexicographically descending) occupation-vector basis."""

    occupations: np.ndarray  # (dim, M) int64, each row sums to N
    particles: int
    sites: int

    @property
    def dim(self) -> int:
        return self.occupations.shape[0]

    def index_of(self, occ) -> int:
        key = tuple(int(x) for x in occ)
        try:
            return self._index[key]
        except AttributeError:
            index = {tuple(int(x) for x in row): i for i, row in enumerate(self.occupations)}
            object.__setattr__(self, "_index", index)
            return self._index[key]


def enumerate_basis(sites: int, particles: int, ceiling: int = BASIS_CEILING) -> OccupationBasis:
    """All occupation vectors (n_1 ... n_M) with sum N, descending lexicographic."""
    if sites < 1 or particles < 0:
        raise ConfigError(f"invalid basis request M={sites}, N={particles}")
    dim = math.comb(particles + sites - 1, particles)
    if dim > ceiling:
        raise ConfigError(
            f"occupation basis dimension C({particles + sites - 1},{particles}) = {dim} "
            f"exceeds ceiling {ceiling}"
        )
    occ = np.array(list(_compositions(particles, sites)), dtype=np.int64).reshape(dim, sites)
    return OccupationBasis(occupations=occ, particles=particles, sites=sites)


class FockSpace:
    """Occupation basis plus precomputed hop tables for one-body lifts.

    For basis row b and modes (r, s), ``targets[b, r, s]`` is the basis index
    of n - e_s + e_r and ``factors[b, r, s]`` the matrix element
    sqrt(n_s) * sqrt(n_r + 1 - delta_rs) of the mode hop; rows with n_s = 0
    carry factor 0.
    """

    def __init__(self, basis: OccupationBasis, cell: float):
        self.basis = basis
        self.cell = float(cell)
        self.particles = basis.particles
        self.sites = basis.sites
        dim, m = basis.dim, basis.sites
        occ = basis.occupations
        targets = np.zeros((dim, m, m), dtype=np.int64)
        factors = np.zeros((dim, m, m), dtype=np.float64)
        for b in range(dim):
            n = occ[b]
            for s in range(m):
                if n[s] == 0:
                    continue
                for r in range(m):
                    shifted = n.copy()
                    shifted[s] -= 1
                    shifted[r] += 1
                    targets[b, r, s] = basis.index_of(shifted)
                    factors[b, r, s] = math.sqrt(n[s] * (n[r] + 1 - (1 if r == s else 0)))
        self.targets = targets
        self.factors = factors
        self._flat_targets = targets.reshape(dim, -1)

    def zero_state(self) -> "FockState":
        return FockState(np.zeros(self.basis.dim, dtype=np.complex128), self)


@dataclass
class FockState:
    amps: np.ndarray
    space: FockSpace

    @property
    def particles(self) -> int:
        return self.space.particles

    @property
    def sites(self) -> int:
        return self.space.sites

    @property
    def cell(self) -> float:
        return self.space.cell

    def copy(self) -> "FockState":
        return FockState(self.amps.copy(), self.space)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def __add__(self, other: "FockState") -> "FockState":
        return FockState(self.amps + other.amps, self.space)

    def __sub__(self, other: "FockState") -> "FockState":
        return FockState(self.amps - other.amps, self.space)

    def __mul__(self, scalar) -> "FockState":
        return FockState(self.amps * scalar, self.space)

    __rmul__ = __mul__


def inner(a: FockState, b: FockState) -> complex:
    if a.amps.shape != b.amps.shape:
        raise ValueError("occupation states live on different bases")
    return complex(np.vdot(a.amps, b.amps))


def dgamma_apply(op, state: FockState) -> FockState:
    """Second-quantised lift of a one-body table: sum_j op acting on slot j."""
    mat = np.asarray(getattr(op, "mat", op), dtype=np.complex128)
    space = state.space
    if mat.shape != (space.sites, space.sites):
        raise ValueError(f"table shape {mat.shape} does not match M={space.sites}")
    vals = (space.factors * mat[None, :, :]) * state.amps[:, None, None]
    flat = vals.reshape(space.basis.dim, -1).ravel()
    tgt = space._flat_targets.ravel()
    dim = space.basis.dim
    out = np.bincount(tgt, weights=flat.real, minlength=dim) + 1j * np.bincount(
        tgt, weights=flat.imag, minlength=dim
    )
    return FockState(out, space)


def pair_apply(x, y, state: FockState) -> FockState:
    """sum_{i != j} X_i Y_j, via dG(X) dG(Y) - dG(XY); ordered pairs counted."""
    xmat = np.asarray(getattr(x, "mat", x), dtype=np.complex128)
    ymat = np.asarray(getattr(y, "mat", y), dtype=np.complex128)
    return dgamma_apply(xmat, dgamma_apply(ymat, state)) - dgamma_apply(xmat @ ymat, state)


def pair_diagonal(space: FockSpace, pair) -> np.ndarray:
    """Diagonal of sum_{i<j} w(x_i - x_j) over the occupation basis.

    The position-diagonal kernel expands over rank-one site projectors, so
    the lift is (1/2) (n^T W n - sum_r W_rr n_r) per basis vector.
    """
    wmat = np.asarray(getattr(pair, "mat", pair), dtype=float)
    occ = space.basis.occupations.astype(float)
    quad = np.einsum("bm,mn,bn->b", occ, wmat, occ)
    lin = occ @ np.diag(wmat)
    return 0.5 * (quad - lin)


def _multiset_permutations(items):
    """Distinct permutations of a sorted tuple, lexicographic order."""
    items = list(items)
    if not items:
        yield ()
        return
    seen = set()
    for i, head in enumerate(items):
        if head in seen:
            continue
        seen.add(head)
        for rest in _multiset_permutations(items[:i] + items[i + 1 :]):
            yield (head,) + rest


def _occupation_sqrt_factor(occ) -> float:
    num = math.factorial(int(sum(occ)))
    den = 1
    for n in occ:
        den *= math.factorial(int(n))
    return math.sqrt(num / den)


def _representative(occ) -> tuple:
    sites = []
    for r, n in enumerate(occ):
        sites.extend([r] * int(n))
    return tuple(sites)


def embed(state: FockState) -> TensorState:
    """Expand an occupation state onto the dense tensor grid (norm preserving)."""
    space = state.space
    n, m, cell = space.particles, space.sites, space.cell
    amps = np.zeros((m,) * n, dtype=np.complex128)
    scale = cell ** (-n / 2)
    for b, occ in enumerate(space.basis.occupations):
        coeff = state.amps[b]
        if coeff == 0:
            continue
        value = coeff * scale / _occupation_sqrt_factor(occ)
        for arrangement in _multiset_permutations(_representative(occ)):
            amps[arrangement] = value
    return TensorState(amps, cell, symmetric=True)


def extract(psi: TensorState, space: FockSpace) -> FockState:
    """Compress a symmetric tensor state onto the occupation basis."""
    if psi.particles != space.particles or psi.sites != space.sites:
        raise ValueError("tensor state does not match the occupation basis")
    if transposition_residual(psi) > 1e-10:
        raise ValueError("extract requires a symmetric tensor state")
    n, cell = space.particles, space.cell
    scale = cell ** (n / 2)
    amps = np.empty(space.basis.dim, dtype=np.complex128)
    for b, occ in enumerate(space.basis.occupations):
        rep = _representative(occ)
        amps[b] = psi.amps[rep] * _occupation_sqrt_factor(occ) * scale
    return FockState(amps, space)


def product_fock(phi: np.ndarray, space: FockSpace) -> FockState:
    """Occupation coefficients of the pure condensate phi^(x)N."""
    phi_modes = np.sqrt(space.cell) * np.asarray(phi, dtype=np.complex128)
    occ = space.basis.occupations
    monomials = np.prod(phi_modes[None, :] ** occ, axis=1)
    weights = np.array([_occupation_sqrt_factor(row) for row in occ])
    return FockState(weights * monomials, space)


def random_fock(space: FockSpace, rng: np.random.Generator) -> FockState:
    raw = rng.standard_normal(space.basis.dim) + 1j * rng.standard_normal(space.basis.dim)
    raw /= np.linalg.norm(raw)
    return FockState(raw, space)
