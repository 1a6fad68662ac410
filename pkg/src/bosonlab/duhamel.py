"""Correction hierarchy on top of the auxiliary evolution.

The order-a approximant is a sum of iterated-integral terms T_n^(k), one per
n-tuple over {cubic, quartic} insertions whose labels add to k.  Instead of
nested simplex integrals, the terms are realised as one coupled linear ODE
system

    i dPhi_n^(k)/dt = Htilde(t) Phi_n^(k) + C(t) Phi_{n-1}^(k-1) + Q(t) Phi_{n-1}^(k-2),

with Phi_0^(0)(0) = psi_0 and every other member starting at zero; the
simplex integrals satisfy exactly this recursion, so the hierarchy equals the
integral definition while reusing the shared one-step kernel.  Nested
composite-trapezoid quadrature over the ordered simplex is kept as an
independent oracle for n <= 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import IntegratorError, RangeError
from .hamiltonians import apply_C, apply_Htilde, apply_Q, pieces_at
from .meanfield import HartreeTrajectory, hartree_evolve, hartree_rhs
from .model import Model, validate_config
from .propagation import evolve_full, march_aux, rk4_step

__all__ = [
    "tuple_set",
    "hierarchy_indices",
    "Hierarchy",
    "hierarchy_evolve",
    "assemble",
    "quadrature_Tnk",
    "first_order_defect_quadrature",
    "correction_error",
    "CorrectionResult",
]


def tuple_set(n: int, k: int) -> list[tuple[int, ...]]:
    """All n-tuples over {1, 2} whose entries sum to k; empty off n <= k <= 2n."""
    if n < 0:
        raise ValueError("tuple length must be nonnegative")
    if n == 0:
        return [()] if k == 0 else []
    if k < n or k > 2 * n:
        return []
    out = []
    for twos in combinations(range(n), k - n):
        entry = [1] * n
        for pos in twos:
            entry[pos] = 2
        out.append(tuple(entry))
    return out


def hierarchy_indices(order: int) -> list[tuple[int, int]]:
    """(n, k) pairs stored by an order-a hierarchy: n <= k <= min(2n, a-1)."""
    out = []
    for n in range(order):
        for k in range(n, min(2 * n, order - 1) + 1):
            out.append((n, k))
    return out


@dataclass
class Hierarchy:
    """Coupled family of correction terms advanced to a common time."""

    order: int
    t: float
    entries: dict
    trajectory: HartreeTrajectory

    def norms(self) -> dict:
        return {key: state.norm() for key, state in self.entries.items()}


def hierarchy_evolve(psi0, order: int, t: float, trajectory: HartreeTrajectory) -> Hierarchy:
    """Advance the full hierarchy from 0 to t as one synchronous staged system.

    Source states enter each stage at the same internal stage values as the
    states they feed, preserving fourth-order accuracy of the coupled system.
    """
    if order < 1:
        raise ValueError("hierarchy order must be >= 1")
    model = trajectory.model
    indices = hierarchy_indices(order)
    pos = {key: i for i, key in enumerate(indices)}
    zero = 0.0 * psi0
    states = [psi0.copy() if key == (0, 0) else zero.copy() for key in indices]

    def rhs(time, y):
        phi = y[0]
        members = y[1:]
        pieces = pieces_at(phi, time, model)
        out = [hartree_rhs(phi, time, model)]
        for key, state in zip(indices, members):
            n, k = key
            acc = apply_Htilde(pieces, state, model)
            src_c = (n - 1, k - 1)
            if src_c in pos:
                acc = acc + apply_C(pieces, members[pos[src_c]], model)
            src_q = (n - 1, k - 2)
            if src_q in pos:
                acc = acc + apply_Q(pieces, members[pos[src_q]], model)
            out.append(-1j * acc)
        return out

    dt = trajectory.dt
    i1 = trajectory.index_of(t)
    y = [trajectory.phi(0).copy()] + states
    norm0 = psi0.norm()
    for i in range(i1):
        y = rk4_step(rhs, i * dt, y, dt)
        lead = y[1 + pos[(0, 0)]].norm()
        if not math.isfinite(lead):
            raise IntegratorError(f"hierarchy produced non-finite norms at t={i * dt:.6g}")
        if abs(lead - norm0) > 1e-6:
            raise IntegratorError(
                f"hierarchy leading-term norm drift {abs(lead - norm0):.3e} exceeds 1e-6"
            )

    entries = {key: state for key, state in zip(indices, y[1:])}
    return Hierarchy(order=order, t=t, entries=entries, trajectory=trajectory)


def assemble(hierarchy: Hierarchy, order: int):
    """Partial sum psi^(a) = sum_{k=0}^{a-1} sum_{n=ceil(k/2)}^{k} T_n^(k).

    The result is a raw Duhamel partial sum; no normalisation is applied.
    """
    if order < 1 or order > hierarchy.order:
        raise ValueError(f"order {order} exceeds hierarchy order {hierarchy.order}")
    total = None
    for k in range(order):
        for n in range((k + 1) // 2, k + 1):
            state = hierarchy.entries.get((n, k))
            if state is None:
                continue
            total = state.copy() if total is None else total + state
    return total


# ---------------------------------------------------------------------------
# quadrature oracle
# ---------------------------------------------------------------------------

def _insertion(label: int, pieces, state, model):
    return apply_C(pieces, state, model) if label == 1 else apply_Q(pieces, state, model)


def _node_indices(i_end: int, stride: int) -> list[int]:
    if i_end % stride != 0:
        raise ValueError(f"quadrature stride {stride} must divide {i_end} grid steps")
    return list(range(0, i_end + 1, stride))


def _trap_weights(count: int, delta: float) -> np.ndarray:
    w = np.full(count, delta)
    if count == 1:
        return np.zeros(1)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def _collect_chi(psi0, nodes, trajectory):
    """March psi0 under the auxiliary flow, storing the state at every node."""
    stored = {}
    node_set = set(nodes)

    def observer(i, t, y):
        if i in node_set:
            stored[i] = y[1].copy()

    march_aux([trajectory.phi(0).copy(), psi0.copy()], 0, nodes[-1], trajectory, observer)
    return stored


def _accumulate_to_end(contribs: dict, nodes, trajectory):
    """Propagate node-attached contributions to the final time under Htilde."""
    zero = None
    for v in contribs.values():
        zero = 0.0 * v
        break
    y = [trajectory.phi(nodes[0]).copy(), zero]
    for pos, i in enumerate(nodes):
        if i in contribs:
            y[1] = y[1] + contribs[i]
        if pos < len(nodes) - 1:
            y = march_aux(y, i, nodes[pos + 1], trajectory)
    return y[1]


def quadrature_Tnk(n: int, k: int, t: float, psi0, trajectory: HartreeTrajectory, stride: int = 4):
    """Direct composite-trapezoid evaluation of T_n^(k) for n in {1, 2}.

    Independent of the hierarchy: insertions are sampled only at quadrature
    nodes and transported between nodes by the plain auxiliary flow, so the
    error is governed by the trapezoid rule, not the stepper.
    """
    if n not in (1, 2):
        raise ValueError("quadrature oracle covers n in {1, 2} only")
    model = trajectory.model
    dt = trajectory.dt
    i_end = trajectory.index_of(t)
    tuples = tuple_set(n, k)
    if not tuples or i_end == 0:
        return 0.0 * psi0

    nodes = _node_indices(i_end, stride)
    delta = stride * dt
    outer_w = _trap_weights(len(nodes), delta)
    chi = _collect_chi(psi0, nodes, trajectory)
    node_pieces = {i: pieces_at(trajectory.phi(i), i * dt, model) for i in nodes}

    contribs: dict = {}

    def add(i, value):
        contribs[i] = contribs[i] + value if i in contribs else value

    if n == 1:
        (label,) = tuples[0]
        for pos, i in enumerate(nodes):
            add(i, outer_w[pos] * (-1j) * _insertion(label, node_pieces[i], chi[i], model))
        return _accumulate_to_end(contribs, nodes, trajectory)

    for j1, j2 in tuples:
        for pos_i, i in enumerate(nodes):
            tail = nodes[pos_i:]
            inner_w = _trap_weights(len(tail), delta)
            y = [trajectory.phi(i).copy(), (-1j) * _insertion(j1, node_pieces[i], chi[i], model)]
            for pos_j, j in enumerate(tail):
                weight = outer_w[pos_i] * inner_w[pos_j]
                if weight != 0.0:
                    add(j, weight * (-1j) * _insertion(j2, node_pieces[j], y[1], model))
                if pos_j < len(tail) - 1:
                    y = march_aux(y, j, tail[pos_j + 1], trajectory)
    return _accumulate_to_end(contribs, nodes, trajectory)


def first_order_defect_quadrature(psi0, t: float, trajectory: HartreeTrajectory, stride: int = 4):
    """Quadrature of -i int_0^t U(t,s) (C + Q)(s) Utilde(s,0) psi0 ds.

    Node contributions are transported to the final time by the *full*
    evolution, providing an independent check of psi(t) - psi^(1)(t).
    """
    model = trajectory.model
    dt = trajectory.dt
    i_end = trajectory.index_of(t)
    if i_end == 0:
        return 0.0 * psi0
    nodes = _node_indices(i_end, stride)
    outer_w = _trap_weights(len(nodes), stride * dt)
    chi = _collect_chi(psi0, nodes, trajectory)

    acc = 0.0 * psi0
    for pos, i in enumerate(nodes):
        pieces = pieces_at(trajectory.phi(i), i * dt, model)
        kick = apply_C(pieces, chi[i], model) + apply_Q(pieces, chi[i], model)
        acc = acc + outer_w[pos] * (-1j) * kick
        if pos < len(nodes) - 1:
            acc = evolve_full(acc, nodes[pos + 1] * dt, model, t0=i * dt)
    return acc


# ---------------------------------------------------------------------------
# correction error
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrectionResult:
    order: int
    t: float
    error: float
    error_sq: float
    correction_norm: float
    term_norms: dict


def correction_error(
    psi0,
    phi0: np.ndarray,
    order: int,
    t: float,
    model: Model,
    trajectory: HartreeTrajectory | None = None,
    hierarchy: Hierarchy | None = None,
    allow_out_of_range: bool = False,
) -> CorrectionResult:
    """Norm distance between the true evolution and the order-a approximant."""
    if not allow_out_of_range:
        try:
            validate_config(model.config, correction_run=True)
        except RangeError:
            raise
    if trajectory is None:
        trajectory = hartree_evolve(phi0, 0.0, t, model)
    if hierarchy is None or hierarchy.order < order:
        hierarchy = hierarchy_evolve(psi0, order, t, trajectory)
    approx = assemble(hierarchy, order)
    full = evolve_full(psi0, t, model)
    err = (full - approx).norm()
    return CorrectionResult(
        order=order,
        t=t,
        error=err,
        error_sq=err**2,
        correction_norm=approx.norm(),
        term_norms=hierarchy.norms(),
    )
