"""Shared fixed-step propagators for the full and auxiliary evolutions.

One classical explicit fourth-order kernel drives everything: the plain
Schroedinger flow, the mean-field-coupled auxiliary flow, and (in the
correction module) the whole source-coupled hierarchy.  Composite states are
plain lists whose leaves support ``+`` and scalar ``*``; the condensate rides
along as the first leaf wherever the generator depends on it, so stage values
of phi and of the N-body state stay synchronous within a step.
"""

from __future__ import annotations

import numpy as np

from .errors import IntegratorError
from .hamiltonians import apply_H, apply_Htilde, pieces_at
from .meanfield import HartreeTrajectory, hartree_rhs
from .model import Model

__all__ = ["rk4_step", "step", "evolve_full", "evolve_aux", "march_aux"]

DRIFT_ABORT = 1e-6


def _axpy(y, a, k):
    if isinstance(y, list):
        return [_axpy(yi, a, ki) for yi, ki in zip(y, k)]
    return y + a * k


def _leaf_finite(y) -> bool:
    if isinstance(y, list):
        return all(_leaf_finite(yi) for yi in y)
    amps = getattr(y, "amps", y)
    return bool(np.all(np.isfinite(amps)))


def rk4_step(rhs, t: float, y, dt: float):
    """One classical fourth-order step of y' = rhs(t, y) on a state tree."""
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * dt, _axpy(y, 0.5 * dt, k1))
    k3 = rhs(t + 0.5 * dt, _axpy(y, 0.5 * dt, k2))
    k4 = rhs(t + dt, _axpy(y, dt, k3))
    out = _axpy(y, dt / 6.0, k1)
    out = _axpy(out, dt / 3.0, k2)
    out = _axpy(out, dt / 3.0, k3)
    return _axpy(out, dt / 6.0, k4)


def step(generator, psi, t: float, dt: float):
    """One step of i dpsi/dt = A(t) psi for a generator action A(t, psi)."""
    out = rk4_step(lambda s, y: -1j * generator(s, y), t, psi, dt)
    if not _leaf_finite(out):
        raise IntegratorError(f"non-finite amplitudes after step at t={t:.6g}")
    return out


def _check_drift(norm_now: float, norm0: float, t: float):
    if abs(norm_now - norm0) > DRIFT_ABORT:
        raise IntegratorError(
            f"norm drift {abs(norm_now - norm0):.3e} at t={t:.6g} exceeds {DRIFT_ABORT}"
        )


def evolve_full(psi0, t1: float, model: Model, t0: float = 0.0, observer=None):
    """Propagate under the full Hamiltonian from t0 to t1 on the global grid.

    ``observer(i, t, psi)`` is called at every stored grid index including the
    endpoints.  Returns the final state; cumulative norm drift beyond 1e-6
    aborts.
    """
    cfg = model.config
    dt = cfg.dt
    i0, i1 = int(round(t0 / dt)), int(round(t1 / dt))
    if i1 < i0:
        raise ValueError("t1 must be >= t0")
    psi = psi0.copy()
    norm0 = psi.norm()
    generator = lambda t, y: apply_H(t, y, model)
    for i in range(i0, i1 + 1):
        t = i * dt
        _check_drift(psi.norm(), norm0, t)
        if observer is not None:
            observer(i, t, psi)
        if i < i1:
            psi = step(generator, psi, t, dt)
    return psi


def _aux_rhs(model: Model):
    def rhs(t, y):
        phi, psi = y
        pieces = pieces_at(phi, t, model)
        return [hartree_rhs(phi, t, model), -1j * apply_Htilde(pieces, psi, model)]

    return rhs


def march_aux(y, i0: int, i1: int, trajectory: HartreeTrajectory, observer=None):
    """Advance a [phi, state] pair under the auxiliary generator over grid indices.

    The condensate leaf evolves by its own Hartree flow inside the same staged
    step, so it agrees with the stored trajectory at every grid time.
    """
    model = trajectory.model
    dt = trajectory.dt
    rhs = _aux_rhs(model)
    for i in range(i0, i1):
        if observer is not None:
            observer(i, i * dt, y)
        y = rk4_step(rhs, i * dt, y, dt)
        if not _leaf_finite(y):
            raise IntegratorError(f"non-finite amplitudes after step at t={i * dt:.6g}")
    if observer is not None:
        observer(i1, i1 * dt, y)
    return y


def evolve_aux(psi0, s: float, t: float, trajectory: HartreeTrajectory):
    """Auxiliary evolution from time s to t, restarting phi from the trajectory."""
    i0 = trajectory.index_of(s)
    i1 = trajectory.index_of(t)
    if i1 < i0:
        raise ValueError("t must be >= s")
    norm0 = psi0.norm()
    y = [trajectory.phi(i0).copy(), psi0.copy()]

    def watch(i, time, state):
        _check_drift(state[1].norm(), norm0, time)

    y = march_aux(y, i0, i1, trajectory, observer=watch)
    return y[1]
