"""Lattice Hartree dynamics of the condensate and its derived fields.

The condensate obeys  i d/dt phi = (-Lap + V_ext(t) + vbar - mu) phi  with
vbar the interaction smeared by |phi|^2 and mu a real phase fixing constant.
The fixed-step classical fourth-order integrator stores phi at every grid
time so that all N-body evolutions can consume the identical trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IntegratorError
from .model import Model

__all__ = [
    "Condensate",
    "HartreeTrajectory",
    "vbar",
    "mu",
    "condensate_at",
    "hartree_rhs",
    "hartree_evolve",
    "hk_proxy",
    "one_body_norm",
]

DRIFT_ABORT = 1e-6


def one_body_norm(phi: np.ndarray, cell: float) -> float:
    return float(np.sqrt(cell * np.vdot(phi, phi).real))


def vbar(phi: np.ndarray, pair, cell: float) -> np.ndarray:
    """Mean-field potential (w * |phi|^2)(x) as a min-image lattice convolution."""
    wmat = np.asarray(getattr(pair, "mat", pair))
    density = np.abs(np.asarray(phi)) ** 2
    return cell * (wmat @ density)


def mu(phi: np.ndarray, pair, cell: float) -> float:
    """Phase-fixing constant: half the interaction energy of the density."""
    vb = vbar(phi, pair, cell)
    density = np.abs(np.asarray(phi)) ** 2
    return float(0.5 * cell * np.dot(density, vb))


@dataclass(frozen=True)
class Condensate:
    """Condensate amplitudes at a time stamp with consistent derived caches."""

    phi: np.ndarray
    t: float
    vbar: np.ndarray
    mu: float
    hmat: np.ndarray  # one-body generator -Lap + V_ext(t) + diag(vbar) - mu

    def norm(self, cell: float) -> float:
        return one_body_norm(self.phi, cell)


def condensate_at(phi: np.ndarray, t: float, model: Model) -> Condensate:
    phi = np.asarray(phi, dtype=np.complex128)
    vb = vbar(phi, model.pair, model.cell)
    m = float(0.5 * model.cell * np.dot(np.abs(phi) ** 2, vb))
    hmat = model.h0(t) + np.diag(vb).astype(np.complex128) - m * np.eye(phi.size)
    return Condensate(phi=phi, t=t, vbar=vb, mu=m, hmat=hmat)


def hartree_rhs(phi: np.ndarray, t: float, model: Model) -> np.ndarray:
    """Right-hand side -i h[phi](t) phi of the Hartree equation."""
    cond = condensate_at(phi, t, model)
    return -1j * (cond.hmat @ cond.phi)


def _rk4_phi(phi: np.ndarray, t: float, dt: float, model: Model) -> np.ndarray:
    k1 = hartree_rhs(phi, t, model)
    k2 = hartree_rhs(phi + 0.5 * dt * k1, t + 0.5 * dt, model)
    k3 = hartree_rhs(phi + 0.5 * dt * k2, t + 0.5 * dt, model)
    k4 = hartree_rhs(phi + dt * k3, t + dt, model)
    return phi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class HartreeTrajectory:
    """Condensate stored at every grid time, immutable after construction."""

    model: Model
    times: np.ndarray
    phis: np.ndarray     # (steps+1, M)
    mus: np.ndarray
    norms: np.ndarray
    hk: np.ndarray       # discrete Sobolev proxy per step

    @property
    def dt(self) -> float:
        return self.model.config.dt

    def index_of(self, t: float) -> int:
        i = int(round(t / self.dt))
        if not 0 <= i < len(self.times) or abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not on the stored grid")
        return i

    def phi(self, i: int) -> np.ndarray:
        return self.phis[i]

    def condensate(self, i: int) -> Condensate:
        return condensate_at(self.phis[i], float(self.times[i]), self.model)

    def hk_integral(self, i0: int, i1: int) -> float:
        """Trapezoid of the Sobolev proxy over [t_i0, t_i1]."""
        if i1 == i0:
            return 0.0
        seg = self.hk[i0 : i1 + 1]
        return float(np.trapezoid(seg, dx=self.dt))


def hartree_evolve(phi0: np.ndarray, t0: float, t1: float, model: Model) -> HartreeTrajectory:
    """Integrate the Hartree equation over the global grid, storing every step.

    No renormalisation is applied; the norm drift is a diagnostic, aborting
    above 1e-6.
    """
    cfg = model.config
    dt = cfg.dt
    i0, i1 = int(round(t0 / dt)), int(round(t1 / dt))
    if i1 < i0:
        raise ValueError("t1 must be >= t0")
    steps = i1 - i0
    phi = np.asarray(phi0, dtype=np.complex128).copy()
    m = phi.size
    phis = np.empty((steps + 1, m), dtype=np.complex128)
    mus = np.empty(steps + 1)
    norms = np.empty(steps + 1)
    hks = np.empty(steps + 1)

    norm0 = one_body_norm(phi, model.cell)
    for k in range(steps + 1):
        t = (i0 + k) * dt
        phis[k] = phi
        mus[k] = mu(phi, model.pair, model.cell)
        norms[k] = one_body_norm(phi, model.cell)
        hks[k] = hk_proxy(phi, model)
        if abs(norms[k] - norm0) > DRIFT_ABORT:
            raise IntegratorError(
                f"condensate norm drift {abs(norms[k] - norm0):.3e} at t={t:.6g} exceeds {DRIFT_ABORT}"
            )
        if k < steps:
            phi = _rk4_phi(phi, t, dt, model)
            if not np.all(np.isfinite(phi)):
                raise IntegratorError(f"non-finite condensate amplitudes after step at t={t:.6g}")

    times = (np.arange(steps + 1) + i0) * dt
    return HartreeTrajectory(model=model, times=times, phis=phis, mus=mus, norms=norms, hk=hks)


def hk_proxy(phi: np.ndarray, model: Model) -> float:
    """Discrete Sobolev diagnostic sum_k (1 + |k|^2)^s |phi_hat(k)|^2, s = ceil(d/2).

    Normalised so that the s = 0 value equals the squared lattice norm; this
    is a proxy only, no continuum-equivalence claim is attached to it.
    """
    cfg = model.config
    L, d, h = cfg.sites_per_dim, cfg.dimension, cfg.spacing
    grid = np.asarray(phi, dtype=np.complex128).reshape((L,) * d)
    phat = np.fft.fftn(grid) * (h**d / np.sqrt(cfg.torus_length**d))
    k1 = 2.0 * np.pi * np.fft.fftfreq(L, d=h)
    if d == 1:
        ksq = k1**2
    else:
        ka, kb = np.meshgrid(k1, k1, indexing="ij")
        ksq = ka**2 + kb**2
    s = (d + 1) // 2
    return float(np.sum((1.0 + ksq) ** s * np.abs(phat) ** 2))


def hartree_energy(phi: np.ndarray, t: float, model: Model) -> float:
    """Energy proxy <phi, (-Lap + V_ext) phi> + mu (reported in trace CSVs)."""
    cond = condensate_at(phi, t, model)
    h0 = model.h0(t)
    kin = model.cell * np.vdot(phi, h0 @ phi).real
    return float(kin + cond.mu)
