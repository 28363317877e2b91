"""Variational (implicit) time integrator in log-density variables.

One step solves the implicit relation

    N1 - N0 = h [ div(N0 grad Phi_{N1}) - Omega_{N0} Phi_{N1} ]

for N1 = exp(Psi0 + h psi).  Written out for the increment psi, the
equation becomes a fixed point

    psi = Hinv_h( A + h B(psi) - E2(h psi) / h ),    Hinv_h = (1 - h lap)^{-1}

with E2(x) = e^x - 1 - x and

    A      = lap Psi0 + |grad Psi0|^2 + lap w0 + grad w0 . grad Psi0
             - Phi0 * Omega0,
    B(psi) = lap w_psi + grad w_psi . grad Psi0 + grad psi . grad Psi0
             - psi Omega0 - w_psi Omega0,

where Omega0 = exp(-Psi0) Omega_{N0}, Phi0 = Psi0 - mu + w0 and
h w_psi = W * ( exp(Psi0) (exp(h psi) - 1) ).  The iteration starts at
psi = Hinv_h(A); a monotone-growth guard flags divergence (h too large).
A equals exp(-Psi0) * rhs(N0), so uniform equilibrium gives A == 0 and the
step is an exact fixed point there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import spectral, thermo
from .dynamics import DiagnosticsRecord, SimState, Trajectory, diagnostics
from .errors import InnerDivergence, NonpositiveDensity, ResidualTooLarge
from .spectral import RealField
from .thermo import ModelParams


@dataclass(frozen=True)
class JkoConfig:
    h: float
    inner_tol: float = 1e-12  # D0 stopping tolerance on psi increments
    max_inner: int = 200
    residual_tol: float = 1e-9
    relaxation: float = 1.0  # optional damping factor in (0, 1]

    def __post_init__(self):
        if self.h <= 0 or self.inner_tol <= 0 or self.residual_tol <= 0:
            raise ValueError("h, inner_tol, residual_tol must be positive")
        if not (0.0 < self.relaxation <= 1.0):
            raise ValueError(f"relaxation must be in (0, 1], got {self.relaxation}")


@dataclass
class JkoStepReport:
    inner_iters: int
    d0_psi: float  # D0 norm of the log-density rate psi = (Psi1 - Psi0)/h
    residual: float  # weak residual of the implicit step relation
    norm_delta_d2: float  # D2 norm of the increment Psi1 - Psi0 (= h D2(psi))
    norm_delta_d1: float  # D1 norm of the increment


@dataclass
class _Frozen:
    """Per-step quantities that depend only on the starting state."""

    grad_psi0: tuple
    omega0: np.ndarray  # exp(-Psi0) * Omega_{N0}
    a: RealField


def _freeze(state: SimState) -> _Frozen:
    g = state.n.grid
    p = state.params
    psi0, n0, w0 = state.psi, state.n, state.wn
    grad_psi0 = spectral.gradient(psi0)
    phi0 = RealField(g, psi0.values - p.mu + w0.values)
    om_n0 = thermo.omega(n0, p, phi=phi0)
    omega0 = np.exp(-psi0.values) * om_n0.values
    lap_psi0 = spectral.laplacian(psi0)
    lap_w0 = spectral.laplacian(w0)
    grad_w0 = spectral.gradient(w0)
    grad_sq = sum(gp.values * gp.values for gp in grad_psi0)
    grad_dot = sum(gw.values * gp.values for gw, gp in zip(grad_w0, grad_psi0))
    a = RealField(
        g,
        lap_psi0.values + grad_sq + lap_w0.values + grad_dot - phi0.values * omega0,
    )
    return _Frozen(grad_psi0=grad_psi0, omega0=omega0, a=a)


def assemble_A(state: SimState) -> RealField:
    """The psi-independent block of the fixed-point equation."""
    return _freeze(state).a


def _w_psi(state: SimState, psi: RealField, h: float) -> RealField:
    """w_psi with h * w_psi = W * ( N0 * (exp(h psi) - 1) )."""
    g = state.n.grid
    src = RealField(g, state.n.values * np.expm1(h * psi.values) / h)
    return spectral.convolve(state.params.kernel.spectrum, src)


def _assemble_b(frozen: _Frozen, state: SimState, psi: RealField, h: float) -> RealField:
    g = state.n.grid
    wp = _w_psi(state, psi, h)
    lap_wp = spectral.laplacian(wp)
    grad_wp = spectral.gradient(wp)
    grad_psi = spectral.gradient(psi)
    dot_wp = sum(gw.values * gp.values for gw, gp in zip(grad_wp, frozen.grad_psi0))
    dot_psi = sum(gn.values * gp.values for gn, gp in zip(grad_psi, frozen.grad_psi0))
    b = lap_wp.values + dot_wp + dot_psi - psi.values * frozen.omega0 - wp.values * frozen.omega0
    return RealField(g, b)


def assemble_B(state: SimState, psi: RealField, h: float) -> RealField:
    """The psi-dependent block (per unit h)."""
    return _assemble_b(_freeze(state), state, psi, h)


def _e2_over_h(psi: np.ndarray, h: float) -> np.ndarray:
    """(exp(h psi) - 1 - h psi) / h, cancellation-safe via expm1."""
    return (np.expm1(h * psi) - h * psi) / h


def jko_step(state: SimState, cfg: JkoConfig) -> tuple:
    """One implicit step; returns (new state, JkoStepReport).

    Raises InnerDivergence when the D0 norm of the iterates grows for five
    consecutive iterations (the step size is too large for the contraction),
    and ResidualTooLarge when the converged step fails the weak-residual
    acceptance bound.
    """
    h = cfg.h
    g = state.n.grid
    frozen = _freeze(state)
    psi = spectral.helmholtz_inverse(frozen.a, h)
    prev_d0 = spectral.dnorm(psi, 0)
    growth_streak = 0
    iters = 0
    for iters in range(1, cfg.max_inner + 1):
        b = _assemble_b(frozen, state, psi, h)
        rhs = RealField(g, frozen.a.values + h * b.values - _e2_over_h(psi.values, h))
        psi_next = spectral.helmholtz_inverse(rhs, h)
        if cfg.relaxation < 1.0:
            psi_next = RealField(
                g, (1.0 - cfg.relaxation) * psi.values + cfg.relaxation * psi_next.values
            )
        delta = spectral.dnorm(RealField(g, psi_next.values - psi.values), 0)
        d0 = spectral.dnorm(psi_next, 0)
        if not np.isfinite(d0):
            raise InnerDivergence(f"inner iterate blew up at iteration {iters}")
        if d0 > prev_d0 * (1.0 + 1e-15):
            growth_streak += 1
            if growth_streak >= 5:
                raise InnerDivergence(
                    f"iterate norm grew for {growth_streak} consecutive iterations "
                    f"(h = {h} too large)"
                )
        else:
            growth_streak = 0
        psi = psi_next
        prev_d0 = d0
        if delta <= cfg.inner_tol:
            break
    else:
        raise InnerDivergence(f"no inner convergence within {cfg.max_inner} iterations")

    psi1 = RealField(g, state.psi.values + h * psi.values)
    new_state = SimState.from_psi(state.t + h, psi1, state.params)
    resid = residual_implicit(state.n, new_state.n, h, state.params)
    if resid > cfg.residual_tol:
        raise ResidualTooLarge(f"weak residual {resid:.3e} > {cfg.residual_tol:.3e}")
    report = JkoStepReport(
        inner_iters=iters,
        d0_psi=spectral.dnorm(psi, 0),
        residual=resid,
        norm_delta_d2=h * spectral.dnorm(psi, 2),
        norm_delta_d1=h * spectral.dnorm(psi, 1),
    )
    return new_state, report


def residual_implicit(n0: RealField, n1: RealField, h: float, params: ModelParams) -> float:
    """Relative strong-form residual of the implicit step relation:

        || (N1 - N0)/h - div(N0 grad Phi_{N1}) + Omega_{N0} Phi_{N1} ||_L2
        / max(1, ||(N1 - N0)/h||_L2).

    The grid Fourier basis is dense in the test space, so the strong grid
    residual stands in for testing against all admissible test functions.
    """
    if np.min(n0.values) <= 0 or np.min(n1.values) <= 0:
        raise NonpositiveDensity("both densities must be positive")
    g = n0.grid
    phi1 = thermo.potential_phi(n1, params)
    om0 = thermo.omega(n0, params)
    grad_phi1 = spectral.gradient(phi1)
    flux = tuple(RealField(g, n0.values * gp.values) for gp in grad_phi1)
    div = spectral.divergence(flux)
    rate = (n1.values - n0.values) / h
    defect = RealField(g, rate - div.values + om0.values * phi1.values)
    scale = max(1.0, spectral.l2_norm(RealField(g, rate)))
    return spectral.l2_norm(defect) / scale


def jko_evolve(state: SimState, T: float, cfg: JkoConfig,
               observers: list | None = None,
               stride: int = 1,
               snapshot_every: int | None = None) -> Trajectory:
    """Repeated implicit steps with per-step reports merged into the
    diagnostics stream.  Tracks the running bound b0 = max ||psi||_D0."""
    if T <= 0:
        raise ValueError("T must be positive")
    n_steps = max(1, int(round(T / cfg.h)))
    traj = Trajectory()
    b0 = 0.0
    for step in range(1, n_steps + 1):
        try:
            state, report = jko_step(state, cfg)
        except Exception as exc:
            traj.error = f"{type(exc).__name__}: {exc}"
            break
        b0 = max(b0, report.d0_psi)
        rec = None
        if step % stride == 0 or step == n_steps:
            rec = diagnostics(step, state, inner_iters=report.inner_iters,
                              residual=report.residual)
            traj.records.append(rec)
        if snapshot_every and step % snapshot_every == 0:
            traj.snapshots.append(state)
        if observers:
            for obs in observers:
                obs(step, state, rec)
    traj.psi_d0_bound = b0
    return traj
