"""Direct time integrators for the interacting-diffusion dynamics.

Non-conservative equation (mass exchanges with a reservoir at chemical
potential mu):

    dN/dt = lap N + div(N grad w_N) - N exp(-(mu - w_N)/2) + exp((mu - w_N)/2)

with w_N = W * N.  Equivalently, in advective form,

    dN/dt = div(N grad Phi_N) - Omega_N Phi_N.

Conservative variant (fixed mass): dN/dt = lap N + div(N grad w_N).

States are carried in Psi = log N so positivity is structural; steppers that
produce N directly convert back and fail loudly on nonpositive values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral, thermo
from .errors import PositivityLoss, StabilityViolation
from .spectral import RealField
from .thermo import ModelParams


@dataclass(frozen=True)
class SimState:
    t: float
    psi: RealField  # log-density
    n: RealField  # exp(psi), cached
    wn: RealField  # W * N, cached
    params: ModelParams

    @staticmethod
    def from_density(t: float, n: RealField, params: ModelParams) -> "SimState":
        if np.min(n.values) <= 0:
            raise PositivityLoss(f"min density {np.min(n.values):.3e}")
        psi = RealField(n.grid, np.log(n.values))
        wn = spectral.convolve(params.kernel.spectrum, n)
        return SimState(t, psi, n, wn, params)

    @staticmethod
    def from_psi(t: float, psi: RealField, params: ModelParams) -> "SimState":
        n = RealField(psi.grid, np.exp(psi.values))
        wn = spectral.convolve(params.kernel.spectrum, n)
        return SimState(t, psi, n, wn, params)


@dataclass
class DiagnosticsRecord:
    step: int
    t: float
    mass: float
    g_mu: float
    gap: float
    d0: float  # D-norms of Psi
    d1: float
    d2: float
    n_min: float
    n_max: float
    dissipation: float
    inner_iters: int | None = None
    residual: float | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "step": self.step,
                "t": self.t,
                "mass": self.mass,
                "g_mu": self.g_mu,
                "gap": self.gap,
                "d0": self.d0,
                "d1": self.d1,
                "d2": self.d2,
                "n_min": self.n_min,
                "n_max": self.n_max,
                "dissipation": self.dissipation,
                "inner_iters": self.inner_iters,
                "residual": self.residual,
            }
        )


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # optional SimStates
    error: str | None = None
    psi_d0_bound: float | None = None  # running max ||psi||_D0 (implicit runs)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    @property
    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.records])


def _reaction(state: SimState) -> np.ndarray:
    """-N exp(-(mu - w_N)/2) + exp((mu - w_N)/2)."""
    half = 0.5 * (state.params.mu - state.wn.values)
    return -state.n.values * np.exp(-half) + np.exp(half)


def _transport(state: SimState) -> RealField:
    """lap N + div(N grad w_N), assembled spectrally."""
    g = state.n.grid
    lap_n = spectral.laplacian(state.n)
    grad_w = spectral.gradient(state.wn)
    flux = tuple(RealField(g, state.n.values * gw.values) for gw in grad_w)
    div = spectral.divergence(flux)
    return RealField(g, lap_n.values + div.values)


def rhs_grand(state: SimState) -> RealField:
    transport = _transport(state)
    return RealField(state.n.grid, transport.values + _reaction(state))


def rhs_grand_advective(state: SimState) -> RealField:
    """div(N grad Phi_N) - Omega_N Phi_N; algebraically equal to rhs_grand."""
    g = state.n.grid
    phi = thermo.potential_phi(state.n, state.params, wn=state.wn)
    om = thermo.omega(state.n, state.params, phi=phi)
    grad_phi = spectral.gradient(phi)
    flux = tuple(RealField(g, state.n.values * gp.values) for gp in grad_phi)
    div = spectral.divergence(flux)
    return RealField(g, div.values - om.values * phi.values)


def rhs_canonical(state: SimState) -> RealField:
    return _transport(state)


def _advance_density(state: SimState, n_new: np.ndarray, h: float) -> SimState:
    if np.min(n_new) <= 0.0:
        raise PositivityLoss(
            f"density hit {np.min(n_new):.3e} at t = {state.t + h:.6g} (h too large)"
        )
    return SimState.from_density(state.t + h, RealField(state.n.grid, n_new), state.params)


def step_imex(state: SimState, h: float) -> SimState:
    """Semi-implicit Euler: diffusion implicit via the Helmholtz inverse,
    interaction and reaction terms explicit.  First-order accurate,
    unconditionally stable in the linear diffusive part."""
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    explicit = rhs_grand(state).values - spectral.laplacian(state.n).values
    stage = RealField(state.n.grid, state.n.values + h * explicit)
    n_new = spectral.helmholtz_inverse(stage, h).values
    return _advance_density(state, n_new, h)


def _check_explicit_stability(state: SimState, h: float) -> None:
    kmax2 = float(np.max(state.n.grid.k2))
    if h * kmax2 > 2.7:
        raise StabilityViolation(
            f"h * max|k|^2 = {h * kmax2:.3g} > 2.7; reduce h below {2.7 / kmax2:.3g}"
        )


def _rk4(state: SimState, h: float, rhs) -> SimState:
    _check_explicit_stability(state, h)
    g = state.n.grid
    p = state.params
    n0 = state.n.values
    k1 = rhs(state).values
    s2 = SimState.from_density(state.t, RealField(g, _positive(n0 + 0.5 * h * k1, state, h)), p)
    k2 = rhs(s2).values
    s3 = SimState.from_density(state.t, RealField(g, _positive(n0 + 0.5 * h * k2, state, h)), p)
    k3 = rhs(s3).values
    s4 = SimState.from_density(state.t, RealField(g, _positive(n0 + h * k3, state, h)), p)
    k4 = rhs(s4).values
    n_new = n0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return _advance_density(state, n_new, h)


def _positive(n: np.ndarray, state: SimState, h: float) -> np.ndarray:
    if np.min(n) <= 0.0:
        raise PositivityLoss(f"stage density hit {np.min(n):.3e} at t ~ {state.t:.6g} (h = {h})")
    return n


def step_rk4(state: SimState, h: float) -> SimState:
    return _rk4(state, h, rhs_grand)


def step_rk4_canonical(state: SimState, h: float) -> SimState:
    return _rk4(state, h, rhs_canonical)


_STEPPERS = {"imex": step_imex, "rk4": step_rk4, "rk4_canonical": step_rk4_canonical}


def default_h(params: ModelParams, lam_max: float) -> float:
    """h = min(0.1 dx, 0.01 / lambda(k_max)); overridable via config."""
    return min(0.1 * params.grid.dx, 0.01 / max(lam_max, 1e-30))


def diagnostics(step: int, state: SimState, canonical: bool = False,
                ref_density: float | None = None,
                inner_iters: int | None = None,
                residual: float | None = None) -> DiagnosticsRecord:
    """Per-step observables.  gap is measured against the uniform state: m0
    for the non-conservative flow, the (conserved) mean density otherwise."""
    p = state.params
    g = state.n.grid
    mass = state.n.integral()
    g_mu = thermo.free_energy_grand(state.n, p)
    if canonical:
        nbar = ref_density if ref_density is not None else mass / g.volume
        uniform = RealField(g, np.full(g.shape, nbar))
        gap = thermo.free_energy_canonical(state.n, p.kernel) - thermo.free_energy_canonical(
            uniform, p.kernel
        )
    else:
        uniform = RealField(g, np.full(g.shape, p.m0))
        gap = g_mu - thermo.free_energy_grand(uniform, p)
    return DiagnosticsRecord(
        step=step,
        t=state.t,
        mass=mass,
        g_mu=g_mu,
        gap=gap,
        d0=spectral.dnorm(state.psi, 0),
        d1=spectral.dnorm(state.psi, 1),
        d2=spectral.dnorm(state.psi, 2),
        n_min=float(np.min(state.n.values)),
        n_max=float(np.max(state.n.values)),
        dissipation=thermo.dissipation(state.n, p),
        inner_iters=inner_iters,
        residual=residual,
    )


def evolve(state: SimState, T: float, h: float, integrator: str = "imex",
           stride: int = 1, observers: list | None = None,
           snapshot_every: int | None = None) -> Trajectory:
    """March to time T emitting a DiagnosticsRecord every `stride` steps.

    On a stepper error the partial trajectory is returned with the error
    recorded.  Observers are callables (step, state, record|None) -> None.
    """
    if T <= 0 or h <= 0:
        raise ValueError("T and h must be positive")
    stepper = _STEPPERS[integrator]
    canonical = integrator.endswith("canonical")
    ref_density = state.n.integral() / state.n.grid.volume if canonical else None
    n_steps = max(1, int(round(T / h)))
    traj = Trajectory()
    for step in range(1, n_steps + 1):
        try:
            state = stepper(state, h)
        except Exception as exc:  # record and stop: partial trajectory is useful
            traj.error = f"{type(exc).__name__}: {exc}"
            break
        rec = None
        if step % stride == 0 or step == n_steps:
            rec = diagnostics(step, state, canonical=canonical, ref_density=ref_density)
            traj.records.append(rec)
        if snapshot_every and step % snapshot_every == 0:
            traj.snapshots.append(state)
        if observers:
            for obs in observers:
                obs(step, state, rec)
    return traj
