"""Time evolution of the collective coordinate.

Three independent routes: exact normal-mode evolution (the oracle), the
memory-kernel integro-differential equation (an exact reformulation,
integrated numerically), and the closed-form damped oscillator valid in
the underdamped regime.  The damping kernel is always evaluated as an
exact cosine sum over the bath lines, never by quadrature.
"""

from dataclasses import dataclass

import numpy as np

from .mapping import (
    CollectiveForm,
    caldeira_leggett_form,
    collective_sector_eigensystem,
    collective_sector_modes,
)
from .model import SystemModel, full_potential_matrix, phonon_spectrum
from ._kernels import BACKEND_NAME, volterra_path

__all__ = [
    "BACKEND_NAME", "TrajectoryTable", "OscillatorParams",
    "damping_kernel", "gamma_transform", "collective_frequency",
    "evolve_exact", "solve_volterra", "fourier_solution",
    "underdamped_closed_form", "linear_response",
    "reconstruct_full_trajectory", "total_energy",
]


@dataclass(frozen=True)
class TrajectoryTable:
    """Uniformly sampled trajectory of the collective coordinate.

    positions holds X(t); momenta, when present, holds m * Xdot(t).
    """

    times: np.ndarray
    positions: np.ndarray
    momenta: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.positions, dtype=float)
        if t.ndim != 1 or x.shape != t.shape:
            raise ValueError("times and positions must be matching 1-d arrays")
        if t.size >= 2 and not (np.diff(t) > 0).all():
            raise ValueError("time grid must be strictly increasing")
        if not np.isfinite(x).all():
            raise ValueError("trajectory contains non-finite values")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", x)
        if self.momenta is not None:
            p = np.asarray(self.momenta, dtype=float)
            if p.shape != t.shape:
                raise ValueError("momenta shape does not match times")
            object.__setattr__(self, "momenta", p)


@dataclass(frozen=True)
class OscillatorParams:
    """Damped-oscillator parameters of the collective mode.

    omega0_sq : squared collective frequency (stiffness minus the
                kernel-at-zero renormalization); may be <= 0 for an
                unstable choice of collective coordinate
    gamma0    : friction coefficient from the flat-kernel fit
    omega_bar : reduced frequency sqrt(omega0_sq - gamma0^2/4); NaN
                outside the underdamped/critical regimes
    gamma_bar : gamma0 / 2
    regime    : "underdamped" | "overdamped" | "critical"
    """

    omega0_sq: float
    gamma0: float
    omega_bar: float
    gamma_bar: float
    regime: str


def damping_kernel(form: CollectiveForm, t):
    """Memory kernel: (1/m^2) sum_n ((2 l_n)^2 / w_n^2) cos(w_n t).

    Exact cosine sum over the bath lines; accepts scalars or arrays.
    The effective coupling of the equations of motion is twice the
    stored l (the cross terms of the quadratic form), so each line
    enters with weight (2 l_n)^2.
    """
    t_arr = np.asarray(t, dtype=float)
    coeff = (2.0 * form.couplings_l) ** 2 / (form.mass**2 * form.bath_freqs**2)
    out = np.cos(np.multiply.outer(t_arr, form.bath_freqs)) @ coeff
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def gamma_transform(form: CollectiveForm, omega, epsilon):
    """Half-line Fourier transform of the kernel, regularized by epsilon.

    Termwise closed form of int_0^inf e^((i w - eps) t) cos(w_n t) dt =
    (eps - i w) / ((eps - i w)^2 + w_n^2); no quadrature involved.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    omega_arr = np.asarray(omega, dtype=float)
    coeff = (2.0 * form.couplings_l) ** 2 / (form.mass**2 * form.bath_freqs**2)
    s = epsilon - 1j * omega_arr[..., None]
    terms = s / (s**2 + form.bath_freqs**2)
    out = terms @ coeff
    return complex(out) if np.isscalar(omega) or omega_arr.ndim == 0 else out


def mean_bath_spacing(form: CollectiveForm) -> float:
    """Mean gap between adjacent bath lines (the line frequency itself
    when there is only one line)."""
    w = form.bath_freqs
    if w.size < 2:
        return float(w[0])
    return float((w[-1] - w[0]) / (w.size - 1))


_REGIME_TOL = 1e-12


def collective_frequency(form: CollectiveForm, epsilon=None) -> OscillatorParams:
    """Collective frequency and friction of the damped-oscillator picture.

    omega0_sq = 2 Ktilde_11 / m - gamma(0).  The friction gamma0 is read
    off as Re of the regularized kernel transform at resonance, with
    epsilon defaulting to five mean bath spacings.  A nonpositive
    omega0_sq is flagged as overdamped (the params are still returned).
    """
    m = form.mass
    omega0_sq = 2.0 * form.k_tilde_11 / m - damping_kernel(form, 0.0)
    if epsilon is None:
        epsilon = 5.0 * mean_bath_spacing(form)

    omega_probe = np.sqrt(abs(omega0_sq))
    if epsilon > 0:
        gamma0 = float(gamma_transform(form, omega_probe, epsilon).real)
    else:  # decoupled bath with a single zero-weight line
        gamma0 = 0.0

    if omega0_sq < 0:
        regime = "overdamped"
    else:
        omega0 = np.sqrt(omega0_sq)
        scale = max(omega0, gamma0 / 2.0)
        if scale == 0.0 or abs(omega0 - gamma0 / 2.0) <= _REGIME_TOL * scale:
            # includes the free coordinate (both rates zero): the
            # critical closed form degenerates to ballistic motion
            regime = "critical"
        elif omega0 > gamma0 / 2.0:
            regime = "underdamped"
        else:
            regime = "overdamped"

    disc = omega0_sq - gamma0**2 / 4.0
    omega_bar = np.sqrt(disc) if regime in ("underdamped", "critical") and disc >= 0 else float("nan")
    if regime == "critical":
        omega_bar = 0.0
    return OscillatorParams(
        omega0_sq=float(omega0_sq),
        gamma0=gamma0,
        omega_bar=float(omega_bar),
        gamma_bar=gamma0 / 2.0,
        regime=regime,
    )


def _mode_trajectory(modes, p0, times):
    """X(t) = (P0/m) sum_n c_n^2 sin(w_n t)/w_n, with the w -> 0 limit t."""
    t = np.asarray(times, dtype=float)
    w = modes.frequencies
    c_sq = modes.x_coefficients**2
    # t * sinc(w t / pi) == sin(w t)/w, finite at w == 0
    x = (t[:, None] * np.sinc(np.multiply.outer(t, w) / np.pi)) @ c_sq
    v = np.cos(np.multiply.outer(t, w)) @ c_sq
    scale = p0 / modes.mass
    return scale * x, scale * v


def evolve_exact(model: SystemModel, p0, times) -> TrajectoryTable:
    """Exact collective trajectory after a momentum kick P0 at t = 0.

    Evaluates the normal-mode sum of the collective sector in closed
    form; no time stepping, exact to machine precision at every sample.
    """
    form = caldeira_leggett_form(model)
    modes = collective_sector_modes(form)
    t = np.asarray(times, dtype=float)
    x, v = _mode_trajectory(modes, p0, t)
    return TrajectoryTable(times=t, positions=x, momenta=model.mass * v)


def _kernel_on_grid(form, times, omega0_sq):
    """Damping kernel sampled on the grid, with a decoupled fast path.

    A coupling that is zero up to round-off leaves a kernel of order
    1e-30 whose dynamical effect is far below double precision; zeroing
    it lets the stepper skip the O(T^2) history sum.
    """
    gamma = damping_kernel(form, times)
    scale = max(abs(omega0_sq), form.bath_freqs.max() ** 2, 1e-300)
    if np.abs(gamma).max() < 1e-20 * scale:
        return np.zeros_like(gamma)
    return gamma


def _check_uniform_grid(times):
    t = np.asarray(times, dtype=float)
    if t.size < 2:
        raise ValueError("need at least two time samples")
    if abs(t[0]) > 1e-12:
        raise ValueError(f"time grid must start at 0, got {t[0]}")
    steps = np.diff(t)
    h = steps[0]
    if not np.allclose(steps, h, rtol=1e-9, atol=0.0):
        raise ValueError("time grid must be uniform")
    return t, float(h)


def solve_volterra(form: CollectiveForm, p0, times) -> TrajectoryTable:
    """Integrate the memory-kernel equation of motion after a kick.

    Second-order stepping with a trapezoidal history sum (O(T^2) cost).
    Refuses steps larger than 0.1 / max(bath frequency, collective
    frequency), for which the scheme is no longer trustworthy.
    """
    t, h = _check_uniform_grid(times)
    params_scale = max(
        form.bath_freqs.max(initial=0.0),
        np.sqrt(max(2.0 * form.k_tilde_11 / form.mass, 0.0)),
    )
    if params_scale > 0 and h > 0.1 / params_scale:
        raise ValueError(
            f"time step {h:.6g} too large; need h <= {0.1 / params_scale:.6g}"
        )
    omega0_sq = 2.0 * form.k_tilde_11 / form.mass - damping_kernel(form, 0.0)
    gamma = _kernel_on_grid(form, t, omega0_sq)
    x, v = volterra_path(omega0_sq, gamma, h, None, 0.0, p0 / form.mass)
    return TrajectoryTable(times=t, positions=x, momenta=form.mass * v)


def fourier_solution(form: CollectiveForm, p0, omegas, epsilon):
    """Frequency-domain kick solution P0 / (2 pi m (W0^2 - w^2 - i w g(w))).

    Returns the complex amplitude on the given frequency grid.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    w = np.asarray(omegas, dtype=float)
    omega0_sq = 2.0 * form.k_tilde_11 / form.mass - damping_kernel(form, 0.0)
    denom = omega0_sq - w**2 - 1j * w * gamma_transform(form, w, epsilon)
    return p0 / (2.0 * np.pi * form.mass * denom)


def underdamped_closed_form(params: OscillatorParams, p0, times, mass) -> TrajectoryTable:
    """Damped-oscillator closed form (P0 / m Wbar) e^(-gbar t) sin(Wbar t).

    Valid for the underdamped regime; the critical limit (Wbar -> 0,
    X = (P0/m) t e^(-gbar t)) is included.  Overdamped input is rejected.
    """
    if params.regime == "overdamped":
        raise ValueError("closed form requires the underdamped (or critical) regime")
    t = np.asarray(times, dtype=float)
    wb = params.omega_bar
    gb = params.gamma_bar
    envelope = np.exp(-gb * t)
    x = (p0 / mass) * envelope * t * np.sinc(wb * t / np.pi)
    v = (p0 / mass) * envelope * (np.cos(wb * t) - gb * t * np.sinc(wb * t / np.pi))
    return TrajectoryTable(times=t, positions=x, momenta=mass * v)


def linear_response(form: CollectiveForm, force_samples, times):
    """Drive the collective coordinate with an external force, two ways.

    Integrates the forced memory-kernel equation from rest, and
    independently predicts the displacement as the convolution of the
    response function (the unit-momentum kick trajectory) with the
    force.  Forces are treated as constant over each step (left node).
    Returns (forced, predicted) trajectory tables.
    """
    t, h = _check_uniform_grid(times)
    force = np.asarray(force_samples, dtype=float)
    if force.shape != t.shape:
        raise ValueError(
            f"force samples shape {force.shape} does not match grid {t.shape}"
        )
    m = form.mass
    omega0_sq = 2.0 * form.k_tilde_11 / m - damping_kernel(form, 0.0)
    gamma = _kernel_on_grid(form, t, omega0_sq)
    x, v = volterra_path(omega0_sq, gamma, h, force / m, 0.0, 0.0)
    forced = TrajectoryTable(times=t, positions=x, momenta=m * v)

    modes = collective_sector_modes(form)
    chi, _ = _mode_trajectory(modes, 1.0, t)  # response to a unit kick
    predicted = h * np.convolve(chi, force)[: t.size]
    return forced, TrajectoryTable(times=t, positions=predicted)


def reconstruct_full_trajectory(model: SystemModel, p0, times):
    """Full-phase-space trajectory (z, zdot) behind evolve_exact.

    The kick excites only the antisymmetric sector; the symmetric sector
    stays at rest.  Returns (times, z, zdot) with z = (x, xbar) of shape
    (T, 2N).  Used to check energy conservation along the exact route.
    """
    t = np.asarray(times, dtype=float)
    form = caldeira_leggett_form(model)
    m = model.mass

    # Normal coordinates q_n(t) = (P0 c_n / m) sin(w_n t)/w_n.
    w, v_modes = collective_sector_eigensystem(form)
    c = v_modes[0, :]
    amp = p0 / m * c
    q = (t[:, None] * np.sinc(np.multiply.outer(t, w) / np.pi)) * amp
    qdot = np.cos(np.multiply.outer(t, w)) * amp

    sector = q @ v_modes.T          # columns: (X, xi_1..xi_{N-1})
    sector_dot = qdot @ v_modes.T

    # (X, xi) -> d (antisymmetric phonon coordinates).
    n = model.n_particles
    d = np.empty((t.size, n))
    d_dot = np.empty((t.size, n))
    d[:, 0] = sector[:, 0]
    d_dot[:, 0] = sector_dot[:, 0]
    u = form.bath_transform
    d[:, 1:] = sector[:, 1:] @ u.T
    d_dot[:, 1:] = sector_dot[:, 1:] @ u.T

    # d -> chain coordinates: c = d/sqrt(2), cbar = -d/sqrt(2); x = A^T c.
    basis = phonon_spectrum(model).basis
    x_chain = (d / np.sqrt(2.0)) @ basis
    xbar_chain = -(d / np.sqrt(2.0)) @ basis
    xd_chain = (d_dot / np.sqrt(2.0)) @ basis
    xbard_chain = -(d_dot / np.sqrt(2.0)) @ basis

    z = np.hstack([x_chain, xbar_chain])
    zdot = np.hstack([xd_chain, xbard_chain])
    return t, z, zdot


def total_energy(model: SystemModel, z, zdot):
    """Total energy (kinetic + potential) along a full trajectory."""
    q = full_potential_matrix(model)
    kinetic = 0.5 * model.mass * (zdot**2).sum(axis=-1)
    potential = np.einsum("ti,ij,tj->t", z, q, z)
    return kinetic + potential
