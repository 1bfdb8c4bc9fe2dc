"""Time-dependent Schroedinger propagation of the two-pulse protocol.

Fixed-step classical RK4 with midpoint Hamiltonian evaluations.  The drive
structure, excitation counts and interaction diagonal are cached once per
run; each evaluation only rescales them with the instantaneous pulse
values.  Hermitian runs renormalize the state after every step (removing
the RK4 amplitude artifact, which would otherwise mask real norm errors);
non-Hermitian runs keep the physical norm decay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .basis import Basis, afm_manifold_masks, ordered_afm_masks
from .config import Model, ProtocolConfig, PulseProfile
from .errors import PropagationError
from .hamiltonian import drive_matrix, excitation_numbers, interaction_diagonal
from .spectra import model_basis

OVERLAP_VALID_MIN = 0.1
PHASE_SAMPLE_MARGIN = math.pi / 4.0


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled state history of one propagation."""

    basis: Optional[Basis]
    times: np.ndarray
    states: np.ndarray  # (n_samples, dim)
    norms: np.ndarray
    populations: Dict[str, np.ndarray] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class PhaseRecord:
    """Total / dynamical / geometric phase along a trajectory.

    phi_total is the unwrapped arg<Psi(0)|Psi(t)>; phi_dynamical the action
    integral of the occupied adiabatic branch energy (the two-pulse mirror
    symmetry cancels it exactly, leakage notwithstanding); the geometric
    part is their difference.  ``valid`` flags samples with enough overlap
    for the total phase to mean anything.
    """

    times: np.ndarray
    phi_total: np.ndarray
    phi_dynamical: np.ndarray
    phi_geometric: np.ndarray
    valid: np.ndarray

    def final_total(self) -> float:
        return float(self.phi_total[-1])

    def final_dynamical(self) -> float:
        return float(self.phi_dynamical[-1])


def _step_count(t0: float, t1: float, dt: float) -> int:
    span = t1 - t0
    n = round(span / dt)
    if n < 1 or abs(n * dt - span) > 1e-9 * max(span, dt):
        raise ValueError(f"dt = {dt} does not evenly divide the interval {span}")
    return n


def _check_state(psi: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(psi)):
        raise PropagationError(f"non-finite amplitudes at t = {t}")


class _SegmentEngine:
    """One pulse segment: cached operator structure plus pulse scaling.

    ``v_int_fn``, when given, supplies the interaction diagonal as a
    function of absolute protocol time (thermal motion); otherwise the
    static ``v_int`` vector is used.
    """

    def __init__(
        self,
        basis: Basis,
        pulse: PulseProfile,
        gamma: float = 0.0,
        v_int: Optional[np.ndarray] = None,
        v_int_fn: Optional[Callable[[float], np.ndarray]] = None,
        t_abs_start: float = 0.0,
    ):
        self.basis = basis
        self.pulse = pulse
        self.gamma = gamma
        self.drive = drive_matrix(basis)
        self.n_r = excitation_numbers(basis)
        self.v_int = np.zeros(basis.dim) if v_int is None else v_int
        self.v_int_fn = v_int_fn
        self.t_abs_start = t_abs_start
        self._decay = -0.5j * gamma * self.n_r if gamma else None

    def coeffs(self, t_local: float) -> Tuple[float, np.ndarray]:
        """(Omega, complex diagonal) at local pulse time; endpoint round-off
        is clamped into the pulse window."""
        t = min(max(t_local, 0.0), self.pulse.tau)
        v = self.v_int_fn(self.t_abs_start + t) if self.v_int_fn is not None else self.v_int
        diag = -self.pulse.delta(t) * self.n_r + v
        if self._decay is not None:
            diag = diag + self._decay
        return self.pulse.omega(t), diag

    def deriv(self, omega: float, diag: np.ndarray, psi: np.ndarray) -> np.ndarray:
        return -1j * (omega * (self.drive @ psi) + diag * psi)

    def energy(self, t_local: float, psi: np.ndarray) -> float:
        """<H> of the Hermitian part, normalized by the current norm."""
        omega, diag = self.coeffs(t_local)
        val = np.vdot(psi, omega * (self.drive @ psi) + diag.real * psi).real
        nrm2 = float(np.vdot(psi, psi).real)
        return val / nrm2 if nrm2 > 0.0 else 0.0

    def branch_energy(self, t_local: float, psi: np.ndarray) -> float:
        """Instantaneous eigenvalue of the dominantly occupied branch of the
        Hermitian part (maximal overlap with the state)."""
        omega, diag = self.coeffs(t_local)
        w, v = np.linalg.eigh(omega * self.drive + np.diag(diag.real))
        return float(w[int(np.argmax(np.abs(v.conj().T @ psi)))])

    def matrix(self, t_local: float) -> np.ndarray:
        omega, diag = self.coeffs(t_local)
        return omega * self.drive + np.diag(diag)


def _run_segment(
    engine: _SegmentEngine,
    psi: np.ndarray,
    dt: float,
    n_steps: int,
    stride: int,
    renormalize: bool,
) -> Tuple[List[float], List[np.ndarray]]:
    """RK4 over one segment; returns samples at local times (excluding t=0)."""
    times: List[float] = []
    states: List[np.ndarray] = []
    half = 0.5 * dt
    om_next, diag_next = engine.coeffs(0.0)
    for step in range(n_steps):
        t = step * dt
        om1, d1 = om_next, diag_next
        om2, d2 = engine.coeffs(t + half)
        om_next, diag_next = engine.coeffs(t + dt)
        k1 = engine.deriv(om1, d1, psi)
        k2 = engine.deriv(om2, d2, psi + half * k1)
        k3 = engine.deriv(om2, d2, psi + half * k2)
        k4 = engine.deriv(om_next, diag_next, psi + dt * k3)
        psi = psi + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if renormalize:
            psi = psi / math.sqrt(np.vdot(psi, psi).real)
        if (step + 1) % stride == 0 or step == n_steps - 1:
            _check_state(psi, t + dt)
            # pin the final sample to the exact pulse end so segment
            # boundaries are found exactly downstream
            times.append(engine.pulse.tau if step == n_steps - 1 else t + dt)
            states.append(psi.copy())
    return times, states


def _default_stride(h_scale: float, dt: float, n_steps: int) -> int:
    """Largest stride keeping per-sample phase increments below pi/4."""
    if h_scale <= 0.0:
        return max(1, n_steps // 1024)
    stride = int(PHASE_SAMPLE_MARGIN / (h_scale * dt))
    return max(1, min(stride, max(1, n_steps // 8)))


def propagate(
    h_of_t: Callable[[float], np.ndarray],
    psi0: np.ndarray,
    t0: float,
    t1: float,
    dt: float,
    sample_stride: Optional[int] = None,
    renormalize: Optional[bool] = None,
    basis: Optional[Basis] = None,
) -> Trajectory:
    """Generic RK4 propagation of i d/dt psi = H(t) psi.

    ``h_of_t`` returns the (possibly non-Hermitian) matrix at a given time.
    ``renormalize`` defaults to True when H(t0) is Hermitian.
    """
    psi = np.asarray(psi0, dtype=complex).copy()
    if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
        raise ValueError("initial state must be normalized")
    n_steps = _step_count(t0, t1, dt)
    h0 = np.asarray(h_of_t(t0), dtype=complex)
    if renormalize is None:
        renormalize = bool(np.abs(h0 - h0.conj().T).max() <= 1e-12 * max(np.abs(h0).max(), 1.0))
    if sample_stride is None:
        h_scale = float(np.abs(h0).sum(axis=1).max())
        sample_stride = _default_stride(h_scale, dt, n_steps)

    times = [t0]
    states = [psi.copy()]
    half = 0.5 * dt
    h_next = h0
    for step in range(n_steps):
        t = t0 + step * dt
        h1 = h_next
        h2 = np.asarray(h_of_t(t + half), dtype=complex)
        h_next = np.asarray(h_of_t(t + dt), dtype=complex)
        k1 = -1j * (h1 @ psi)
        k2 = -1j * (h2 @ (psi + half * k1))
        k3 = -1j * (h2 @ (psi + half * k2))
        k4 = -1j * (h_next @ (psi + dt * k3))
        psi = psi + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if renormalize:
            psi = psi / math.sqrt(np.vdot(psi, psi).real)
        if (step + 1) % sample_stride == 0 or step == n_steps - 1:
            _check_state(psi, t + dt)
            times.append(t + dt)
            states.append(psi.copy())

    state_arr = np.array(states)
    norms = np.linalg.norm(state_arr, axis=1)
    return Trajectory(basis=basis, times=np.array(times), states=state_arr, norms=norms)


def _afm_projectors(basis: Basis, model: Model) -> Dict[str, np.ndarray]:
    """Named projection vectors: ground, AFM-like target and (even nu, vdW)
    the bright ordered combination."""
    nu = basis.nu
    dim = basis.dim
    ground = np.zeros(dim, dtype=complex)
    ground[basis.index[0]] = 1.0
    out = {"ground": ground}

    if nu % 2 == 1:
        afm = np.zeros(dim, dtype=complex)
        afm[basis.index[ordered_afm_masks(nu)[0]]] = 1.0
        out["afm"] = afm
        return out

    masks = afm_manifold_masks(nu)
    m = len(masks)
    if model is Model.PXP:
        # uniform-ladder ground state: sine profile over all configurations
        afm = np.zeros(dim, dtype=complex)
        for j, mask in enumerate(masks, start=1):
            afm[basis.index[mask]] = math.sqrt(2.0 / (m + 1)) * math.sin(j * math.pi / (m + 1))
        out["afm"] = afm
    else:
        # split-regime ground (bulk-defect band head) and the bright ordered combo
        afm = np.zeros(dim, dtype=complex)
        n_bulk = m - 2
        for j in range(2, m):
            afm[basis.index[masks[j - 1]]] = math.sqrt(2.0 / (n_bulk + 1)) * math.sin(
                (j - 1) * math.pi / (n_bulk + 1)
            )
        out["afm"] = afm
        bright = np.zeros(dim, dtype=complex)
        bright[basis.index[masks[0]]] = 1.0 / math.sqrt(2.0)
        bright[basis.index[masks[-1]]] = 1.0 / math.sqrt(2.0)
        out["afm_excited"] = bright
    return out


@dataclass(frozen=True, eq=False)
class ProtocolRun:
    """Full two-pulse result: trajectory, phases and the segment engines."""

    trajectory: Trajectory
    phases: Optional[PhaseRecord]
    segments: Tuple[_SegmentEngine, ...]
    boundaries: Tuple[float, ...]

    def final_state(self) -> np.ndarray:
        return self.trajectory.states[-1]

    def ground_amplitude(self) -> complex:
        return complex(self.trajectory.states[-1][self.trajectory.basis.index[0]])


def _protocol_segments(
    nu: int,
    cfg: ProtocolConfig,
    v_int_fn_steps: Optional[Tuple[Callable[[float], np.ndarray], Callable[[float], np.ndarray]]] = None,
    basis: Optional[Basis] = None,
) -> Tuple[Basis, Tuple[_SegmentEngine, _SegmentEngine]]:
    if cfg.model is Model.PXP_PLUS_CORRECTIONS:
        raise ValueError("time propagation supports the PXP and full vdW models only")
    if basis is None:
        basis = model_basis(cfg.model, nu)
    lam = cfg.interaction.lambda_ratio
    pulse_1 = cfg.pulse
    pulse_2 = cfg.pulse.rescaled(lam)
    gamma_1 = cfg.decay.gamma_r if cfg.include_decay else 0.0
    gamma_2 = cfg.decay.gamma_rp if cfg.include_decay else 0.0

    if v_int_fn_steps is not None:
        fn1, fn2 = v_int_fn_steps
        seg1 = _SegmentEngine(basis, pulse_1, gamma_1, v_int_fn=fn1, t_abs_start=0.0)
        seg2 = _SegmentEngine(basis, pulse_2, gamma_2, v_int_fn=fn2, t_abs_start=pulse_1.tau)
    else:
        if cfg.model is Model.FULL_VDW:
            v1 = interaction_diagonal(basis, cfg.interaction)
            v2 = interaction_diagonal(basis, cfg.interaction.flipped())
        else:
            v1 = v2 = np.zeros(basis.dim)
        seg1 = _SegmentEngine(basis, pulse_1, gamma_1, v_int=v1, t_abs_start=0.0)
        seg2 = _SegmentEngine(basis, pulse_2, gamma_2, v_int=v2, t_abs_start=pulse_1.tau)
    return basis, (seg1, seg2)


def run_protocol(
    nu: int,
    cfg: ProtocolConfig,
    v_int_fn_steps: Optional[Tuple[Callable[[float], np.ndarray], Callable[[float], np.ndarray]]] = None,
    basis: Optional[Basis] = None,
    compute_phases: bool = True,
) -> ProtocolRun:
    """Two chirped pulses: step I with interaction B, step II with the
    lambda-rescaled pulse and flipped interaction -lambda B (a no-op for
    the PXP model).  The r -> r' swap between steps is modeled as
    instantaneous and exact.  Starts from the collective ground state.

    The dynamical phase integrates the energy of the dominantly occupied
    adiabatic branch (the lowest branch during step I and the highest
    during step II when the transfer works as designed).
    """
    if nu < 1:
        raise ValueError(f"nu must be >= 1, got {nu}")
    basis, (seg1, seg2) = _protocol_segments(nu, cfg, v_int_fn_steps, basis)
    lam = cfg.interaction.lambda_ratio

    psi = np.zeros(basis.dim, dtype=complex)
    psi[basis.index[0]] = 1.0

    n1 = _step_count(0.0, cfg.pulse.tau, cfg.dt)
    dt2 = cfg.dt / lam
    h_scale = float(
        basis.nu * (abs(cfg.pulse.delta0) + abs(cfg.pulse.omega0)) * max(1.0, lam)
        + (np.abs(seg1.v_int).max() if seg1.v_int_fn is None else abs(cfg.interaction.b_nn))
    )
    stride = _default_stride(h_scale, cfg.dt, n1)

    times = [0.0]
    states = [psi.copy()]
    t1, s1 = _run_segment(seg1, psi, cfg.dt, n1, stride, seg1.gamma == 0.0)
    times.extend(t1)
    states.extend(s1)
    psi = s1[-1]
    t2, s2 = _run_segment(seg2, psi, dt2, n1, stride, seg2.gamma == 0.0)
    times.extend(cfg.pulse.tau + t for t in t2)
    states.extend(s2)

    state_arr = np.array(states)
    time_arr = np.array(times)
    norms = np.linalg.norm(state_arr, axis=1)

    populations = {}
    for name, vec in _afm_projectors(basis, cfg.model).items():
        populations[name] = np.abs(state_arr @ vec.conj()) ** 2

    traj = Trajectory(basis=basis, times=time_arr, states=state_arr, norms=norms, populations=populations)

    tau1 = cfg.pulse.tau
    phases = None
    if compute_phases:
        # The branch energy jumps at the segment boundary (the detuning
        # resets to -delta0'), so the action integral is accumulated per
        # segment with both-sided boundary values.
        i_b = int(np.searchsorted(time_arr, tau1))
        e1 = np.array([seg1.branch_energy(t, st) for t, st in
                       zip(time_arr[: i_b + 1], state_arr[: i_b + 1])])
        e2 = np.array([seg2.branch_energy(t - tau1, st) for t, st in
                       zip(time_arr[i_b:], state_arr[i_b:])])
        phi_d1 = cumulative_trapezoid(e1, time_arr[: i_b + 1], initial=0.0)
        phi_d2 = cumulative_trapezoid(e2, time_arr[i_b:], initial=0.0)
        phi_dyn = np.concatenate([phi_d1, phi_d1[-1] + phi_d2[1:]])
        phases = _phases_from_samples(time_arr, state_arr, phi_dynamical=phi_dyn)
    return ProtocolRun(
        trajectory=traj,
        phases=phases,
        segments=(seg1, seg2),
        boundaries=(0.0, tau1, tau1 + cfg.pulse.tau / lam),
    )


def _phases_from_samples(
    times: np.ndarray,
    states: np.ndarray,
    phi_dynamical: np.ndarray,
) -> PhaseRecord:
    psi0 = states[0]
    overlaps = states @ psi0.conj()
    valid = np.abs(overlaps) > OVERLAP_VALID_MIN
    phi_total = np.unwrap(np.angle(overlaps))
    return PhaseRecord(
        times=times,
        phi_total=phi_total,
        phi_dynamical=phi_dynamical,
        phi_geometric=phi_total - phi_dynamical,
        valid=valid,
    )


def phase_decomposition(
    traj: Trajectory,
    h_of_t: Callable[[float], np.ndarray],
    boundaries: Sequence[float] = (),
) -> PhaseRecord:
    """Phase bookkeeping for an arbitrary trajectory.

    ``h_of_t`` must return the (possibly non-Hermitian) Hamiltonian matrix
    at a sample time.  The dynamical phase integrates the energy of the
    dominantly occupied adiabatic branch (maximal overlap with the state),
    which reduces to <H> under perfect adiabatic following but stays clean
    under leakage.  ``boundaries`` lists times where H jumps (e.g. the
    pulse handover); the action integral is split there, evaluating the
    right side just past the jump.
    """

    def branch_energy(t: float, psi: np.ndarray) -> float:
        h = np.asarray(h_of_t(t), dtype=complex)
        w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
        k = int(np.argmax(np.abs(v.conj().T @ psi)))
        return float(w[k])

    cut_idx = [0]
    for b in boundaries:
        i = int(np.searchsorted(traj.times, b))
        if 0 < i < len(traj.times) - 1:
            cut_idx.append(i)
    cut_idx.append(len(traj.times) - 1)

    phi_dyn = np.zeros(len(traj.times))
    for lo, hi in zip(cut_idx[:-1], cut_idx[1:]):
        seg_t = traj.times[lo : hi + 1]
        seg_e = np.empty(len(seg_t))
        for j, i in enumerate(range(lo, hi + 1)):
            t = traj.times[i]
            if j == 0 and lo != 0:
                t = np.nextafter(t, np.inf)  # right side of the jump
            seg_e[j] = branch_energy(t, traj.states[i])
        seg_phi = cumulative_trapezoid(seg_e, seg_t, initial=0.0)
        phi_dyn[lo : hi + 1] = phi_dyn[lo] + seg_phi
    return _phases_from_samples(traj.times, traj.states, phi_dynamical=phi_dyn)


def parity_roundtrip_check(nu: int, cfg: ProtocolConfig) -> complex:
    """Signed overlap <G_nu|Psi(tau_tot)> after the two-pulse protocol
    without decay; its phase is nu_r pi mod 2pi, its squared magnitude
    1 - leakage."""
    run = run_protocol(nu, replace(cfg, include_decay=False), compute_phases=False)
    return run.ground_amplitude()
