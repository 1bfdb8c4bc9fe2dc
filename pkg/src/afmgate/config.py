"""Configuration records and the chirped-pulse waveform.

Everything here is an immutable value object; all other modules consume
these records read-only.  Frequencies are angular (rad/us), times us,
lengths um — see :mod:`afmgate.units`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError
from .units import Frequency, mhz

# Flat-top envelope: hard-coded eighth-power super-Gaussian with the
# documented default width ratio sigma = 0.385 tau.
ENVELOPE_EXPONENT = 8
SIGMA_RATIO_DEFAULT = 0.385
DT_STEPS_DEFAULT = 4000
DT_STEPS_MIN = 1000


class Model(str, Enum):
    """Hamiltonian variant used for spectra and propagation."""

    PXP = "pxp"
    FULL_VDW = "vdw"
    PXP_PLUS_CORRECTIONS = "corrections"


@dataclass(frozen=True)
class ChainConfig:
    """Equidistant chain of ``n_atoms`` atoms with lattice spacing um."""

    n_atoms: int
    spacing: float

    def __post_init__(self) -> None:
        if self.n_atoms < 3:
            raise ConfigError(f"need at least 3 atoms (two qubits + bus), got {self.n_atoms}")
        if self.spacing <= 0.0:
            raise ConfigError(f"lattice spacing must be > 0, got {self.spacing}")

    @property
    def qubit_separation(self) -> float:
        """Distance between the two end (qubit) atoms, (n_atoms - 1) * spacing."""
        return (self.n_atoms - 1) * self.spacing


@dataclass(frozen=True)
class InteractionConfig:
    """Pairwise van der Waals interaction B_ij = B / |i-j|^6, B = C6 / a^6.

    ``c6`` is signed (rad/us um^6); ``lambda_ratio`` is the magnitude ratio
    of the second-step interaction, B' = -lambda * B.  ``range_cutoff``
    drops pairs farther apart than the given number of lattice sites.
    """

    c6: float
    spacing: float
    lambda_ratio: float = 1.0
    range_cutoff: Optional[int] = None

    def __post_init__(self) -> None:
        if self.spacing <= 0.0:
            raise ConfigError(f"lattice spacing must be > 0, got {self.spacing}")
        if self.lambda_ratio <= 0.0:
            raise ConfigError(f"lambda must be > 0, got {self.lambda_ratio}")
        if self.range_cutoff is not None and self.range_cutoff < 1:
            raise ConfigError(f"range cutoff must be >= 1, got {self.range_cutoff}")

    @classmethod
    def from_nn_strength(
        cls,
        b_nn: float,
        spacing: float,
        lambda_ratio: float = 1.0,
        range_cutoff: Optional[int] = None,
    ) -> "InteractionConfig":
        """Build from the nearest-neighbour strength B instead of C6."""
        return cls(b_nn * spacing**6, spacing, lambda_ratio, range_cutoff)

    @property
    def b_nn(self) -> Frequency:
        """Nearest-neighbour interaction B = C6 / a^6."""
        return Frequency(self.c6 / self.spacing**6)

    @property
    def b_nnn(self) -> Frequency:
        """Next-nearest-neighbour interaction B2 = B / 2^6."""
        return Frequency(self.b_nn / 64.0)

    def pair_strength(self, i: int, j: int) -> Frequency:
        """Interaction of sites ``i`` and ``j``: B / |i-j|^6, 0 beyond cutoff."""
        if i == j:
            raise ValueError(f"self-interaction is undefined (i = j = {i})")
        if i < 0 or j < 0:
            raise ValueError(f"site indices must be non-negative, got ({i}, {j})")
        d = abs(i - j)
        if self.range_cutoff is not None and d > self.range_cutoff:
            return Frequency(0.0)
        return Frequency(self.b_nn / d**6)

    def flipped(self) -> "InteractionConfig":
        """Second-step interaction C6' = -lambda * C6."""
        return replace(self, c6=-self.lambda_ratio * self.c6)


@dataclass(frozen=True)
class PulseProfile:
    """Chirped pulse: flat-top Rabi envelope and linear detuning sweep.

    Omega(t) = omega0 * (exp(-(t - tau/2)^8 / sigma^8) - C) / (1 - C) with
    C = exp(-(tau/2 sigma)^8), so the envelope is exactly zero at both ends
    and exactly omega0 at mid-pulse.  Delta(t) ramps linearly from -delta0
    to +delta0 at the chirp rate beta = 2 delta0 / tau.
    """

    omega0: float
    delta0: float
    tau: float
    sigma: Optional[float] = None

    def __post_init__(self) -> None:
        if self.tau <= 0.0:
            raise ConfigError(f"pulse duration must be > 0, got {self.tau}")
        if self.sigma is None:
            object.__setattr__(self, "sigma", SIGMA_RATIO_DEFAULT * self.tau)
        if self.sigma <= 0.0:
            raise ConfigError(f"envelope width must be > 0, got {self.sigma}")

    @property
    def beta(self) -> float:
        """Chirp rate 2 delta0 / tau (rad/us^2)."""
        return 2.0 * self.delta0 / self.tau

    def _check_time(self, t: float) -> None:
        if not 0.0 <= t <= self.tau:
            raise ValueError(f"t = {t} outside the pulse window [0, {self.tau}]")

    def _edge_offset(self) -> float:
        return math.exp(-((self.tau / (2.0 * self.sigma)) ** ENVELOPE_EXPONENT))

    def omega(self, t: float) -> Frequency:
        """Rabi frequency at time t; tiny negative round-off is clamped to 0."""
        self._check_time(t)
        off = self._edge_offset()
        raw = (math.exp(-(((t - self.tau / 2.0) / self.sigma) ** ENVELOPE_EXPONENT)) - off) / (1.0 - off)
        return Frequency(self.omega0 * max(raw, 0.0))

    def omega_dot(self, t: float) -> float:
        """Analytic d Omega/dt, used by the non-adiabatic coupling diagnostics."""
        self._check_time(t)
        off = self._edge_offset()
        u = (t - self.tau / 2.0) / self.sigma
        return self.omega0 * math.exp(-(u**ENVELOPE_EXPONENT)) * (
            -ENVELOPE_EXPONENT * u ** (ENVELOPE_EXPONENT - 1) / self.sigma
        ) / (1.0 - off)

    def delta(self, t: float) -> Frequency:
        """Detuning at time t.

        Evaluated as delta0 * (2 t / tau - 1) so the endpoint and midpoint
        values -delta0, 0, +delta0 are exact in floating point.
        """
        self._check_time(t)
        return Frequency(self.delta0 * (2.0 * t / self.tau - 1.0))

    def time_at_delta(self, delta: float) -> float:
        """Inverse of the linear sweep, clipped to the pulse window."""
        t = (delta / self.delta0 + 1.0) * self.tau / 2.0
        return min(max(t, 0.0), self.tau)

    def rescaled(self, lam: float) -> "PulseProfile":
        """Second-step pulse for B' = -lambda B: amplitudes scaled up by
        lambda, duration (and width) down by lambda."""
        if lam <= 0.0:
            raise ConfigError(f"lambda must be > 0, got {lam}")
        return PulseProfile(lam * self.omega0, lam * self.delta0, self.tau / lam, self.sigma / lam)


@dataclass(frozen=True)
class DecayConfig:
    """Rydberg-state decay rates for the two protocol steps (rad/us)."""

    gamma_r: float = 0.0
    gamma_rp: float = 0.0

    def __post_init__(self) -> None:
        if self.gamma_r < 0.0 or self.gamma_rp < 0.0:
            raise ConfigError(f"decay rates must be >= 0, got {self.gamma_r}, {self.gamma_rp}")

    def mean_rate(self, tau: float, lambda_ratio: float = 1.0) -> float:
        """Duration-weighted mean rate (Gamma_r tau + Gamma_r' tau') / tau_tot
        with tau' = tau / lambda."""
        tau_p = tau / lambda_ratio
        return (self.gamma_r * tau + self.gamma_rp * tau_p) / (tau + tau_p)


@dataclass(frozen=True)
class ProtocolConfig:
    """Complete description of one two-pulse gate protocol run."""

    chain: ChainConfig
    interaction: InteractionConfig
    pulse: PulseProfile
    decay: DecayConfig = field(default_factory=DecayConfig)
    model: Model = Model.FULL_VDW
    dt: Optional[float] = None
    include_decay: bool = False

    def __post_init__(self) -> None:
        if self.dt is None:
            object.__setattr__(self, "dt", self.pulse.tau / DT_STEPS_DEFAULT)
        if self.dt <= 0.0:
            raise ConfigError(f"integrator step must be > 0, got {self.dt}")
        if self.dt > self.pulse.tau / DT_STEPS_MIN:
            raise ConfigError(
                f"integrator step {self.dt} too coarse: need dt <= tau/{DT_STEPS_MIN} = "
                f"{self.pulse.tau / DT_STEPS_MIN}"
            )
        if not math.isclose(self.interaction.spacing, self.chain.spacing, rel_tol=1e-12):
            raise ConfigError(
                f"interaction spacing {self.interaction.spacing} != chain spacing {self.chain.spacing}"
            )

    @property
    def tau_total(self) -> float:
        """Total protocol duration tau + tau'."""
        return self.pulse.tau * (1.0 + 1.0 / self.interaction.lambda_ratio)


def mean_rydberg_number(n_atoms: int) -> Fraction:
    """Mean Rydberg excitation number N/2 - 1/4, averaged over the four
    qubit inputs (active chains of N-2, N-1, N-1 and N atoms)."""
    if n_atoms < 3:
        raise ValueError(f"need at least 3 atoms, got {n_atoms}")
    return Fraction(n_atoms, 2) - Fraction(1, 4)


def _section(data: dict, name: str) -> dict:
    try:
        value = data[name]
    except KeyError:
        raise ConfigError(f"missing config section '{name}'") from None
    if not isinstance(value, dict):
        raise ConfigError(f"config section '{name}' must be a mapping")
    return value


def _get(section: dict, name: str, where: str) -> Any:
    try:
        return section[name]
    except KeyError:
        raise ConfigError(f"missing key '{name}' in config section '{where}'") from None


def protocol_from_dict(data: dict) -> ProtocolConfig:
    """Build a ProtocolConfig from a parsed config mapping.

    Schema (user units): frequencies MHz, times us, lengths um.  See the
    README for the documented layout.
    """
    chain_d = _section(data, "chain")
    chain = ChainConfig(
        n_atoms=int(_get(chain_d, "n_atoms", "chain")),
        spacing=float(_get(chain_d, "spacing_um", "chain")),
    )

    inter_d = _section(data, "interaction")
    lam = float(inter_d.get("lambda", 1.0))
    cutoff = inter_d.get("range_cutoff")
    if "c6_mhz_um6" in inter_d and "b_mhz" in inter_d:
        raise ConfigError("give either interaction.c6_mhz_um6 or interaction.b_mhz, not both")
    if "c6_mhz_um6" in inter_d:
        interaction = InteractionConfig(
            c6=mhz(float(inter_d["c6_mhz_um6"])),
            spacing=chain.spacing,
            lambda_ratio=lam,
            range_cutoff=None if cutoff is None else int(cutoff),
        )
    elif "b_mhz" in inter_d:
        interaction = InteractionConfig.from_nn_strength(
            b_nn=mhz(float(inter_d["b_mhz"])),
            spacing=chain.spacing,
            lambda_ratio=lam,
            range_cutoff=None if cutoff is None else int(cutoff),
        )
    else:
        raise ConfigError("config section 'interaction' needs c6_mhz_um6 or b_mhz")

    pulse_d = _section(data, "pulse")
    sigma_us = pulse_d.get("sigma_us")
    pulse = PulseProfile(
        omega0=mhz(float(_get(pulse_d, "omega0_mhz", "pulse"))),
        delta0=mhz(float(_get(pulse_d, "delta0_mhz", "pulse"))),
        tau=float(_get(pulse_d, "tau_us", "pulse")),
        sigma=None if sigma_us is None else float(sigma_us),
    )

    decay_d = data.get("decay", {})
    if not isinstance(decay_d, dict):
        raise ConfigError("config section 'decay' must be a mapping")
    decay = DecayConfig(
        gamma_r=mhz(float(decay_d.get("gamma_r_mhz", 0.0))),
        gamma_rp=mhz(float(decay_d.get("gamma_rp_mhz", 0.0))),
    )

    model_name = str(data.get("model", "vdw"))
    try:
        model = Model(model_name)
    except ValueError:
        raise ConfigError(
            f"unknown model '{model_name}' (choose from {[m.value for m in Model]})"
        ) from None

    dt_us = data.get("dt_us")
    try:
        return ProtocolConfig(
            chain=chain,
            interaction=interaction,
            pulse=pulse,
            decay=decay,
            model=model,
            dt=None if dt_us is None else float(dt_us),
            include_decay=bool(data.get("include_decay", False)),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ProtocolConfig:
    """Load a JSON protocol config; see README for the schema."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config root in {path} must be a JSON object")
    return protocol_from_dict(data)
