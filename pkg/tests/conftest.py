import pytest

from afmgate.config import (
    ChainConfig,
    DecayConfig,
    InteractionConfig,
    Model,
    ProtocolConfig,
    PulseProfile,
)
from afmgate.units import mhz

# Reference drive and interaction used throughout: Omega0 = 2pi x 8 MHz,
# Delta0 = 2pi x 20 MHz, |B| = 2pi x 45 MHz, a = 4 um, tau = 1 us.
OMEGA0 = mhz(8.0)
DELTA0 = mhz(20.0)
B_NN = mhz(45.0)
SPACING = 4.0
TAU = 1.0
GAMMA = mhz(0.0005)  # 2pi x 0.5 kHz


def reference_pulse(tau: float = TAU) -> PulseProfile:
    return PulseProfile(OMEGA0, DELTA0, tau)


def reference_config(
    n_atoms: int = 5,
    model: Model = Model.FULL_VDW,
    tau: float = TAU,
    include_decay: bool = False,
    gamma: float = GAMMA,
    lambda_ratio: float = 1.0,
    dt: float | None = None,
    b_nn: float = B_NN,
) -> ProtocolConfig:
    return ProtocolConfig(
        chain=ChainConfig(n_atoms=n_atoms, spacing=SPACING),
        interaction=InteractionConfig.from_nn_strength(b_nn, SPACING, lambda_ratio=lambda_ratio),
        pulse=reference_pulse(tau),
        decay=DecayConfig(gamma_r=gamma, gamma_rp=gamma),
        model=model,
        dt=dt,
        include_decay=include_decay,
    )


@pytest.fixture
def pulse() -> PulseProfile:
    return reference_pulse()
