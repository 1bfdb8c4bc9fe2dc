"""Optional long-running checks: larger chains and the interaction-strength
scaling of the minimal error.  Run with `pytest -m slow`."""

import numpy as np
import pytest

from afmgate.config import (
    ChainConfig,
    DecayConfig,
    InteractionConfig,
    Model,
    ProtocolConfig,
    PulseProfile,
)
from afmgate.gate import (
    e_min_vs_interaction,
    fit_c_nu,
    kappa_c_table,
    optimal_tau,
    sweep_tau,
)
from afmgate.units import mhz

from conftest import GAMMA, SPACING, reference_config

pytestmark = pytest.mark.slow

LAMBDA1 = 8.0 / 45.0
LAMBDA2 = 20.0 / 45.0


@pytest.fixture(scope="module")
def fitted_c():
    return {nu: fit_c_nu(nu, reference_config(n_atoms=max(nu, 3))).c for nu in (3, 5, 7)}


@pytest.fixture(scope="module")
def c_table(fitted_c):
    table = dict(fitted_c)
    table.update(kappa_c_table([1, 2, 4, 6, 8], reference_config().pulse))
    return table


@pytest.mark.parametrize("n", [7, 8])
def test_large_chain_error_curve(n, c_table):
    cfg = reference_config(n_atoms=n, model=Model.FULL_VDW, include_decay=True)
    mu_nu = n if n % 2 else n - 1
    gamma = cfg.decay.mean_rate(cfg.pulse.tau, 1.0)
    tau_opt, _ = optimal_tau(n, c_table[mu_nu], cfg.pulse, gamma)
    taus = np.array([0.8, 1.1, 1.35, tau_opt, 1.9, 2.3, 2.8])
    points = sweep_tau(n, cfg, np.sort(taus), c_table)
    ratios = [p.e_numeric / p.e_model for p in points]
    assert all(0.5 <= r <= 2.0 for r in ratios)
    errs = [p.e_numeric for p in points]
    i = int(np.argmin(errs))
    assert 0 < i < len(errs) - 1
    # expected band: F between ~0.98 (N=8) and 0.995 (N=3)
    assert 1.0 - min(errs) >= 0.975


def scaled_config(n: int, b_scale: float, gamma: float) -> ProtocolConfig:
    b = b_scale * mhz(45.0)
    return ProtocolConfig(
        chain=ChainConfig(n, SPACING),
        interaction=InteractionConfig.from_nn_strength(b, SPACING),
        pulse=PulseProfile(LAMBDA1 * b, LAMBDA2 * b, 1.0),
        decay=DecayConfig(gamma, gamma),
        model=Model.FULL_VDW,
        include_decay=True,
    )


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_e_min_tracks_interaction_scaling(n, fitted_c):
    # a decade of B/Gamma: vary the decay rate at fixed B, plus a doubled-B
    # point with the drive ratios lambda1, lambda2 held fixed
    mu_nu = n if n % 2 else n - 1
    c_dom = fitted_c[mu_nu]
    cases = [(1.0, mhz(0.002)), (1.0, GAMMA), (2.0, GAMMA)]
    for b_scale, gamma in cases:
        cfg = scaled_config(n, b_scale, gamma)
        c_all = dict(fitted_c)
        c_all.update(kappa_c_table([nu for nu in (n - 2, n - 1, n) if nu not in c_all], cfg.pulse))
        tau_opt, _ = optimal_tau(n, c_dom, cfg.pulse, gamma)
        taus = tau_opt * np.array([0.6, 0.8, 1.0, 1.25, 1.6])
        points = sweep_tau(n, cfg, taus, c_all)
        e_numeric = min(p.e_numeric for p in points)
        e_model = e_min_vs_interaction(n, c_dom, LAMBDA1, LAMBDA2, gamma, cfg.interaction.b_nn)
        assert abs(e_numeric - e_model) / e_model < 0.25, (
            f"N={n} B-scale={b_scale} Gamma={gamma}: numeric {e_numeric:.4g} vs model {e_model:.4g}"
        )
