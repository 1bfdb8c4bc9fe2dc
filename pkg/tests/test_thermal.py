"""Thermal-motion Monte Carlo: kinematics, dephasing, convergence."""

import math
from dataclasses import replace

import numpy as np
import pytest

from afmgate.config import Model
from afmgate.errors import SampleRejected
from afmgate.evolution import run_protocol
from afmgate.gate import INPUT_LABELS, active_atoms, fidelity_from_diag
from afmgate.thermal import (
    KinematicDraw,
    ThermalConfig,
    analytic_dephasing,
    run_thermal_ensemble,
    run_thermal_trial,
    sample_kinematics,
    thermal_branch_amplitude,
)
from afmgate.units import thermal_velocity

from conftest import reference_config


class TestKinematics:
    def test_thermal_velocity_at_one_microkelvin(self):
        # sqrt(k_B 1uK / m_Rb87) in um/us, frozen from direct evaluation
        assert thermal_velocity(1e-6) == pytest.approx(9.781e-3, rel=1e-3)

    def test_zero_temperature_draws_are_zero(self):
        tcfg = ThermalConfig(temperature=0.0, trials=4, seed=1)
        draw = sample_kinematics(tcfg, 5, 0)
        assert np.all(draw.offsets == 0.0)
        assert np.all(draw.velocities == 0.0)

    def test_draws_reproducible_per_seed_and_trial(self):
        tcfg = ThermalConfig(temperature=1e-6, trials=4, seed=11)
        a = sample_kinematics(tcfg, 5, 3)
        b = sample_kinematics(tcfg, 5, 3)
        assert np.array_equal(a.velocities, b.velocities)
        c = sample_kinematics(tcfg, 5, 4)
        assert not np.array_equal(a.velocities, c.velocities)

    def test_velocity_scale_matches_v_th(self):
        tcfg = ThermalConfig(temperature=1e-6, trials=1, seed=5)
        draws = np.concatenate(
            [sample_kinematics(tcfg, 5, k).velocities for k in range(400)]
        )
        assert np.std(draws) == pytest.approx(tcfg.v_th, rel=0.1)

    def test_position_spread_populates_offsets(self):
        tcfg = ThermalConfig(temperature=0.0, position_sigma=0.05, trials=1, seed=4)
        draws = np.stack([sample_kinematics(tcfg, 5, k).offsets for k in range(200)])
        assert np.std(draws) == pytest.approx(0.05, rel=0.15)
        assert np.all(sample_kinematics(tcfg, 5, 0).velocities == 0.0)

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            ThermalConfig(temperature=-1e-6)
        with pytest.raises(ValueError):
            ThermalConfig(temperature=1e-6, trials=0)


class TestAnalyticDephasing:
    def test_zero_temperature_gives_zero(self):
        cfg = reference_config()
        tcfg = ThermalConfig(temperature=0.0, trials=1)
        est = analytic_dephasing(tcfg, cfg.chain, cfg.interaction, 1.0)
        assert est.delta_b2 == 0.0
        assert est.delta_phi == 0.0

    def test_reference_scale_estimate(self):
        # B2 = 2pi x 45/64 MHz, a = 4 um, T = 1 uK, tau = 1 us
        cfg = reference_config()
        tcfg = ThermalConfig(temperature=1e-6, trials=1)
        est = analytic_dephasing(tcfg, cfg.chain, cfg.interaction, 1.0)
        assert est.delta_phi == pytest.approx(0.0458, rel=1e-2)
        assert est.delta_phi < 0.05

    def test_inverse_spacing_scaling_at_fixed_b2(self):
        from afmgate.config import ChainConfig, InteractionConfig

        cfg_a = reference_config()
        b_nn = cfg_a.interaction.b_nn
        chain_half = ChainConfig(n_atoms=5, spacing=2.0)
        inter_half = InteractionConfig.from_nn_strength(b_nn, 2.0)
        tcfg = ThermalConfig(temperature=1e-6, trials=1)
        est_a = analytic_dephasing(tcfg, cfg_a.chain, cfg_a.interaction, 1.0)
        est_half = analytic_dephasing(tcfg, chain_half, inter_half, 1.0)
        # halving a at fixed nearest-neighbour (and hence B2) strength
        assert est_half.delta_phi / est_a.delta_phi == pytest.approx(2.0, rel=1e-12)


class TestThermalTrials:
    def test_zero_draw_reduces_to_static_protocol(self):
        cfg = reference_config(n_atoms=5, model=Model.FULL_VDW)
        diag = run_thermal_trial(5, cfg, KinematicDraw.zero(5))
        static = np.array(
            [
                run_protocol(
                    len(active_atoms(5, label)), replace(cfg, dt=cfg.pulse.tau / 1500),
                    compute_phases=False,
                ).ground_amplitude()
                for label in INPUT_LABELS
            ]
        )
        assert abs(fidelity_from_diag(5, diag) - fidelity_from_diag(5, static)) < 1e-10

    def test_thermal_requires_vdw_model(self):
        cfg = reference_config(n_atoms=5, model=Model.PXP)
        with pytest.raises(ValueError):
            run_thermal_trial(5, cfg, KinematicDraw.zero(5))

    def test_crossing_atoms_rejected(self):
        cfg = reference_config(n_atoms=5, model=Model.FULL_VDW)
        vel = np.zeros(5)
        vel[2] = 10.0  # 10 um/us for 2 us crosses the 4 um spacing
        with pytest.raises(SampleRejected):
            run_thermal_trial(5, cfg, KinematicDraw(np.zeros(5), vel))

    def test_bulk_atom_phase_sensitivity_below_edge(self):
        # AFM bulk motion cancels at first order; edges do not
        cfg = reference_config(n_atoms=7, model=Model.FULL_VDW)
        v = thermal_velocity(1e-6)

        def sensitivity(atom):
            phases = []
            for sign in (+1.0, -1.0):
                vel = np.zeros(7)
                vel[atom] = sign * v
                amp = thermal_branch_amplitude(7, cfg, KinematicDraw(np.zeros(7), vel), "11")
                phases.append(np.angle(amp))
            return (phases[0] - phases[1]) / 2

    # edge atom 0 vs a bulk atom in the AFM interior
        edge = abs(sensitivity(0))
        bulk = abs(sensitivity(3))
        assert bulk < 0.5 * edge


class TestEnsemble:
    def test_deterministic_for_seed(self):
        cfg = reference_config(n_atoms=3, model=Model.FULL_VDW, tau=0.4)
        tcfg = ThermalConfig(temperature=1e-6, trials=6, seed=21)
        r1 = run_thermal_ensemble(3, cfg, tcfg)
        r2 = run_thermal_ensemble(3, cfg, tcfg)
        assert np.array_equal(r1.delta_phi_samples, r2.delta_phi_samples)
        assert r1.fidelity_loss == r2.fidelity_loss

    def test_standard_error_scales_like_inverse_sqrt_trials(self):
        cfg = reference_config(n_atoms=3, model=Model.FULL_VDW, tau=0.4)
        small = run_thermal_ensemble(3, cfg, ThermalConfig(temperature=4e-6, trials=32, seed=3))
        big = run_thermal_ensemble(3, cfg, ThermalConfig(temperature=4e-6, trials=128, seed=3))

        def sem(report):
            return float(np.std(report.fidelity_samples, ddof=1) / math.sqrt(report.trials))

        ratio = sem(small) / sem(big)
        assert 1.0 < ratio < 4.0  # expect ~2 for a 4x trials increase

    def test_report_quantities_well_formed(self):
        cfg = reference_config(n_atoms=3, model=Model.FULL_VDW, tau=0.4)
        rep = run_thermal_ensemble(3, cfg, ThermalConfig(temperature=1e-6, trials=8, seed=2))
        assert 0.0 <= rep.fidelity_loss <= 1.0
        assert rep.delta_phi_rms >= 0.0
        assert rep.trials == 8
        assert rep.rejected == 0
