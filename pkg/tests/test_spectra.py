"""Spectrum scans, symmetry classification, gaps and AFM analytics."""

import math

import numpy as np
import pytest

from afmgate.basis import build_blockade_basis
from afmgate.config import InteractionConfig, Model, PulseProfile
from afmgate.hamiltonian import AfmMode, build_afm_effective, build_pxp
from afmgate.spectra import (
    SymmetryLabel,
    afm_analytic_spectrum,
    classify_symmetry,
    eig_sorted,
    inversion_matrix,
    min_gap,
    scan_spectrum,
    wrong_parity_partner,
)
from conftest import B_NN, DELTA0, OMEGA0, SPACING


class TestEigSorted:
    def test_two_level_at_zero_detuning(self):
        w, v = eig_sorted(build_pxp(1.0, 0.0, build_blockade_basis(1)))
        assert w == pytest.approx([-0.5, 0.5])

    def test_diagonal_matrix_returns_sorted_diagonal(self):
        d = np.diag([3.0, -1.0, 2.0]).astype(complex)
        w, _ = eig_sorted(d)
        assert w == pytest.approx([-1.0, 2.0, 3.0])

    def test_residuals_and_orthonormality(self):
        h = build_pxp(1.2, 0.4, build_blockade_basis(5))
        w, v = eig_sorted(h)
        scale = np.linalg.norm(h.matrix)
        for k in range(len(w)):
            assert np.linalg.norm(h.matrix @ v[:, k] - w[k] * v[:, k]) < 1e-10 * scale
        assert np.abs(v.conj().T @ v - np.eye(len(w))).max() < 1e-10

    def test_pxp_nu3_spectrum_symmetric_about_zero(self):
        # independent 5x5 construction over {000,100,010,001,101}:
        # |000> couples to each single flip; |100>,|001> couple to |101>
        om = 1.7
        h = np.zeros((5, 5))
        h[0, 1] = h[0, 2] = h[0, 3] = om / 2
        h[1, 4] = h[3, 4] = om / 2
        h = h + h.T
        w = np.linalg.eigvalsh(h)
        mine, _ = eig_sorted(build_pxp(om, 0.0, build_blockade_basis(3)))
        assert mine == pytest.approx(w, abs=1e-12)
        assert mine == pytest.approx(-mine[::-1], abs=1e-12)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError):
            eig_sorted(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))


class TestClassifySymmetry:
    def test_antisymmetric_combination(self):
        basis = build_blockade_basis(3)
        vec = np.zeros(5, dtype=complex)
        vec[basis.index[0b100]] = 1 / math.sqrt(2)
        vec[basis.index[0b001]] = -1 / math.sqrt(2)
        assert classify_symmetry(vec, basis) is SymmetryLabel.ANTISYMMETRIC

    def test_symmetric_single_configuration(self):
        basis = build_blockade_basis(3)
        vec = np.zeros(5, dtype=complex)
        vec[basis.index[0b010]] = 1.0
        assert classify_symmetry(vec, basis) is SymmetryLabel.SYMMETRIC

    def test_dark_afm_combination_is_antisymmetric(self):
        basis = build_blockade_basis(4)
        vec = np.zeros(basis.dim, dtype=complex)
        vec[basis.index[0b1010]] = 1 / math.sqrt(2)   # |1r1r>
        vec[basis.index[0b0101]] = -1 / math.sqrt(2)  # |r1r1>
        assert classify_symmetry(vec, basis) is SymmetryLabel.ANTISYMMETRIC

    def test_inversion_matrix_is_an_involution(self):
        basis = build_blockade_basis(5)
        inv = inversion_matrix(basis)
        assert np.abs(inv @ inv - np.eye(basis.dim)).max() == 0.0


class TestScanSpectrum:
    def test_lowest_branch_endpoints(self, pulse):
        scan = scan_spectrum(3, pulse, Model.PXP, grid_size=101)
        assert scan.eigenvalues[0, 0] == pytest.approx(0.0, abs=1e-9)
        assert scan.eigenvalues[-1, 0] == pytest.approx(-2 * DELTA0, rel=1e-9)

    def test_eigenvalues_sorted_everywhere(self, pulse):
        scan = scan_spectrum(4, pulse, Model.PXP, grid_size=51)
        assert np.all(np.diff(scan.eigenvalues, axis=1) >= 0)

    def test_nu5_lowest_branch_reaches_afm_energy(self, pulse):
        # the drive vanishes at the sweep edge, so E_1(+Delta0) is exactly
        # the ordered configuration energy -3 Delta0
        scan = scan_spectrum(5, pulse, Model.PXP, grid_size=51)
        assert scan.eigenvalues[-1, 0] == pytest.approx(-3 * DELTA0, rel=1e-12)

    def test_antisymmetric_states_are_dark(self, pulse):
        scan = scan_spectrum(5, pulse, Model.PXP, grid_size=101)
        for g in range(len(scan.delta_grid)):
            for k, label in enumerate(scan.symmetry[g]):
                if label is SymmetryLabel.ANTISYMMETRIC:
                    for eta in (scan.eta_low[g, k], scan.eta_high[g, k]):
                        if not math.isnan(eta):
                            assert eta < 1e-10

    def test_defined_couplings_nonnegative(self, pulse):
        scan = scan_spectrum(4, pulse, Model.PXP, grid_size=31)
        finite = scan.eta_low[~np.isnan(scan.eta_low)]
        assert np.all(finite >= 0)

    def test_zero_drive_scan_gives_linear_levels(self):
        dead = PulseProfile(0.0, DELTA0, 1.0)
        scan = scan_spectrum(3, dead, Model.PXP, grid_size=21)
        for g, delta in enumerate(scan.delta_grid):
            counts = np.sort([-delta * n for n in (0, 1, 1, 1, 2)])
            assert scan.eigenvalues[g] == pytest.approx(counts, abs=1e-12)
            finite = scan.eta_low[g][~np.isnan(scan.eta_low[g])]
            assert np.all(finite == 0.0)

    def test_gauge_fixed_overlaps_real_positive_away_from_degeneracies(self, pulse):
        scan = scan_spectrum(4, pulse, Model.PXP, grid_size=201)
        w = scan.eigenvalues
        for g in range(1, len(scan.delta_grid)):
            gaps_prev = np.minimum(
                np.abs(np.diff(w[g - 1], prepend=np.inf)), np.abs(np.diff(w[g - 1], append=np.inf))
            )
            gaps_here = np.minimum(
                np.abs(np.diff(w[g], prepend=np.inf)), np.abs(np.diff(w[g], append=np.inf))
            )
            for k in range(scan.dim):
                if min(gaps_prev[k], gaps_here[k]) < 0.05 * OMEGA0:
                    continue  # too close to a (near-)degeneracy to track
                ov = np.vdot(scan.eigenvectors[g - 1][:, k], scan.eigenvectors[g][:, k])
                assert abs(ov.imag) < 1e-10
                assert ov.real > 0

    def test_mirror_symmetry_pointwise(self, pulse):
        inter = InteractionConfig.from_nn_strength(B_NN, SPACING)
        inter_m = InteractionConfig.from_nn_strength(-B_NN, SPACING)
        scan_p = scan_spectrum(4, pulse, Model.FULL_VDW, inter, grid_size=41)
        scan_m = scan_spectrum(4, pulse, Model.FULL_VDW, inter_m, grid_size=41)
        # Delta grid is antisymmetric about mid-pulse: compare reversed points
        for g in range(41):
            w1 = scan_p.eigenvalues[g]
            w2 = scan_m.eigenvalues[40 - g]
            assert np.abs(w1 + w2[::-1]).max() < 1e-10 * max(1.0, np.abs(w1).max())

    def test_small_grid_rejected(self, pulse):
        with pytest.raises(ValueError):
            scan_spectrum(3, pulse, Model.PXP, grid_size=2)


class TestMinGap:
    def test_single_atom_gap_is_omega0_at_zero_detuning(self, pulse):
        report = min_gap(1, pulse)
        assert report.gap == pytest.approx(OMEGA0, rel=1e-6)
        assert report.kappa == pytest.approx(1.0, rel=1e-6)
        assert abs(report.delta_at_min) < 1e-3 * DELTA0

    def test_partner_indices(self):
        assert wrong_parity_partner(3) == 2
        assert wrong_parity_partner(5) == 2
        assert wrong_parity_partner(4) == 4
        assert wrong_parity_partner(6) == 5

    def test_odd_chain_gaps_shrink_with_size(self, pulse):
        kappas = [min_gap(nu, pulse).kappa for nu in (3, 5, 7)]
        assert kappas[0] > kappas[1] > kappas[2]

    def test_gap_constants_consistent_with_fitted_values(self, pulse):
        # pi kappa^2 / 4 from the PXP gaps tracks the dynamically fitted
        # constants (0.43, 0.28, 0.19) at the 30% level
        for nu, c_fit in [(3, 0.43), (5, 0.28), (7, 0.19)]:
            c_gap = math.pi * min_gap(nu, pulse).kappa ** 2 / 4
            assert abs(c_gap - c_fit) / c_fit < 0.3

    def test_vdw_gap_close_to_pxp(self, pulse):
        inter = InteractionConfig.from_nn_strength(B_NN, SPACING)
        g_pxp = min_gap(5, pulse).gap
        g_vdw = min_gap(5, pulse, Model.FULL_VDW, inter).gap
        assert abs(g_vdw - g_pxp) / g_pxp < 0.2

    def test_boundary_softened_power_law(self, pulse):
        # kappa_nu ~ nu^-p with 0 < p < 1 for the accessible odd sizes
        nus = np.array([3, 5, 7, 9])
        kappas = np.array([min_gap(int(nu), pulse).kappa for nu in nus])
        p = -np.polyfit(np.log(nus), np.log(kappas), 1)[0]
        assert 0.0 < p < 1.0


class TestAfmAnalyticSpectrum:
    def test_nu4_pxp_ground_state_and_energy(self):
        om, de = 1.0, 10.0
        s = om**2 / (4 * de)
        spec = afm_analytic_spectrum(4, om, de, None, AfmMode.PXP)
        assert spec.energies[0] == pytest.approx(-2 * (de + s) - math.sqrt(2) * s, rel=1e-12)
        # aleph_1 = |r11r>/sqrt2 + (|1r1r> + |r1r1>)/2 over (a1, a2, a3)
        assert np.abs(spec.vectors[0] - np.array([0.5, 1 / math.sqrt(2), 0.5])).max() < 1e-12
        # aleph_2 = (|1r1r> - |r1r1>)/sqrt2
        assert np.abs(np.abs(spec.vectors[1]) - np.array([1 / math.sqrt(2), 0.0, 1 / math.sqrt(2)])).max() < 1e-12
        assert spec.energies[1] == pytest.approx(-2 * (de + s), rel=1e-12)

    @pytest.mark.parametrize("mode", [AfmMode.PXP, AfmMode.VDW_DEGENERATE, AfmMode.VDW_SPLIT])
    def test_eigenvectors_orthonormal(self, mode):
        inter = InteractionConfig.from_nn_strength(30.0, 1.0)
        spec = afm_analytic_spectrum(8, 1.0, 10.0, inter, mode)
        gram = spec.vectors @ spec.vectors.T
        assert np.abs(gram - np.eye(len(spec.energies))).max() < 1e-12

    @pytest.mark.parametrize("nu", [4, 6, 8])
    def test_pxp_band_diagonalizes_the_effective_hamiltonian(self, nu):
        om, de = 1.0, 10.0
        spec = afm_analytic_spectrum(nu, om, de, None, AfmMode.PXP)
        w = np.linalg.eigvalsh(build_afm_effective(nu, om, de, None, AfmMode.PXP).matrix)
        assert np.sort(spec.energies) == pytest.approx(w, rel=1e-12)

    @pytest.mark.parametrize("nu", [4, 6, 8])
    def test_split_band_diagonalizes_the_bulk_subspace(self, nu):
        om, de = 1.0, 10.0
        inter = InteractionConfig.from_nn_strength(3 * de, 1.0)
        spec = afm_analytic_spectrum(nu, om, de, inter, AfmMode.VDW_SPLIT)
        n_bulk = nu // 2 - 1
        w = np.linalg.eigvalsh(build_afm_effective(nu, om, de, inter, AfmMode.VDW_SPLIT).matrix)
        assert np.sort(spec.energies[:n_bulk]) == pytest.approx(w, rel=1e-12)

    def test_degenerate_band_matches_uniform_ladder(self):
        # Eq.-level check: the degenerate-regime band diagonalizes the
        # uniform-diagonal hopping ladder built from the same shifts
        from afmgate.hamiltonian import AfmManifoldModel

        nu, om, de = 6, 1.0, 10.0
        inter = InteractionConfig.from_nn_strength(3 * de, 1.0)
        model = AfmManifoldModel.evaluate(nu, om, de, inter)
        m = nu // 2 + 1
        ladder = np.full((m, m), 0.0)
        np.fill_diagonal(ladder, model.e_defect)
        for j in range(m - 1):
            ladder[j, j + 1] = ladder[j + 1, j] = -model.j_hop
        spec = afm_analytic_spectrum(nu, om, de, inter, AfmMode.VDW_DEGENERATE)
        assert np.sort(spec.energies) == pytest.approx(np.linalg.eigvalsh(ladder), rel=1e-12)

    def test_odd_nu_rejected(self):
        with pytest.raises(ValueError):
            afm_analytic_spectrum(5, 1.0, 10.0, None, AfmMode.PXP)
