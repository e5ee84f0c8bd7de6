"""Interaction-matrix validation, spectral analysis, and growth prediction."""

import numpy as np
import pytest

import irbp
from irbp.errors import (
    ColumnSumExceedsOne,
    NegativeEntry,
    NotIrreducible,
    ParameterOutOfRange,
)
from irbp.model import (
    dump_matrix_csv,
    load_matrix_csv,
    matrix_from_json,
    matrix_to_json,
)

NONSYM = [[0.50, 0.20], [0.45, 0.20]]


def random_irreducible(rng, n):
    """Strictly positive matrix with admissible column sums."""
    m = rng.uniform(0.05, 1.0, size=(n, n))
    return irbp.validate(m / (m.sum(axis=0) * rng.uniform(1.0, 2.0)))


class TestValidate:
    def test_nonsymmetric_fixture_is_irreducible(self):
        mat = irbp.validate(NONSYM)
        assert mat.n == 2
        assert mat.irreducible

    def test_decoupled_identity_is_reducible(self):
        mat = irbp.validate([[1.0, 0.0], [0.0, 1.0]])
        assert not mat.irreducible

    def test_column_sum_above_one_rejected(self):
        with pytest.raises(ColumnSumExceedsOne):
            irbp.validate([[0.6, 0.7], [0.5, 0.4]])  # column 2 sums to 1.1

    def test_column_sum_tolerance(self):
        irbp.validate([[1.0 + 5e-13]])
        with pytest.raises(ColumnSumExceedsOne):
            irbp.validate([[1.0 + 1e-10]])

    def test_negative_entry_rejected(self):
        with pytest.raises(NegativeEntry):
            irbp.validate([[0.5, -1e-15], [0.1, 0.2]])

    def test_non_square_rejected(self):
        with pytest.raises(ParameterOutOfRange):
            irbp.validate([[0.1, 0.2, 0.3], [0.1, 0.2, 0.3]])


class TestSCC:
    def test_upper_triangular_support(self):
        mat = irbp.validate([[0.5, 0.3], [0.0, 0.5]])
        scc = irbp.strongly_connected_components(mat)
        assert scc.components == ((0,), (1,))
        assert scc.edges == frozenset({(0, 1)})
        assert scc.component_of == (0, 1)

    def test_single_component(self):
        scc = irbp.strongly_connected_components(irbp.validate(NONSYM))
        assert scc.components == ((0, 1),)
        assert scc.edges == frozenset()

    def test_one_process(self):
        scc = irbp.strongly_connected_components(irbp.validate([[0.9]]))
        assert scc.components == ((0,),)

    def test_condensation_is_topologically_ordered(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(2, 9))
            m = rng.uniform(0, 1, size=(n, n)) * (rng.random((n, n)) < 0.4)
            m = m / max(1.0, m.sum(axis=0).max())
            scc = irbp.strongly_connected_components(irbp.validate(m))
            for a, b in scc.edges:
                assert a < b


class TestPerron:
    def test_nonsymmetric_fixture(self):
        spec = irbp.perron(irbp.validate(NONSYM))
        assert spec.gamma_star == pytest.approx(0.685, abs=5e-4)
        assert spec.u[0] / spec.u[1] == pytest.approx(2.424, abs=5e-3)
        # reported components match the v.1 = 1, v.u = 1 normalization
        assert spec.u == pytest.approx([1.394, 0.575], abs=1e-3)

    def test_permutation_matrix(self):
        spec = irbp.perron(irbp.validate([[0.0, 1.0], [1.0, 0.0]]))
        assert spec.gamma_star == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(spec.v, [0.5, 0.5], atol=1e-12)
        np.testing.assert_allclose(spec.u, [1.0, 1.0], atol=1e-12)
        assert spec.gamma2_real == pytest.approx(-1.0, abs=1e-9)

    def test_mean_field_spectrum(self):
        spec = irbp.perron(irbp.mean_field_matrix(0.7, 0.9, 2))
        assert spec.gamma_star == pytest.approx(0.7, abs=1e-12)
        assert spec.gamma2_real == pytest.approx(0.07, abs=1e-10)
        assert spec.gap_ok  # 0.07 / 0.7 = 0.1 < 1/2

    def test_reducible_rejected(self):
        with pytest.raises(NotIrreducible):
            irbp.perron(irbp.validate([[1.0, 0.0], [0.0, 1.0]]))

    def test_residuals_and_normalization(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            n = int(rng.integers(1, 9))
            mat = random_irreducible(rng, n)
            spec = irbp.perron(mat)
            g = mat.entries
            assert np.all(spec.u > 0) and np.all(spec.v > 0)
            assert spec.v.sum() == pytest.approx(1.0, abs=1e-12)
            assert spec.v @ spec.u == pytest.approx(1.0, abs=1e-12)
            assert np.max(np.abs(spec.u @ g - spec.gamma_star * spec.u)) < 1e-10
            assert np.max(np.abs(g @ spec.v - spec.gamma_star * spec.v)) < 1e-10

    def test_gamma_star_against_numpy_spectrum(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            mat = random_irreducible(rng, int(rng.integers(2, 9)))
            spec = irbp.perron(mat)
            eigs = np.linalg.eigvals(mat.entries)
            assert spec.gamma_star == pytest.approx(
                np.max(np.abs(eigs)), abs=1e-10)

    def test_gamma2_against_numpy_spectrum(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            mat = random_irreducible(rng, int(rng.integers(2, 9)))
            spec = irbp.perron(mat)
            eigs = sorted(np.linalg.eigvals(mat.entries),
                          key=lambda z: -abs(z))
            rest = eigs[1:]
            dominant_rest = max(rest, key=lambda z: (round(abs(z), 9), z.real))
            assert spec.gamma2_real == pytest.approx(
                dominant_rest.real, abs=1e-7)

    def test_unit_eigenvalue_iff_column_stochastic(self):
        rng = np.random.default_rng(19)
        for _ in range(20):
            n = int(rng.integers(2, 8))
            m = rng.uniform(0.05, 1.0, size=(n, n))
            stoch = m / m.sum(axis=0)
            assert irbp.perron(irbp.validate(stoch)).gamma_star == \
                pytest.approx(1.0, abs=1e-10)
            shrunk = stoch * rng.uniform(0.3, 0.99)
            assert irbp.perron(irbp.validate(shrunk)).gamma_star < 1.0 - 1e-10

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            n = int(rng.integers(2, 7))
            mat = random_irreducible(rng, n)
            perm = rng.permutation(n)
            permuted = irbp.validate(mat.entries[np.ix_(perm, perm)])
            a, b = irbp.perron(mat), irbp.perron(permuted)
            assert b.gamma_star == pytest.approx(a.gamma_star, abs=1e-10)
            np.testing.assert_allclose(b.u, a.u[perm], atol=1e-9)
            np.testing.assert_allclose(b.v, a.v[perm], atol=1e-9)


class TestMeanFieldMatrix:
    def test_reference_construction(self):
        mat = irbp.mean_field_matrix(0.7, 0.9, 2)
        np.testing.assert_allclose(
            mat.entries, [[0.385, 0.315], [0.315, 0.385]], atol=1e-12)
        np.testing.assert_allclose(mat.column_sums(), 0.7, atol=1e-12)

    def test_full_intensity_collapses_to_constant(self):
        mat = irbp.mean_field_matrix(0.6, 1.0, 4)
        np.testing.assert_allclose(mat.entries, 0.15, atol=1e-15)

    def test_single_process(self):
        mat = irbp.mean_field_matrix(0.5, 0.2, 1)
        np.testing.assert_allclose(mat.entries, [[0.5]], atol=1e-15)

    def test_parameter_ranges(self):
        for bad in ((0.0, 0.5, 2), (1.2, 0.5, 2), (0.5, 0.0, 2),
                    (0.5, 1.5, 2), (0.5, 0.5, 0)):
            with pytest.raises(ParameterOutOfRange):
                irbp.mean_field_matrix(*bad)


class TestGrowthExponents:
    def test_block_diagonal(self):
        g = irbp.growth_exponents(irbp.validate([[0.5, 0.0], [0.0, 0.8]]))
        np.testing.assert_allclose(g.exponent, [0.5, 0.8])
        assert list(g.log_power) == [0, 0]

    def test_inherited_exponent(self):
        g = irbp.growth_exponents(irbp.validate([[0.8, 0.3], [0.0, 0.5]]))
        np.testing.assert_allclose(g.exponent, [0.8, 0.8])
        assert list(g.log_power) == [0, 0]

    def test_equal_eigenvalue_chain_gains_log(self):
        g = irbp.growth_exponents(irbp.validate([[0.7, 0.2], [0.0, 0.7]]))
        np.testing.assert_allclose(g.exponent, [0.7, 0.7])
        assert list(g.log_power) == [0, 1]

    def test_irreducible_is_flat_at_perron(self):
        mat = irbp.validate(NONSYM)
        g = irbp.growth_exponents(mat)
        spec = irbp.perron(mat)
        np.testing.assert_allclose(g.exponent, spec.gamma_star, atol=1e-10)
        assert list(g.log_power) == [0, 0]

    def test_three_level_chain(self):
        m = [[0.6, 0.1, 0.0],
             [0.0, 0.6, 0.1],
             [0.0, 0.0, 0.6]]
        g = irbp.growth_exponents(irbp.validate(m))
        np.testing.assert_allclose(g.exponent, 0.6)
        assert list(g.log_power) == [0, 1, 2]

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(29)
        base = np.array([[0.8, 0.3, 0.0], [0.0, 0.5, 0.2], [0.0, 0.0, 0.4]])
        g0 = irbp.growth_exponents(irbp.validate(base))
        for _ in range(6):
            perm = rng.permutation(3)
            g1 = irbp.growth_exponents(
                irbp.validate(base[np.ix_(perm, perm)]))
            np.testing.assert_allclose(g1.exponent, g0.exponent[perm])
            assert list(g1.log_power) == list(g0.log_power[perm])

    def test_log_correction_visible_in_expectation_dynamics(self):
        # the chained equal-root prediction: E[S_2]/t^0.7 keeps drifting up
        # while E[S_2]/(t^0.7 ln t) settles
        mat = irbp.validate([[0.7, 0.2], [0.0, 0.7]])
        params = irbp.ModelParams(theta=[0.5, 0.5], c=[1.0, 1.0])
        probes = np.array([10 ** 3, 10 ** 4, 10 ** 5])
        _, es = irbp.exact_expected_counts(params, mat, 10 ** 5,
                                           checkpoints=probes)
        plain = es[:, 1] / probes ** 0.7
        logged = es[:, 1] / (probes ** 0.7 * np.log(probes))
        plain_growth = np.diff(plain) / plain[:-1]
        logged_drift = np.abs(np.diff(logged) / logged[:-1])
        assert np.all(plain_growth > 0.10)        # > 10% per decade
        assert np.all(logged_drift < 0.09)        # settling
        assert logged_drift[1] < logged_drift[0]  # and slowing down


class TestMatrixIO:
    def test_csv_roundtrip(self, tmp_path):
        mat = irbp.validate(NONSYM)
        path = tmp_path / "m.csv"
        dump_matrix_csv(mat, path)
        again = load_matrix_csv(path)
        np.testing.assert_array_equal(again.entries, mat.entries)

    def test_json_forms(self):
        mat = matrix_from_json({"n": 2, "entries": NONSYM})
        np.testing.assert_array_equal(mat.entries, NONSYM)
        mf = matrix_from_json(
            {"mean_field": {"gamma_star": 0.7, "iota": 0.9, "n": 2}})
        assert mf.mean_field == (0.7, 0.9)
        obj = matrix_to_json(mat)
        assert obj["n"] == 2 and obj["entries"][1][0] == 0.45

    def test_json_shape_mismatch(self):
        with pytest.raises(ParameterOutOfRange):
            matrix_from_json({"n": 3, "entries": NONSYM})
