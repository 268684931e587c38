import numpy as np
import pytest

import edgewatch as ew
from edgewatch import floquet
from edgewatch.errors import (
    DegenerateS,
    EdgeSingularity,
    NotAnEdge,
    OutsideSpectrum,
)
from edgewatch.floquet import EdgeClassification
from scipy.integrate import quad


def test_transfer_matrix_values():
    V0 = ew.PeriodicPotential.from_values([0.0])
    M = ew.transfer_matrix(V0, 0.0, 0)
    assert (M.m11, M.m12, M.m21, M.m22) == (0.0, -1.0, 1.0, 0.0)
    V = ew.PeriodicPotential.from_values([0.0, 3.0])
    M = ew.transfer_matrix(V, 1.0, 1)
    assert (M.m11, M.m12, M.m21, M.m22) == (-2.0, -1.0, 1.0, 0.0)


def test_transfer_det_is_one_random():
    rng = np.random.default_rng(0)
    for _ in range(100):
        p = int(rng.integers(1, 6))
        V = ew.PeriodicPotential.from_values(rng.uniform(-3, 3, p))
        E = complex(rng.uniform(-5, 5), rng.uniform(-3, 3))
        l = int(rng.integers(0, 3 * p))
        M = ew.transfer_matrix(V, E, l)
        mag = max(abs(M.m11), abs(M.m12), abs(M.m21), abs(M.m22))
        assert abs(M.det() - 1.0) <= 1e-10 * (1 + mag) ** 2


def test_product_matrix_identity_and_symbolic():
    V = ew.PeriodicPotential.from_values([0.0, 3.0])
    I = ew.product_matrix(V, 1.7, 0)
    assert (I.m11, I.m12, I.m21, I.m22) == (1.0, 0.0, 0.0, 1.0)
    # single factor: a_1(E) = E, b_1(E) = -1
    for E in (-1.3, 0.4, 2.5):
        M = ew.product_matrix(V, E, 1)
        assert M.m11 == pytest.approx(E, abs=1e-14)
        assert M.m12 == -1.0
    # two factors at E = -1: a_2 = (-1)^2 - 3(-1) - 1 = 3, b_2 = 3 - (-1) = 4
    M = ew.product_matrix(V, -1.0, 2)
    assert M.m11 == pytest.approx(3.0, abs=1e-12)
    assert M.m12 == pytest.approx(4.0, abs=1e-12)


def test_product_matrix_cross_determinant():
    rng = np.random.default_rng(1)
    for _ in range(100):
        p = int(rng.integers(1, 6))
        V = ew.PeriodicPotential.from_values(rng.uniform(-3, 3, p))
        E = complex(rng.uniform(-4, 4), rng.uniform(-2, 2))
        k = int(rng.integers(0, p + 1))
        M = ew.product_matrix(V, E, k)
        assert abs(M.m11 * M.m22 - M.m12 * M.m21 - 1.0) <= 1e-10


def test_product_matrix_rejects_bad_k():
    V = ew.PeriodicPotential.from_values([0.0, 3.0])
    with pytest.raises(ValueError):
        ew.product_matrix(V, 0.0, -1)
    with pytest.raises(ValueError):
        ew.product_matrix(V, 0.0, 3)


def test_monodromy_symbolic():
    # T_1 T_0 for V = (0, 3): ((E^2-3E-1, 3-E), (E, -1))
    V = ew.PeriodicPotential.from_values([0.0, 3.0])
    for E in (-1.0, 0.5, 2.0):
        M = ew.monodromy(V, E, 0)
        assert M.m11 == pytest.approx(E * E - 3 * E - 1, abs=1e-12)
        assert M.m12 == pytest.approx(3 - E, abs=1e-12)
        assert M.m21 == pytest.approx(E, abs=1e-12)
        assert M.m22 == pytest.approx(-1.0, abs=1e-12)


def test_monodromy_period_one_is_transfer():
    V = ew.PeriodicPotential.from_values([0.7])
    for E in (0.0, 1.2):
        M = ew.monodromy(V, E, 0)
        T = ew.transfer_matrix(V, E, 0)
        assert (M.m11, M.m12, M.m21, M.m22) == (T.m11, T.m12, T.m21, T.m22)


def test_monodromy_trace_independent_of_base():
    V = ew.PeriodicPotential.from_values([0.0, 3.0])
    rng = np.random.default_rng(2)
    for _ in range(20):
        E = complex(rng.uniform(-5, 5), rng.uniform(-3, 3))
        t0 = ew.monodromy(V, E, 0).trace()
        t1 = ew.monodromy(V, E, 1).trace()
        assert abs(t0 - t1) <= 1e-12 * max(1.0, abs(t0))
    with pytest.raises(ValueError):
        ew.monodromy(V, 0.0, 2)


def test_discriminant_values():
    V0 = ew.PeriodicPotential.from_values([0.0])
    for E in (-2.0, 0.0, 1.5):
        assert ew.discriminant(V0, E) == pytest.approx(E, abs=1e-14)
    V = ew.PeriodicPotential.from_values([0.0, 3.0])
    assert ew.discriminant(V, -1.0) == pytest.approx(2.0, abs=1e-12)
    assert ew.discriminant(V, 0.0) == pytest.approx(-2.0, abs=1e-12)
    np.testing.assert_allclose(ew.discriminant_coeffs(V), [-2.0, -3.0, 1.0])


def test_discriminant_conjugate_symmetry():
    rng = np.random.default_rng(3)
    V = ew.PeriodicPotential.from_values(rng.uniform(-2, 2, 4))
    for _ in range(20):
        E = complex(rng.uniform(-4, 4), rng.uniform(-2, 2))
        d1 = ew.discriminant(V, E.conjugate())
        d2 = ew.discriminant(V, E)
        assert abs(d1 - d2.conjugate()) <= 1e-12 * max(1.0, abs(d2))


def test_discriminant_matches_coefficients():
    rng = np.random.default_rng(4)
    V = ew.PeriodicPotential.from_values(rng.uniform(-2, 2, 3))
    coeffs = ew.discriminant_coeffs(V)
    for E in rng.uniform(-4, 4, 10):
        via_poly = np.polynomial.polynomial.polyval(E, coeffs)
        assert ew.discriminant(V, E) == pytest.approx(via_poly, rel=1e-12, abs=1e-12)


def test_band_structure_free_and_0_3():
    V0 = ew.PeriodicPotential.from_values([0.0])
    bs0 = ew.band_structure(V0)
    assert bs0.closed_gap_counts == (0,)
    np.testing.assert_allclose(bs0.bands, [(-2.0, 2.0)], atol=1e-10)

    V = ew.PeriodicPotential.from_values([0.0, 3.0])
    bs = ew.band_structure(V)
    # edges are the roots of E^2-3E-4 = (E+1)(E-4) and E^2-3E = E(E-3)
    np.testing.assert_allclose(bs.bands, [(-1.0, 0.0), (3.0, 4.0)], atol=1e-10)
    assert bs.closed_gap_counts == (0, 0)


def test_band_structure_closed_gap():
    # constant potential written with period 2: one band with one closed gap,
    # matching the period-1 representation of the same operator
    V11 = ew.PeriodicPotential.from_values([1.0, 1.0])
    bs = ew.band_structure(V11)
    assert len(bs.bands) == 1
    np.testing.assert_allclose(bs.bands[0], (-1.0, 3.0), atol=1e-8)
    assert bs.closed_gap_counts == (1,)
    assert bs.closed_gap_points[0][0] == pytest.approx(1.0, abs=1e-7)

    V1 = ew.PeriodicPotential.from_values([1.0])
    bs1 = ew.band_structure(V1)
    np.testing.assert_allclose(bs1.bands[0], bs.bands[0], atol=1e-8)


def test_band_structure_partition_random():
    rng = np.random.default_rng(5)
    for _ in range(20):
        p = int(rng.integers(1, 6))
        V = ew.PeriodicPotential.from_values(rng.uniform(-2, 2, p))
        bs = ew.band_structure(V)
        assert len(bs.bands) <= p
        assert sum(1 + c for c in bs.closed_gap_counts) == p
        for (lo, hi), (lo2, _) in zip(bs.bands[:-1], bs.bands[1:]):
            assert hi < lo2
        for lo, hi in bs.bands:
            assert abs(abs(bs.discriminant_at(lo)) - 2.0) <= 1e-9
            assert abs(abs(bs.discriminant_at(hi)) - 2.0) <= 1e-9
            assert abs(bs.discriminant_at(0.5 * (lo + hi))) <= 2.0


def test_band_structure_fuzz_wider():
    rng = np.random.default_rng(99)
    for _ in range(30):
        p = int(rng.integers(1, 9))
        V = ew.PeriodicPotential.from_values(rng.uniform(-4, 4, p))
        bs = ew.band_structure(V)
        assert sum(1 + c for c in bs.closed_gap_counts) == p
        assert len(bs.bands) <= p


def test_band_structure_all_gaps_closed():
    # a constant potential in period-3 form closes every gap
    V = ew.PeriodicPotential.from_values([2.0, 2.0, 2.0])
    bs = ew.band_structure(V)
    assert len(bs.bands) == 1
    np.testing.assert_allclose(bs.bands[0], (0.0, 4.0), atol=1e-7)
    assert bs.closed_gap_counts == (2,)
    # quasi-momentum passes through the closed gaps without pi/p-size jumps
    # (steps still scale like sqrt of the grid spacing near the touch points)
    grid = np.linspace(0.0, 4.0, 2001)
    th = floquet._theta_band(bs, 0, grid)
    assert np.all(np.diff(th) >= -1e-12)
    assert np.max(np.abs(np.diff(th))) < 0.1 * np.pi / 3


def test_quasi_momentum_free_chain():
    V0 = ew.PeriodicPotential.from_values([0.0])
    bs = ew.band_structure(V0)
    for E in (-2.0, -1.0, 0.0, 1.0, 2.0):
        assert ew.quasi_momentum(bs, E) == pytest.approx(np.arccos(-E / 2), abs=1e-7)
    assert ew.quasi_momentum(bs, -2.0) == pytest.approx(0.0, abs=1e-12)
    assert ew.quasi_momentum(bs, 0.0) == pytest.approx(np.pi / 2, abs=1e-12)
    assert ew.quasi_momentum(bs, 2.0) == pytest.approx(np.pi, abs=1e-12)


def test_quasi_momentum_0_3_grid(bs03):
    assert ew.quasi_momentum(bs03, -1.0) == pytest.approx(0.0, abs=1e-12)
    assert ew.quasi_momentum(bs03, 0.0) == pytest.approx(np.pi / 2, abs=1e-12)
    assert ew.quasi_momentum(bs03, 3.0) == pytest.approx(np.pi / 2, abs=1e-12)
    assert ew.quasi_momentum(bs03, 4.0) == pytest.approx(np.pi, abs=1e-12)
    with pytest.raises(OutsideSpectrum):
        ew.quasi_momentum(bs03, 1.5)


def test_quasi_momentum_monotone_random():
    rng = np.random.default_rng(6)
    for _ in range(6):
        p = int(rng.integers(1, 5))
        V = ew.PeriodicPotential.from_values(rng.uniform(-2, 2, p))
        bs = ew.band_structure(V)
        for i, (lo, hi) in enumerate(bs.bands):
            grid = np.linspace(lo, hi, 1000)
            th = floquet._theta_band(bs, i, grid)
            assert np.all(np.diff(th) >= -1e-12)
            span = th[-1] - th[0]
            assert span == pytest.approx(
                (1 + bs.closed_gap_counts[i]) * np.pi / p, abs=1e-9)
            # strictly positive slope at the band midpoint
            mid = len(grid) // 2
            assert th[mid + 1] - th[mid - 1] > 0


def test_density_of_states_free_value_and_ids():
    V0 = ew.PeriodicPotential.from_values([0.0])
    bs = ew.band_structure(V0)
    assert ew.density_of_states(bs, 0.0) == pytest.approx(1 / (2 * np.pi), rel=1e-12)
    total, err = quad(lambda E: ew.density_of_states(bs, E), -2.0, 2.0,
                      points=[-2.0, 2.0], limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(EdgeSingularity):
        ew.density_of_states(bs, 2.0 - 1e-16)


def test_density_of_states_ids_two_bands(bs03):
    total = 0.0
    for lo, hi in bs03.bands:
        val, _ = quad(lambda E: ew.density_of_states(bs03, E), lo, hi,
                      points=[lo, hi], limit=200)
        total += val
    assert total == pytest.approx(1.0, abs=1e-6)


def test_h_j_value_0_3(V03, bs03):
    # at E = -0.5 the phase numerator reduces to -E/2 * rho - 1/8 with
    # rho = exp(2i theta_2(-0.5)); the branch is fixed only modulo pi
    E = -0.5
    th = ew.quasi_momentum(bs03, E)
    rho = np.exp(2j * th)
    expected = np.angle(-0.5 * rho - 0.125)
    got = ew.h_j(V03, bs03, 0, E)
    assert abs(((got - expected) + np.pi / 2) % np.pi - np.pi / 2) <= 1e-10


def test_h_values_continuous_on_band(V03, bs03):
    grid = np.linspace(-1.0 + 1e-6, 0.0 - 1e-6, 200)
    h = ew.h_values(V03, bs03, 0, grid)
    assert np.all(np.abs(np.diff(h)) < 0.5)
    h1 = ew.h_values(V03, bs03, 1, grid)
    assert np.all(np.abs(np.diff(h1)) < 0.5)


def test_h_free_chain_closed_form():
    # for the free chain the phase is pi - 2*theta up to the branch offset:
    # exactly what makes the quantization rule reproduce 2cos(m pi/(L+2));
    # in particular h(-2 + t^2) is analytic in t with a finite edge limit
    V0 = ew.PeriodicPotential.from_values([0.0])
    bs = ew.band_structure(V0)
    t = np.linspace(1e-4, 0.5, 60)
    grid = np.sort(-2.0 + t * t)
    h = ew.h_values(V0, bs, 0, grid)
    th = np.array([ew.quasi_momentum(bs, e) for e in grid])
    delta = (h - (np.pi - 2 * th) + np.pi / 2) % np.pi - np.pi / 2
    np.testing.assert_allclose(delta, 0.0, atol=1e-9)
    assert np.all(np.isfinite(h))


def test_h_j_degenerate_at_interior_zero():
    # constant potential in period-2 form: the phase numerator vanishes at
    # the closed gap in the middle of the band
    V = ew.PeriodicPotential.from_values([1.0, 1.0])
    bs = ew.band_structure(V)
    with pytest.raises(DegenerateS):
        ew.h_j(V, bs, 0, 1.0)


def test_classify_edge_examples(V03, bs03):
    ed = ew.classify_edge(V03, bs03, -1.0, 0)
    assert ed.a0_p_minus_1 == pytest.approx(-1.0, abs=1e-12)
    assert ed.rho == 1.0
    assert ed.a0_p == pytest.approx(3.0, abs=1e-12)
    assert ed.a_j1 == pytest.approx(-1.0, abs=1e-12)
    assert ed.b_j1 == pytest.approx(-1.0, abs=1e-12)
    assert ed.d_j1 == pytest.approx(-1.0, abs=1e-12)
    assert ed.classification is EdgeClassification.GENERIC_A

    ed2 = ew.classify_edge(V03, bs03, -1.0, 1)
    assert ed2.a_j1 == pytest.approx(3.0, abs=1e-12)
    assert ed2.b_j1 == pytest.approx(4.0, abs=1e-12)
    assert ed2.d_j1 == pytest.approx(2.0, abs=1e-12)
    assert ed2.classification is EdgeClassification.GENERIC_A


def test_classify_edge_non_generic_cases(V03, bs03):
    assert ew.classify_edge(V03, bs03, 0.0, 0).classification \
        is EdgeClassification.EDGE_EIGENVALUE
    assert ew.classify_edge(V03, bs03, 0.0, 1).classification \
        is EdgeClassification.GENERIC_B


def test_classify_edge_errors_and_consistency(V03, bs03):
    with pytest.raises(NotAnEdge):
        ew.classify_edge(V03, bs03, -0.5, 0)
    with pytest.raises(ValueError):
        ew.classify_edge(V03, bs03, -1.0, 2)
    ed = ew.classify_edge(V03, bs03, -1.0, 0)
    # stored d reproduces bit-for-bit from the stored fields
    assert ed.d_j1 == ed.a_j1 * (ed.a0_p - ed.rho) + ed.b_j1 * ed.a0_p_minus_1
