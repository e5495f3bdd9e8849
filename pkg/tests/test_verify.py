import numpy as np
import pytest

from modeltoeplitz.laurent import MatrixLaurentSeries, multiply
from modeltoeplitz.modelspace import BlaschkeProduct, ZeroSequenceGenerator
from modeltoeplitz.operators import toeplitz_section
from modeltoeplitz.determinants import LogDet
from modeltoeplitz.verify import (
    Tolerances,
    bo_report,
    extrapolated_error,
    strong_convergence_probe,
    sweep_verdicts,
    szego_sweep,
)

from conftest import P, Q, block_factors, random_band2_symbol, random_zeros, rank_one_symbol

ALPHA = 0.4 + 0.2j


def test_single_zero_closed_form(a_rank_one):
    rep = bo_report(a_rank_one, [ALPHA])
    lhs = 1 + P * Q - P * ALPHA - Q * np.conj(ALPHA)
    rhs = (1 - P * ALPHA) * (1 - Q * np.conj(ALPHA)) + (1 - abs(ALPHA) ** 2) * P * Q
    assert abs(lhs - rhs) < 1e-15
    assert abs(rep.lhs.value - lhs) < 1e-13
    assert abs(rep.rhs.value - rhs) < 1e-12
    assert rep.verdict and rep.rel_defect < 1e-8
    assert set(rep.checks) == {
        "mean_product_routes", "qu_routes", "jacobi", "inverse_compression_route",
        "analytic_v_plus", "analytic_v_minus",
    }


@pytest.mark.parametrize("N", [1, 4, 9])
def test_classical_reduction(a_rank_one, N):
    rep = bo_report(a_rank_one, BlaschkeProduct.monomial(N))
    expect = (1 - (P * Q) ** (N + 1)) / (1 - P * Q)
    assert abs(rep.lhs.value - expect) < 1e-12
    assert abs(np.linalg.det(toeplitz_section(a_rank_one, N)) - expect) < 1e-12
    assert rep.verdict


def test_identity_symbol():
    for m in (1, 2):
        rep = bo_report(MatrixLaurentSeries.identity(m), [0.3, -0.5j])
        assert abs(rep.lhs.value - 1) < 1e-13 and abs(rep.rhs.value - 1) < 1e-13
        assert rep.verdict


def test_empty_blaschke(a_rank_one):
    rep = bo_report(a_rank_one, [])
    assert abs(rep.lhs.value - 1) < 1e-15 and rep.verdict


def test_random_scalar_reports(rng):
    for _ in range(4):
        a = random_band2_symbol(rng)
        rep = bo_report(a, random_zeros(rng, int(rng.integers(1, 9))))
        assert rep.verdict, rep.to_dict()


def test_block_report(rng):
    wm, wp = block_factors(rng)
    rep = bo_report(multiply(wm, wp), random_zeros(rng, 5))
    assert rep.verdict, rep.to_dict()


def test_report_echoes_inputs(a_rank_one):
    d = bo_report(a_rank_one, [ALPHA]).to_dict()
    assert d["params"]["zeros"] == [[ALPHA.real, ALPHA.imag]]
    for key in ("hankel_cutoff", "qu_cutoff", "compression_grid", "fredholm_error_estimate", "factorization"):
        assert key in d["params"]


def test_divergent_sweep_limit(a_rank_one):
    sw = szego_sweep(a_rank_one, ZeroSequenceGenerator("one_minus_inv_j"), [1, 2, 4, 8, 16])
    assert abs(sw.target.value - 1.2) < 1e-12
    # alpha_2 = 1/2 = p, so u_N(p) = 0 and D_N is exact from N = 2 on
    assert all(e < 1e-12 for e in sw.errors[1:])
    assert sweep_verdicts(sw)["eventually_decreasing"]


def test_divergent_sweep_trend():
    a = rank_one_symbol(0.49, Q)
    N = [2, 4, 8, 12, 16, 24, 32]
    sw = szego_sweep(a, ZeroSequenceGenerator("one_minus_inv_j"), N)
    g = ZeroSequenceGenerator("one_minus_inv_j")
    for n, e in zip(N, sw.errors):
        u = g.blaschke(n)
        # D_N - 1/det(I-K) = -pq u(q) conj(u(p)) / (1 - pq)
        expect = abs(0.49 * Q * u(Q) * np.conj(u(0.49))) / (1 - 0.49 * Q)
        assert abs(e - expect) < 1e-6 * expect + 1e-13
    v = sweep_verdicts(sw)
    assert v["eventually_decreasing"] and v["final_error"]
    assert sw.errors[-1] < 2 * extrapolated_error(N, sw.errors)


def test_identity_sweep():
    sw = szego_sweep(MatrixLaurentSeries.identity(1), ZeroSequenceGenerator("one_minus_inv_j"), [1, 3, 5])
    np.testing.assert_allclose(sw.values, 1, atol=1e-13)


def test_convergent_sweep(a_rank_one):
    g = ZeroSequenceGenerator("one_minus_inv_j_squared")
    sw = szego_sweep(a_rank_one, g, [4, 8, 16, 24, 40])
    assert sw.capped_at == 31 and sw.N[-1] == 24
    assert not sw.divergent and sw.surrogate_gap is not None
    assert sw.errors[-1] < sw.surrogate_gap
    # surrogate at N: 1 - pq u(q) conj(u(p)) over (1 - pq)
    u = g.blaschke(24)
    expect = (1 - P * Q * u(Q) * np.conj(u(P))) / (1 - P * Q)
    assert abs(sw.target.value - expect) < 1e-10
    assert sweep_verdicts(sw)["surrogate_certificate"]


def test_threads_deterministic(a_rank_one):
    g = ZeroSequenceGenerator("one_minus_inv_j")
    s1 = szego_sweep(a_rank_one, g, [3, 6, 9])
    s2 = szego_sweep(a_rank_one, g, [3, 6, 9], threads=3)
    assert s1.to_dict() == s2.to_dict()


def test_probe_divergent():
    pr = strong_convergence_probe(ZeroSequenceGenerator("one_minus_inv_j"), [1, 10, 100, 1000, 5000])
    assert all(pr.verdicts.values())
    assert pr.u_abs[0.3 + 0j][-1] < 1e-3


def test_probe_convergent():
    pr = strong_convergence_probe(
        ZeroSequenceGenerator("one_minus_inv_j_squared"), [10, 1000, 10**5, 10**6, 2 * 10**6]
    )
    assert all(pr.verdicts.values())
    assert pr.u_abs[0.3 + 0j][-1] > 0.01


def test_probe_monomial_e0():
    g = ZeroSequenceGenerator("explicit", {"zeros": [0] * 6})
    pr = strong_convergence_probe(g, [1, 2, 6], kernel_points=(0.0,))
    assert pr.q_norm[0j] == [0.0, 0.0, 0.0]


def test_off_disk_point_rejected():
    with pytest.raises(ValueError):
        bo_report(rank_one_symbol(), [1.2])
