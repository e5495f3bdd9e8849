import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modeltoeplitz.examples import (
    counterexample_f,
    decompose,
    example1_compare,
    example1_constant,
    example2_compare,
    example3_schedule,
    example3_signs,
    example3_sweep,
    gu_log,
    gu_product,
    gu_quotient,
)


def test_gu_trivial():
    assert gu_product(0.5, []) == 1
    assert gu_product(0.0, [0.3, 0.9j]) == 1
    assert abs(gu_product(0.5, [0.5, 1 / 3]) - 5 / 8) < 1e-15
    with pytest.raises(ValueError):
        gu_log(1.0, [0.1])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 200))
def test_gu_quotient_law(seed, N):
    rng = np.random.default_rng(seed)
    zs = 0.99 * np.sqrt(rng.uniform(size=N + 1)) * np.exp(2j * np.pi * rng.uniform(size=N + 1))
    v = 0.9 * rng.uniform() * np.exp(2j * np.pi * rng.uniform())
    assert abs(gu_quotient(v, zs, N) - (1 - v * zs[N])) < 1e-14


def test_example1_constant():
    assert example1_constant(0.5) == pytest.approx(math.sinh(math.pi) / math.pi, rel=1e-15)
    assert example1_constant(1e-12) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("compare", [example1_compare, example2_compare])
def test_halving(compare):
    for N in (500, 1000, 5000):
        r = compare(0.5, 2 * N).rel_err / compare(0.5, N).rel_err
        assert 0.3 <= r <= 0.7


def test_example2_closed_form():
    # v = 1/2: prediction (1/2)^N N / Gamma(2)
    c = example2_compare(0.5, 4000)
    assert c.log_predicted.real == pytest.approx(4000 * math.log(0.5) + math.log(4000), rel=1e-15)
    assert c.rel_err < 1e-3


def test_small_v_limit():
    c = example2_compare(1e-9, 100)
    assert abs(c.log_predicted.real - 100 * math.log1p(-1e-9)) < 1e-6


def test_decompose_unique():
    for N in range(3, 20000):
        k, l = decompose(N)
        assert N == 2 * 3**k + l and 1 <= l <= 4 * 3**k
    assert decompose(3) == (0, 1) and decompose(6) == (0, 4) and decompose(7) == (1, 1)
    with pytest.raises(ValueError):
        decompose(2)


def test_f_matches_scalar_definition():
    N = np.arange(1, 5000)
    f = counterexample_f(N)
    for n, fn in zip(N, f):
        if n <= 2:
            assert fn == 1
            continue
        k, l = decompose(int(n))
        assert fn == (3**k if l <= 2 * 3**k else l - 3**k)
    assert counterexample_f(7) == 3
    with pytest.raises(ValueError):
        counterexample_f(0)


def test_f_increments_up_to_a_million():
    f = counterexample_f(np.arange(1, 10**6 + 1))
    d = np.diff(f)
    assert np.all((d == 0) | (d == 1))


def test_f_ratios_exact():
    for k in range(9):
        assert 2 * counterexample_f(2 * 3**k) == 2 * 3**k
        assert 4 * counterexample_f(4 * 3**k) == 4 * 3**k


def test_first_signs():
    z = example3_signs(18)
    assert list(z) == [1, -1, -1, -1, 1, 1] + [-1] * 6 + [1] * 6


def test_schedule_and_sweep():
    s = example3_schedule(2000)
    assert s.increments_ok()
    np.testing.assert_array_equal(s.z, example3_signs(2000))
    assert np.all(np.abs(s.zeros) < 1)
    rows = example3_sweep(0.5, 10**6)
    last = {r["branch"]: r for r in rows if r["k"] == 8}
    assert 0.85 <= last["2*3^k"]["root"] <= 0.89
    assert 1.11 <= last["4*3^k"]["root"] <= 1.17
    assert last["4*3^k"]["root"] - last["2*3^k"]["root"] > 0.25
    for r in rows:
        assert abs(r["root"] - r["predicted"] * r["correction_root"]) < 1e-12
    assert abs(last["2*3^k"]["predicted"] - math.sqrt(3) / 2) < 1e-15
    assert abs(last["4*3^k"]["predicted"] - 1.5 ** 0.75 * 0.5 ** 0.25) < 1e-15


def test_nonsummable_radii_rejected():
    with pytest.raises(ValueError, match="summable"):
        example3_schedule(100, lambda j: 1 - 1 / np.asarray(j, dtype=float))
    with pytest.raises(ValueError):
        example3_schedule(2)
