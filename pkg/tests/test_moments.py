import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kapitsa.errors import DivergentIntegralError, DomainError
from kapitsa.moments import MomentTable, g_kernel, moment, moment_closed_form

from oracles import moment_mp


def test_g_kernel_values():
    assert g_kernel(1.0) == pytest.approx(math.e / (math.e - 1) ** 2, rel=1e-15)
    assert g_kernel(1.0) == pytest.approx(0.920674, abs=5e-7)
    assert g_kernel(40.0) == pytest.approx(4.24835e-18, rel=1e-5)
    assert np.isfinite(g_kernel(800.0))


def test_g_kernel_small_c_limit():
    c = 1e-6
    assert c * c * g_kernel(c) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_g_kernel_rejects_nonpositive(bad):
    with pytest.raises(DomainError):
        g_kernel(bad)


@given(st.floats(min_value=1e-3, max_value=600.0))
def test_g_kernel_positive(c):
    assert g_kernel(c) > 0


def test_g_kernel_decreasing_above_one():
    c = np.linspace(1.0, 50.0, 2000)
    assert np.all(np.diff(g_kernel(c)) < 0)


@pytest.mark.parametrize("n", range(2, 13))
def test_moment_matches_mpmath(n):
    ref = float(moment_mp(n))
    assert abs(moment(n) - ref) / ref < 1e-10
    assert abs(moment_closed_form(n) - ref) / ref < 1e-13


def test_moment_anchor_values():
    assert moment(2) == pytest.approx(math.pi**2 / 3, rel=1e-12)
    assert moment(3) == pytest.approx(7.2123414, rel=1e-8)
    assert moment(7) == pytest.approx(5082.0804, rel=1e-8)
    assert moment_closed_form(6) == pytest.approx(732.4870, rel=1e-7)


def test_moment_noninteger_between_neighbours():
    assert moment(6) < moment(6.5) < moment(7)


def test_moment_increasing():
    ns = np.arange(2.0, 12.0, 0.25)
    vals = [moment(n) for n in ns]
    assert all(b > a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("n", [1.0, 0.5, -2.0])
def test_moment_divergent(n):
    with pytest.raises(DivergentIntegralError):
        moment(n)


@pytest.mark.parametrize("n", [1, 2.5, 0])
def test_closed_form_domain(n):
    with pytest.raises(DomainError):
        moment_closed_form(n)


def test_table_memoises_by_bit_pattern():
    tab = MomentTable()
    a = tab(4.0)
    assert len(tab) == 1
    assert tab(4.0) == a
    assert len(tab) == 1
    tab(np.nextafter(4.0, 5.0))
    assert len(tab) == 2
    assert all(n > 1 and v > 0 for n, v in tab.entries.items())


def test_table_concurrent_reads():
    from concurrent.futures import ThreadPoolExecutor

    tab = MomentTable()
    with ThreadPoolExecutor(8) as pool:
        vals = list(pool.map(tab, [5.0] * 16 + [6.0] * 16))
    assert len(set(vals[:16])) == 1 and len(set(vals[16:])) == 1
    assert len(tab) == 2
