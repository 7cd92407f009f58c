import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyponorm import (
    AreaMeasure,
    Atoms,
    BetaWeight,
    ConstantChain,
    DegenerateDenominator,
    JacobiOperator,
    MomentProvider,
    NonConvergence,
    NonConvergenceWarning,
    SymbolParams,
    TruncationPolicy,
    build_truncated,
    chain_extreme_eigenvalue,
    essential_edge,
    operator_norm,
    spectrum_scan,
)
from hyponorm.spectral import (
    chain_top_bracket,
    chain_upper_bound,
    pivots_certify,
    sturm_count,
    top_eigenvector,
)

from conftest import make_op

positive = st.floats(0.05, 3.0)


def dense_chain(off):
    off = np.asarray(off, dtype=float)
    return np.diag(off, 1) + np.diag(off, -1)


# -- chain kernels --------------------------------------------------------------

def test_chain_examples():
    assert chain_extreme_eigenvalue([1.0]) == pytest.approx(1.0, abs=1e-12)
    for m in (1, 2, 5, 40, 300):
        assert chain_extreme_eigenvalue(np.ones(m)) == pytest.approx(2 * math.cos(math.pi / (m + 2)), abs=1e-12)
    assert chain_extreme_eigenvalue([math.sqrt(6) / 6, 1 / math.sqrt(3)]) == pytest.approx(math.sqrt(0.5), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(off=st.lists(positive, min_size=1, max_size=30), x=st.floats(-7, 7))
def test_sturm_count_matches_dense(off, x):
    ev = np.linalg.eigvalsh(dense_chain(off))
    if np.min(np.abs(ev - x)) < 1e-9:
        return
    assert sturm_count(np.square(off), x) == int(np.sum(ev < x))


@settings(max_examples=100, deadline=None)
@given(off=st.lists(positive, min_size=1, max_size=60), tol=st.sampled_from([1e-6, 1e-10, 1e-13]))
def test_bracket_contains_dense(off, tol):
    top = np.linalg.eigvalsh(dense_chain(off))[-1]
    lo, hi = chain_top_bracket(off, tol)
    assert hi - lo <= tol
    assert lo - 1e-13 <= top <= hi + 1e-13


def test_bracket_bisection_fallback(monkeypatch):
    import hyponorm.spectral as spectral
    monkeypatch.setattr(spectral, "eigvalsh_tridiagonal", lambda *a, **k: np.array([123.0]))
    off = np.linspace(0.3, 1.1, 25)
    lo, hi = chain_top_bracket(off, 1e-11)
    assert lo <= np.linalg.eigvalsh(dense_chain(off))[-1] <= hi


@settings(max_examples=60, deadline=None)
@given(off=st.lists(positive, min_size=1, max_size=40))
def test_finite_upper_bound_with_empty_tail(off):
    # tail bound 0: the certificate is exact for the finite chain
    top = np.linalg.eigvalsh(dense_chain(off))[-1]
    ub = chain_upper_bound(off, 0.0, 0.0, 1e-10)
    assert top - 1e-12 <= ub <= top + 1e-9
    assert not pivots_certify(np.square(off), top * (1 - 1e-6), 0.0)


@settings(max_examples=40, deadline=None)
@given(off=st.lists(positive, min_size=1, max_size=25), T=st.floats(0.1, 2.0))
def test_tail_certificate_dominates_long_chain(off, T):
    ub = chain_upper_bound(off, T, 0.0, 1e-9)
    long = np.concatenate([off, np.full(4000, T)])
    assert chain_extreme_eigenvalue(long, 1e-12) <= ub + 1e-12
    assert ub >= 2 * T


def test_constant_chain_certificate():
    assert pivots_certify(np.ones(500), 2.0, 1.0)
    assert not pivots_certify(np.ones(500), 2.0 - 1e-9, 1.0)


# -- operator norm ------------------------------------------------------------------

@pytest.mark.parametrize("n,s", [(1, 2.0), (2, 4.0)])
def test_norm_examples(n, s):
    est = operator_norm(make_op(n, s), 1e-6)
    assert est.certified
    assert est.lower <= 2.0 <= est.upper and est.gap <= 1e-6


def test_constant_chain_norm():
    est = operator_norm(ConstantChain(), 1e-8)
    assert est.certified and est.lower <= 2.0 <= est.upper and est.gap <= 1e-8


@pytest.mark.parametrize("n,s,expected", [(1, 1.0, 1.0), (1, 0.5, 0.5), (2, 1.0, 0.5)])
def test_norm_s_below_2n_at_edge(n, s, expected):
    est = operator_norm(make_op(n, s), 1e-8)
    assert est.certified and abs(est.lower - expected) <= 1e-8 and est.upper - expected <= 1e-8


@pytest.mark.parametrize("n,s", [(3, 1.0), (3, 0.5)])
def test_isolated_eigenvalue_above_edge(n, s):
    est = operator_norm(make_op(n, s), 1e-8)
    assert est.certified
    assert est.lower > s / n + 0.05
    # the truncation itself, not the floor, supplies the lower bound
    assert est.lower == est.truncation_lower


@pytest.mark.parametrize("beta,n,s", [(1.0, 2, 3.0), (-0.5, 3, 1.0), (3.0, 1, 0.5)])
def test_norm_beta_brackets(beta, n, s):
    op = make_op(n, s, BetaWeight(beta))
    est = operator_norm(op, 1e-8)
    assert est.certified and 0 < est.lower <= est.upper and est.gap <= 1e-8
    assert est.lower >= s / n - 2e-8
    dense_top = np.linalg.eigvalsh(build_truncated(op, 400).to_dense())[-1]
    assert dense_top <= est.upper + 1e-12


@pytest.mark.parametrize("measure", [AreaMeasure(), BetaWeight(0.0), BetaWeight(3.0)], ids=str)
@pytest.mark.parametrize("n,s", [(1, 0.7), (2, 5.0), (3, 2.0)])
def test_trace_monotone_and_bracket(measure, n, s):
    est = operator_norm(make_op(n, s, measure), 1e-8)
    lows = [lo for _, lo in est.trace]
    sizes = [N for N, _ in est.trace]
    assert all(b >= a - 1e-14 for a, b in zip(lows, lows[1:]))
    assert all(b == 2 * a for a, b in zip(sizes, sizes[1:]))
    assert 0 < est.lower <= est.upper
    assert est.lower >= s / n - 2e-8


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 4), s=st.floats(0.1, 9), beta=st.sampled_from([None, -0.5, 0.0, 1.0, 3.0]),
       N=st.integers(5, 200))
def test_nested_truncation_lower_monotone(n, s, beta, N):
    op = make_op(n, s, AreaMeasure() if beta is None else BetaWeight(beta))
    N = max(N, n + 1)
    small = np.linalg.eigvalsh(build_truncated(op, N).to_dense())[-1]
    big = np.linalg.eigvalsh(build_truncated(op, N + 1 + N // 2).to_dense())[-1]
    assert big >= small - 1e-14


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_chain_lower_matches_dense(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        s = float(rng.uniform(0.2, 8))
        N = int(rng.integers(n + 1, 61))
        op = make_op(n, s)
        dense = np.linalg.eigvalsh(build_truncated(op, N).to_dense())[-1]
        lam, _, _ = top_eigenvector(op, N)
        chains = [chain_extreme_eigenvalue(np.asarray(op.entries(N - n)[r:N - n:n]), 1e-13)
                  for r in range(n)]
        assert max(chains) == pytest.approx(dense, abs=1e-10)
        assert lam == pytest.approx(dense, abs=1e-10)


def test_budget_exhausted_uncertified():
    op = make_op(1, 2.0)
    policy = TruncationPolicy(start=16, max_slots_per_chain=64)
    with pytest.warns(NonConvergenceWarning):
        est = operator_norm(op, 1e-14, policy)
    assert not est.certified and est.lower <= est.upper
    with pytest.raises(NonConvergence):
        operator_norm(op, 1e-14, policy, strict=True)


def test_no_floor_for_forced_measure():
    with pytest.warns(UserWarning):
        pv = MomentProvider(Atoms([0.8, 0.95], [0.5, 0.5]), force=True)
    op = JacobiOperator(SymbolParams(1, 2.0), pv)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergenceWarning)
        est = operator_norm(op, 1e-6, TruncationPolicy(max_slots_per_chain=128))
    assert est.essential_floor is None and est.banner
    assert est.lower == est.truncation_lower


def test_forced_measure_underflows_to_degenerate():
    # (0.3 * 0.95)^(2k) drops below 1e-300 near k = 287
    with pytest.warns(UserWarning):
        pv = MomentProvider(Atoms([0.3, 0.95], [0.5, 0.5]), force=True)
    with pytest.raises(DegenerateDenominator):
        operator_norm(JacobiOperator(SymbolParams(1, 2.0), pv), 1e-6)


def test_threads_same_result():
    op = make_op(3, 4.2, BetaWeight(1.0))
    a = operator_norm(op, 1e-8, threads=1)
    b = operator_norm(op, 1e-8, threads=3)
    assert (a.lower, a.upper, a.truncation_size) == (b.lower, b.upper, b.truncation_size)


@pytest.mark.parametrize("n,s,edge", [(1, 2, 2.0), (3, 2, 2 / 3), (2, 2, 1.0)])
def test_essential_edge(n, s, edge):
    assert essential_edge(SymbolParams(n, s)) == pytest.approx(edge)


# -- spectrum scans -------------------------------------------------------------------

def test_scan_no_outliers_dA():
    sc = spectrum_scan(make_op(1, 2.0), 200, margin=1e-3)
    assert sc.flagged_outliers.size == 0 and sc.eigenvalues.size == 200


@pytest.mark.parametrize("n,s", [(1, 2.0), (2, 0.7), (3, 5.0)])
def test_scan_antisymmetric_and_sorted(n, s):
    ev = spectrum_scan(make_op(n, s), 151).eigenvalues
    assert np.all(np.diff(ev) >= 0)
    assert np.allclose(ev, -ev[::-1], atol=1e-10, rtol=0)


def test_scan_matches_dense():
    op = make_op(3, 1.3)
    ev = spectrum_scan(op, 50).eigenvalues
    assert np.allclose(ev, np.linalg.eigvalsh(build_truncated(op, 50).to_dense()), atol=1e-12)


def test_outliers_stable_under_doubling():
    # n=1, s=0.5: no outliers at any size; n=3, s=1: the top candidate is stable
    for N in (100, 200, 400):
        assert spectrum_scan(make_op(1, 0.5), N, margin=1e-3).flagged_outliers.size == 0
    tops = [spectrum_scan(make_op(3, 1.0), N, margin=1e-3).flagged_outliers.max() for N in (100, 200, 400)]
    assert max(tops) - min(tops) <= 1e-6
    assert tops[-1] == pytest.approx(0.4327471, abs=1e-6)


def test_scan_small_N_rejected():
    with pytest.raises(ValueError):
        spectrum_scan(make_op(3, 1.0), 3)


# -- Rayleigh check --------------------------------------------------------------------

@pytest.mark.parametrize("n,s,N", [(1, 2.0, 300), (2, 1.0, 101), (3, 0.5, 64)])
def test_rayleigh_bound_and_residual(n, s, N):
    op = make_op(n, s)
    A = build_truncated(op, N).to_dense()
    lam, v, r = top_eigenvector(op, N)
    assert np.linalg.norm(A @ v - lam * v) <= 1e-10
    assert np.all(v >= 0) and np.linalg.norm(v) == pytest.approx(1.0)
    rng = np.random.default_rng(7)
    for _ in range(200):
        x = rng.standard_normal(N)
        x /= np.linalg.norm(x)
        assert x @ A @ x <= lam + 1e-12
