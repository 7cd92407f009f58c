"""Certified brackets for the norm of J(nu) and truncated spectrum scans.

J(nu) is permutation-similar to a direct sum of n zero-diagonal tridiagonal
chains with positive off-diagonals, so everything reduces to chains.

Lower bound
    The top eigenvalue of any finite section is a lower bound for the norm
    (principal submatrix of a self-adjoint operator).  It is bracketed by
    Sturm sign counts.  When the entries are known to converge to s/(2n), the
    interval [-s/n, s/n] belongs to the spectrum, so s/n is a lower bound as
    well; the larger of the two is reported.

Upper bound
    For a chain with off-diagonals c_0, c_1, ... the operator lam - J is
    positive semidefinite iff the pivots ``d_0 = lam, d_{j+1} = lam -
    c_j^2 / d_j`` stay positive.  Past the computed entries we only know
    ``c_j <= T``; then ``d >= d_-`` with ``d_- = (lam - sqrt(lam^2 - 4T^2)) / 2``
    is preserved by the recurrence.  So ``||chain|| <= lam`` as soon as all
    computed pivots are positive, the last one is ``>= d_-`` and ``lam >= 2T``
    (the spectrum of a zero-diagonal chain is symmetric, so lam + J needs no
    separate check).  The tail bound T is read off a lookahead window of
    entries; it is trusted, and the result marked certified, only when that
    window is monotone and within ``margin`` of s/(2n).
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal

from .errors import NonConvergence, NonConvergenceWarning
from .jacobi import JacobiOperator, SymbolParams, chain_slices

_TINY = 1e-300


def sturm_count(offdiag_sq, x: float) -> int:
    """Number of eigenvalues below ``x`` of the zero-diagonal tridiagonal matrix.

    ``offdiag_sq`` holds the squared off-diagonals; the matrix has order
    ``len(offdiag_sq) + 1``.  Counts negative pivots of ``T - x I``.
    """
    # a zero pivot is replaced by -tiny and counted as negative
    q = -x
    if q == 0.0:
        q = -_TINY
    count = 1 if q < 0.0 else 0
    for b2 in offdiag_sq:
        q = -x - b2 / q
        if q == 0.0:
            q = -_TINY
        if q < 0.0:
            count += 1
    return count


def chain_top_bracket(offdiag, tol: float, max_iter: int = 200) -> tuple[float, float]:
    """``(lo, hi)`` with ``lo <= lambda_max <= hi`` and ``hi - lo <= tol``.

    The bracket is established by Sturm counts.  A LAPACK estimate only seeds
    it; if the seed does not verify, plain bisection from the Gershgorin
    interval takes over.
    """
    b = np.asarray(offdiag, dtype=float)
    if b.size == 0:
        return 0.0, 0.0
    bsq = (b * b).tolist()
    order = b.size + 1
    radius = 2.0 * float(np.max(np.abs(b)))
    try:
        est = float(eigvalsh_tridiagonal(np.zeros(order), b, select="i",
                                         select_range=(order - 1, order - 1))[0])
    except Exception:  # pragma: no cover - LAPACK failure falls back to bisection
        est = None
    if est is not None:
        slack = max(0.25 * tol, 8.0 * np.finfo(float).eps * radius)
        lo, hi = est - slack, est + slack
        if sturm_count(bsq, lo) < order and sturm_count(bsq, hi) == order:
            return lo, hi
    lo, hi = 0.0, radius * (1.0 + 1e-12) + _TINY
    for _ in range(max_iter):
        if hi - lo <= tol:
            return lo, hi
        mid = 0.5 * (lo + hi)
        if sturm_count(bsq, mid) < order:
            lo = mid
        else:
            hi = mid
    raise NonConvergence(f"Sturm bisection did not reach width {tol:g} in {max_iter} steps")


def chain_extreme_eigenvalue(offdiag, tol: float = 1e-12) -> float:
    """Largest eigenvalue (= spectral norm) of the zero-diagonal chain, to ``tol``."""
    lo, hi = chain_top_bracket(offdiag, tol)
    return 0.5 * (lo + hi)


def pivots_certify(offdiag_sq, lam: float, tail_bound: float) -> bool:
    """True when ``lam`` bounds the norm of the infinite chain.

    ``offdiag_sq`` are the squared known off-diagonals; all later ones are
    assumed ``<= tail_bound``.
    """
    if lam <= 0.0:
        return lam == 0.0 and tail_bound == 0.0 and not np.any(offdiag_sq)
    disc = lam * lam - 4.0 * tail_bound * tail_bound
    if disc < 0.0:
        return False
    d = lam
    for b2 in offdiag_sq:
        d = lam - b2 / d
        if d <= 0.0:
            return False
    return d >= 0.5 * (lam - math.sqrt(disc))


def chain_upper_bound(offdiag, tail_bound: float, start: float, tol: float) -> float:
    """Smallest certified bound found by bisection, within ``tol / 8``, above ``start``."""
    bsq = (np.asarray(offdiag, dtype=float) ** 2).tolist()
    base = max(start, 2.0 * tail_bound)
    if pivots_certify(bsq, base, tail_bound):
        return base
    step = max(tol, 1e-12 * base, _TINY)
    hi = base + step
    while not pivots_certify(bsq, hi, tail_bound):
        step *= 4.0
        hi = base + step
        if not math.isfinite(hi):  # pragma: no cover - entries were not finite
            raise NonConvergence("no finite upper bound certified")
    lo = base
    while hi - lo > tol / 8.0:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pivots_certify(bsq, mid, tail_bound):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class TruncationPolicy:
    """Doubling schedule for the finite sections.

    ``start`` defaults to ``max(64, 8n)``.  ``lookahead`` is the length of the
    entry window beyond each chain head, as a multiple of the head length.
    """

    start: int | None = None
    max_slots_per_chain: int = 2**20
    lookahead: int = 4
    margin: float = 1e-3

    def initial(self, n: int) -> int:
        return self.start if self.start is not None else max(64, 8 * n)


@dataclass
class ChainStatus:
    residue: int
    head_lower: float
    head_upper: float
    upper: float
    tail_bound: float
    tail_ok: bool


@dataclass
class NormEstimate:
    lower: float
    upper: float
    truncation_size: int
    certified: bool
    trace: list[tuple[int, float]] = field(default_factory=list)
    truncation_lower: float = 0.0
    essential_floor: float | None = None
    chains: list[ChainStatus] = field(default_factory=list)
    banner: str | None = None

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "certified": self.certified,
            "truncation_size": self.truncation_size,
            "truncation_lower": self.truncation_lower,
            "essential_floor": self.essential_floor,
            "trace": [{"N": N, "lower": lo} for N, lo in self.trace],
            "tail_bounds": [c.tail_bound for c in self.chains],
            "tail_ok": all(c.tail_ok for c in self.chains),
        }


def essential_edge(params: SymbolParams) -> float:
    """Endpoint s/n of the interval part of the spectrum."""
    return params.s / params.n


def _thread_count(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    try:
        return max(1, int(os.environ.get("HYPONORM_THREADS", "1")))
    except ValueError:
        return 1


def _chain_status(r, head, window, asym, margin, tol) -> ChainStatus:
    head_lo, head_hi = chain_top_bracket(head, tol / 8.0)
    if window.size >= 2:
        steps = np.diff(window)
        monotone = bool(np.all(steps >= 0.0) or np.all(steps <= 0.0))
    else:
        monotone = False
    last = float(window[-1]) if window.size else float(head[-1]) if head.size else 0.0
    near = abs(last - asym) <= margin * asym
    if monotone and near:
        tail, tail_ok = max(asym, last), True
    else:
        peak = float(window.max()) if window.size else last
        tail, tail_ok = max(peak, asym * (1.0 + margin)), False
    known = np.concatenate([head, window])
    upper = chain_upper_bound(known, tail, head_lo, tol)
    return ChainStatus(r, head_lo, head_hi, upper, tail, tail_ok)


def operator_norm(
    op: JacobiOperator,
    tol: float = 1e-8,
    policy: TruncationPolicy | None = None,
    *,
    threads: int | None = None,
    strict: bool = False,
) -> NormEstimate:
    """Bracket ``||J(nu)||`` by doubling finite sections until the gap is ``<= tol``.

    Stops once the gap is within ``tol``, every chain tail passed its check,
    and the last two doublings moved the lower bound by at most ``tol / 4``.
    If the slot budget runs out first the best bracket is returned with
    ``certified=False`` (or :class:`NonConvergence` is raised when ``strict``).
    """
    policy = policy or TruncationPolicy()
    n = op.n
    asym = op.asymptote()
    floor = 2.0 * asym if op.entries_converge else None
    workers = _thread_count(threads)
    N = max(policy.initial(n), n + 1)
    trace: list[tuple[int, float]] = []
    history: list[float] = []
    best_trunc = 0.0
    while True:
        layout = chain_slices(n, N)
        heads = [size for size, _ in layout]
        total_chain = [(policy.lookahead + 1) * h for h in heads]
        need = max(r + (m - 1) * n + 1 for r, m in enumerate(total_chain))
        band = op.entries(need)
        jobs = []
        for r, h in enumerate(heads):
            chain = band[r::n][: total_chain[r] - 1]
            jobs.append((r, chain[: h - 1], chain[h - 1:]))
        run = lambda job: _chain_status(job[0], job[1], job[2], asym, policy.margin, tol)  # noqa: E731
        if workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                chains = list(pool.map(run, jobs))
        else:
            chains = [run(job) for job in jobs]

        best_trunc = max(best_trunc, max(c.head_lower for c in chains))
        lower = best_trunc if floor is None else max(best_trunc, floor)
        upper = max(max(c.upper for c in chains), lower)
        trace.append((N, best_trunc))
        history.append(lower)
        tails_ok = all(c.tail_ok for c in chains)
        settled = (
            len(history) >= 3
            and history[-1] - history[-2] <= tol / 4.0
            and history[-2] - history[-3] <= tol / 4.0
        )
        estimate = NormEstimate(
            lower=lower, upper=upper, truncation_size=N,
            certified=bool(upper - lower <= tol and tails_ok and settled),
            trace=list(trace), truncation_lower=best_trunc, essential_floor=floor,
            chains=chains, banner=op.banner,
        )
        if estimate.certified:
            return estimate
        if max(heads) * 2 > policy.max_slots_per_chain:
            msg = (f"truncation budget exhausted at N = {N}: bracket "
                   f"[{lower:.17g}, {upper:.17g}], tails_ok = {tails_ok}")
            if strict:
                raise NonConvergence(msg)
            warnings.warn(msg, NonConvergenceWarning, stacklevel=2)
            return estimate
        N *= 2


@dataclass
class SpectrumScan:
    N: int
    eigenvalues: np.ndarray
    residues: np.ndarray
    essential_edge: float
    margin: float

    @property
    def outlier_mask(self) -> np.ndarray:
        return np.abs(self.eigenvalues) > self.essential_edge + self.margin

    @property
    def flagged_outliers(self) -> np.ndarray:
        return self.eigenvalues[self.outlier_mask]


def _chain_eigenvalues(offdiag: np.ndarray) -> np.ndarray:
    if offdiag.size == 0:
        return np.zeros(1)
    return eigvalsh_tridiagonal(np.zeros(offdiag.size + 1), offdiag)


def spectrum_scan(op: JacobiOperator, N: int, margin: float | None = None, tol: float = 1e-8) -> SpectrumScan:
    """All eigenvalues of the N x N section, tagged by residue chain.

    Eigenvalues beyond ``s/n + margin`` (default ``10 * tol``) are flagged as
    candidates for discrete spectrum; finite sections can pollute the region
    near the edge, so the flags are never a certificate.
    """
    if N < op.n + 1:
        raise ValueError(f"N must be >= n + 1 = {op.n + 1}, got {N}")
    margin = 10.0 * tol if margin is None else margin
    band = op.entries(N - op.n)
    values, tags = [], []
    for r, (_, sl) in enumerate(chain_slices(op.n, N)):
        ev = _chain_eigenvalues(np.asarray(band[sl]))
        values.append(ev)
        tags.append(np.full(ev.size, r))
    values = np.concatenate(values)
    tags = np.concatenate(tags)
    order = np.lexsort((tags, values))
    return SpectrumScan(N, values[order], tags[order], essential_edge(op.params), margin)


def top_eigenvector(op: JacobiOperator, N: int) -> tuple[float, np.ndarray, int]:
    """``(lambda, v, residue)`` for the top eigenpair of the N x N section.

    ``v`` has length N, unit Euclidean norm, and is nonnegative (Perron vector
    of the winning chain, zero elsewhere).
    """
    band = op.entries(N - op.n)
    best = None
    for r, (size, sl) in enumerate(chain_slices(op.n, N)):
        chain = np.asarray(band[sl])
        top = float(_chain_eigenvalues(chain)[-1])
        if best is None or top > best[0]:
            best = (top, r, chain, size)
    lam, r, chain, size = best
    v = np.zeros(N)
    if size == 1:
        v[r] = 1.0
        return lam, v, r
    w, vec = eigh_tridiagonal(np.zeros(size), chain, select="i", select_range=(size - 1, size - 1))
    vec = np.abs(vec[:, 0])
    v[r::op.n] = vec / np.linalg.norm(vec)
    return float(w[0]), v, r
