"""The banded Jacobi matrix J(nu) attached to the symbol z^n + C|z|^s.

J(nu) acts on l^2(N_0), has zero diagonal, and its only nonzero entries are
``J[n+k, k] = J[k, n+k] = a_k`` with

    a_k = num_k / sqrt(w_k * w_{k+n})
    num_k = gamma_{2k+2n+s} - gamma_{2k+2n} gamma_{2k+s} / gamma_{2k}
    w_j   = gamma_{2j+2n}                                     (j < n)
    w_j   = gamma_{2j+2n} - gamma_{2j}^2 / gamma_{2j-2n}      (j >= n)

Every difference above is a moment pair form ``gamma_{t+p+q} gamma_t -
gamma_{t+p} gamma_{t+q}`` divided by a single moment, which is how the entries
are evaluated (see :meth:`MomentProvider.pair`).

Indices couple only when they differ by n, so J(nu) splits into n independent
zero-diagonal tridiagonal chains, one per residue class mod n.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominator
from .measures import MomentProvider

DEGENERATE_TOL = 1e-300


@dataclass(frozen=True)
class SymbolParams:
    n: int
    s: float

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n!r}")
        if not (math.isfinite(self.s) and self.s > 0):
            raise ValueError(f"s must be a finite real > 0, got {self.s!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "s", float(self.s))


class JacobiOperator:
    """Lazily evaluated entries ``k -> a_k`` of J(nu) for fixed (n, s) and measure.

    Entries are computed in vectorized blocks and cached; the object is
    otherwise immutable and may be shared between threads.
    """

    def __init__(self, params: SymbolParams, provider: MomentProvider):
        self.params = params
        self.provider = provider
        self._entries = np.empty(0)
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def s(self) -> float:
        return self.params.s

    @property
    def banner(self) -> str | None:
        return self.provider.banner

    @property
    def entries_converge(self) -> bool:
        """Whether ``a_k -> s/(2n)`` is guaranteed (the measure meets the hypotheses)."""
        return self.provider.hypotheses_hold

    def asymptote(self) -> float:
        return self.s / (2 * self.n)

    def _compute(self, k: np.ndarray) -> np.ndarray:
        n, s = self.n, self.s
        pv = self.provider
        two_k = 2.0 * k
        g2k = pv.gammas(two_k)
        numer = pv.pair(two_k, 2.0 * n, s) / g2k
        w_next = pv.pair(two_k, 2.0 * n, 2.0 * n) / g2k
        low = k < n
        w_here = np.empty_like(numer)
        w_here[low] = pv.gammas(two_k[low] + 2.0 * n)
        if np.any(~low):
            back = two_k[~low] - 2.0 * n
            w_here[~low] = pv.pair(back, 2.0 * n, 2.0 * n) / pv.gammas(back)
        bad = ~((w_here > DEGENERATE_TOL) & (w_next > DEGENERATE_TOL))
        if np.any(bad):
            k0 = int(k[bad][0])
            raise DegenerateDenominator(
                f"square-root argument <= {DEGENERATE_TOL:g} in entry k = {k0}"
                + (f" ({self.banner})" if self.banner else "")
            )
        return numer / (np.sqrt(w_here) * np.sqrt(w_next))

    def entries(self, count: int) -> np.ndarray:
        """``a_0, ..., a_{count-1}`` as a read-only array."""
        have = self._entries
        if have.size < count:
            with self._lock:
                have = self._entries
                if have.size < count:
                    target = max(count, 2 * have.size)
                    fresh = self._compute(np.arange(have.size, target, dtype=float))
                    have = np.concatenate([have, fresh])
                    have.setflags(write=False)
                    self._entries = have
        return have[:count]

    def entry(self, k: int) -> float:
        if k < 0 or int(k) != k:
            raise ValueError("k must be a nonnegative integer")
        k = int(k)
        if k < self._entries.size:
            return float(self._entries[k])
        # uncached: evaluate alone rather than filling the cache up to k
        return float(self._compute(np.array([float(k)]))[0])


class ConstantChain(JacobiOperator):
    """Test operator with every band entry equal to ``value``.

    Its norm is ``2 * value`` for every n.  It has no underlying measure; the
    variational form treats all weights as 1 and couplings as ``value``.
    """

    def __init__(self, n: int = 1, value: float = 1.0):
        self.params = SymbolParams(n, 2.0 * n * value)
        self.provider = None
        self.value = float(value)
        self._entries = np.empty(0)
        self._lock = threading.Lock()

    @property
    def banner(self) -> str | None:
        return None

    @property
    def entries_converge(self) -> bool:
        return True

    def _compute(self, k: np.ndarray) -> np.ndarray:
        return np.full(k.shape, self.value)


def entry(op: JacobiOperator, k: int) -> float:
    """``J(nu)[n+k, k]``."""
    return op.entry(k)


def asymptote(op: JacobiOperator) -> float:
    """Limit ``s / (2n)`` of the band entries."""
    return op.asymptote()


def dA_entry(n: int, s: float, k) -> np.ndarray:
    """Closed-form entries of J(dA) for normalized area measure."""
    k = np.asarray(k, dtype=float)
    root = np.sqrt((k + n + 1) * (k + 2 * n + 1))
    den = (k + 1 + s / 2) * (k + n + 1 + s / 2)
    return np.where(k < n, s * root / (2 * den), s * (k + 1) * root / (2 * n * den))


@dataclass(frozen=True)
class TruncatedMatrix:
    """N x N leading section of J(nu) in band form: ``band[k]`` sits at (k+n, k) and (k, k+n)."""

    n: int
    N: int
    band: np.ndarray

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.N, self.N))
        idx = np.arange(self.band.size)
        out[idx + self.n, idx] = self.band
        out[idx, idx + self.n] = self.band
        return out

    def band_rows(self) -> list[tuple[int, float]]:
        return [(k, float(a)) for k, a in enumerate(self.band)]


def build_truncated(op: JacobiOperator, N: int) -> TruncatedMatrix:
    if N < op.n + 1:
        raise ValueError(f"N must be >= n + 1 = {op.n + 1}, got {N}")
    return TruncatedMatrix(op.n, N, np.array(op.entries(N - op.n)))


@dataclass(frozen=True)
class ChainDecomposition:
    """Residue-class chains of an N x N truncation.

    ``chains[r]`` holds the off-diagonals ``(a_r, a_{r+n}, ...)`` of a
    zero-diagonal tridiagonal matrix of order ``sizes[r]``.
    """

    n: int
    N: int
    sizes: tuple[int, ...]
    chains: tuple[np.ndarray, ...]

    def slots(self, r: int) -> range:
        """Indices of the full truncation occupied by chain r."""
        return range(r, self.N, self.n)


def chain_slices(n: int, N: int) -> list[tuple[int, slice]]:
    """For each residue r: (chain order, slice of a_0..a_{N-n-1} giving its off-diagonals)."""
    return [(len(range(r, N, n)), slice(r, N - n, n)) for r in range(n)]


def decouple(op: JacobiOperator, N: int) -> ChainDecomposition:
    if N < op.n + 1:
        raise ValueError(f"N must be >= n + 1 = {op.n + 1}, got {N}")
    band = op.entries(N - op.n)
    layout = chain_slices(op.n, N)
    return ChainDecomposition(
        op.n, N,
        tuple(size for size, _ in layout),
        tuple(np.array(band[sl]) for _, sl in layout),
    )
