"""Radial probability measures on [0, 1] and their moment functional.

A measure ``mu`` on ``[0, 1]`` induces the rotation-invariant measure
``d nu(r e^{i theta}) = d mu(r) d theta / 2 pi`` on the unit disk, and every
quantity downstream is expressed through the moments

    gamma_t = int x^t d mu(x),   t >= 0 real.

Four kinds of measure are supported:

``AreaMeasure``      ``d mu = 2 r dr`` (normalized area measure on the disk)
``BetaWeight(beta)`` ``d mu = (beta + 1) (1 - r^2)^beta 2 r dr``, beta > -1
``Atoms(x, w)``      finitely many point masses
``SampledDensity``   a tabulated density ``w(x)`` on a grid ending at x = 1

Differences of products of moments, ``gamma_{t+p+q} gamma_t -
gamma_{t+p} gamma_{t+q}``, are the numerically delicate quantity: for large t
they are tiny compared with either product.  :meth:`MomentProvider.pair`
evaluates them without cancellation for the analytic families and for atoms,
and by the plain moment identity (with a :class:`CancellationWarning`) for
tabulated densities.
"""
from __future__ import annotations

import csv
import math
import threading
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

import numpy as np
from scipy.special import gammaln, polygamma

from .errors import (
    AtomAtOne,
    CancellationWarning,
    EmptySupport,
    MeasureError,
    NonProbabilityMass,
    SupportBelowOne,
)
from .quadrature import adaptive_gk15, simpson_richardson

MASS_RTOL = 1e-12
CANCELLATION_DIGITS = 8


@dataclass(frozen=True)
class AreaMeasure:
    def describe(self) -> str:
        return "area"


@dataclass(frozen=True)
class BetaWeight:
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > -1.0):
            raise MeasureError(f"beta must be a finite real > -1, got {self.beta!r}")

    def describe(self) -> str:
        return f"beta:{self.beta!r}"


@dataclass(frozen=True, eq=False)
class Atoms:
    x: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        w = np.asarray(self.w, dtype=float).ravel()
        if x.shape != w.shape:
            raise MeasureError("atom locations and masses differ in length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
            raise MeasureError("atom data must be finite")
        if np.any((x < 0.0) | (x > 1.0)):
            raise MeasureError("atoms must lie in [0, 1]")
        if np.any(np.diff(x) <= 0.0):
            raise MeasureError("atom locations must be strictly increasing")
        if np.any(w <= 0.0):
            raise MeasureError("atom masses must be positive")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w", w)

    def describe(self) -> str:
        return f"atoms[{self.x.size}]"


@dataclass(frozen=True, eq=False)
class SampledDensity:
    x: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        w = np.asarray(self.w, dtype=float).ravel()
        if x.shape != w.shape:
            raise MeasureError("grid and density values differ in length")
        if x.size < 3:
            raise MeasureError("a sampled density needs at least 3 grid nodes")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
            raise MeasureError("density data must be finite")
        if np.any((x < 0.0) | (x > 1.0)):
            raise MeasureError("grid nodes must lie in [0, 1]")
        if np.any(np.diff(x) <= 0.0):
            raise MeasureError("grid nodes must be strictly increasing")
        if np.any(w < 0.0):
            raise MeasureError("density values must be nonnegative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w", w)

    def describe(self) -> str:
        return f"density[{self.x.size}]"


MeasureKind = Union[AreaMeasure, BetaWeight, Atoms, SampledDensity]


@dataclass(frozen=True, eq=False)
class MeasureSpec:
    kind: MeasureKind
    normalized: bool = False

    def describe(self) -> str:
        return self.kind.describe()


def as_spec(measure: MeasureSpec | MeasureKind) -> MeasureSpec:
    return measure if isinstance(measure, MeasureSpec) else MeasureSpec(measure)


@dataclass
class ValidationReport:
    mass_ok: bool
    atom_at_one: bool
    sup_support_lt_one: bool
    warnings: list[str] = field(default_factory=list)
    measure: MeasureSpec | None = None
    mass: float = 1.0
    violations: list[str] = field(default_factory=list)

    @property
    def violated(self) -> bool:
        return self.atom_at_one or self.sup_support_lt_one

    @property
    def banner(self) -> str | None:
        if not self.violated:
            return None
        return "assumptions violated: " + "; ".join(self.violations)


def _mass(kind: MeasureKind) -> float:
    if isinstance(kind, (AreaMeasure, BetaWeight)):
        return 1.0
    if isinstance(kind, Atoms):
        return math.fsum(kind.w)
    value, _ = simpson_richardson(kind.x, kind.w)
    return float(value)


def _rescaled(kind: MeasureKind, mass: float) -> MeasureKind:
    if isinstance(kind, Atoms):
        return Atoms(kind.x, kind.w / mass)
    if isinstance(kind, SampledDensity):
        return SampledDensity(kind.x, kind.w / mass)
    return kind


def _density_reaches_one(kind: SampledDensity) -> bool:
    # Heuristic: the last node is 1 and the density is not identically zero
    # on the final 5% of [x_0, 1].
    if kind.x[-1] != 1.0:
        return False
    cutoff = 1.0 - 0.05 * (1.0 - kind.x[0])
    return bool(np.any(kind.w[kind.x >= cutoff] > 0.0))


def validate(
    measure: MeasureSpec | MeasureKind, normalize: bool = False, force: bool = False
) -> ValidationReport:
    """Check total mass and the standing hypotheses ``1 in supp(mu)``, ``mu({1}) = 0``.

    Raises :class:`EmptySupport`, :class:`NonProbabilityMass` (mass differs
    from 1 and ``normalize`` is off) or :class:`AtomAtOne` (unless ``force``).
    A support that stops short of 1 is only flagged here; providers refuse it
    later unless forced.  The returned report carries the (possibly rescaled)
    measure.
    """
    spec = as_spec(measure)
    kind = spec.kind
    mass = _mass(kind)
    if not mass > 0.0:
        raise EmptySupport(f"{kind.describe()} has no mass")
    notes: list[str] = []
    violations: list[str] = []
    normalized = spec.normalized
    if abs(mass - 1.0) > MASS_RTOL:
        if not normalize:
            raise NonProbabilityMass(f"total mass is {mass!r}, not 1")
        kind = _rescaled(kind, mass)
        normalized = True
        notes.append(f"mass {mass:.17g} rescaled to 1")

    atom_at_one = isinstance(kind, Atoms) and kind.x[-1] == 1.0
    if isinstance(kind, Atoms):
        sup_lt_one = kind.x[-1] < 1.0
    elif isinstance(kind, SampledDensity):
        sup_lt_one = not _density_reaches_one(kind)
    else:
        sup_lt_one = False

    if atom_at_one:
        msg = f"atom of mass {kind.w[-1]:.17g} at x = 1 (mu({{1}}) must be 0)"
        if not force:
            raise AtomAtOne(msg)
        notes.append(msg)
        violations.append(msg)
    if sup_lt_one:
        top = kind.x[-1] if isinstance(kind, Atoms) else kind.x[np.nonzero(kind.w)[0][-1]]
        msg = f"support ends at {top:.17g} < 1 (1 must lie in supp(mu))"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
        violations.append(msg)

    return ValidationReport(
        mass_ok=True,
        atom_at_one=atom_at_one,
        sup_support_lt_one=sup_lt_one,
        warnings=notes,
        measure=MeasureSpec(kind, normalized),
        mass=mass,
        violations=violations,
    )


# Gauss-Legendre rules for the trigamma integral of the beta-weight pair form;
# the short rule is used once the integrand is far from its pole at -u.
_GL_LONG = np.polynomial.legendre.leggauss(32)
_GL_SHORT = np.polynomial.legendre.leggauss(8)


def _beta_log_gamma(t, beta):
    t = np.asarray(t, dtype=float)
    return gammaln(beta + 2.0) + gammaln(0.5 * t + 1.0) - gammaln(0.5 * t + beta + 2.0)


def _beta_pair_log_ratio(t, p, q, beta):
    """log(gamma_{t+p+q} gamma_t / (gamma_{t+p} gamma_{t+q})) for the beta weight.

    With u = t/2 + 1 the log ratio equals the mixed second difference
    ``int_0^{p/2} int_0^{q/2} [psi'(u+x+y) - psi'(u+b+x+y)] dx dy`` with
    b = beta + 1.  The integrand depends on x + y only, so the double integral
    collapses to a 1-D integral against a trapezoidal kernel, split at its kinks.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    u = 0.5 * t + 1.0
    b = beta + 1.0
    lo, hi = sorted((0.5 * p, 0.5 * q))
    total = np.zeros_like(u)
    far = u > 20.0 * (lo + hi + b)
    for mask, (nodes, weights) in ((~far, _GL_LONG), (far, _GL_SHORT)):
        if not np.any(mask):
            continue
        uu = u[mask]
        acc = np.zeros_like(uu)
        for a, c, shape in ((0.0, lo, "rise"), (lo, hi, "flat"), (hi, lo + hi, "fall")):
            if c <= a:
                continue
            z = 0.5 * (a + c) + 0.5 * (c - a) * nodes
            if shape == "rise":
                kern = z
            elif shape == "flat":
                kern = np.full_like(z, lo)
            else:
                kern = lo + hi - z
            zz = uu[:, None] + z[None, :]
            h = polygamma(1, zz) - polygamma(1, zz + b)
            acc += 0.5 * (c - a) * (h * (kern * weights)[None, :]).sum(axis=1)
        total[mask] = acc
    return total


class MomentProvider:
    """Evaluates ``t -> gamma_t`` for a validated measure, with a result cache.

    ``method`` is ``"closed_form"`` (area, beta and atoms) or ``"quadrature"``
    (always used for sampled densities).  Construction validates the measure;
    hypothesis violations are refused unless ``force`` is set, in which case
    :attr:`banner` describes the violation.

    The cache is keyed on the exact binary value of ``t``.  Concurrent readers
    may compute the same moment twice but always see complete entries.
    """

    def __init__(
        self,
        measure: MeasureSpec | MeasureKind,
        *,
        method: str | None = None,
        tol: float = 1e-12,
        normalize: bool = False,
        force: bool = False,
    ):
        report = validate(measure, normalize=normalize, force=force)
        if report.sup_support_lt_one and not force:
            raise SupportBelowOne("; ".join(report.violations))
        self.report = report
        self.measure = report.measure
        kind = self.measure.kind
        if method is None:
            method = "quadrature" if isinstance(kind, SampledDensity) else "closed_form"
        if method not in ("closed_form", "quadrature"):
            raise ValueError(f"unknown moment method {method!r}")
        if method == "closed_form" and isinstance(kind, SampledDensity):
            raise ValueError("sampled densities have no closed-form moments")
        self.method = method
        self.tol = tol
        self._cache: dict[float, tuple[float, float]] = {}
        self._lock = threading.Lock()

    @property
    def kind(self) -> MeasureKind:
        return self.measure.kind

    @property
    def banner(self) -> str | None:
        return self.report.banner

    @property
    def hypotheses_hold(self) -> bool:
        return not self.report.violated

    # -- scalar moments -----------------------------------------------------

    def moment(self, t: float) -> tuple[float, float]:
        t = float(t)
        if not (math.isfinite(t) and t >= 0.0):
            raise ValueError(f"moment order must be finite and >= 0, got {t!r}")
        hit = self._cache.get(t)
        if hit is not None:
            return hit
        value = self._compute(t)
        with self._lock:
            return self._cache.setdefault(t, value)

    def _compute(self, t: float) -> tuple[float, float]:
        if t == 0.0:
            return 1.0, 0.0
        kind = self.kind
        if isinstance(kind, Atoms):
            return math.fsum(kind.w * kind.x**t), 0.0
        if self.method == "closed_form":
            if isinstance(kind, AreaMeasure):
                return 2.0 / (t + 2.0), 0.0
            return float(np.exp(_beta_log_gamma(t, kind.beta))), 0.0
        if isinstance(kind, SampledDensity):
            value, err = simpson_richardson(kind.x, kind.w * kind.x**t)
            return float(value), float(err)
        if isinstance(kind, AreaMeasure):
            return adaptive_gk15(lambda x: 2.0 * x ** (t + 1.0), 0.0, 1.0,
                                 abs_tol=self.tol, rel_tol=0.0)
        # substitute v = 1 - r^2, which puts the endpoint singularity at v = 0
        beta = kind.beta
        return adaptive_gk15(
            lambda v: (beta + 1.0) * v**beta * (1.0 - v) ** (0.5 * t),
            0.0, 1.0, abs_tol=self.tol, rel_tol=0.0,
        )

    # -- vectorized helpers used by the matrix assembly ---------------------

    def gammas(self, t) -> np.ndarray:
        """Moments for an array of orders (no error estimates, no caching)."""
        t = np.asarray(t, dtype=float)
        kind = self.kind
        if isinstance(kind, Atoms):
            out = (kind.w[:, None] * kind.x[:, None] ** t.ravel()[None, :]).sum(axis=0)
        elif self.method == "closed_form" and isinstance(kind, AreaMeasure):
            out = 2.0 / (t.ravel() + 2.0)
        elif self.method == "closed_form":
            out = np.exp(_beta_log_gamma(t.ravel(), kind.beta))
        elif isinstance(kind, SampledDensity):
            out, _ = simpson_richardson(kind.x, kind.w[None, :] * kind.x[None, :] ** t.ravel()[:, None])
        else:
            out = np.array([self.moment(v)[0] for v in t.ravel()])
        out = np.asarray(out, dtype=float)
        out[t.ravel() == 0.0] = 1.0
        return out.reshape(t.shape)

    def pair(self, t, p: float, q: float) -> np.ndarray:
        """``gamma_{t+p+q} gamma_t - gamma_{t+p} gamma_{t+q}`` for an array of ``t``.

        Equal to ``1/2 iint (xy)^t (x^p - y^p)(x^q - y^q) d mu d mu``.
        """
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        kind = self.kind
        if isinstance(kind, Atoms):
            x, w = kind.x, kind.w
            xy = np.outer(x, x)
            dp = (x[:, None] ** p - x[None, :] ** p) * (x[:, None] ** q - x[None, :] ** q)
            ww = np.outer(w, w) * dp
            out = 0.5 * np.einsum("ij,ijk->k", ww, xy[:, :, None] ** flat[None, None, :])
        elif self.method == "closed_form" and isinstance(kind, AreaMeasure):
            s = flat + 2.0
            out = 4.0 * p * q / ((s + p + q) * s * (s + p) * (s + q))
        elif self.method == "closed_form":
            log_ratio = _beta_pair_log_ratio(flat, p, q, kind.beta)
            prod = np.exp(_beta_log_gamma(flat + p, kind.beta) + _beta_log_gamma(flat + q, kind.beta))
            out = prod * np.expm1(log_ratio)
        else:
            g_pq = self.gammas(flat + p + q)
            g_0 = self.gammas(flat)
            g_p = self.gammas(flat + p)
            g_q = self.gammas(flat + q)
            lead = g_pq * g_0
            out = lead - g_p * g_q
            with np.errstate(divide="ignore", invalid="ignore"):
                lost = np.abs(out) < 10.0**-CANCELLATION_DIGITS * np.abs(lead)
            if np.any(lost):
                warnings.warn(
                    f"moment difference lost more than {CANCELLATION_DIGITS} digits "
                    f"at t = {flat[lost][0]:.6g}",
                    CancellationWarning,
                    stacklevel=2,
                )
        return np.asarray(out, dtype=float).reshape(t.shape)


def moment(provider: MomentProvider, t: float) -> tuple[float, float]:
    """``(gamma_t, error_estimate)``; cached per exact ``t``."""
    return provider.moment(t)


def projection_coefficient(provider: MomentProvider, k: int, t: float) -> float:
    """Coefficient c with ``P_nu(z^k |z|^t) = c z^k``, namely ``gamma_{2k+t} / gamma_{2k}``."""
    if k < 0 or int(k) != k:
        raise ValueError("k must be a nonnegative integer")
    if not t > 0:
        raise ValueError("t must be positive")
    return provider.moment(2 * k + t)[0] / provider.moment(2 * k)[0]


def symmetrized_pair_integral(provider: MomentProvider, k: int, p: float, q: float) -> float:
    """``1/2 iint (xy)^{2k} (x^p - y^p)(x^q - y^q) d mu(x) d mu(y)``."""
    if not (p > 0 and q > 0):
        raise ValueError("p and q must be positive")
    return float(provider.pair(2.0 * k, p, q))


def subexponential_diagnostic(provider: MomentProvider, n: int, k_list: Iterable[int]) -> list[float]:
    """k-th roots of ``iint (xy)^k (x^{2n} - y^{2n})^2 d mu d mu`` for each k.

    The roots tend to 1 when ``1 in supp(mu)``; for a support ending below 1
    they settle below 1.
    """
    ks = [int(k) for k in k_list]
    if any(k < 1 for k in ks):
        raise ValueError("k must be >= 1")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k_list must be increasing")
    values = 2.0 * provider.pair(np.array(ks, dtype=float), 2.0 * n, 2.0 * n)
    return [max(v, 0.0) ** (1.0 / k) for v, k in zip(values, ks)]


# -- file formats ------------------------------------------------------------

def _read_two_columns(path: str | Path, second: str) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", second]:
            raise MeasureError(f"{path}: expected header 'x,{second}'")
        xs, ys = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise MeasureError(f"{path}:{lineno}: expected 2 columns")
            try:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
            except ValueError as exc:
                raise MeasureError(f"{path}:{lineno}: {exc}") from None
    if not xs:
        raise EmptySupport(f"{path}: no data rows")
    return np.array(xs), np.array(ys)


def load_atoms_csv(path: str | Path) -> Atoms:
    """Read an ``x,mass`` CSV file."""
    return Atoms(*_read_two_columns(path, "mass"))


def load_density_csv(path: str | Path) -> SampledDensity:
    """Read an ``x,w`` CSV file."""
    return SampledDensity(*_read_two_columns(path, "w"))


def write_two_columns(path: str | Path, header: tuple[str, str], x, y) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for a, b in zip(x, y):
            writer.writerow([format(float(a), ".17g"), format(float(b), ".17g")])
