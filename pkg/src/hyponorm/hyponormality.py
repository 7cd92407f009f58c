"""Hyponormality of T_{z^n + C|z|^s}: threshold, classification and variational check.

The operator is hyponormal iff ``|C| <= 1 / ||J(nu)||``.  Only the modulus of
C enters: complex C and complex Taylor coefficients reduce to c = |C| and
nonnegative coefficient sequences u, for which the self-commutator quadratic
form reads

    Q(u, c) = sum_k w_k u_k^2 - 2 c sum_k u_k u_{k+n} num_k

with the weights ``w_k`` and couplings ``num_k`` of :mod:`hyponorm.jacobi`.
Hyponormality is ``Q(u, c) >= 0`` for all u, i.e. ``c <= 1 / kappa`` where
kappa is the supremum of the Rayleigh-type quotient computed by
:func:`rayleigh_kappa`.  The substitution ``v_k = u_k sqrt(w_k)`` turns that
quotient into ``<v, J v> / <v, v>``, which is what :func:`oracle_crosscheck`
exploits: it maps the top eigenvector of a finite section back to u and
re-evaluates the quotient from moments alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroVector
from .jacobi import ConstantChain, JacobiOperator, SymbolParams
from .measures import MomentProvider
from .spectral import NormEstimate, TruncationPolicy, operator_norm, top_eigenvector

HYPONORMAL = "Hyponormal"
NOT_HYPONORMAL = "NotHyponormal"
UNDECIDED = "Undecided"

# |C| is compared with a few ulps of slack: abs() of a complex number with
# modulus exactly on the threshold need not round back onto it.
_MODULUS_SLACK = 4 * np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Nonnegative Taylor coefficients ``u_0, ..., u_{m-1}``, not all zero."""

    values: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.values, dtype=float).ravel()
        if u.size == 0 or not np.all(np.isfinite(u)):
            raise ValueError("coefficient vector must be finite and nonempty")
        if np.any(u < 0):
            raise ValueError("coefficients must be nonnegative")
        if not np.any(u > 0):
            raise ZeroVector("coefficient vector is identically zero")
        object.__setattr__(self, "values", u)


def _as_coefficients(u) -> np.ndarray:
    return u.values if isinstance(u, CoefficientVector) else CoefficientVector(u).values


class VariationalForm:
    """Weights and couplings of the self-commutator form, computed from moments."""

    def __init__(self, provider: MomentProvider, params: SymbolParams):
        self.provider = provider
        self.params = params

    def weights(self, m: int) -> np.ndarray:
        n = self.params.n
        j = np.arange(m, dtype=float)
        out = np.empty(m)
        low = j < n
        out[low] = self.provider.gammas(2 * j[low] + 2 * n)
        back = 2 * j[~low] - 2 * n
        if back.size:
            out[~low] = self.provider.pair(back, 2.0 * n, 2.0 * n) / self.provider.gammas(back)
        return out

    def couplings(self, m: int) -> np.ndarray:
        k2 = 2.0 * np.arange(m, dtype=float)
        return self.provider.pair(k2, 2.0 * self.params.n, self.params.s) / self.provider.gammas(k2)

    def parts(self, u: np.ndarray) -> tuple[float, float]:
        """``(sum w_k u_k^2, 2 sum u_k u_{k+n} num_k)``."""
        n = self.params.n
        m = u.size
        diag = math.fsum(self.weights(m) * u * u)
        if m <= n:
            return diag, 0.0
        cross = 2.0 * math.fsum(u[:-n] * u[n:] * self.couplings(m - n))
        return diag, cross


class UnitForm(VariationalForm):
    """Form of the constant test chain: unit weights, couplings equal to the entry."""

    def __init__(self, op: ConstantChain):
        self.provider = None
        self.params = op.params
        self.value = op.value

    def weights(self, m: int) -> np.ndarray:
        return np.ones(m)

    def couplings(self, m: int) -> np.ndarray:
        return np.full(m, self.value)


def form_for(op: JacobiOperator) -> VariationalForm:
    if isinstance(op, ConstantChain):
        return UnitForm(op)
    return VariationalForm(op.provider, op.params)


def commutator_form(provider: MomentProvider | VariationalForm, params: SymbolParams, u, c: float) -> float:
    """``Q(u, c)``; nonnegative for every u exactly when |C| = c gives a hyponormal operator."""
    if c < 0:
        raise ValueError("c must be nonnegative")
    form = provider if isinstance(provider, VariationalForm) else VariationalForm(provider, params)
    diag, cross = form.parts(_as_coefficients(u))
    return diag - c * cross


def rayleigh_kappa(provider: MomentProvider | VariationalForm, params: SymbolParams, u) -> float:
    """The quotient ``2 sum u_k u_{k+n} num_k / sum w_k u_k^2`` whose supremum is ||J(nu)||."""
    form = provider if isinstance(provider, VariationalForm) else VariationalForm(provider, params)
    diag, cross = form.parts(_as_coefficients(u))
    if not diag > 0:
        raise ZeroVector("weighted norm of u vanishes")
    return cross / diag


def u_from_v(form: VariationalForm, v) -> np.ndarray:
    """Undo ``v_k = u_k sqrt(w_k)``."""
    v = np.asarray(v, dtype=float)
    return v / np.sqrt(form.weights(v.size))


def oracle_crosscheck(op: JacobiOperator, tol: float = 1e-8, estimate: NormEstimate | None = None) -> float:
    """``|kappa(u*) - lower_N|`` for u* recovered from the top eigenvector of the final section.

    ``lower_N`` is the truncation lower bound (not the essential-spectrum
    floor), so the residual compares the moment-side quotient with the
    matrix-side eigenvalue of the same section.
    """
    if estimate is None:
        estimate = operator_norm(op, tol)
    _, v, _ = top_eigenvector(op, estimate.truncation_size)
    form = form_for(op)
    kappa = rayleigh_kappa(form, op.params, u_from_v(form, v))
    return abs(kappa - estimate.truncation_lower)


@dataclass
class HyponormalityReport:
    params: SymbolParams
    threshold_lower: float
    threshold_upper: float
    norm: NormEstimate
    oracle_residual: float
    c_modulus: float | None = None
    classification: str | None = None
    assumption_banner: str | None = None
    measure: str | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.norm.certified

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "measure": self.measure,
            "n": self.params.n,
            "s": self.params.s,
            "threshold_lower": self.threshold_lower,
            "threshold_upper": self.threshold_upper,
            "c_modulus": self.c_modulus,
            "classification": self.classification,
            "oracle_residual": self.oracle_residual,
            "assumption_banner": self.assumption_banner,
            "norm": self.norm.to_dict(),
        }


def classify(report: HyponormalityReport, C: complex) -> str:
    """Hyponormal, NotHyponormal or Undecided, from ``|C|`` against the threshold bracket."""
    modulus = abs(complex(C))
    if modulus <= report.threshold_lower * (1.0 + _MODULUS_SLACK):
        return HYPONORMAL
    if modulus > report.threshold_upper * (1.0 + _MODULUS_SLACK):
        return NOT_HYPONORMAL
    return UNDECIDED


def threshold(
    op: JacobiOperator,
    tol: float = 1e-8,
    policy: TruncationPolicy | None = None,
    C: complex | None = None,
    *,
    measure: str | None = None,
) -> HyponormalityReport:
    """Bracket ``C_max = 1 / ||J(nu)||`` and, if ``C`` is given, classify it."""
    est = operator_norm(op, tol, policy)
    report = HyponormalityReport(
        params=op.params,
        threshold_lower=1.0 / est.upper,
        threshold_upper=1.0 / est.lower,
        norm=est,
        oracle_residual=oracle_crosscheck(op, tol, est),
        assumption_banner=op.banner,
        measure=measure,
    )
    if C is not None:
        report.c_modulus = abs(complex(C))
        report.classification = classify(report, C)
    return report
