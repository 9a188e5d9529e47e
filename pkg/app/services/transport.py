"""
Moving a disc identity onto a probe domain through the inverse Riemann map F (F(0) = a).

Everything acts on derivative weights: gamma[m, n] is the conjugate of the kernel-side matrix,
so d_tilde = fprime_b * gamma^T d with no extra conjugation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np

from app.models import Provenance, SensingIdentity
from app.services.disc import DISC, taylor_identity
from app.services.errors import (
    CriticalPointError,
    DomainError,
    OrderRangeError,
    PointNotInProbeError,
    SingularMapError,
)
from app.services.series import TruncatedSeries

logger = logging.getLogger(__name__)

# map(w) -> (F(w), F'(w))
ProbeMap = Callable[[complex], Tuple[complex, complex]]

_NEWTON_STARTS = 32
_NEWTON_ITERATIONS = 100
_NEWTON_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class TransportMatrix:
    order: int
    entries: np.ndarray = field(repr=False)
    source: TruncatedSeries = field(repr=False)

    def apply(self, weights: np.ndarray, fprime_b: complex) -> np.ndarray:
        """d_tilde[n] = fprime_b * sum_{m >= n} d[m] gamma[m, n]"""
        d = np.asarray(weights, dtype=np.complex128)
        if d.size != self.order + 1:
            raise OrderRangeError(f"weights of order {d.size - 1} vs transport order {self.order}")
        return complex(fprime_b) * (self.entries.T @ d)


def beta_matrix(F: TruncatedSeries, N: int) -> TransportMatrix:
    if F.order < N + 1:
        raise OrderRangeError(f"F has order {F.order}, transport of order {N} needs {N + 1}")
    if F.coeffs[1] == 0:
        raise SingularMapError("F has a vanishing linear coefficient")
    c = F.coeffs[: N + 2]
    S = np.zeros(N + 1, dtype=np.complex128)
    S[1:] = c[1 : N + 1]
    T = np.array([(j + 1) * c[j + 1] for j in range(N + 1)], dtype=np.complex128)

    gamma = np.zeros((N + 1, N + 1), dtype=np.complex128)
    power = T.copy()  # S^n * T, 从 n = 0 开始逐次乘 S
    for n in range(N + 1):
        for m in range(n, N + 1):
            gamma[m, n] = float(math.perm(m, m - n)) * power[m]
        power = np.convolve(power, S)[: N + 1]
    return TransportMatrix(order=N, entries=gamma, source=F)


def _start_points() -> np.ndarray:
    radii = np.array([0.25, 0.5, 0.75, 0.95])
    angles = 2 * np.pi * np.arange(8) / 8
    return (radii[:, None] * np.exp(1j * angles)[None, :]).reshape(-1)


def solve_B(
    probe_map: ProbeMap, b: complex, guess: complex | None = None
) -> Tuple[complex, complex]:
    """
    Newton on F(B) = b, first from `guess` when given, then from a grid of disc starts.
    Returns (B, 1/F'(B)).
    """
    b = complex(b)
    scale = max(1.0, abs(b))
    starts = _start_points()[:_NEWTON_STARTS]
    distances = [abs(probe_map(w)[0] - b) for w in starts]
    order = [complex(starts[i]) for i in np.argsort(distances, kind="stable")]
    if guess is not None:
        order.insert(0, complex(guess))
    for w in order:
        for _ in range(_NEWTON_ITERATIONS):
            value, slope = probe_map(w)
            residual = value - b
            step = residual / slope if slope != 0 else 0j
            stalled = abs(step) <= 4e-16 and abs(residual) <= 1e-10 * scale
            if abs(residual) <= _NEWTON_TOL * scale or stalled:
                if abs(slope) <= 1e-14 * scale:
                    raise CriticalPointError(f"F'(B) vanishes at B={w}")
                logger.debug("solve_B converged b=%s B=%s", b, w)
                return w, 1.0 / slope
            if slope == 0:
                break
            w = w - step
            if not abs(w) < 1:
                break
    raise PointNotInProbeError(f"b={b} is not in the probe image")


def transport_identity(
    disc_id: SensingIdentity,
    F: TruncatedSeries,
    fprime_b: complex,
    *,
    domain: str = "probe",
    b: complex | None = None,
    tolerance: float = 0.0,
) -> SensingIdentity:
    """
    l2_bound = |f'(b)| * disc l2_bound; the change of variables z -> f(z) is unitary on the
    weighted integrand, so the certificate is exact.
    """
    if disc_id.provenance not in (Provenance.TAYLOR, Provenance.GRAM) or disc_id.a != 0:
        raise DomainError("only disc identities expanded at 0 can be transported")
    N = disc_id.order
    gamma = beta_matrix(F, N)
    weights = gamma.apply(disc_id.weights, fprime_b)
    target_b = complex(F(disc_id.b)) if b is None else complex(b)
    warnings = list(disc_id.warnings) + F.growth_warnings()
    return SensingIdentity(
        domain=domain,
        a=complex(F.coeffs[0]),
        b=target_b,
        weights=weights,
        l2_bound=abs(fprime_b) * disc_id.l2_bound,
        provenance=Provenance.TRANSPORTED,
        tolerance=tolerance,
        warnings=warnings,
    )


@dataclass(frozen=True)
class AreaEstimate:
    area: float
    remainder: float
    flagged: bool


def probe_area(F: TruncatedSeries) -> AreaEstimate:
    j = np.arange(1, F.order + 1)
    area = math.pi * float(np.sum(j * np.abs(F.coeffs[1:]) ** 2))
    remainder = math.pi * F.order * abs(F.coeffs[-1]) ** 2 * 10 if F.order else 0.0
    flagged = remainder > 1e-6 * area
    if flagged:
        logger.warning("Probe area truncation remainder=%.3g area=%.6g", remainder, area)
    return AreaEstimate(area=area, remainder=remainder, flagged=flagged)


def moebius_map(a: complex) -> ProbeMap:
    """F(w) = (w + a) / (1 + conj(a) w), the disc automorphism with F(0) = a."""
    a = complex(a)
    ac = a.conjugate()
    s = 1.0 - abs(a) ** 2

    def F(w):
        denom = 1.0 + ac * np.asarray(w)
        value = (np.asarray(w) + a) / denom
        derivative = s / denom**2
        if np.ndim(value) == 0:
            return complex(value), complex(derivative)
        return value, derivative

    return F


def moebius_series(a: complex, order: int) -> TruncatedSeries:
    """c_0 = a, c_k = (1 - |a|^2) (-conj(a))^(k-1)"""
    a = complex(a)
    if abs(a) >= 1:
        raise DomainError(f"a={a} is not inside the unit disc")
    coeffs = np.empty(order + 1, dtype=np.complex128)
    coeffs[0] = a
    k = np.arange(1, order + 1)
    coeffs[1:] = (1.0 - abs(a) ** 2) * (-a.conjugate()) ** (k - 1)
    return TruncatedSeries(0.0, coeffs)


def moebius_identity(a: complex, b: complex, N: int) -> SensingIdentity:
    """Taylor identity at B = (b - a)/(1 - conj(a) b) carried to (a, b) inside the unit disc."""
    a, b = complex(a), complex(b)
    B = (b - a) / (1.0 - a.conjugate() * b)
    fprime_b = (1.0 - abs(a) ** 2) / (1.0 - a.conjugate() * b) ** 2
    disc_id = taylor_identity(B, N)
    return transport_identity(disc_id, moebius_series(a, N + 1), fprime_b, domain=DISC, b=b)
