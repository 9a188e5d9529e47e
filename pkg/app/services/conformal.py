"""
圆盘到矩形 R = (-mu, 1+mu) x (-sigma, sigma) 的共形映射。

Cayley 变换把圆盘送到上半平面，Schwarz-Christoffel 第一类不完全椭圆积分再送到矩形，
最后仿射归一化。椭圆积分用 scipy.special 的 Carlson 形式（支持复参数）。
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import optimize, special

from app.services.errors import ParameterError

logger = logging.getLogger(__name__)

# 可解的宽高比区间（对应 1 - m 从 1e-300 到 1 - 1e-16）
_LOG_P_LOW = math.log(1e-300)
_LOG_P_HIGH = math.log1p(-1e-16)


@dataclass(frozen=True)
class Rectangle:
    margin: float  # mu
    halfheight: float  # sigma

    def __post_init__(self):
        if not (self.margin > 0 and self.halfheight > 0):
            raise ParameterError(f"rectangle needs mu > 0 and sigma > 0, got {self}")

    @property
    def aspect(self) -> float:
        return (1 + 2 * self.margin) / (2 * self.halfheight)

    @property
    def left(self) -> float:
        return -self.margin

    @property
    def right(self) -> float:
        return 1 + self.margin

    def contains(self, tau) -> np.ndarray:
        tau = np.asarray(tau)
        return (
            (tau.real > self.left) & (tau.real < self.right) & (np.abs(tau.imag) < self.halfheight)
        )

    def boundary(self, n: int) -> np.ndarray:
        """n counter-clockwise samples of the rectangle boundary, uniform in arclength."""
        w = self.right - self.left
        h = 2 * self.halfheight
        s = np.arange(n) * (2 * (w + h) / n)
        out = np.empty(n, dtype=np.complex128)
        corners = [
            complex(self.left, -self.halfheight),
            complex(self.right, -self.halfheight),
            complex(self.right, self.halfheight),
            complex(self.left, self.halfheight),
        ]
        edges = [(corners[0], 1, w), (corners[1], 1j, h), (corners[2], -1, w), (corners[3], -1j, h)]
        start = 0.0
        for origin, direction, length in edges:
            mask = (s >= start) & (s < start + length)
            out[mask] = origin + direction * (s[mask] - start)
            start += length
        return out

    def grid(self, nx: int, ny: int, inset: float = 0.0) -> np.ndarray:
        """Closed rectangle grid; inset > 0 pulls the grid strictly inside."""
        x = np.linspace(self.left + inset, self.right - inset, nx)
        y = np.linspace(-self.halfheight + inset, self.halfheight - inset, ny)
        return (x[None, :] + 1j * y[:, None]).reshape(-1)


def elliptic_parameter_for_aspect(aspect: float) -> float:
    """Parameter m = k^2 with 2 K(m) / K(1 - m) = aspect."""

    def mismatch(log_p: float) -> float:
        p = math.exp(log_p)
        return 2.0 * special.ellipkm1(p) / special.ellipk(p) - aspect

    lo, hi = mismatch(_LOG_P_LOW), mismatch(_LOG_P_HIGH)
    if not (lo > 0 > hi):
        raise ParameterError(f"rectangle aspect ratio {aspect:.6g} outside the solvable bracket")
    log_p = optimize.brentq(mismatch, _LOG_P_LOW, _LOG_P_HIGH, xtol=1e-15, rtol=1e-15, maxiter=500)
    return 1.0 - math.exp(log_p)


def incomplete_elliptic_f(zeta, m: float):
    """F(zeta) = int_0^zeta dt / sqrt((1-t^2)(1-m t^2)) in Carlson form, principal branch."""
    zeta = np.asarray(zeta, dtype=np.complex128)
    return zeta * special.elliprf(1.0 - zeta**2, 1.0 - m * zeta**2, np.ones_like(zeta))


@dataclass(frozen=True)
class RectangleMap:
    rect: Rectangle
    m: float
    K: float
    Kp: float
    scale: float

    @classmethod
    def for_rectangle(cls, rect: Rectangle) -> "RectangleMap":
        m = elliptic_parameter_for_aspect(rect.aspect)
        K = float(special.ellipk(m))
        Kp = float(special.ellipkm1(m))
        scale = (1 + 2 * rect.margin) / (2 * K)
        logger.debug("Rectangle map mu=%s sigma=%s m=%.17g K=%.17g", rect.margin, rect.halfheight, m, K)
        return cls(rect=rect, m=m, K=K, Kp=Kp, scale=scale)

    @property
    def modulus(self) -> float:
        return math.sqrt(self.m)

    def __call__(self, w) -> Tuple[np.ndarray, np.ndarray]:
        w = np.asarray(w, dtype=np.complex128)
        c = 1.0 / math.sqrt(self.modulus)
        denom = 1.0 - 1j * w
        zeta = 1j * c * (1.0 + 1j * w) / denom
        dzeta = -2.0 * c / denom**2
        F = incomplete_elliptic_f(zeta, self.m)
        dF = 1.0 / (np.sqrt(1.0 - zeta**2) * np.sqrt(1.0 - self.m * zeta**2))
        value = self.scale * F + (0.5 - 1j * self.rect.halfheight)
        derivative = self.scale * dF * dzeta
        if value.ndim == 0:
            return complex(value), complex(derivative)
        return value, derivative

    def preimage_real(self, t: float) -> float:
        """Real w in (-1, 1) with psi(w) = t; psi decreases from 1+mu to -mu along (-1, 1)."""
        if not (self.rect.left < t < self.rect.right):
            raise ParameterError(f"t={t} is not inside ({self.rect.left}, {self.rect.right})")
        edge = 1.0 - 1e-15
        return optimize.brentq(
            lambda x: self(x)[0].real - t, -edge, edge, xtol=1e-16, rtol=1e-15, maxiter=500
        )


def rect_map(rect: Rectangle, eval_at) -> Tuple[complex, complex]:
    return RectangleMap.for_rectangle(rect)(eval_at)
