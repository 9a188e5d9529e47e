"""
单位圆盘上的 Bergman 核恒等式：核导数、Taylor 权重、误差尾项闭式、最小阶数选择、Gram 最优投影。
"""

import logging
import math
from typing import List, Optional

import numpy as np
from scipy import linalg

from app.config import FACTORIAL_CAP, GRAM_CONDITION_LIMIT, GRAM_MAX_ORDER, ORDER_GUARD
from app.models import Provenance, SensingIdentity
from app.services.errors import (
    BudgetExceededError,
    DegeneratePointsError,
    IllConditionedError,
    InvalidRadiusError,
    OrderRangeError,
    OutOfDiscError,
    ParameterError,
)

logger = logging.getLogger(__name__)

DISC = "disc"


def _factorial(n: int) -> float:
    if n > FACTORIAL_CAP:
        raise OrderRangeError(f"factorial argument {n} exceeds cap {FACTORIAL_CAP}")
    return float(math.factorial(n))


def _check_order(N: int) -> None:
    if N < 0:
        raise OrderRangeError(f"order must be nonnegative, got {N}")
    if N + 1 > FACTORIAL_CAP:
        raise OrderRangeError(f"order {N} exceeds the factorial cap {FACTORIAL_CAP}")


def _check_inside(z: complex, name: str) -> None:
    if abs(z) >= 1:
        raise OutOfDiscError(f"{name}={z} is not inside the unit disc")


def disc_kernel(z, w):
    """K(z, w) = 1 / (pi (1 - z conj(w))^2)"""
    return 1.0 / (math.pi * (1.0 - np.asarray(z) * np.conj(w)) ** 2)


def disc_kernel_deriv(m: int, z):
    """K_0^m(z) = (m+1)! z^m / pi, the kernel derivative that reproduces h^(m)(0)."""
    return _factorial(m + 1) * np.asarray(z, dtype=np.complex128) ** m / math.pi


def disc_kernel_deriv_at(m: int, z, a: complex):
    """d^m/d(conj w)^m K(z, w) at w = a: (m+1)! z^m (1 - z conj(a))^-(m+2) / pi"""
    z = np.asarray(z, dtype=np.complex128)
    return _factorial(m + 1) * z**m * (1.0 - z * np.conj(a)) ** (-(m + 2)) / math.pi


def taylor_weights(b: complex, N: int) -> np.ndarray:
    b = complex(b)
    if b == 0:
        raise DegeneratePointsError("b must differ from the expansion point 0")
    _check_inside(b, "b")
    _check_order(N)
    weights = np.empty(N + 1, dtype=np.complex128)
    weights[0] = 1.0
    for m in range(1, N + 1):
        weights[m] = weights[m - 1] * b / m
    return weights


def kernel_tail(w, N: int):
    """E_N(w) = (1/pi) [(N+2) w^(N+1) - (N+1) w^(N+2)] / (1-w)^2"""
    w = np.asarray(w, dtype=np.complex128)
    return ((N + 2) * w ** (N + 1) - (N + 1) * w ** (N + 2)) / (math.pi * (1.0 - w) ** 2)


def error_tail_sup(b: complex, N: int, r: float) -> float:
    rho = r * abs(b)
    if r <= 1 or rho >= 1:
        raise InvalidRadiusError(f"need r > 1 and r|b| < 1, got r={r} |b|={abs(b)}")
    return ((N + 2) * rho ** (N + 1) + (N + 1) * rho ** (N + 2)) / (math.pi * (1.0 - rho) ** 2)


def error_tail_l2(B: complex, N: int) -> float:
    x = abs(B) ** 2
    if abs(B) >= 1:
        raise OutOfDiscError(f"B={B} is not inside the unit disc")
    # (N+2)x^(N+1) - (N+1)x^(N+2) = x^(N+1) (1 + (N+1)(1-x)) 无抵消
    value = x ** (N + 1) * (1.0 + (N + 1) * (1.0 - x)) / (math.pi * (1.0 - x) ** 2)
    return math.sqrt(value)


def default_radius(b: complex) -> float:
    return 0.5 * (1.0 + 1.0 / abs(b))


def choose_order(
    b: complex, eps: float, mode: str = "l2", r: Optional[float] = None, *, limit: int = ORDER_GUARD
) -> int:
    if eps <= 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if mode == "sup":
        r = default_radius(b) if r is None else r
        tail = lambda n: error_tail_sup(b, n, r)  # noqa: E731
    elif mode == "l2":
        tail = lambda n: error_tail_l2(b, n)  # noqa: E731
    else:
        raise OrderRangeError(f"unknown order mode: {mode}")
    for N in range(limit + 1):
        if tail(N) <= eps:
            return N
    raise BudgetExceededError(f"eps={eps} not reached for N <= {limit} (b={b}, mode={mode})")


def taylor_identity(b: complex, N: int) -> SensingIdentity:
    weights = taylor_weights(b, N)
    return SensingIdentity(
        domain=DISC,
        a=0j,
        b=b,
        weights=weights,
        l2_bound=error_tail_l2(b, N),
        provenance=Provenance.TAYLOR,
    )


def disc_identity(
    b: complex, eps: float, mode: str = "l2", r: Optional[float] = None
) -> SensingIdentity:
    N = choose_order(b, eps, mode, r)
    logger.info("Disc identity b=%s eps=%s mode=%s order=%s", b, eps, mode, N)
    return taylor_identity(b, N)


def gram_matrix(a: complex, N: int) -> np.ndarray:
    """G[m, n] = <K_a^n, K_a^m> = d_z^m d_conj(w)^n K(z, w) at z = w = a."""
    a = complex(a)
    ac = a.conjugate()
    s = 1.0 - abs(a) ** 2
    G = np.zeros((N + 1, N + 1), dtype=np.complex128)
    for m in range(N + 1):
        for n in range(N + 1):
            total = 0j
            for j in range(min(m, n) + 1):
                total += (
                    math.comb(n, j)
                    * (_factorial(m) / _factorial(m - j))
                    * _factorial(m + n + 1 - j)
                    * ac ** (m - j)
                    * a ** (n - j)
                    * s ** (-(m + n + 2 - j))
                )
            G[m, n] = total / math.pi
    return G


def gram_rhs(a: complex, b: complex, N: int) -> np.ndarray:
    """rho[m] = <K_b, K_a^m> = conj(K_a^m(b))"""
    return np.array([np.conj(disc_kernel_deriv_at(m, b, a)) for m in range(N + 1)])


def optimal_weights_gram(a: complex, b: complex, N: int) -> SensingIdentity:
    a, b = complex(a), complex(b)
    _check_inside(a, "a")
    _check_inside(b, "b")
    if a == b:
        raise DegeneratePointsError("a and b must differ")
    if N > GRAM_MAX_ORDER:
        raise OrderRangeError(f"Gram order {N} exceeds cap {GRAM_MAX_ORDER}")
    G = gram_matrix(a, N)
    rho = gram_rhs(a, b, N)
    # 对角均衡后 LU 分解，再做两步迭代细化
    scale = 1.0 / np.sqrt(G.diagonal().real)
    Gs = G * scale[:, None] * scale[None, :]
    rs = rho * scale
    lu, piv = linalg.lu_factor(Gs, check_finite=True)
    if np.any(np.abs(np.diag(lu)) == 0.0):
        raise IllConditionedError(f"Gram system is singular (a={a}, N={N})")
    cs = linalg.lu_solve((lu, piv), rs)
    for _ in range(2):
        cs = cs + linalg.lu_solve((lu, piv), rs - Gs @ cs)
    c = cs * scale
    warnings: List[str] = []
    cond = float(np.linalg.cond(Gs))
    if not math.isfinite(cond) or cond > GRAM_CONDITION_LIMIT:
        warnings.append(f"ill-conditioned Gram system: cond={cond:.3g}")
        logger.warning("Gram solve ill-conditioned a=%s N=%s cond=%.3g", a, N, cond)
    kbb = float(disc_kernel(b, b).real)
    captured = float(np.real(np.vdot(rho, c)))
    # K(b,b) - rho*c 有抵消，加上舍入下限保证界不被低估
    roundoff = 16 * (N + 1) * np.finfo(float).eps * (kbb + abs(captured))
    l2 = math.sqrt(max(0.0, kbb - captured) + roundoff)
    return SensingIdentity(
        domain=DISC,
        a=a,
        b=b,
        weights=np.conj(c),
        l2_bound=l2,
        provenance=Provenance.GRAM,
        warnings=warnings,
    )
