"""
閉形式オラクル — 古典 Laguerre / Jacobi、Hankel 積、分割差分カーネル、
例の重みに対する A_n, B_n の部分分数形

テストと検証キャンペーンの「正解」側。Gamma/Beta は mpmath に任せる。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

from .config import config
from .errors import ExponentOutOfRange, FamilyMismatch, SingularPoint
from .precision import context, exact, lift

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassicalValues:
    family: str
    n: int
    alpha_n: object
    beta_n: object
    h_n: object
    p_n: object


def _ctx(ctx):
    return ctx if ctx is not None else context(config.precision_bits)


def _check_exponent(name: str, v: Fraction):
    if v <= -1:
        raise ExponentOutOfRange(f"{name}={float(v):g} は −1 より大きくなければならない")


# ================================================================
# Jacobi: (1−y)^a (1+y)^b の monic 漸化式
# ================================================================
def _jacobi_alpha(ctx, a, b, n: int):
    if n == 0:
        return (b - a) / (a + b + 2)
    s = 2 * n + a + b
    return (b * b - a * a) / (s * (s + 2))


def _jacobi_beta(ctx, a, b, n: int):
    if n == 0:
        return ctx.zero
    if n == 1:
        return 4 * (1 + a) * (1 + b) / ((2 + a + b) ** 2 * (3 + a + b))
    s = 2 * n + a + b
    return 4 * n * (n + a) * (n + b) * (n + a + b) / (s * s * (s + 1) * (s - 1))


def _jacobi_h0(ctx, a, b):
    return ctx.power(2, a + b + 1) * ctx.beta(a + 1, b + 1)


def jacobi_monic_recurrence(ctx, a: Fraction, b: Fraction, m: int):
    """α_0..α_{m−1}, β_0(=0)..β_{m−1}, μ₀ を返す（求積則の構築用）"""
    av, bv = lift(ctx, exact(a)), lift(ctx, exact(b))
    alpha = [_jacobi_alpha(ctx, av, bv, k) for k in range(m)]
    beta = [_jacobi_beta(ctx, av, bv, k) for k in range(m)]
    return alpha, beta, _jacobi_h0(ctx, av, bv)


def laguerre_classical(n: int, lam, ctx=None) -> ClassicalValues:
    ctx = _ctx(ctx)
    lam = exact(lam)
    _check_exponent("λ", lam)
    l = lift(ctx, lam)
    return ClassicalValues(
        family="laguerre",
        n=n,
        alpha_n=2 * n + l + 1,
        beta_n=n * (n + l),
        h_n=ctx.factorial(n) * ctx.gamma(n + l + 1),
        p_n=-n * (n + l),
    )


def jacobi_classical(n: int, alpha, beta, ctx=None) -> ClassicalValues:
    """(1−x)^α (1+x)^β on [−1,1]"""
    ctx = _ctx(ctx)
    alpha, beta = exact(alpha), exact(beta)
    _check_exponent("α", alpha)
    _check_exponent("β", beta)
    a, b = lift(ctx, alpha), lift(ctx, beta)
    h = _jacobi_h0(ctx, a, b)
    for j in range(1, n + 1):
        h *= _jacobi_beta(ctx, a, b, j)
    p = ctx.zero if n == 0 else n * (a - b) / (2 * n + a + b)
    return ClassicalValues("jacobi", n, _jacobi_alpha(ctx, a, b, n), _jacobi_beta(ctx, a, b, n), h, p)


def shifted_jacobi_classical(n: int, alpha, beta, ctx=None) -> ClassicalValues:
    """x^α (1−x)^β on [0,1]。y = 2x−1 で Jacobi(β, α) に写る"""
    ctx = _ctx(ctx)
    alpha, beta = exact(alpha), exact(beta)
    _check_exponent("α", alpha)
    _check_exponent("β", beta)
    a, b = lift(ctx, alpha), lift(ctx, beta)
    # Jacobi 側: (1−y) の指数 = β, (1+y) の指数 = α
    ja, jb = b, a
    h = ctx.beta(a + 1, b + 1)
    for j in range(1, n + 1):
        h *= _jacobi_beta(ctx, ja, jb, j) / 4
    p = ctx.zero if n == 0 else -n * (n + a) / (2 * n + a + b)
    return ClassicalValues(
        "shifted_jacobi", n,
        (_jacobi_alpha(ctx, ja, jb, n) + 1) / 2,
        _jacobi_beta(ctx, ja, jb, n) / 4,
        h, p,
    )


def laguerre_coefficients(n: int, lam, ctx=None) -> list:
    """monic Laguerre P_n の係数 [c_0, …, c_n]（c_n = 1）

    c_k = (−1)^{n−k} C(n,k) (λ+k+1)_{n−k}
    """
    ctx = _ctx(ctx)
    l = lift(ctx, exact(lam))
    return [
        (-1) ** (n - k) * ctx.binomial(n, k) * ctx.rf(l + k + 1, n - k)
        for k in range(n + 1)
    ]


def barnes_g_hankel(n: int, lam, ctx=None):
    """D_n = Π_{j<n} j!·Γ(j+λ+1)"""
    ctx = _ctx(ctx)
    lam = exact(lam)
    _check_exponent("λ", lam)
    l = lift(ctx, lam)
    d = ctx.one
    for j in range(n):
        d *= ctx.factorial(j) * ctx.gamma(j + l + 1)
    return d


def jacobi_pbt_residual(n: int, alpha, beta, ctx=None):
    """(n+2α−p)(n−p) = (2n−1+α+β)(2n+1+α+β)β_n = (n+2β+p)(n+p) の最大相対差"""
    ctx = _ctx(ctx)
    cv = jacobi_classical(n, alpha, beta, ctx)
    a, b = lift(ctx, exact(alpha)), lift(ctx, exact(beta))
    p = cv.p_n
    left = (n + 2 * a - p) * (n - p)
    mid = (2 * n - 1 + a + b) * (2 * n + 1 + a + b) * cv.beta_n
    right = (n + 2 * b + p) * (n + p)
    scale = max(abs(left), abs(mid), abs(right))
    if scale == 0:
        return ctx.zero
    return max(abs(left - mid), abs(mid - right)) / scale


# ================================================================
# 分割差分カーネル
# ================================================================
def _p(ctx, params: dict, name: str):
    return lift(ctx, exact(params[name]))


def named_kernel(label: str, params: dict, z, x, ctx=None):
    """例ごとの閉形式カーネル (F(z) − F(x))/(z − x)"""
    ctx = _ctx(ctx)
    z = ctx.convert(z)
    x = ctx.convert(x)
    one = ctx.one
    try:
        if label in ("laguerre_classical", "laguerre_jump", "laguerre_two_jump", "laguerre_fh"):
            return one + 0 * z
        if label == "chen_mckay":
            g, t = _p(ctx, params, "gamma"), _p(ctx, params, "t")
            return one - g * t / ((x + t) * (z + t))
        if label in ("chen_its", "laguerre_jump_exp_inv_x"):
            s = _p(ctx, params, "s")
            return one + s / (z * x)
        if label == "laguerre_multi_shift":
            val = one + 0 * z
            for t, g in params["shifts"]:
                t, g = lift(ctx, exact(t)), lift(ctx, exact(g))
                val -= g * t / ((x + t) * (z + t))
            return val
        if label in ("jacobi_classical", "jacobi_jump", "jacobi_fh",
                     "shifted_jacobi_classical", "shifted_jacobi_jump", "shifted_jacobi_fh"):
            return _p(ctx, params, "alpha") + _p(ctx, params, "beta") + 0 * z
        if label == "jacobi_exp_linear":
            t = _p(ctx, params, "t")
            return -t * (x + z) + _p(ctx, params, "alpha") + _p(ctx, params, "beta")
        if label == "jacobi_symmetric_exp_quad":
            t, a = _p(ctx, params, "t"), _p(ctx, params, "alpha")
            return -2 * t * (x * x + z * x + z * z - 1) + 2 * a
        if label == "jacobi_symmetric_k2":
            a, g = _p(ctx, params, "alpha"), _p(ctx, params, "gamma")
            k = ctx.sqrt(_p(ctx, params, "k2"))
            ik = 1 / k
            return 2 * (a + g) + g * (1 - ik * ik) * (
                1 / ((z - ik) * (x - ik)) + 1 / ((z + ik) * (x + ik))
            )
        if label == "jacobi_symmetric_exp_inv_x2":
            a, t = _p(ctx, params, "alpha"), _p(ctx, params, "t")
            return 2 * a + 2 * t * (
                1 / (z * x ** 3) + 1 / (z ** 2 * x ** 2) + (1 / z ** 3 - 1 / z) / x
            )
        if label == "jacobi_symmetric_exp_inv_one_minus_x2":
            a, t = _p(ctx, params, "alpha"), _p(ctx, params, "t")
            return 2 * a + 2 * t * (1 + z * x) / ((1 - z * z) * (1 - x * x))
        if label == "pollaczek_jacobi":
            t = _p(ctx, params, "t")
            return t / (x * z) + _p(ctx, params, "alpha") + _p(ctx, params, "beta")
        if label == "shifted_jacobi_power":
            a, b = _p(ctx, params, "alpha"), _p(ctx, params, "beta")
            g, t = _p(ctx, params, "gamma"), _p(ctx, params, "t")
            return a + b + g + g * t * (1 - t) / ((z - t) * (x - t))
    except ZeroDivisionError as e:
        raise SingularPoint(f"{label}: (z, x) がカーネルの極") from e
    raise FamilyMismatch(f"カーネルが未登録の系統: {label}")


# ================================================================
# A_n, B_n の部分分数形
# ================================================================
def partial_fraction_pair(label: str, params: dict, aux: dict, tab, n: int, z, ctx=None):
    """補助量 aux と漸化式表 tab から例の閉形式 (A_n(z), B_n(z)) を返す"""
    ctx = _ctx(ctx)
    z = ctx.convert(z)
    p = tab.p1[n]
    if label == "laguerre_classical":
        return 1 / z, -n / z
    if label in ("chen_mckay", "laguerre_multi_shift"):
        if label == "chen_mckay":
            Rk, rk = [aux["Rn"]], [aux["rn"]]
            ts = [_p(ctx, params, "t")]
        else:
            Rk, rk = aux["Rnk"], aux["rnk"]
            ts = [lift(ctx, exact(t)) for t, _ in params["shifts"]]
        A = (1 - ctx.fsum(Rk)) / z + ctx.fsum(R / (z + t) for R, t in zip(Rk, ts))
        B = -(n + ctx.fsum(rk)) / z + ctx.fsum(r / (z + t) for r, t in zip(rk, ts))
        return A, B
    if label == "laguerre_fh":
        t = _p(ctx, params, "t")
        R, r = aux["Rn"], aux["rn"]
        return (1 - R) / z + R / (z - t), -(n + r) / z + r / (z - t)
    if label in ("chen_its", "laguerre_jump_exp_inv_x", "laguerre_jump", "laguerre_two_jump"):
        A, B = 1 / z, -n / z
        if label in ("chen_its", "laguerre_jump_exp_inv_x"):
            s = _p(ctx, params, "s")
            A += s * aux["Rn"] / z ** 2
            B += s * aux["rn"] / z ** 2
        if label != "chen_its":
            ts = [lift(ctx, exact(t)) for t, _ in _points(params)]
            A += ctx.fsum(R * t / (z * (z - t)) for R, t in zip(aux["Rnk"], ts))
            B += ctx.fsum(r * t / (z * (z - t)) for r, t in zip(aux["rnk"], ts))
        return A, B
    if label in ("jacobi_classical", "jacobi_jump"):
        a, b = _p(ctx, params, "alpha"), _p(ctx, params, "beta")
        A = 2 * n + 1 + a + b
        B = n * z - p
        if label == "jacobi_jump":
            ts = [lift(ctx, exact(t)) for t, _ in _points(params)]
            A += ctx.fsum(R * (1 - t * t) / (z - t) for R, t in zip(aux["Rnk"], ts))
            B += ctx.fsum(r * (1 - t * t) / (z - t) for r, t in zip(aux["rnk"], ts))
        return A / (1 - z * z), B / (1 - z * z)
    if label == "jacobi_fh":
        a, b = _p(ctx, params, "alpha"), _p(ctx, params, "beta")
        g, t = _p(ctx, params, "gamma"), _p(ctx, params, "t")
        R, r = aux["Rn"], aux["rn"]
        s = 1 - z * z
        A = (2 * n + 1 + a + b + g + (z + t) * R) / s + R / (z - t)
        B = (n * z - p + (z + t) * r) / s + r / (z - t)
        return A, B
    if label == "jacobi_exp_linear":
        t = _p(ctx, params, "t")
        R, r = aux["Rn"], aux["rn"]
        return R / (1 - z) + (R + t) / (1 + z), r / (1 - z) + (r - n) / (1 + z)
    if label == "jacobi_symmetric_exp_quad":
        t = _p(ctx, params, "t")
        return 2 * t + aux["Rn"] / (1 - z * z), z * aux["rn"] / (1 - z * z)
    if label == "jacobi_symmetric_k2":
        a, g = _p(ctx, params, "alpha"), _p(ctx, params, "gamma")
        ik = 1 / ctx.sqrt(_p(ctx, params, "k2"))
        R, r = aux["Rn_star"], aux["rn_star"]
        A = (2 * (n + a + g) + 1 - 2 * ik * R) / (1 - z * z) - 2 * ik * R / (z * z - ik * ik)
        B = z * (n + 2 * r) / (1 - z * z) + 2 * z * r / (z * z - ik * ik)
        return A, B
    if label == "jacobi_symmetric_exp_inv_x2":
        a = _p(ctx, params, "alpha")
        R, r1, r3 = aux["Rn"], aux["rn1"], aux["rn3"]
        A = (2 * n + 1 + 2 * a + R) / (1 - z * z) + R / z ** 2
        B = z * (n + r3) / (1 - z * z) + r1 / z ** 3 + r3 / z
        return A, B
    if label == "jacobi_symmetric_exp_inv_one_minus_x2":
        a = _p(ctx, params, "alpha")
        R, r = aux["Rn"], aux["rn"]
        s = 1 - z * z
        A = (2 * n + 1 + 2 * a + R) / s + R * (1 + z * z) / s ** 2
        B = n * z / s + 2 * r * z / s ** 2
        return A, B
    if label in ("shifted_jacobi_classical", "shifted_jacobi_jump"):
        a, b = _p(ctx, params, "alpha"), _p(ctx, params, "beta")
        A = 2 * n + 1 + a + b
        B = n * (z - 1) - p
        if label == "shifted_jacobi_jump":
            ts = [lift(ctx, exact(t)) for t, _ in _points(params)]
            A += ctx.fsum(R * (t - t * t) / (z - t) for R, t in zip(aux["Rnk"], ts))
            B += ctx.fsum(r * (t - t * t) / (z - t) for r, t in zip(aux["rnk"], ts))
        return A / (z - z * z), B / (z - z * z)
    if label == "pollaczek_jacobi":
        a, b = _p(ctx, params, "alpha"), _p(ctx, params, "beta")
        R, r = aux["Rn_star"], aux["rn_star"]
        kappa = 2 * n + 1 + a + b
        A = R / z ** 2 + (kappa + R) / (z * (1 - z))
        B = r / z ** 2 + (r - p - n) / z + (r - p) / (1 - z)
        return A, B
    if label == "shifted_jacobi_power":
        a, b = _p(ctx, params, "alpha"), _p(ctx, params, "beta")
        g, t = _p(ctx, params, "gamma"), _p(ctx, params, "t")
        s = z - z * z
        A = (2 * n + 1 + a + b + g + t * (1 - t) * aux["an"] / (z - t)) / s
        B = (n * z - n - p + t * (1 - t) * aux["bn"] / (z - t)) / s
        return A, B
    if label == "shifted_jacobi_fh":
        a, b = _p(ctx, params, "alpha"), _p(ctx, params, "beta")
        g, t = _p(ctx, params, "gamma"), _p(ctx, params, "t")
        u, v = aux["un"], aux["vn"]
        s = z - z * z
        A = (2 * n + 1 + a + b + g + (z + t - 1) * u) / s + u / (z - t)
        B = (n * z - n - p + (z + t - 1) * v) / s + v / (z - t)
        return A, B
    raise FamilyMismatch(f"部分分数形が未登録の系統: {label}")


def _points(params: dict) -> list:
    if "points" in params:
        return list(params["points"])
    return [(params["t1"], 1), (params["t2"], -1)]
