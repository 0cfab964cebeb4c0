"""
Riemann–Hilbert 行列 Y(z) と R(z) = Y′Y⁻¹

■ Y = [[P_n, C(P_nw)/(2πi)], [−2πiP_{n−1}/h_{n−1}, −C(P_{n−1}w)/h_{n−1}]]
■ det Y ≡ 1、Cauchy 変換の交換則、R 要素の積分公式、R からの ladder 再構成
■ 境界値 Y± の跳び（Plemelj）はスモーク扱い
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

from .errors import DegreeOutOfRange, EvaluationFailure, LadderOpsError
from .ladder import check_table, counting_terms, ladder_sweep, node_F
from .opcore import (
    RecurrenceTable,
    eval_all,
    eval_monic,
    node_derivatives,
    node_values,
    table_rules,
)
from .precision import context, lift
from .quadrature import integrate_values
from .weights import WeightSpec, check_z, eval_weight, sigma

logger = logging.getLogger(__name__)

# 境界値の数値積分は低精度で十分
PLEMELJ_BITS = 96


@dataclass(frozen=True)
class RhpFrame:
    z: object
    n: int
    Y: tuple
    Yprime: tuple
    R: tuple
    dety: object

    @property
    def dety_residual(self):
        return abs(self.dety - 1)

    @property
    def trace_residual(self):
        (a, _), (_, d) = self.R
        scale = max(abs(a), abs(d))
        return abs(a + d) / scale if scale else abs(a + d)


# ================================================================
# Cauchy 変換
# ================================================================
def _prepare(w: WeightSpec, tab: RecurrenceTable, z):
    check_table(w, tab)
    ctx = tab.ctx
    z = lift(ctx, z)
    check_z(w, z, ctx)
    rules = table_rules(tab)
    return ctx, z, rules


def _cauchy_sum(rules, z, values, power: int):
    if power == 1:
        return integrate_values(rules, [v / (x - z) for x, v in zip(rules.nodes, values)])
    return integrate_values(rules, [v / (x - z) ** power for x, v in zip(rules.nodes, values)])


def cauchy_product(w: WeightSpec, tab: RecurrenceTable, i: int, j: int, z, power: int = 1):
    """∫ P_i P_j w / (x−z)^power"""
    if max(i, j) > tab.N:
        raise DegreeOutOfRange(f"次数 {max(i, j)} > N={tab.N}")
    ctx, z, rules = _prepare(w, tab, z)
    vals = node_values(tab, rules)
    return _cauchy_sum(rules, z, [a * b for a, b in zip(vals[i], vals[j])], power)


def cauchy(w: WeightSpec, tab: RecurrenceTable, k: int, z, differentiated: bool = False):
    """C(P_k w)(z)。differentiated なら C(P_k w)′(z) = ∫P_k w/(x−z)²"""
    if not 0 <= k <= tab.N:
        raise DegreeOutOfRange(f"次数 {k} が表の範囲外 (0..{tab.N})", n=k)
    ctx, z, rules = _prepare(w, tab, z)
    vals = node_values(tab, rules)
    return _cauchy_sum(rules, z, vals[k], 2 if differentiated else 1)


def cauchy_commutes_residual(w: WeightSpec, tab: RecurrenceTable, m: int, n: int, z, q: str = "monic"):
    """Q_m(z)C(P_nw) − C(Q_mP_nw) の正規化残差。q は "monic"（P_m）か "monomial"（x^m）

    m ≤ n で恒等的に 0。m = n+1 の単項式では h_n が残る。
    """
    if q not in ("monic", "monomial"):
        raise LadderOpsError(f"q は monic / monomial: {q}")
    if m < 0 or n < 0 or n > tab.N or m > tab.N:
        raise DegreeOutOfRange(f"(m, n) = ({m}, {n}) が表の範囲外", n=n)
    ctx, z, rules = _prepare(w, tab, z)
    vals = node_values(tab, rules)
    if q == "monic":
        qz = eval_all(tab, m, z)[m]
        qx = vals[m]
    else:
        qz = z ** m
        qx = [x ** m for x in rules.nodes]
    lhs = qz * _cauchy_sum(rules, z, vals[n], 1)
    rhs = _cauchy_sum(rules, z, [a * b for a, b in zip(qx, vals[n])], 1)
    scale = max(abs(lhs), abs(rhs))
    return abs(lhs - rhs) / scale if scale else abs(lhs - rhs)


# ================================================================
# Y, Y′, R
# ================================================================
def _matmul(a, b):
    return tuple(
        tuple(a[i][0] * b[0][j] + a[i][1] * b[1][j] for j in range(2))
        for i in range(2)
    )


def y_frame(w: WeightSpec, tab: RecurrenceTable, n: int, z) -> RhpFrame:
    if n < 1 or n > tab.N - 1:
        raise DegreeOutOfRange(f"Y は 1 ≤ n ≤ {tab.N - 1}", n=n)
    ctx, z, rules = _prepare(w, tab, z)
    vals = node_values(tab, rules)
    tpi = 2 * ctx.pi * ctx.j
    hm = tab.h[n - 1]

    pn, dn = eval_monic(tab, n, z)
    pm, dm = eval_monic(tab, n - 1, z)
    cn = _cauchy_sum(rules, z, vals[n], 1)
    cm = _cauchy_sum(rules, z, vals[n - 1], 1)
    cn2 = _cauchy_sum(rules, z, vals[n], 2)
    cm2 = _cauchy_sum(rules, z, vals[n - 1], 2)

    Y = ((pn, cn / tpi), (-tpi * pm / hm, -cm / hm))
    Yp = ((dn, cn2 / tpi), (-tpi * dm / hm, -cm2 / hm))
    det = Y[0][0] * Y[1][1] - Y[0][1] * Y[1][0]
    # 単位行列式を仮定した随伴行列
    Yinv = ((Y[1][1], -Y[0][1]), (-Y[1][0], Y[0][0]))
    R = _matmul(Yp, Yinv)
    logger.debug(f"Y 行列 n={n} z={ctx.nstr(z, 6)}: |det−1|={ctx.nstr(abs(det - 1), 3)}")
    return RhpFrame(z, n, Y, Yp, R, det)


def _corrections(w: WeightSpec, pair, s):
    """ジャンプ・FH 補正の括弧内の値（= σ(z)·(前因子後の補正項)）"""
    pa, pb = pair.parts_A, pair.parts_B
    ja = s * (sum(pa.jump_residues, 0 * s) + pa.fh_term)
    jb = s * (sum(pb.jump_residues, 0 * s) + pb.fh_term)
    return ja, jb


def r_closed(w: WeightSpec, tab: RecurrenceTable, n: int, z) -> tuple:
    """σ(z) 形の積分公式による R の各要素

    R11 = −(1/σ)[(1/h_{n−1})∫F P_nP_{n−1}w/(x−z) + c_B + 補正]
    R12 = −(1/(2πiσ))[∫F P_n²w/(x−z) + h_n(c_A(n) + 補正)]
    R21 = (2πi/(h_{n−1}²σ))[∫F P_{n−1}²w/(x−z) + h_{n−1}(c_A(n−1) + 補正)]
    """
    if n < 1 or n > tab.N - 1:
        raise DegreeOutOfRange(f"R は 1 ≤ n ≤ {tab.N - 1}", n=n)
    ctx, z, rules = _prepare(w, tab, z)
    vals = node_values(tab, rules)
    Fx = node_F(tab, rules)
    tpi = 2 * ctx.pi * ctx.j
    s = sigma(w, z)
    hn, hm = tab.h[n], tab.h[n - 1]

    def fc(i, j):
        return _cauchy_sum(rules, z, [f * a * b for f, a, b in zip(Fx, vals[i], vals[j])], 1)

    pairs = ladder_sweep(w, tab, z, n)
    ja_n, jb_n = _corrections(w, pairs[n], s)
    ja_m, _ = _corrections(w, pairs[n - 1], s)
    ca_n, cb_n = counting_terms(w, tab, n, z)
    ca_m, _ = counting_terms(w, tab, n - 1, z)

    r11 = -(fc(n, n - 1) / hm + cb_n + jb_n) / s
    r12 = -(fc(n, n) + hn * (ca_n + ja_n)) / (tpi * s)
    r21 = tpi * (fc(n - 1, n - 1) + hm * (ca_m + ja_m)) / (hm * hm * s)
    return ((r11, r12), (r21, -r11))


def _rel(ctx, a, b):
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else abs(a - b)


def r_elements_residual(w: WeightSpec, tab: RecurrenceTable, n: int, z) -> tuple:
    """y_frame の R と積分公式の要素ごとの正規化差（2×2）"""
    try:
        frame = y_frame(w, tab, n, z)
        closed = r_closed(w, tab, n, z)
    except LadderOpsError as e:
        raise e.with_context(n=n)
    ctx = tab.ctx
    return tuple(
        tuple(_rel(ctx, frame.R[i][j], closed[i][j]) for j in range(2))
        for i in range(2)
    )


def ladder_from_r_residual(frame: RhpFrame, tab: RecurrenceTable, n: int | None = None):
    """P_n′ = R11P_n − (2πi/h_{n−1})R12P_{n−1}, P_{n−1}′ = −(h_{n−1}/2πi)R21P_n + R22P_{n−1}"""
    n = frame.n if n is None else n
    if n != frame.n:
        raise DegreeOutOfRange(f"frame の n={frame.n} と {n} が違う", n=n)
    ctx = tab.ctx
    z = frame.z
    tpi = 2 * ctx.pi * ctx.j
    hm = tab.h[n - 1]
    (r11, r12), (r21, r22) = frame.R
    pn, dn = eval_monic(tab, n, z)
    pm, dm = eval_monic(tab, n - 1, z)
    t1, t2 = r11 * pn, tpi * r12 * pm / hm
    low = abs(dn - t1 + t2) / max(abs(dn), abs(t1), abs(t2))
    u1, u2 = hm * r21 * pn / tpi, r22 * pm
    rai = abs(dm + u1 - u2) / max(abs(dm), abs(u1), abs(u2))
    return max(low, rai)


def cauchy_derivative_residual(w: WeightSpec, tab: RecurrenceTable, n: int, z) -> dict:
    """C(P_{n−1}P_nw)′ と C(P_n²w)′ の展開式の残差"""
    if n < 1 or n > tab.N - 1:
        raise DegreeOutOfRange(f"1 ≤ n ≤ {tab.N - 1}", n=n)
    ctx, z, rules = _prepare(w, tab, z)
    vals = node_values(tab, rules)
    ders = node_derivatives(tab, rules)
    Fx = node_F(tab, rules)
    s = sigma(w, z)
    hn, hm = tab.h[n], tab.h[n - 1]
    pairs = ladder_sweep(w, tab, z, n)
    ja, jb = _corrections(w, pairs[n], s)
    ca, cb = counting_terms(w, tab, n, z)

    def cs(values, power=1):
        return _cauchy_sum(rules, z, values, power)

    lhs = cs([a * b for a, b in zip(vals[n - 1], vals[n])], 2)
    t1 = cs([a * b for a, b in zip(ders[n - 1], vals[n])])
    t2 = cs([a * b for a, b in zip(vals[n - 1], ders[n])])
    t3 = (cs([f * a * b for f, a, b in zip(Fx, vals[n - 1], vals[n])]) + hm * (cb + jb)) / s
    pair = abs(lhs - t1 - t2 + t3) / max(abs(lhs), abs(t1), abs(t2), abs(t3))

    lhs = cs([a * a for a in vals[n]], 2)
    u1 = 2 * cs([a * b for a, b in zip(ders[n], vals[n])])
    u2 = (cs([f * a * a for f, a in zip(Fx, vals[n])]) + hn * (ca + ja)) / s
    square = abs(lhs - u1 + u2) / max(abs(lhs), abs(u1), abs(u2))
    return {"pair": pair, "square": square}


# ================================================================
# 境界値の跳び（スモーク）
# ================================================================
def _plemelj_points(w: WeightSpec, qctx, x, eps):
    lo, hi = w.support
    lo = qctx.mpf(lo.numerator) / lo.denominator
    top = qctx.inf if hi is None else qctx.mpf(hi.numerator) / hi.denominator
    pts = {lo, x}
    for k in range(9):
        d = eps * 10 ** k
        for p in (x - d, x + d):
            if lo < p < top:
                pts.add(p)
    for j in w.jumps:
        pts.add(qctx.mpf(j.t.numerator) / j.t.denominator)
    if w.fh is not None:
        pts.add(qctx.mpf(w.fh.t.numerator) / w.fh.t.denominator)
    out = sorted(p for p in pts if lo <= p < top)
    out.append(top)
    return out


def jump_residual(w: WeightSpec, tab: RecurrenceTable, n: int, x, eps=1e-8):
    """Y₊ = Y₋·[[1, w],[0, 1]] の第 2 列を x ± iε で確かめる

    C₊ − C₋ = ∫ f(s)·2iε/((s−x)²+ε²) ds → 2πi f(x)。第 1 列は多項式なので跳びなし。
    """
    check_table(w, tab)
    if n < 1 or n > tab.N - 1:
        raise DegreeOutOfRange(f"1 ≤ n ≤ {tab.N - 1}", n=n)
    qctx = context(min(PLEMELJ_BITS, tab.bits))
    x = qctx.convert(x)
    eps = qctx.convert(eps)
    wx = eval_weight(w, x, qctx)
    pts = _plemelj_points(w, qctx, x, eps)

    def f(k):
        def g(s):
            p = qctx.convert(eval_all(tab, k, s)[k])
            return p * eval_weight(w, s, qctx) * 2 * eps / ((s - x) ** 2 + eps ** 2)
        return g

    worst = qctx.zero
    for k in (n, n - 1):
        approx = qctx.quad(f(k), pts) / (2 * qctx.pi)
        target = qctx.convert(eval_all(tab, k, x)[k]) * wx
        if not qctx.isfinite(approx):
            raise EvaluationFailure(f"境界値の積分が有限でない (k={k})", n=n)
        scale = max(abs(approx), abs(target))
        r = abs(approx - target) / scale if scale else abs(approx - target)
        worst = max(worst, r)
    logger.debug(f"Plemelj スモーク n={n} x={qctx.nstr(x, 6)}: {qctx.nstr(worst, 3)}")
    return worst
