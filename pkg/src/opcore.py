"""
直交多項式コア — モーメント・漸化式係数・ノルム・Hankel 行列式・CD 核

■ 本番経路は Stieltjes の内積再帰（ノード上の P_j 値を更新していく）
■ モーメント行列式による表はオラクル専用（n ≲ 10）
■ h_j ≤ 0 / β_j ≤ 0 は精度不足とみなし、倍精度で 1 回だけ再試行
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .config import config
from .errors import BadNodeCount, DegreeOutOfRange, PrecisionExhausted
from .precision import Precision, context, exact, lift
from .quadrature import NO_SHIFT, ExponentShift, RuleSet, build_rules, integrate, integrate_values
from .weights import WeightSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MomentVector:
    weight: WeightSpec
    mu: tuple            # mu[j] = ∫ x^j w
    err: tuple           # (m/2, m) 差による推定誤差
    bits: int

    @property
    def j_max(self) -> int:
        return len(self.mu) - 1


@dataclass(frozen=True, eq=False)
class RecurrenceTable:
    """α_0..α_{N−1}, β_0(=0)..β_{N−1}, h_0..h_{N−1}, 𝐩(0)..𝐩(N)"""
    weight: WeightSpec
    alpha: tuple
    beta: tuple
    h: tuple
    p1: tuple
    bits: int
    nodes: int
    trunc: Fraction = Fraction(0)
    source: str = "stieltjes"
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def N(self) -> int:
        return len(self.alpha)

    @property
    def ctx(self):
        return context(self.bits)

    def perturbed(self, index: int, delta) -> "RecurrenceTable":
        """β_index に delta を足した表（感度カナリア用）。h はそのまま"""
        if not 1 <= index < self.N:
            raise DegreeOutOfRange(f"摂動位置 {index} が範囲外 (1..{self.N - 1})")
        beta = list(self.beta)
        beta[index] = beta[index] + lift(self.ctx, exact(delta))
        return replace(self, beta=tuple(beta), source=f"{self.source}+perturbed", _memo={})


# ================================================================
# 求積則とノード値
# ================================================================
def table_rules(tab: RecurrenceTable, shift: ExponentShift = NO_SHIFT, m: int = 0) -> RuleSet:
    """表と同じ精度・ノード数・打ち切りの求積則"""
    return build_rules(tab.weight, m or tab.nodes, tab.trunc, degree=2 * tab.N,
                       bits=tab.bits, shift=shift)


def node_values(tab: RecurrenceTable, rules: RuleSet) -> tuple:
    """ノード上の P_0..P_N の値 values[j][i]（表ごとにキャッシュ）"""
    key = ("nodes", id(rules))
    hit = tab._memo.get(key)
    if hit is not None and hit[0] is rules:
        return hit[1]
    xs = rules.nodes
    ctx = tab.ctx
    prev = [ctx.zero] * len(xs)
    cur = [ctx.one] * len(xs)
    out = [tuple(cur)]
    for j in range(tab.N):
        a, b = tab.alpha[j], tab.beta[j]
        nxt = [(x - a) * c - b * p for x, c, p in zip(xs, cur, prev)]
        prev, cur = cur, nxt
        out.append(tuple(cur))
    values = tuple(out)
    tab._memo[key] = (rules, values)
    return values


# ================================================================
# モーメント
# ================================================================
def moments(w: WeightSpec, j_max: int, prec: Precision | None = None) -> MomentVector:
    if j_max < 0:
        raise DegreeOutOfRange(f"j_max は 0 以上: {j_max}")
    prec = prec or Precision.from_config()
    ctx = prec.ctx
    fine = build_rules(w, prec.nodes, prec.trunc, degree=j_max, bits=prec.bits)
    coarse = build_rules(w, max(prec.nodes // 2, 2), prec.trunc, degree=j_max, bits=prec.bits)
    mu, err = [], []
    for j in range(j_max + 1):
        v = integrate(fine, lambda x, j=j: x ** j)
        mu.append(v)
        err.append(abs(v - integrate(coarse, lambda x, j=j: x ** j)))
    if not mu[0] > 0:
        raise PrecisionExhausted(f"mu[0] = {ctx.nstr(mu[0], 8)} ≤ 0")
    return MomentVector(w, tuple(mu), tuple(err), prec.bits)


# ================================================================
# 漸化式係数
# ================================================================
def _stieltjes(w: WeightSpec, N: int, prec: Precision) -> RecurrenceTable:
    if prec.nodes < 2 * N + 8:
        raise BadNodeCount(f"区間あたりノード数 {prec.nodes} < 2N+8 = {2 * N + 8}")
    ctx = prec.ctx
    rules = build_rules(w, prec.nodes, prec.trunc, degree=2 * N, bits=prec.bits)
    xs, ws = rules.nodes, rules.weights
    prev = [ctx.zero] * len(xs)
    cur = [ctx.one] * len(xs)
    alpha, beta, h = [], [], []
    for j in range(N):
        sq = [c * c for c in cur]
        hj = ctx.fdot(ws, sq)
        if not hj > 0:
            raise PrecisionExhausted(f"h_{j} ≤ 0 ({ctx.nstr(hj, 5)})", n=j)
        aj = ctx.fdot(ws, [x * s for x, s in zip(xs, sq)]) / hj
        bj = ctx.zero if j == 0 else hj / h[-1]
        if j > 0 and not bj > 0:
            raise PrecisionExhausted(f"β_{j} ≤ 0", n=j)
        alpha.append(aj)
        beta.append(bj)
        h.append(hj)
        nxt = [(x - aj) * c - bj * p for x, c, p in zip(xs, cur, prev)]
        prev, cur = cur, nxt
    p1 = [ctx.zero]
    for a in alpha:
        p1.append(p1[-1] - a)
    tab = RecurrenceTable(w, tuple(alpha), tuple(beta), tuple(h), tuple(p1),
                          prec.bits, prec.nodes, prec.trunc)
    logger.info(f"漸化式表を構築: {w} N={N} bits={prec.bits} nodes={prec.nodes}")
    return tab


def recurrence_stieltjes(w: WeightSpec, N: int, prec: Precision | None = None) -> RecurrenceTable:
    if N < 1:
        raise DegreeOutOfRange(f"N は 1 以上: {N}")
    prec = prec or Precision.from_config()
    try:
        return _stieltjes(w, N, prec)
    except PrecisionExhausted as e:
        if not config.retry_on_precision_loss:
            raise
        logger.warning(f"⚠️ 精度不足 ({e})、{prec.bits * 2} bit で再試行")
        return _stieltjes(w, N, prec.doubled())


def _hankel_det(ctx, mu, n: int, cols=None):
    if n == 0:
        return ctx.one
    cols = cols if cols is not None else range(n)
    return ctx.det(ctx.matrix([[mu[i + c] for c in cols] for i in range(n)]))


def recurrence_moment_oracle(mv: MomentVector, N: int) -> RecurrenceTable:
    """D_n = det(mu_{i+j}) と縁付き行列式による独立な表"""
    if mv.j_max < 2 * N:
        raise DegreeOutOfRange(f"モーメントが不足: j_max={mv.j_max} < 2N={2 * N}")
    ctx = context(mv.bits)
    mu = mv.mu
    D = [_hankel_det(ctx, mu, n) for n in range(N + 1)]
    for n, d in enumerate(D):
        if not d > 0:
            raise PrecisionExhausted(f"Hankel 行列式 D_{n} ≤ 0", n=n)
    h = [D[n + 1] / D[n] for n in range(N)]
    p1 = [ctx.zero]
    for n in range(1, N + 1):
        cols = list(range(n - 1)) + [n]
        p1.append(-_hankel_det(ctx, mu, n, cols) / D[n])
    alpha = [p1[n] - p1[n + 1] for n in range(N)]
    beta = [ctx.zero] + [h[n] / h[n - 1] for n in range(1, N)]
    return RecurrenceTable(mv.weight, tuple(alpha), tuple(beta), tuple(h), tuple(p1),
                           mv.bits, 0, source="moments")


# ================================================================
# 評価
# ================================================================
def _check_degree(tab: RecurrenceTable, n: int):
    if not 0 <= n <= tab.N:
        raise DegreeOutOfRange(f"次数 {n} が表の範囲外 (0..{tab.N})", n=n)


def eval_all(tab: RecurrenceTable, n: int, x) -> list:
    """P_0(x)..P_n(x)"""
    _check_degree(tab, n)
    ctx = tab.ctx
    x = lift(ctx, x)
    out = [ctx.one]
    prev = ctx.zero
    for j in range(n):
        nxt = (x - tab.alpha[j]) * out[-1] - tab.beta[j] * prev
        prev = out[-1]
        out.append(nxt)
    return out


def eval_monic(tab: RecurrenceTable, n: int, x):
    """(P_n(x), P_n′(x)) を同時前進漸化式で"""
    _check_degree(tab, n)
    ctx = tab.ctx
    x = lift(ctx, x)
    p_prev, p = ctx.zero, ctx.one
    d_prev, d = ctx.zero, ctx.zero
    for j in range(n):
        a, b = tab.alpha[j], tab.beta[j]
        p_next = (x - a) * p - b * p_prev
        d_next = p + (x - a) * d - b * d_prev
        p_prev, p = p, p_next
        d_prev, d = d, d_next
    return p, d


def sub_leading(tab: RecurrenceTable, n: int):
    """P_n = x^n + 𝐩(n)x^{n−1} + q(n)x^{n−2} + … の (𝐩(n), q(n))"""
    _check_degree(tab, n)
    ctx = tab.ctx
    p, q = ctx.zero, ctx.zero
    for j in range(n):
        p, q = p - tab.alpha[j], q - tab.alpha[j] * p - tab.beta[j]
    return p, q


def hankel_dets(tab: RecurrenceTable) -> list:
    """D_1..D_N"""
    out = []
    d = tab.ctx.one
    for hj in tab.h:
        d *= hj
        out.append(d)
    return out


def cd_kernel(tab: RecurrenceTable, n: int, x, y, form: str = "closed"):
    """Σ_{j<n} P_j(x)P_j(y)/h_j（form="sum"）か Christoffel–Darboux の右辺"""
    if n < 1:
        raise DegreeOutOfRange(f"CD 核は n ≥ 1: {n}")
    _check_degree(tab, n)
    ctx = tab.ctx
    x, y = lift(ctx, x), lift(ctx, y)
    if form == "sum":
        px, py = eval_all(tab, n - 1, x), eval_all(tab, n - 1, y)
        return ctx.fsum(a * b / hj for a, b, hj in zip(px, py, tab.h))
    pnx, dnx = eval_monic(tab, n, x)
    pmx, dmx = eval_monic(tab, n - 1, x)
    if x == y:
        return (dnx * pmx - dmx * pnx) / tab.h[n - 1]
    pny, _ = eval_monic(tab, n, y)
    pmy, _ = eval_monic(tab, n - 1, y)
    return (pnx * pmy - pmx * pny) / (tab.h[n - 1] * (x - y))


def orthogonality_residual(tab: RecurrenceTable, rules: RuleSet | None = None):
    """max_{i<j} |∫P_iP_j w| / √(h_i h_j) と位置 (i, j)"""
    rules = rules or table_rules(tab)
    ctx = tab.ctx
    vals = node_values(tab, rules)
    worst, at = ctx.zero, (0, 0)
    for j in range(tab.N):
        for i in range(j):
            s = ctx.fdot(rules.weights, [a * b for a, b in zip(vals[i], vals[j])])
            r = abs(s) / ctx.sqrt(tab.h[i] * tab.h[j])
            if r > worst:
                worst, at = r, (i, j)
    return worst, at


# ================================================================
# 表に対する積分
# ================================================================
def node_derivatives(tab: RecurrenceTable, rules: RuleSet) -> tuple:
    """ノード上の P_0′..P_N′"""
    key = ("derivs", id(rules))
    hit = tab._memo.get(key)
    if hit is not None and hit[0] is rules:
        return hit[1]
    vals = node_values(tab, rules)
    ctx = tab.ctx
    xs = rules.nodes
    prev = [ctx.zero] * len(xs)
    cur = [ctx.zero] * len(xs)
    out = [tuple(cur)]
    for j in range(tab.N):
        a, b = tab.alpha[j], tab.beta[j]
        nxt = [p + (x - a) * d - b * dp for x, p, d, dp in zip(xs, vals[j], cur, prev)]
        prev, cur = cur, nxt
        out.append(tuple(cur))
    values = tuple(out)
    tab._memo[key] = (rules, values)
    return values


def inner(tab: RecurrenceTable, i: int, j: int, g=None, shift: ExponentShift = NO_SHIFT):
    """∫ P_i P_j g w（shift はシフト測度 w·Π|x−p|^shift）"""
    _check_degree(tab, max(i, j))
    rules = table_rules(tab, shift)
    vals = node_values(tab, rules)
    if g is None:
        prods = [a * b for a, b in zip(vals[i], vals[j])]
    else:
        prods = [a * b * g(x) for x, a, b in zip(rules.nodes, vals[i], vals[j])]
    return integrate_values(rules, prods)
