"""
求積 — 端点特異性を吸収した複合 Gauss–Jacobi 則

■ 各区間 [lo, hi] で (x−lo)^L (hi−x)^R を吸収した Gauss 則を使う
  （L, R は区間端にある特異因子の指数。無ければ 0 = Gauss–Legendre）
■ 参照則は Jacobi 行列の固有分解（Golub–Welsch）で作る
■ 分割点: 台の端・基本メッシュ・ジャンプ点・FH 点・本質的特異点への段階分割
■ Laguerre の無限区間は X_max で打ち切り、16 以降は倍々に区切る
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .closedforms import jacobi_monic_recurrence
from .config import config
from .errors import BadNodeCount, EvaluationFailure, ExponentOutOfRange
from .precision import context, lift
from .weights import AtomKind, Family, WeightSpec, atoms_product

logger = logging.getLogger(__name__)

GUARD_BITS = 24


@dataclass(frozen=True)
class ExponentShift:
    """測度 w·Π|x−p|^shift 用の指数シフト（−1 で 1/(x−p) を吸収）"""
    left: int = 0
    right: int = 0
    fh: int = 0

    def of(self, key: str) -> int:
        return getattr(self, key)


NO_SHIFT = ExponentShift()


@dataclass(frozen=True)
class QuadRule:
    nodes: tuple
    weights: tuple                       # 写像スケール・残差重みを含む（> 0）
    segment: tuple[Fraction, Fraction]
    absorbed_exponents: tuple[Fraction, Fraction]
    step: Fraction                       # 区間上で一定のステップ因子 × FH の A+Bθ


@dataclass(frozen=True, eq=False)
class RuleSet:
    """区間則の列（昇順）。平坦化したノード・重みも保持"""
    rules: tuple[QuadRule, ...]
    bits: int
    nodes: tuple = field(repr=False, default=())
    weights: tuple = field(repr=False, default=())

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def __getitem__(self, i):
        return self.rules[i]

    @property
    def ctx(self):
        return context(self.bits)


# ================================================================
# 参照 Gauss–Jacobi 則（[−1,1], (1−y)^a (1+y)^b）
# ================================================================
def _tridiagonal_eigen(ctx, diag: list, off: list) -> tuple[list, list]:
    """対称三重対角行列の陰的 QL 法。固有値と固有ベクトルの第 1 成分を返す"""
    n = len(diag)
    d = list(diag)
    e = list(off) + [ctx.zero]
    z = [ctx.zero] * n
    z[0] = ctx.one
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) + dd == dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > 60:
                raise EvaluationFailure(f"QL 反復が収束しない (l={l})")
            g = (d[l + 1] - d[l]) / (2 * e[l])
            r = ctx.hypot(g, 1)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0 else -r))
            s = c = ctx.one
            p = ctx.zero
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = ctx.hypot(f, g)
                e[i + 1] = r
                if r == 0:
                    d[i + 1] -= p
                    e[m] = ctx.zero
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                f = z[i + 1]
                z[i + 1] = s * z[i] + c * f
                z[i] = c * z[i] - s * f
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = ctx.zero
    return d, z


@lru_cache(maxsize=256)
def gauss_jacobi(a: Fraction, b: Fraction, m: int, bits: int) -> tuple[tuple, tuple]:
    """(1−y)^a (1+y)^b に対する m 点 Gauss 則（昇順）"""
    if m < 2:
        raise BadNodeCount(f"ノード数は 2 以上が必要: {m}")
    if a <= -1 or b <= -1:
        raise ExponentOutOfRange(f"吸収指数が −1 以下: a={float(a):g}, b={float(b):g}")
    work = context(bits + GUARD_BITS)
    alpha, beta, mu0 = jacobi_monic_recurrence(work, a, b, m)
    off = [work.sqrt(beta[k]) for k in range(1, m)]
    nodes, first = _tridiagonal_eigen(work, alpha, off)
    pairs = sorted(zip(nodes, first), key=lambda p: p[0])
    ctx = context(bits)
    xs = tuple(ctx.mpf(x) for x, _ in pairs)
    ws = tuple(ctx.mpf(mu0 * v * v) for _, v in pairs)
    logger.debug(f"Gauss–Jacobi 則を構築: a={float(a):g}, b={float(b):g}, m={m}, bits={bits}")
    return xs, ws


# ================================================================
# 区間分割
# ================================================================
def laguerre_cutoff(w: WeightSpec, degree: int, bits: int) -> Fraction:
    """裾の寄与 e^{−cX−qX²}·X^e が 2^{−bits}/100 を下回る打ち切り点"""
    c = sum((a.p("c") for a in w.atoms if a.kind is AtomKind.EXP_LINEAR), Fraction(0))
    q = sum((a.p("t") for a in w.atoms if a.kind is AtomKind.EXP_QUAD), Fraction(0))
    growth = degree + w.exponents[0]
    growth += sum((max(a.p("gamma"), 0) for a in w.atoms if a.kind is AtomKind.POWER_SHIFT), Fraction(0))
    points = [a.p("c") for a in w.atoms if a.kind is AtomKind.POWER_SHIFT]
    points += [j.t for j in w.jumps]
    if w.fh is not None:
        growth += w.fh.gamma
        points.append(w.fh.t)
    scale = max([Fraction(0)] + [abs(p) for p in points])
    target = -(bits * math.log(2) + math.log(100))
    x = max(64.0, 8.0 * float(degree / 2 + w.exponents[0] + scale))
    c_, q_, g_ = float(c), float(q), max(float(growth), 0.0)
    for _ in range(200):
        if -c_ * x - q_ * x * x + g_ * math.log(x) < target:
            break
        x *= 1.25
    x = max(x, 2 * float(scale) + 2)
    return Fraction(math.ceil(x))


def _graded(center: Fraction, direction: int, d_min: float, limit: Fraction) -> list[Fraction]:
    """center から direction 側へ 2^{−k}/2 刻みで d_min まで"""
    pts = []
    k = 1
    while True:
        d = Fraction(1, 2 ** k)
        if d >= limit:
            k += 1
            continue
        pts.append(center + direction * d)
        if float(d) <= d_min or k > 400:
            break
        k += 1
    return pts


def breakpoints(w: WeightSpec, degree: int, bits: int, trunc: Fraction = Fraction(0)) -> list[Fraction]:
    lo, hi = w.support
    pts: set[Fraction] = {lo}
    if w.family is Family.LAGUERRE:
        x_max = trunc if trunc > 0 else laguerre_cutoff(w, degree, bits)
        pts.update(Fraction(k) for k in range(1, 17) if k < x_max)
        edge = Fraction(32)
        while edge < x_max:
            pts.add(edge)
            edge *= 2
        pts.add(x_max)
        hi_eff = x_max
    else:
        pts.add(hi)
        pts.add((lo + hi) / 2)
        hi_eff = hi
    for j in w.jumps:
        if lo < j.t < hi_eff:
            pts.add(j.t)
    if w.fh is not None:
        pts.add(w.fh.t)

    logb = bits * math.log(2) + 10
    for a in w.atoms:
        if a.kind is AtomKind.EXP_INV_X and a.p("s") > 0:
            pts.update(_graded(Fraction(0), 1, float(a.p("s")) / logb, Fraction(1)))
        elif a.kind is AtomKind.EXP_INV_X2 and a.p("t") > 0:
            d_min = math.sqrt(float(a.p("t")) / logb)
            pts.update(_graded(Fraction(0), 1, d_min, Fraction(1)))
            if w.family is Family.JACOBI:
                pts.add(Fraction(0))
                pts.update(_graded(Fraction(0), -1, d_min, Fraction(1)))
        elif a.kind is AtomKind.EXP_INV_ONE_MINUS_X2 and a.p("t") > 0:
            d_min = float(a.p("t")) / (2 * logb)
            pts.update(_graded(Fraction(1), -1, d_min, Fraction(1, 2)))
            if w.family is Family.JACOBI:
                pts.update(_graded(Fraction(-1), 1, d_min, Fraction(1, 2)))
    return sorted(p for p in pts if lo <= p <= hi_eff)


# ================================================================
# 則の構築
# ================================================================
@lru_cache(maxsize=128)
def _build(w: WeightSpec, m: int, trunc: Fraction, degree: int, shift: ExponentShift, bits: int) -> RuleSet:
    ctx = context(bits)
    pts = breakpoints(w, degree, bits, trunc)
    factors = w.singular_factors()
    rules: list[QuadRule] = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        mid = (lo + hi) / 2
        step = w.step_value(mid) * w.fh_constant(mid)
        if step == 0:
            continue
        absorbed: dict[str, Fraction] = {}
        left_abs = right_abs = Fraction(0)
        for sf in factors:
            if sf.point == lo:
                left_abs = sf.exponent + shift.of(sf.key)
                absorbed[sf.key] = left_abs
            elif sf.point == hi:
                right_abs = sf.exponent + shift.of(sf.key)
                absorbed[sf.key] = right_abs
        ys, ws = gauss_jacobi(right_abs, left_abs, m, bits)
        lo_v, hi_v = lift(ctx, lo), lift(ctx, hi)
        half = (hi_v - lo_v) / 2
        scale = ctx.power(half, lift(ctx, left_abs + right_abs + 1))
        nodes, weights = [], []
        for y, wy in zip(ys, ws):
            x = lo_v + half * (1 + y)
            res = atoms_product(ctx, w, x)
            for sf in factors:
                e = sf.exponent + shift.of(sf.key) - absorbed.get(sf.key, 0)
                if e != 0:
                    res *= ctx.power(abs(x - lift(ctx, sf.point)), lift(ctx, e))
            nodes.append(x)
            weights.append(wy * scale * res)
        rules.append(QuadRule(tuple(nodes), tuple(weights), (lo, hi), (left_abs, right_abs), step))

    flat_nodes = tuple(x for r in rules for x in r.nodes)
    flat_weights = tuple(wi * lift(ctx, r.step) for r in rules for wi in r.weights)
    logger.debug(f"求積則: {w} 区間 {len(rules)} 個 × {m} 点 (shift={shift})")
    return RuleSet(tuple(rules), bits, flat_nodes, flat_weights)


def build_rules(w: WeightSpec, m: int = 0, trunc=0, *, degree: int = 24,
                bits: int = 0, shift: ExponentShift = NO_SHIFT) -> RuleSet:
    """台の分割と各区間の Gauss 則

    degree は被積分多項式の次数の目安（Laguerre の打ち切りに使う）。
    shift は測度 w·Π|x−p|^shift を積分する則を作る（特異因子の吸収指数をずらす）。
    """
    if m <= 0:
        m = config.quad_nodes
    if bits <= 0:
        bits = config.precision_bits
    if m < 2:
        raise BadNodeCount(f"ノード数は 2 以上が必要: {m}")
    return _build(w, m, Fraction(trunc), int(degree), shift, bits)


def shift_admissible(w: WeightSpec, shift: ExponentShift) -> bool:
    """シフト後の吸収指数がすべて −1 より大きいか"""
    return all(sf.exponent + shift.of(sf.key) > -1 for sf in w.singular_factors())


def integrate(rules: RuleSet, f):
    """Σ_segments step · Σ_i weight_i f(node_i)（区間は昇順に加算）"""
    ctx = rules.ctx
    values = [f(x) for x in rules.nodes]
    total = ctx.fdot(rules.weights, values)
    if ctx.isnan(total) or ctx.isinf(total):
        raise EvaluationFailure("積分値が有限でない")
    return total


def integrate_values(rules: RuleSet, values):
    """ノード上の値が既にある場合の積分"""
    ctx = rules.ctx
    total = ctx.fdot(rules.weights, values)
    if ctx.isnan(total) or ctx.isinf(total):
        raise EvaluationFailure("積分値が有限でない")
    return total


def integrate_checked(w: WeightSpec, f, m: int = 0, trunc=0, *, degree: int = 24,
                      bits: int = 0, shift: ExponentShift = NO_SHIFT):
    """(m/2, m) の組から誤差を見積もる。(値, 推定誤差) を返す"""
    if m <= 0:
        m = config.quad_nodes
    fine = build_rules(w, m, trunc, degree=degree, bits=bits, shift=shift)
    coarse = build_rules(w, max(m // 2, 2), trunc, degree=degree, bits=bits, shift=shift)
    v_fine = integrate(fine, f)
    v_coarse = integrate(coarse, f)
    return v_fine, abs(v_fine - v_coarse)
