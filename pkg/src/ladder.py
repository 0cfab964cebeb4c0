"""
ladder 係数 A_n(z), B_n(z) と関連する恒等式

■ 3 系統共通の組み立て（σ(z) = z, 1−z², z−z²）
    A_n = (1/σ(z)) [ (1/h_n)∫K P_n² w + c_A + Σ σ(t_k)R_{n,k}/(z−t_k)
                     + (γ/h_n)∫σ(x)P_n² w/((z−x)(x−t)) ]
    B_n は P_nP_{n−1}/h_{n−1}, r_{n,k}, c_B で同じ形
    K = (F(z)−F(x))/(z−x), F = σ·v′（v′ はジャンプ・FH を含まない）
■ 残差: lowering / raising / (S1, S2, S2′) / 直接形 / 部分積分恒等式
■ 例の補助量（R_n, r_n, a_n, …）と t 微分恒等式
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from .closedforms import partial_fraction_pair
from .config import config
from .errors import DegreeOutOfRange, FamilyMismatch, LadderOpsError, StepTooLarge
from .opcore import (
    RecurrenceTable,
    eval_all,
    eval_monic,
    inner,
    node_derivatives,
    node_values,
    recurrence_stieltjes,
    sub_leading,
    table_rules,
)
from .precision import Precision, exact, lift
from .quadrature import ExponentShift, integrate_values, shift_admissible
from .weights import (
    Family,
    TFamily,
    WeightSpec,
    F,
    atom_vprime,
    atoms_product,
    check_z,
    identify,
    sigma,
    vprime,
)

logger = logging.getLogger(__name__)

FH_SHIFT = ExponentShift(fh=-1)


@dataclass(frozen=True)
class LadderParts:
    """前因子 1/σ(z) を掛けた後の各項。合計が係数そのもの"""
    smooth_integral: object
    counting_term: object
    jump_residues: tuple = ()
    fh_term: object = 0

    def total(self):
        s = self.smooth_integral + self.counting_term + self.fh_term
        for r in self.jump_residues:
            s += r
        return s


@dataclass(frozen=True)
class LadderPair:
    z: object
    n: int
    A: object
    B: object
    parts_A: LadderParts
    parts_B: LadderParts


@dataclass(frozen=True)
class DirectPair:
    """(v′(z)−v′(x))/(z−x) を核とする直接形。divergent は端点積分が発散する場合"""
    z: object
    n: int
    A: object
    B: object
    divergent: bool


@dataclass(frozen=True)
class AuxiliaryQuantities:
    label: str
    n: int
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def __contains__(self, key):
        return key in self.values


def check_table(w: WeightSpec, tab: RecurrenceTable):
    """tab が w から作られた表でなければ FamilyMismatch"""
    if w is not tab.weight and w != tab.weight:
        raise FamilyMismatch(f"表の重み {tab.weight} と {w} が一致しない")


def _base_weight(ctx, w: WeightSpec, t: Fraction):
    """ステップ因子を除き FH 因子を含む重み（ジャンプ留数用）"""
    x = lift(ctx, t)
    val = atoms_product(ctx, w, x)
    for sf in w.singular_factors():
        val *= ctx.power(abs(x - lift(ctx, sf.point)), lift(ctx, sf.exponent))
    if w.fh is not None:
        val *= lift(ctx, w.fh_constant(t))
    return val


def _interior(w: WeightSpec, t: Fraction) -> bool:
    lo, hi = w.support
    return t > lo and (hi is None or t < hi)


def counting_terms(w: WeightSpec, tab: RecurrenceTable, n: int, z):
    """σ(z) を掛けた A_n, B_n の多項式部分 (c_A, c_B)"""
    if w.family is Family.LAGUERRE:
        return 0 * z, -n + 0 * z
    if w.family is Family.JACOBI:
        return 2 * n + 1 + 0 * z, n * z - tab.p1[n]
    return 2 * n + 1 + 0 * z, n * (z - 1) - tab.p1[n]


def node_F(tab: RecurrenceTable, rules) -> tuple:
    key = ("F", id(rules))
    hit = tab._memo.get(key)
    if hit is not None and hit[0] is rules:
        return hit[1]
    vals = tuple(F(tab.ctx, tab.weight, x) for x in rules.nodes)
    tab._memo[key] = (rules, vals)
    return vals


def jump_residues(w: WeightSpec, tab: RecurrenceTable, n: int):
    """(R_{n,k}, r_{n,k}) のリスト。端点上のジャンプは 0"""
    ctx = tab.ctx
    R, r = [], []
    for j in w.jumps:
        if not _interior(w, j.t):
            R.append(ctx.zero)
            r.append(ctx.zero)
            continue
        P = eval_all(tab, n, j.t)
        c = lift(ctx, j.omega) * _base_weight(ctx, w, j.t)
        R.append(c * P[n] ** 2 / tab.h[n])
        r.append(ctx.zero if n == 0 else c * P[n] * P[n - 1] / tab.h[n - 1])
    return R, r


def fh_integrals(w: WeightSpec, tab: RecurrenceTable, n: int):
    """(γ/h_n)∫P_n²w/(x−t), (γ/h_{n−1})∫P_nP_{n−1}w/(x−t)"""
    if w.fh is None:
        raise FamilyMismatch("FH 因子がない")
    ctx = tab.ctx
    t = lift(ctx, w.fh.t)
    g = lift(ctx, w.fh.gamma)
    sgn = lambda x: 1 if x > t else -1  # noqa: E731
    R = g * inner(tab, n, n, sgn, FH_SHIFT) / tab.h[n]
    r = ctx.zero if n == 0 else g * inner(tab, n, n - 1, sgn, FH_SHIFT) / tab.h[n - 1]
    return R, r


# ================================================================
# A_n, B_n
# ================================================================
class _LadderAt:
    """1 点 z での組み立て。核・ジャンプ・FH の z 依存部分を前計算"""

    def __init__(self, w: WeightSpec, tab: RecurrenceTable, z):
        check_table(w, tab)
        self.w, self.tab = w, tab
        ctx = self.ctx = tab.ctx
        z = self.z = lift(ctx, z)
        check_z(w, z, ctx)
        self.sz = sigma(w, z)
        self.rules = table_rules(tab)
        self.vals = node_values(tab, self.rules)
        Fz = F(ctx, w, z)
        self.kz = [(Fz - f) / (z - x) for x, f in zip(self.rules.nodes, node_F(tab, self.rules))]
        self.jumps = []
        for j in w.jumps:
            if not _interior(w, j.t):
                continue
            t = lift(ctx, j.t)
            coef = sigma(w, t) * lift(ctx, j.omega) * _base_weight(ctx, w, j.t) / (z - t)
            self.jumps.append((coef, eval_all(tab, tab.N, j.t)))
        self.fh = None
        if w.fh is not None:
            rules = table_rules(tab, FH_SHIFT)
            t = lift(ctx, w.fh.t)
            g = lift(ctx, w.fh.gamma)
            gv = [g * sigma(w, x) * (1 if x > t else -1) / (z - x) for x in rules.nodes]
            self.fh = (rules, node_values(tab, rules), gv)

    def _parts(self, i: int, j: int, norm, counting) -> LadderParts:
        ctx = self.ctx
        s = self.sz
        smooth = integrate_values(self.rules, [k * a * b for k, a, b in zip(self.kz, self.vals[i], self.vals[j])])
        jumps = tuple(c * P[i] * P[j] / (norm * s) for c, P in self.jumps)
        fh = ctx.zero
        if self.fh is not None:
            rules, vals, gv = self.fh
            fh = integrate_values(rules, [g * a * b for g, a, b in zip(gv, vals[i], vals[j])]) / (norm * s)
        return LadderParts(smooth / (norm * s), counting / s, jumps, fh)

    def pair(self, n: int) -> LadderPair:
        tab = self.tab
        if n < 0 or n > tab.N - 1:
            raise DegreeOutOfRange(f"A_n, B_n は 0 ≤ n ≤ {tab.N - 1}", n=n)
        cA, cB = counting_terms(self.w, tab, n, self.z)
        pa = self._parts(n, n, tab.h[n], cA)
        if n == 0:
            zero = self.ctx.zero
            pb = LadderParts(zero, zero, tuple(zero for _ in self.jumps), zero)
        else:
            pb = self._parts(n, n - 1, tab.h[n - 1], cB)
        return LadderPair(self.z, n, pa.total(), pb.total(), pa, pb)


def ladder_pair(w: WeightSpec, tab: RecurrenceTable, n: int, z) -> LadderPair:
    try:
        return _LadderAt(w, tab, z).pair(n)
    except LadderOpsError as e:
        raise e.with_context(n=n)


def ladder_sweep(w: WeightSpec, tab: RecurrenceTable, z, n_hi: int | None = None) -> list[LadderPair]:
    """1 点 z で n = 0..n_hi の全ペア"""
    if n_hi is None:
        n_hi = tab.N - 1
    at = _LadderAt(w, tab, z)
    return [at.pair(n) for n in range(n_hi + 1)]


# ================================================================
# 残差
# ================================================================
def _normalized(ctx, total, *terms):
    scale = max([abs(t) for t in terms] + [ctx.zero])
    if scale == 0:
        return abs(total)
    return abs(total) / scale


def lowering_residual(w: WeightSpec, tab: RecurrenceTable, n: int, z, pairs=None):
    """P_n′ + B_nP_n − β_nA_nP_{n−1}"""
    ctx = tab.ctx
    if n == 0:
        return ctx.zero
    pairs = pairs or ladder_sweep(w, tab, z, n)
    z = pairs[n].z
    pn, dn = eval_monic(tab, n, z)
    pm, _ = eval_monic(tab, n - 1, z)
    t1 = dn
    t2 = pairs[n].B * pn
    t3 = tab.beta[n] * pairs[n].A * pm
    return _normalized(ctx, t1 + t2 - t3, t1, t2, t3)


def raising_residual(w: WeightSpec, tab: RecurrenceTable, n: int, z, pairs=None):
    """P_{n−1}′ − (B_n + v′(z))P_{n−1} + A_{n−1}P_n"""
    ctx = tab.ctx
    if n < 1:
        raise DegreeOutOfRange("raising は n ≥ 1", n=n)
    pairs = pairs or ladder_sweep(w, tab, z, n)
    z = pairs[n].z
    vz = vprime(ctx, w, z)
    pn, _ = eval_monic(tab, n, z)
    pm, dm = eval_monic(tab, n - 1, z)
    t1 = dm
    t2 = (pairs[n].B + vz) * pm
    t3 = pairs[n - 1].A * pn
    return _normalized(ctx, t1 - t2 + t3, t1, t2, t3)


def compat_residuals(w: WeightSpec, tab: RecurrenceTable, n: int, z, pairs=None):
    """(S1, S2, S2′) の正規化残差。S2′ は n ≥ 1 のみ（n = 0 では None）"""
    ctx = tab.ctx
    if n + 1 > tab.N - 1:
        raise DegreeOutOfRange(f"compat には n+1 ≤ {tab.N - 1} が必要", n=n)
    pairs = pairs or ladder_sweep(w, tab, z, n + 1)
    z = pairs[n].z
    vz = vprime(ctx, w, z)
    A = [p.A for p in pairs]
    B = [p.B for p in pairs]
    an = tab.alpha[n]
    a_prev = A[n - 1] if n >= 1 else ctx.zero

    s1_terms = (B[n + 1], B[n], (z - an) * A[n], vz)
    s1 = _normalized(ctx, B[n + 1] + B[n] - (z - an) * A[n] + vz, *s1_terms)

    u = (z - an) * (B[n + 1] - B[n])
    v1 = tab.beta[n + 1] * A[n + 1]
    v2 = tab.beta[n] * a_prev
    s2 = _normalized(ctx, 1 + u - v1 + v2, ctx.one, u, v1, v2)

    s2p = None
    if n >= 1:
        b2 = B[n] * B[n]
        vb = vz * B[n]
        acc = ctx.fsum(A[:n])
        rhs = tab.beta[n] * A[n] * A[n - 1]
        s2p = _normalized(ctx, b2 + vb + acc - rhs, b2, vb, acc, rhs)
    return s1, s2, s2p


# ================================================================
# 直接形 (v′ の分割差分)
# ================================================================
def direct_pair(w: WeightSpec, tab: RecurrenceTable, n: int, z) -> DirectPair:
    """A_n = (1/h_n)∫(v′(z)−v′(x))/(z−x)P_n²w + ΣR_{n,k}/(z−t_k) + (γ/h_n)∫P_n²w/((z−x)(x−t))

    端点因子 |x−p|^e の寄与 e/((z−p)(x−p)) は指数 −1 シフトの則で積分する。
    e−1 ≤ −1 のときは積分が発散するので、シフトなしの則で評価し divergent を立てる。
    """
    check_table(w, tab)
    if n < 0 or n > tab.N - 1:
        raise DegreeOutOfRange(f"0 ≤ n ≤ {tab.N - 1}", n=n)
    ctx = tab.ctx
    z = lift(ctx, z)
    check_z(w, z, ctx)
    hA = tab.h[n]
    hB = tab.h[n - 1] if n >= 1 else None

    def both(g, shift=ExponentShift()):
        a = inner(tab, n, n, g, shift) / hA
        b = inner(tab, n, n - 1, g, shift) / hB if n >= 1 else ctx.zero
        return a, b

    atoms = w.canonical_atoms()
    vz = ctx.fsum(atom_vprime(ctx, a, z) for a in atoms) if atoms else ctx.zero
    A, B = both(lambda x: (vz - ctx.fsum(atom_vprime(ctx, a, x) for a in atoms)) / (z - x) if atoms else ctx.zero)

    divergent = False
    for sf in w.singular_factors():
        if sf.key == "fh" or sf.exponent == 0:
            continue
        p = lift(ctx, sf.point)
        shift = ExponentShift(**{sf.key: -1})
        if shift_admissible(w, shift):
            sgn = 1 if sf.key == "left" else -1
            da, db = both(lambda x, sgn=sgn: sgn + 0 * x, shift)
        else:
            divergent = True
            da, db = both(lambda x, p=p: 1 / (x - p))
        c = lift(ctx, sf.exponent) / (z - p)
        A += c * da
        B += c * db
    if divergent:
        logger.warning(f"⚠️ 直接形の端点積分が発散 ({w}, n={n})。参考値として評価")

    Rk, rk = jump_residues(w, tab, n)
    for j, R, r in zip(w.jumps, Rk, rk):
        if _interior(w, j.t):
            t = lift(ctx, j.t)
            A += R / (z - t)
            B += r / (z - t)

    if w.fh is not None:
        t = lift(ctx, w.fh.t)
        g = lift(ctx, w.fh.gamma)
        fa, fb = both(lambda x: (1 if x > t else -1) / (z - x), FH_SHIFT)
        A += g * fa
        B += g * fb
    if n == 0:
        B = ctx.zero
    return DirectPair(z, n, A, B, divergent)


# ================================================================
# 部分積分恒等式
# ================================================================
def _score_expected(w: WeightSpec, tab: RecurrenceTable, n: int):
    if w.family is Family.LAGUERRE:
        return 2 * n + 1
    c = n * tab.p1[n + 1] - (n - 1) * tab.p1[n]
    if w.family is Family.JACOBI:
        return 2 * (-tab.alpha[n] + c)
    return 1 - 2 * tab.alpha[n] + 2 * (n + c)


def ibp_residuals(w: WeightSpec, tab: RecurrenceTable, n: int, z) -> dict:
    """ジャンプ・FH なしの重みに対する部分積分恒等式の残差

    score:            (1/h_n)∫σv′P_n²w と系統ごとの閉形式
    derivative_expansion: σ(z)P_n′(z) = Σ_j c_j P_j(z), c_j を v′ 経由で計算
    shifted_moment:   (1/h_{n−1})∫(x+z)P_n′P_{n−1}w = nz − 𝐩(n)（Jacobi）
    """
    check_table(w, tab)
    if not w.is_smooth:
        raise FamilyMismatch("部分積分恒等式はジャンプ・FH のない重みのみ")
    if n < 1 or n + 1 > tab.N - 1:
        raise DegreeOutOfRange(f"1 ≤ n ≤ {tab.N - 2}", n=n)
    ctx = tab.ctx
    z = lift(ctx, z)
    check_z(w, z, ctx)
    rules = table_rules(tab)
    vals = node_values(tab, rules)
    ders = node_derivatives(tab, rules)
    Fx = node_F(tab, rules)
    sx = [sigma(w, x) for x in rules.nodes]
    dsx = [1 + 0 * x if w.family is Family.LAGUERRE else
           (-2 * x if w.family is Family.JACOBI else 1 - 2 * x) for x in rules.nodes]
    out = {}

    lhs = integrate_values(rules, [f * p * p for f, p in zip(Fx, vals[n])]) / tab.h[n]
    rhs = _score_expected(w, tab, n)
    out["score"] = _normalized(ctx, lhs - rhs, lhs, rhs)

    # σP_n′ の P_j 展開（次数 ≤ n+1）
    P = eval_all(tab, n + 1, z)
    _, dn = eval_monic(tab, n, z)
    acc = ctx.zero
    for j in range(n + 2):
        a = integrate_values(rules, [f * pn * pj for f, pn, pj in zip(Fx, vals[n], vals[j])])
        b = integrate_values(rules, [pn * (ds * pj + s * dj) for pn, ds, s, pj, dj
                                     in zip(vals[n], dsx, sx, vals[j], ders[j])])
        acc += (a - b) / tab.h[j] * P[j]
    lhs = sigma(w, z) * dn
    out["derivative_expansion"] = _normalized(ctx, lhs - acc, lhs, acc)

    if w.family is Family.JACOBI:
        m = integrate_values(rules, [(x + z) * d * pm for x, d, pm
                                     in zip(rules.nodes, ders[n], vals[n - 1])]) / tab.h[n - 1]
        rhs = n * z - tab.p1[n]
        out["shifted_moment"] = _normalized(ctx, m - rhs, m, rhs)
    return out


# ================================================================
# 補助量
# ================================================================
def _pair_integrals(tab: RecurrenceTable, n: int, g, shift=ExponentShift()):
    ctx = tab.ctx
    a = inner(tab, n, n, g, shift) / tab.h[n]
    b = ctx.zero if n == 0 else inner(tab, n, n - 1, g, shift) / tab.h[n - 1]
    return a, b


def aux_quantities(w: WeightSpec, tab: RecurrenceTable, n: int, family_label: str) -> AuxiliaryQuantities:
    """例ごとの補助量。family_label が w に一致しなければ FamilyMismatch"""
    check_table(w, tab)
    params = identify(w, family_label)
    if n < 0 or n > tab.N - 1:
        raise DegreeOutOfRange(f"0 ≤ n ≤ {tab.N - 1}", n=n)
    ctx = tab.ctx
    L = lambda name: lift(ctx, exact(params[name]))  # noqa: E731
    v: dict = {}
    label = family_label

    if label == "chen_mckay":
        t, g = L("t"), L("gamma")
        R, r = _pair_integrals(tab, n, lambda x: 1 / (x + t))
        v["Rn"], v["rn"] = g * R, g * r
    elif label == "laguerre_multi_shift":
        v["Rnk"], v["rnk"] = [], []
        for t, g in params["shifts"]:
            t, g = lift(ctx, exact(t)), lift(ctx, exact(g))
            R, r = _pair_integrals(tab, n, lambda x, t=t: 1 / (x + t))
            v["Rnk"].append(g * R)
            v["rnk"].append(g * r)
    elif label in ("chen_its", "laguerre_jump_exp_inv_x"):
        v["Rn"], v["rn"] = _pair_integrals(tab, n, lambda x: 1 / x)
    elif label in ("laguerre_fh", "jacobi_fh"):
        v["Rn"], v["rn"] = fh_integrals(w, tab, n)
    elif label == "shifted_jacobi_fh":
        v["un"], v["vn"] = fh_integrals(w, tab, n)
    elif label == "jacobi_exp_linear":
        t, a, b = L("t"), L("alpha"), L("beta")
        v["Rn"] = (2 * n + 1 + a + b - t * tab.alpha[n] - t) / 2
        v["rn"] = (n - t * tab.beta[n] - tab.p1[n]) / 2
    elif label == "jacobi_symmetric_exp_quad":
        if n + 1 > tab.N - 1:
            raise DegreeOutOfRange(f"β_{n + 1} が表にない", n=n)
        t, a = L("t"), L("alpha")
        v["Rn"] = 2 * n + 1 + 2 * a - 2 * t * (tab.beta[n + 1] + tab.beta[n])
        v["rn"] = n - 2 * t * tab.beta[n]
    elif label == "jacobi_symmetric_exp_inv_x2":
        t = L("t")
        R, _ = _pair_integrals(tab, n, lambda x: 1 / (x * x))
        _, r1 = _pair_integrals(tab, n, lambda x: 1 / x)
        _, r3 = _pair_integrals(tab, n, lambda x: 1 / x ** 3)
        v["Rn"], v["rn1"], v["rn3"] = 2 * t * R, 2 * t * r1, 2 * t * r3
    elif label == "jacobi_symmetric_exp_inv_one_minus_x2":
        t = L("t")
        R, _ = _pair_integrals(tab, n, lambda x: 1 / (1 - x * x))
        _, r = _pair_integrals(tab, n, lambda x: x / (1 - x * x))
        v["Rn"], v["rn"] = t * R, t * r
    elif label == "jacobi_symmetric_k2":
        g = L("gamma")
        ik = 1 / ctx.sqrt(L("k2"))
        R, r = _pair_integrals(tab, n, lambda x: 1 / (x + ik))
        v["Rn_star"], v["rn_star"] = g * R, g * r
    elif label == "pollaczek_jacobi":
        t = L("t")
        R, r = _pair_integrals(tab, n, lambda x: 1 / x)
        v["Rn_star"], v["rn_star"] = t * R, t * r
    elif label == "shifted_jacobi_power":
        t, g = L("t"), L("gamma")
        a, b = _pair_integrals(tab, n, lambda x: 1 / (x - t))
        v["an"], v["bn"] = g * a, g * b

    if w.jumps:
        v["Rnk"], v["rnk"] = jump_residues(w, tab, n)
    if family_label.startswith("jacobi_symmetric"):
        v["qn"] = sub_leading(tab, n)[1]
    return AuxiliaryQuantities(label, n, v)


def reconstruct_pair(w: WeightSpec, tab: RecurrenceTable, n: int, z, family_label: str):
    """補助量から部分分数形で (A_n, B_n) を組み立てる"""
    aux = aux_quantities(w, tab, n, family_label)
    params = identify(w, family_label)
    return partial_fraction_pair(family_label, params, aux.values, tab, n, z, tab.ctx)


# ================================================================
# t 微分恒等式
# ================================================================
def _observables(tab: RecurrenceTable, n: int) -> dict:
    ctx = tab.ctx
    p, q = sub_leading(tab, n)
    return {"lnh": ctx.ln(tab.h[n]), "p": p, "q": q}


def _rhs(label: str, fam: TFamily, tab: RecurrenceTable, aux: AuxiliaryQuantities, n: int, t) -> dict:
    """各族の t 微分の右辺 {観測量: 値}"""
    if label == "jacobi_symmetric_exp_quad":
        return {"lnh": -(tab.beta[n + 1] + tab.beta[n]),
                "q": tab.beta[n] * tab.beta[n - 1] if n >= 1 else tab.ctx.zero}
    if label == "shifted_jacobi_power":
        return {"lnh": -aux["an"], "p": aux["bn"]}
    if label == "shifted_jacobi_fh":
        return {"lnh": -aux["un"], "p": aux["vn"]}
    if label == "laguerre_fh":
        return {"lnh": -aux["Rn"], "p": aux["rn"]}
    if label == "chen_mckay":
        return {"lnh": aux["Rn"], "p": -aux["rn"]}
    if label == "jacobi_exp_linear":
        return {"lnh": -tab.alpha[n], "p": tab.beta[n]}
    if label == "pollaczek_jacobi":
        return {"lnh": -aux["Rn_star"] / t, "p": aux["rn_star"] / t}
    if label == "chen_its":
        return {"lnh": -aux["Rn"], "p": aux["rn"]}
    raise FamilyMismatch(f"t 微分恒等式が未登録: {label}")


def diff_identity_residual(fam: TFamily, n: int, t, step=None, prec: Precision | None = None) -> dict:
    """中心差分 D(step), D(step/2) と補助量の右辺を比べる

    D(step) と D(step/2) の相対差が regime 許容値を超えると StepTooLarge。
    対称 e^{−tx²} 族では 2t を掛けた形 (2t·d ln h_n = R_n − 2n − 1 − 2α) も返す。
    """
    prec = prec or Precision.from_config()
    ctx = prec.ctx
    t = exact(t)
    step = exact(step) if step is not None else Fraction(1, 10 ** 12)
    if step <= 0:
        raise StepTooLarge(f"step は正: {float(step):g}")
    N = n + 2
    label = fam.label

    def obs(tt):
        # 再試行で精度が上がった表も同じコンテキストへ揃える
        vals = _observables(recurrence_stieltjes(fam.at(tt), N, prec), n)
        return {k: ctx.convert(v) for k, v in vals.items()}

    center_w = fam.at(t)
    tab = recurrence_stieltjes(center_w, N, prec)
    aux = aux_quantities(center_w, tab, n, label)
    tv = lift(ctx, t)
    rhs = {k: ctx.convert(v) for k, v in _rhs(label, fam, tab, aux, n, tv).items()}

    def D(hh):
        plus, minus = obs(t + hh), obs(t - hh)
        return {k: (plus[k] - minus[k]) / (2 * lift(ctx, hh)) for k in rhs}

    d1, d2 = D(step), D(step / 2)
    tol = config.tolerances["regime"]
    out = {}
    for k, r in rhs.items():
        scale = max(abs(d2[k]), abs(r), ctx.one)
        if abs(d1[k] - d2[k]) / scale > tol:
            raise StepTooLarge(f"{label}: d/dt {k} の差分が漸近域にない (step={float(step):g})", n=n)
        out[k] = abs(d2[k] - r) / scale
    if label == "jacobi_symmetric_exp_quad":
        lhs = 2 * tv * d2["lnh"]
        r = ctx.convert(aux["Rn"]) - 2 * n - 1 - 2 * lift(ctx, exact(fam.param("alpha")))
        out["2t_lnh"] = abs(lhs - r) / max(abs(lhs), abs(r), ctx.one)
        lhs = 2 * tv * d2["q"]
        r = 2 * tv * rhs["q"]
        out["2t_q"] = abs(lhs - r) / max(abs(lhs), abs(r), ctx.one)
    logger.info(f"t 微分恒等式 {label} n={n} t={float(t):g}: " +
                ", ".join(f"{k}={ctx.nstr(v, 3)}" for k, v in out.items()))
    return out
