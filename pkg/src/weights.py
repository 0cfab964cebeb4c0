"""
重み関数モデル — 3 系統 × 変形アトム × ジャンプ × Fisher–Hartwig 因子

  Laguerre        x^λ · w₀(x)             on [0, ∞)
  Jacobi          (1−x)^α (1+x)^β · w₀(x)  on [−1, 1]
  ShiftedJacobi   x^α (1−x)^β · w₀(x)      on [0, 1]

w₀ = Π atoms · (ω₀ + Σ ω_k θ(x−t_k)) · |x−t|^γ (A + B θ(x−t))

v′ と分割差分カーネルはアトムごとの閉形式で組み立てる。ジャンプと FH 因子は
v′ に寄与しない（ladder 側で留数補正として扱う）。
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional

from .config import config
from .errors import (
    BadSupportPoint,
    ConfigError,
    ExponentOutOfRange,
    FamilyMismatch,
    NegativeWeight,
    OutOfSupport,
    SingularPoint,
    ZOnSupport,
)
from .precision import context, exact, lift

logger = logging.getLogger(__name__)


class Family(str, Enum):
    LAGUERRE = "laguerre"
    JACOBI = "jacobi"
    SHIFTED_JACOBI = "shifted_jacobi"


# 台の端点（None = +∞）
SUPPORT: dict[Family, tuple[Fraction, Optional[Fraction]]] = {
    Family.LAGUERRE: (Fraction(0), None),
    Family.JACOBI: (Fraction(-1), Fraction(1)),
    Family.SHIFTED_JACOBI: (Fraction(0), Fraction(1)),
}

EXPONENT_NAMES: dict[Family, tuple[str, ...]] = {
    Family.LAGUERRE: ("lambda",),
    Family.JACOBI: ("alpha", "beta"),
    Family.SHIFTED_JACOBI: ("alpha", "beta"),
}


class AtomKind(str, Enum):
    EXP_LINEAR = "exp_linear"                          # e^{−cx}
    POWER_SHIFT = "power_shift"                        # (x+c)^γ
    EXP_INV_X = "exp_inv_x"                            # e^{−s/x}
    EXP_QUAD = "exp_quad"                              # e^{−tx²}
    EXP_INV_X2 = "exp_inv_x2"                          # e^{−t/x²}
    EXP_INV_ONE_MINUS_X2 = "exp_inv_one_minus_x2"      # e^{−t/(1−x²)}
    POWER_ONE_MINUS_K2X2 = "power_one_minus_k2x2"      # (1−k²x²)^γ
    POWER_SHIFT_NEG = "power_shift_neg"                # (x−t)^γ, t < inf I


ATOM_PARAMS: dict[AtomKind, tuple[str, ...]] = {
    AtomKind.EXP_LINEAR: ("c",),
    AtomKind.POWER_SHIFT: ("c", "gamma"),
    AtomKind.EXP_INV_X: ("s",),
    AtomKind.EXP_QUAD: ("t",),
    AtomKind.EXP_INV_X2: ("t",),
    AtomKind.EXP_INV_ONE_MINUS_X2: ("t",),
    AtomKind.POWER_ONE_MINUS_K2X2: ("k2", "gamma"),
    AtomKind.POWER_SHIFT_NEG: ("t", "gamma"),
}

# 台の内部で本質的特異点を持つアトム（求積の段階分割に使う）
ESSENTIAL_ATOMS = {AtomKind.EXP_INV_X, AtomKind.EXP_INV_X2, AtomKind.EXP_INV_ONE_MINUS_X2}


@dataclass(frozen=True)
class DeformationAtom:
    kind: AtomKind
    params: tuple[Fraction, ...]

    @classmethod
    def of(cls, kind, **params) -> "DeformationAtom":
        try:
            kind = AtomKind(kind)
        except ValueError as e:
            raise ConfigError(f"未知のアトム種別: {kind}") from e
        names = ATOM_PARAMS[kind]
        missing = [n for n in names if n not in params]
        extra = [n for n in params if n not in names]
        if missing or extra:
            raise ConfigError(f"{kind.value}: パラメータ不整合 (必要 {names}, 受領 {tuple(params)})")
        return cls(kind, tuple(exact(params[n]) for n in names))

    def p(self, name: str) -> Fraction:
        return self.params[ATOM_PARAMS[self.kind].index(name)]

    def as_dict(self) -> dict:
        return dict(zip(ATOM_PARAMS[self.kind], self.params))

    def sort_key(self):
        return (self.kind.value, self.params)


@dataclass(frozen=True)
class JumpPoint:
    t: Fraction
    omega: Fraction


@dataclass(frozen=True)
class FisherHartwig:
    """|x−t|^γ (A + B θ(x−t))"""
    t: Fraction
    gamma: Fraction
    A: Fraction
    B: Fraction


@dataclass(frozen=True)
class SingularFactor:
    """|x − point|^exponent 型の代数的特異因子"""
    key: str          # "left" / "right" / "fh"
    point: Fraction
    exponent: Fraction


@dataclass(frozen=True)
class WeightSpec:
    family: Family
    exponents: tuple[Fraction, ...]
    atoms: tuple[DeformationAtom, ...] = ()
    omega0: Fraction = Fraction(1)
    jumps: tuple[JumpPoint, ...] = ()
    fh: Optional[FisherHartwig] = None

    # ── 端点指数 ──
    @property
    def lam(self) -> Fraction:
        if self.family is not Family.LAGUERRE:
            raise FamilyMismatch("λ は Laguerre 系のみ")
        return self.exponents[0]

    @property
    def alpha(self) -> Fraction:
        if self.family is Family.LAGUERRE:
            raise FamilyMismatch("α は Jacobi 系のみ")
        return self.exponents[0]

    @property
    def beta(self) -> Fraction:
        if self.family is Family.LAGUERRE:
            raise FamilyMismatch("β は Jacobi 系のみ")
        return self.exponents[1]

    @property
    def support(self) -> tuple[Fraction, Optional[Fraction]]:
        return SUPPORT[self.family]

    @property
    def has_step(self) -> bool:
        return bool(self.jumps) or self.omega0 != 1

    @property
    def is_smooth(self) -> bool:
        """ジャンプも FH も無い"""
        return not self.has_step and self.fh is None

    def canonical_atoms(self) -> tuple[DeformationAtom, ...]:
        return tuple(sorted(self.atoms, key=DeformationAtom.sort_key))

    def singular_factors(self) -> list[SingularFactor]:
        if self.family is Family.LAGUERRE:
            out = [SingularFactor("left", Fraction(0), self.exponents[0])]
        elif self.family is Family.JACOBI:
            out = [
                SingularFactor("left", Fraction(-1), self.exponents[1]),
                SingularFactor("right", Fraction(1), self.exponents[0]),
            ]
        else:
            out = [
                SingularFactor("left", Fraction(0), self.exponents[0]),
                SingularFactor("right", Fraction(1), self.exponents[1]),
            ]
        if self.fh is not None:
            out.append(SingularFactor("fh", self.fh.t, self.fh.gamma))
        return out

    def step_value(self, x: Fraction) -> Fraction:
        """ω₀ + Σ ω_k θ(x−t_k)（ジャンプ点では右極限）"""
        s = self.omega0
        for j in self.jumps:
            if x >= j.t:
                s += j.omega
        return s

    def fh_constant(self, x: Fraction) -> Fraction:
        if self.fh is None:
            return Fraction(1)
        return self.fh.A + (self.fh.B if x >= self.fh.t else 0)

    def __str__(self):
        names = EXPONENT_NAMES[self.family]
        exps = ", ".join(f"{n}={float(v):g}" for n, v in zip(names, self.exponents))
        atoms = " ".join(a.kind.value for a in self.atoms)
        extra = []
        if self.has_step:
            extra.append(f"jumps={len(self.jumps)}")
        if self.fh is not None:
            extra.append("fh")
        return f"<{self.family.value} {exps} [{atoms}] {' '.join(extra)}>".replace(" ]", "]")


# ================================================================
# 構築と検証
# ================================================================
def make_weight(family, exponents, atoms=(), jumps=(), fh=None, omega0=1) -> WeightSpec:
    """検証済み WeightSpec を返す

    jumps は (t, ω) の列、または {"omega0": .., "points": [{"t":.., "omega":..}]}。
    fh は (t, γ, A, B) / dict / FisherHartwig / None。
    """
    try:
        family = Family(family)
    except ValueError as e:
        raise ConfigError(f"未知の系統: {family}") from e

    if isinstance(exponents, (int, float, str, Fraction)):
        exponents = (exponents,)
    exps = tuple(exact(e) for e in exponents)
    if len(exps) != len(EXPONENT_NAMES[family]):
        raise ConfigError(f"{family.value}: 指数は {EXPONENT_NAMES[family]} が必要")
    for name, e in zip(EXPONENT_NAMES[family], exps):
        if e <= -1:
            raise ExponentOutOfRange(f"{name}={float(e):g} は −1 より大きくなければならない")

    try:
        atom_list, omega0, jump_list, fh = _parse_parts(atoms, omega0, jumps, fh)
    except (KeyError, TypeError, IndexError, ValueError, AttributeError) as e:
        raise ConfigError(f"{family.value}: atoms / jumps / fh の形式が不正 ({e!r})") from e

    w = WeightSpec(family, exps, tuple(atom_list), exact(omega0), jump_list, fh)
    _validate_atoms(w)
    _validate_jumps(w)
    _validate_fh(w)
    _spot_check(w)
    return w


def _parse_parts(atoms, omega0, jumps, fh):
    atom_list = []
    for a in atoms:
        if isinstance(a, DeformationAtom):
            atom_list.append(a)
        elif isinstance(a, dict):
            atom_list.append(DeformationAtom.of(a.get("kind"), **dict(a.get("params", {}))))
        else:
            kind, params = a
            atom_list.append(DeformationAtom.of(kind, **params))

    if isinstance(jumps, dict):
        omega0 = jumps.get("omega0", omega0)
        jumps = [(p["t"], p["omega"]) for p in jumps.get("points", [])]
    jump_list = tuple(
        j if isinstance(j, JumpPoint) else JumpPoint(exact(j[0]), exact(j[1]))
        for j in jumps
    )

    if fh is not None and not isinstance(fh, FisherHartwig):
        if isinstance(fh, dict):
            fh = FisherHartwig(exact(fh["t"]), exact(fh["gamma"]), exact(fh.get("A", 1)), exact(fh.get("B", 0)))
        else:
            t, g, a_, b_ = fh
            fh = FisherHartwig(exact(t), exact(g), exact(a_), exact(b_))
    return atom_list, omega0, jump_list, fh


def _in_closed_support(w: WeightSpec, t: Fraction) -> bool:
    lo, hi = w.support
    return t >= lo and (hi is None or t <= hi)


def _in_open_support(w: WeightSpec, t: Fraction) -> bool:
    lo, hi = w.support
    return t > lo and (hi is None or t < hi)


def _validate_atoms(w: WeightSpec):
    lo, hi = w.support
    fam = w.family
    decay_c = Fraction(0)
    decay_q = Fraction(0)
    for a in w.atoms:
        k = a.kind
        if k is AtomKind.EXP_LINEAR:
            decay_c += a.p("c")
        elif k is AtomKind.POWER_SHIFT:
            if lo + a.p("c") <= 0:
                raise ConfigError(f"power_shift: x+c が台上で正でない (c={float(a.p('c')):g})")
        elif k is AtomKind.EXP_INV_X:
            if fam is Family.JACOBI:
                raise ConfigError("exp_inv_x は [0,∞) / [0,1] 上のみ")
            if a.p("s") < 0:
                raise ConfigError("exp_inv_x: s ≥ 0 が必要")
        elif k is AtomKind.EXP_QUAD:
            decay_q += a.p("t")
            if fam is Family.LAGUERRE and a.p("t") < 0:
                raise ConfigError("exp_quad: Laguerre 上では t ≥ 0 が必要")
        elif k is AtomKind.EXP_INV_X2:
            if a.p("t") < 0:
                raise ConfigError("exp_inv_x2: t ≥ 0 が必要")
        elif k is AtomKind.EXP_INV_ONE_MINUS_X2:
            if fam is Family.LAGUERRE:
                raise ConfigError("exp_inv_one_minus_x2 は有界台のみ")
            if a.p("t") < 0:
                raise ConfigError("exp_inv_one_minus_x2: t ≥ 0 が必要")
        elif k is AtomKind.POWER_ONE_MINUS_K2X2:
            if fam is Family.LAGUERRE:
                raise ConfigError("power_one_minus_k2x2 は有界台のみ")
            if not (0 <= a.p("k2") < 1):
                raise ConfigError("power_one_minus_k2x2: 0 ≤ k² < 1 が必要")
        elif k is AtomKind.POWER_SHIFT_NEG:
            if a.p("t") >= lo:
                raise BadSupportPoint(f"power_shift_neg: t={float(a.p('t')):g} は台の左端より小さくなければならない")
    if fam is Family.LAGUERRE and decay_q <= 0 and decay_c <= 0:
        raise ConfigError("Laguerre 重みに指数減衰因子がない (exp_linear c>0 か exp_quad t>0)")


def _validate_jumps(w: WeightSpec):
    lo, hi = w.support
    prev = None
    for j in w.jumps:
        if not _in_closed_support(w, j.t):
            raise BadSupportPoint(f"ジャンプ点 t={float(j.t):g} が台の外")
        if prev is not None and j.t <= prev:
            raise BadSupportPoint("ジャンプ点は狭義単調増加でなければならない")
        prev = j.t

    # 部分和 ≥ 0、かつ正の区間が存在
    edges = [lo] + [j.t for j in w.jumps] + [hi]
    partial = w.omega0
    positive = False
    for i in range(len(edges) - 1):
        if i > 0:
            partial += w.jumps[i - 1].omega
        if partial < 0:
            raise NegativeWeight(f"ステップ因子の部分和が負: {float(partial):g}")
        a_, b_ = edges[i], edges[i + 1]
        if partial > 0 and (b_ is None or b_ > a_):
            positive = True
    if not positive:
        raise NegativeWeight("ステップ因子が台全体で 0")


def _validate_fh(w: WeightSpec):
    fh = w.fh
    if fh is None:
        return
    if not _in_open_support(w, fh.t):
        raise BadSupportPoint(f"FH 点 t={float(fh.t):g} は台の内部でなければならない")
    if any(j.t == fh.t for j in w.jumps):
        raise BadSupportPoint("FH 点がジャンプ点と一致")
    if fh.gamma <= 0:
        raise ExponentOutOfRange(f"FH 指数 γ={float(fh.gamma):g} は正でなければならない")
    if fh.A < 0 or fh.A + fh.B < 0 or (fh.A == 0 and fh.A + fh.B == 0):
        raise NegativeWeight("FH 因子 A + Bθ が負または恒等的に 0")


def _spot_check(w: WeightSpec):
    """粗い格子で w ≥ 0 を確認"""
    ctx = context(64)
    lo, hi = w.support
    top = hi if hi is not None else Fraction(20)
    for i in range(1, 16):
        x = lo + (top - lo) * Fraction(i, 16)
        if w.fh is not None and x == w.fh.t:
            continue
        val = eval_weight(w, x, ctx)
        if not val >= 0:
            raise NegativeWeight(f"w({float(x):g}) = {ctx.nstr(val, 5)} < 0")


# ================================================================
# 評価
# ================================================================
def _ctx(ctx):
    return ctx if ctx is not None else context(config.precision_bits)


def sigma(w: WeightSpec, y):
    """系統多項式 σ(y) = y, 1−y², y−y²"""
    if w.family is Family.LAGUERRE:
        return y
    if w.family is Family.JACOBI:
        return 1 - y * y
    return y - y * y


def atom_value(ctx, a: DeformationAtom, x):
    k = a.kind
    if k is AtomKind.EXP_LINEAR:
        return ctx.exp(-lift(ctx, a.p("c")) * x)
    if k is AtomKind.POWER_SHIFT:
        return ctx.power(x + lift(ctx, a.p("c")), lift(ctx, a.p("gamma")))
    if k is AtomKind.EXP_INV_X:
        return ctx.exp(-lift(ctx, a.p("s")) / x)
    if k is AtomKind.EXP_QUAD:
        return ctx.exp(-lift(ctx, a.p("t")) * x * x)
    if k is AtomKind.EXP_INV_X2:
        return ctx.exp(-lift(ctx, a.p("t")) / (x * x))
    if k is AtomKind.EXP_INV_ONE_MINUS_X2:
        return ctx.exp(-lift(ctx, a.p("t")) / (1 - x * x))
    if k is AtomKind.POWER_ONE_MINUS_K2X2:
        return ctx.power(1 - lift(ctx, a.p("k2")) * x * x, lift(ctx, a.p("gamma")))
    return ctx.power(x - lift(ctx, a.p("t")), lift(ctx, a.p("gamma")))


def atom_vprime(ctx, a: DeformationAtom, y):
    """−d/dy ln(atom)。複素 y にもそのまま解析接続される"""
    k = a.kind
    if k is AtomKind.EXP_LINEAR:
        return lift(ctx, a.p("c")) + 0 * y
    if k is AtomKind.POWER_SHIFT:
        return -lift(ctx, a.p("gamma")) / (y + lift(ctx, a.p("c")))
    if k is AtomKind.EXP_INV_X:
        return -lift(ctx, a.p("s")) / (y * y)
    if k is AtomKind.EXP_QUAD:
        return 2 * lift(ctx, a.p("t")) * y
    if k is AtomKind.EXP_INV_X2:
        return -2 * lift(ctx, a.p("t")) / (y * y * y)
    if k is AtomKind.EXP_INV_ONE_MINUS_X2:
        d = 1 - y * y
        return 2 * lift(ctx, a.p("t")) * y / (d * d)
    if k is AtomKind.POWER_ONE_MINUS_K2X2:
        k2 = lift(ctx, a.p("k2"))
        return 2 * lift(ctx, a.p("gamma")) * k2 * y / (1 - k2 * y * y)
    return -lift(ctx, a.p("gamma")) / (y - lift(ctx, a.p("t")))


def atoms_product(ctx, w: WeightSpec, x):
    val = ctx.one
    for a in w.canonical_atoms():
        val *= atom_value(ctx, a, x)
    return val


def _endpoint_vprime(ctx, w: WeightSpec, y):
    if w.family is Family.LAGUERRE:
        return -lift(ctx, w.exponents[0]) / y
    a = lift(ctx, w.exponents[0])
    b = lift(ctx, w.exponents[1])
    if w.family is Family.JACOBI:
        return a / (1 - y) - b / (1 + y)
    return -a / y + b / (1 - y)


def _endpoint_F(ctx, w: WeightSpec, y):
    """σ(y)·(端点因子の v′)。多項式なので直接書く"""
    if w.family is Family.LAGUERRE:
        return -lift(ctx, w.exponents[0]) + 0 * y
    a = lift(ctx, w.exponents[0])
    b = lift(ctx, w.exponents[1])
    if w.family is Family.JACOBI:
        return a * (1 + y) - b * (1 - y)
    return -a * (1 - y) + b * y


def vprime(ctx, w: WeightSpec, y):
    """v′(y)（ジャンプ・FH を除く）。検査なしの内部版"""
    val = _endpoint_vprime(ctx, w, y)
    for a in w.canonical_atoms():
        val += atom_vprime(ctx, a, y)
    return val


def F(ctx, w: WeightSpec, y):
    """F(y) = σ(y)·v′(y)"""
    s = sigma(w, y)
    val = _endpoint_F(ctx, w, y)
    for a in w.canonical_atoms():
        val += s * atom_vprime(ctx, a, y)
    return val


def _as_number(ctx, x):
    if isinstance(x, (Fraction, int)):
        return lift(ctx, exact(x))
    if isinstance(x, float):
        return lift(ctx, exact(x))
    if isinstance(x, complex):
        return ctx.mpc(x)
    return ctx.convert(x)


def _to_fraction(ctx, x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return exact(x)
    m, e = ctx.mpf(x).man_exp
    return Fraction(int(m)) * Fraction(2) ** int(e) if e >= 0 else Fraction(int(m), 2 ** int(-e))


def eval_weight(w: WeightSpec, x, ctx=None):
    """w(x)。x は開いた台の内部。ジャンプ点では右極限"""
    ctx = _ctx(ctx)
    xf = _to_fraction(ctx, x)
    if not _in_open_support(w, xf):
        raise OutOfSupport(f"x={float(xf):g} は {w.family.value} の開いた台の外")
    xv = _as_number(ctx, x)
    val = ctx.one
    for sf in w.singular_factors():
        if sf.key == "fh":
            continue
        val *= ctx.power(abs(xv - lift(ctx, sf.point)), lift(ctx, sf.exponent))
    val *= atoms_product(ctx, w, xv)
    if w.fh is not None:
        val *= ctx.power(abs(xv - lift(ctx, w.fh.t)), lift(ctx, w.fh.gamma))
        val *= lift(ctx, w.fh_constant(xf))
    return val * lift(ctx, w.step_value(xf))


def atom_poles(w: WeightSpec) -> list[Fraction]:
    """v′ が発散する有理点（k² アトムの ±1/k は別途判定）"""
    pts: set[Fraction] = set()
    for a in w.atoms:
        k = a.kind
        if k in (AtomKind.EXP_INV_X, AtomKind.EXP_INV_X2) and any(a.params):
            pts.add(Fraction(0))
        elif k is AtomKind.EXP_INV_ONE_MINUS_X2 and a.p("t") != 0:
            pts.update((Fraction(-1), Fraction(1)))
        elif k is AtomKind.POWER_SHIFT:
            pts.add(-a.p("c"))
        elif k is AtomKind.POWER_SHIFT_NEG:
            pts.add(a.p("t"))
    return sorted(pts)


def prefactor_poles(w: WeightSpec) -> list[Fraction]:
    """A_n/B_n の前因子・補正項の極（0, ±1, t_k, FH t）"""
    lo, hi = w.support
    pts = {lo}
    if hi is not None:
        pts.add(hi)
    pts.update(j.t for j in w.jumps)
    if w.fh is not None:
        pts.add(w.fh.t)
    return sorted(pts)


def _k2_singular(ctx, w: WeightSpec, y) -> bool:
    for a in w.atoms:
        if a.kind is AtomKind.POWER_ONE_MINUS_K2X2 and a.p("k2") != 0:
            if 1 - lift(ctx, a.p("k2")) * y * y == 0:
                return True
    return False


def eval_vprime(w: WeightSpec, x, ctx=None):
    """v′(x) = −w′/w。ジャンプ・FH 点やアトムの特異点では SingularPoint"""
    ctx = _ctx(ctx)
    xf = _to_fraction(ctx, x)
    if not _in_open_support(w, xf):
        raise OutOfSupport(f"x={float(xf):g} は開いた台の外")
    if xf in prefactor_poles(w) or xf in atom_poles(w):
        raise SingularPoint(f"x={float(xf):g} はジャンプ/FH/アトムの特異点")
    return vprime(ctx, w, _as_number(ctx, x))


def check_z(w: WeightSpec, z, ctx) -> None:
    """z が閉じた台上やアトムの極にないことを確認"""
    if ctx.im(z) == 0:
        re = _to_fraction(ctx, ctx.re(z))
        if _in_closed_support(w, re):
            raise ZOnSupport(f"z={ctx.nstr(z, 8)} が台の上にある")
        if re in atom_poles(w):
            raise SingularPoint(f"z={ctx.nstr(z, 8)} がアトムの極")
    if _k2_singular(ctx, w, z):
        raise SingularPoint(f"z={ctx.nstr(z, 8)} が (1−k²x²) の零点")


def _check_x(w: WeightSpec, x, ctx):
    xf = _to_fraction(ctx, x)
    if not _in_open_support(w, xf):
        raise OutOfSupport(f"x={float(xf):g} は開いた台の外")
    if xf in atom_poles(w):
        raise SingularPoint(f"x={float(xf):g} はアトムの特異点")


def kernel_divdiff(w: WeightSpec, z, x, ctx=None):
    """(F(z) − F(x))/(z − x)"""
    ctx = _ctx(ctx)
    z = _as_number(ctx, z)
    check_z(w, z, ctx)
    _check_x(w, x, ctx)
    x = _as_number(ctx, x)
    return (F(ctx, w, z) - F(ctx, w, x)) / (z - x)


def vprime_divdiff(w: WeightSpec, z, x, ctx=None):
    """(v′(z) − v′(x))/(z − x)（λ>0 用の直接形）"""
    ctx = _ctx(ctx)
    z = _as_number(ctx, z)
    check_z(w, z, ctx)
    _check_x(w, x, ctx)
    x = _as_number(ctx, x)
    return (vprime(ctx, w, z) - vprime(ctx, w, x)) / (z - x)


# ================================================================
# JSON
# ================================================================
def _num(q: Fraction):
    """整数は int、float で正確に戻る値は float、それ以外は "p/q" 文字列"""
    if q.denominator == 1:
        return int(q)
    if Fraction(repr(float(q))) == q:
        return float(q)
    return str(q)


def weight_to_json(w: WeightSpec) -> dict:
    out: dict = {"family": w.family.value}
    for name, e in zip(EXPONENT_NAMES[w.family], w.exponents):
        out[name] = _num(e)
    out["atoms"] = [
        {"kind": a.kind.value, "params": {k: _num(v) for k, v in a.as_dict().items()}}
        for a in w.atoms
    ]
    out["jumps"] = {
        "omega0": _num(w.omega0),
        "points": [{"t": _num(j.t), "omega": _num(j.omega)} for j in w.jumps],
    }
    out["fh"] = None if w.fh is None else {
        "t": _num(w.fh.t), "gamma": _num(w.fh.gamma), "A": _num(w.fh.A), "B": _num(w.fh.B),
    }
    return out


def weight_from_json(obj) -> WeightSpec:
    """dict か JSON 文字列から。小数は Fraction として厳密に読む"""
    if isinstance(obj, (str, bytes)):
        try:
            obj = json.loads(obj, parse_float=Fraction, parse_int=Fraction)
        except json.JSONDecodeError as e:
            raise ConfigError(f"重み JSON が不正: {e}") from e
    if not isinstance(obj, dict) or "family" not in obj:
        raise ConfigError("重み JSON には family が必要")
    try:
        family = Family(obj["family"])
    except ValueError as e:
        raise ConfigError(f"未知の系統: {obj['family']}") from e
    try:
        exps = [obj[n] for n in EXPONENT_NAMES[family]]
    except KeyError as e:
        raise ConfigError(f"{family.value} には {EXPONENT_NAMES[family]} が必要") from e
    jumps = obj.get("jumps") or {}
    return make_weight(family, exps, obj.get("atoms") or (), jumps, obj.get("fh"))


# ================================================================
# プリセット（名前つきの重み）
# ================================================================
def _a(kind, **params) -> DeformationAtom:
    return DeformationAtom.of(kind, **params)


def _jumps(omega0, points):
    return {"omega0": omega0, "points": [{"t": t, "omega": o} for t, o in points]}


def _laguerre(lam, *atoms, **kw):
    return make_weight(Family.LAGUERRE, (lam,), (_a("exp_linear", c=1),) + atoms, **kw)


PRESETS = {
    "laguerre_classical": lambda lam: _laguerre(lam),
    "chen_mckay": lambda lam, gamma, t: _laguerre(lam, _a("power_shift", c=t, gamma=gamma)),
    "chen_its": lambda lam, s: _laguerre(lam, _a("exp_inv_x", s=s)),
    "laguerre_multi_shift": lambda lam, shifts: _laguerre(
        lam, *(_a("power_shift", c=t, gamma=g) for t, g in shifts)),
    "laguerre_jump": lambda lam, omega0, points: _laguerre(lam, jumps=_jumps(omega0, points)),
    "laguerre_two_jump": lambda lam, t1, t2: _laguerre(lam, jumps=_jumps(0, [(t1, 1), (t2, -1)])),
    "laguerre_jump_exp_inv_x": lambda lam, s, omega0, points: _laguerre(
        lam, _a("exp_inv_x", s=s), jumps=_jumps(omega0, points)),
    "laguerre_fh": lambda lam, t, gamma, A, B: _laguerre(lam, fh=(t, gamma, A, B)),
    "jacobi_classical": lambda alpha, beta: make_weight(Family.JACOBI, (alpha, beta)),
    "jacobi_exp_linear": lambda alpha, beta, t: make_weight(
        Family.JACOBI, (alpha, beta), (_a("exp_linear", c=t),)),
    "jacobi_symmetric_exp_quad": lambda alpha, t: make_weight(
        Family.JACOBI, (alpha, alpha), (_a("exp_quad", t=t),)),
    "jacobi_symmetric_k2": lambda alpha, gamma, k2: make_weight(
        Family.JACOBI, (alpha, alpha), (_a("power_one_minus_k2x2", k2=k2, gamma=gamma),)),
    "jacobi_symmetric_exp_inv_x2": lambda alpha, t: make_weight(
        Family.JACOBI, (alpha, alpha), (_a("exp_inv_x2", t=t),)),
    "jacobi_symmetric_exp_inv_one_minus_x2": lambda alpha, t: make_weight(
        Family.JACOBI, (alpha, alpha), (_a("exp_inv_one_minus_x2", t=t),)),
    "jacobi_jump": lambda alpha, beta, omega0, points: make_weight(
        Family.JACOBI, (alpha, beta), jumps=_jumps(omega0, points)),
    "jacobi_fh": lambda alpha, beta, t, gamma, A, B: make_weight(
        Family.JACOBI, (alpha, beta), fh=(t, gamma, A, B)),
    "shifted_jacobi_classical": lambda alpha, beta: make_weight(Family.SHIFTED_JACOBI, (alpha, beta)),
    "pollaczek_jacobi": lambda alpha, beta, t: make_weight(
        Family.SHIFTED_JACOBI, (alpha, beta), (_a("exp_inv_x", s=t),)),
    "shifted_jacobi_power": lambda alpha, beta, gamma, t: make_weight(
        Family.SHIFTED_JACOBI, (alpha, beta), (_a("power_shift_neg", t=t, gamma=gamma),)),
    "shifted_jacobi_jump": lambda alpha, beta, omega0, points: make_weight(
        Family.SHIFTED_JACOBI, (alpha, beta), jumps=_jumps(omega0, points)),
    "shifted_jacobi_fh": lambda alpha, beta, t, gamma, A, B: make_weight(
        Family.SHIFTED_JACOBI, (alpha, beta), fh=(t, gamma, A, B)),
}

# t 微分の対象となるパラメータ名
T_PARAM = {
    "chen_mckay": "t",
    "chen_its": "s",
    "laguerre_fh": "t",
    "jacobi_exp_linear": "t",
    "jacobi_symmetric_exp_quad": "t",
    "pollaczek_jacobi": "t",
    "shifted_jacobi_power": "t",
    "shifted_jacobi_fh": "t",
}


def preset(label: str, **params) -> WeightSpec:
    if label not in PRESETS:
        raise FamilyMismatch(f"未知の系統ラベル: {label}")
    try:
        return PRESETS[label](**params)
    except TypeError as e:
        raise ConfigError(f"{label}: パラメータ不整合 ({e})") from e


def _atoms_of(w: WeightSpec, kind: AtomKind) -> list[DeformationAtom]:
    return [a for a in w.atoms if a.kind is kind]


def _one(w: WeightSpec, kind: AtomKind) -> DeformationAtom:
    found = _atoms_of(w, kind)
    if len(found) != 1:
        raise FamilyMismatch(f"{kind.value} アトムが 1 個ではない")
    return found[0]


def _jump_params(w: WeightSpec) -> dict:
    return {"omega0": w.omega0, "points": [(j.t, j.omega) for j in w.jumps]}


def _fh_params(w: WeightSpec) -> dict:
    if w.fh is None:
        raise FamilyMismatch("FH 因子がない")
    return {"t": w.fh.t, "gamma": w.fh.gamma, "A": w.fh.A, "B": w.fh.B}


def _extract(label: str, w: WeightSpec) -> dict:
    e = w.exponents
    if label == "laguerre_classical":
        return {"lam": e[0]}
    if label == "chen_mckay":
        a = _one(w, AtomKind.POWER_SHIFT)
        return {"lam": e[0], "gamma": a.p("gamma"), "t": a.p("c")}
    if label == "chen_its":
        return {"lam": e[0], "s": _one(w, AtomKind.EXP_INV_X).p("s")}
    if label == "laguerre_multi_shift":
        return {"lam": e[0], "shifts": [(a.p("c"), a.p("gamma")) for a in _atoms_of(w, AtomKind.POWER_SHIFT)]}
    if label == "laguerre_jump":
        return {"lam": e[0], **_jump_params(w)}
    if label == "laguerre_two_jump":
        if len(w.jumps) != 2:
            raise FamilyMismatch("ジャンプ点が 2 個ではない")
        return {"lam": e[0], "t1": w.jumps[0].t, "t2": w.jumps[1].t}
    if label == "laguerre_jump_exp_inv_x":
        return {"lam": e[0], "s": _one(w, AtomKind.EXP_INV_X).p("s"), **_jump_params(w)}
    if label == "laguerre_fh":
        return {"lam": e[0], **_fh_params(w)}
    if label in ("jacobi_classical", "shifted_jacobi_classical"):
        return {"alpha": e[0], "beta": e[1]}
    if label == "jacobi_exp_linear":
        return {"alpha": e[0], "beta": e[1], "t": _one(w, AtomKind.EXP_LINEAR).p("c")}
    if label == "jacobi_symmetric_exp_quad":
        return {"alpha": e[0], "t": _one(w, AtomKind.EXP_QUAD).p("t")}
    if label == "jacobi_symmetric_k2":
        a = _one(w, AtomKind.POWER_ONE_MINUS_K2X2)
        return {"alpha": e[0], "gamma": a.p("gamma"), "k2": a.p("k2")}
    if label == "jacobi_symmetric_exp_inv_x2":
        return {"alpha": e[0], "t": _one(w, AtomKind.EXP_INV_X2).p("t")}
    if label == "jacobi_symmetric_exp_inv_one_minus_x2":
        return {"alpha": e[0], "t": _one(w, AtomKind.EXP_INV_ONE_MINUS_X2).p("t")}
    if label in ("jacobi_jump", "shifted_jacobi_jump"):
        return {"alpha": e[0], "beta": e[1], **_jump_params(w)}
    if label in ("jacobi_fh", "shifted_jacobi_fh"):
        return {"alpha": e[0], "beta": e[1], **_fh_params(w)}
    if label == "pollaczek_jacobi":
        return {"alpha": e[0], "beta": e[1], "t": _one(w, AtomKind.EXP_INV_X).p("s")}
    if label == "shifted_jacobi_power":
        a = _one(w, AtomKind.POWER_SHIFT_NEG)
        return {"alpha": e[0], "beta": e[1], "gamma": a.p("gamma"), "t": a.p("t")}
    raise FamilyMismatch(f"未知の系統ラベル: {label}")


def _same(a: WeightSpec, b: WeightSpec) -> bool:
    return (
        a.family == b.family and a.exponents == b.exponents
        and a.canonical_atoms() == b.canonical_atoms()
        and a.omega0 == b.omega0 and a.jumps == b.jumps and a.fh == b.fh
    )


def identify(w: WeightSpec, label: str) -> dict:
    """w が label の系統に一致すればそのパラメータを返す"""
    try:
        params = _extract(label, w)
        rebuilt = preset(label, **params)
    except (IndexError, ConfigError, FamilyMismatch) as e:
        raise FamilyMismatch(f"{w} は {label} ではない: {e}") from e
    if not _same(rebuilt, w):
        raise FamilyMismatch(f"{w} は {label} ではない")
    return params


@dataclass(frozen=True)
class TFamily:
    """変形パラメータ t を動かせる重みの族"""
    label: str
    params: tuple  # t 以外のパラメータ (name, value) の組

    @property
    def t_name(self) -> str:
        return T_PARAM[self.label]

    def at(self, t) -> WeightSpec:
        return preset(self.label, **dict(self.params), **{self.t_name: exact(t)})

    def param(self, name: str):
        return dict(self.params)[name]


def t_family(label: str, **params) -> TFamily:
    if label not in T_PARAM:
        raise FamilyMismatch(f"{label} は t パラメータを持たない")
    t_name = T_PARAM[label]
    params.pop(t_name, None)
    return TFamily(label, tuple(sorted((k, v) for k, v in params.items())))


def t_family_of(w: WeightSpec, label: str) -> tuple[TFamily, Fraction]:
    params = identify(w, label)
    if label not in T_PARAM:
        raise FamilyMismatch(f"{label} は t パラメータを持たない")
    t = params[T_PARAM[label]]
    return t_family(label, **params), t
