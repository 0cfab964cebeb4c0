"""
検証キャンペーン — (重み, n 範囲, z 標本) に対する恒等式の一括チェック

■ チェック:
  orthogonality / ladder / compat / rhp / plemelj / oracle / diff_t /
  kernel_oracle / canary / direct_form / ibp
■ 各チェックは最悪残差とその位置 (n, z) を記録し、許容値ポリシーと比べる
■ 同じ Campaign からは常に同じ Report（逐次実行・固定シード）
"""
from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .closedforms import jacobi_classical, laguerre_classical, named_kernel, shifted_jacobi_classical
from .config import config
from .errors import BadNodeCount, ConfigError, DegreeOutOfRange, FamilyMismatch, LadderOpsError
from .ladder import (
    FH_SHIFT,
    compat_residuals,
    diff_identity_residual,
    direct_pair,
    ibp_residuals,
    ladder_sweep,
    lowering_residual,
    raising_residual,
    reconstruct_pair,
)
from .opcore import (
    RecurrenceTable,
    moments,
    orthogonality_residual,
    recurrence_moment_oracle,
    recurrence_stieltjes,
)
from .precision import Precision, context, exact
from .quadrature import shift_admissible
from .rhp import (
    cauchy_commutes_residual,
    cauchy_derivative_residual,
    jump_residual,
    ladder_from_r_residual,
    r_elements_residual,
    y_frame,
)
from .weights import (
    T_PARAM,
    Family,
    WeightSpec,
    atom_poles,
    identify,
    kernel_divdiff,
    prefactor_poles,
    t_family_of,
)

logger = logging.getLogger(__name__)

ALL_CHECKS = (
    "orthogonality", "ladder", "compat", "rhp", "plemelj", "oracle",
    "diff_t", "kernel_oracle", "canary", "direct_form", "ibp",
)
# family_label が無いと走らないチェック
LABELLED_CHECKS = ("diff_t", "kernel_oracle")

# 丸め誤差だけで決まるチェックの許容値 = EPS_FACTOR × 2^(1−bits)
EPS_FACTOR = 10 ** 12
ORACLE_N_MAX = 8
DIFF_N_MAX = 5
CANARY_INDEX = 3
CANARY_DELTA = Fraction(1, 10 ** 6)
EXCLUSION_RADIUS = 0.1

# Plemelj スモークの既定の内点（台ごと）
PLEMELJ_X = {
    Family.LAGUERRE: Fraction(13, 10),
    Family.JACOBI: Fraction(3, 10),
    Family.SHIFTED_JACOBI: Fraction(37, 100),
}


@dataclass(frozen=True)
class Campaign:
    weight: WeightSpec
    n_max: int
    z_samples: tuple
    checks: tuple = ALL_CHECKS
    precision_bits: int = 256
    node_count: int = 200
    seed: int = 42
    family_label: Optional[str] = None
    tolerances: tuple = ()                     # (名前, 値) の上書き
    perturb: Optional[tuple] = None            # (j, δ): β_j に δ を足した表で検証
    step: Optional[Fraction] = None            # diff_t の差分幅

    def __post_init__(self):
        unknown = [c for c in self.checks if c not in ALL_CHECKS]
        if unknown:
            raise ConfigError(f"未知のチェック: {unknown}")
        if self.n_max < 1:
            raise ConfigError(f"n_max は 1 以上: {self.n_max}")
        if not self.z_samples:
            raise ConfigError("z 標本が空")
        for z in self.z_samples:
            if not admissible_z(self.weight, complex(z)):
                raise ConfigError(f"z={z} が台上か極の除外円内")

    @property
    def precision(self) -> Precision:
        return Precision(self.precision_bits, self.node_count, exact(config.laguerre_trunc))

    @property
    def table_size(self) -> int:
        # compat の n+1 と diff_t の β_{n+1} の分
        return self.n_max + 2

    def as_dict(self) -> dict:
        return {
            "weight": str(self.weight),
            "family_label": self.family_label,
            "n_max": self.n_max,
            "z_samples": [[z.real, z.imag] for z in map(complex, self.z_samples)],
            "checks": list(self.checks),
            "perturb": None if self.perturb is None else [self.perturb[0], str(self.perturb[1])],
        }


@dataclass
class CheckResult:
    name: str
    tolerance: float
    worst: object = 0
    at_n: Optional[int] = None
    at_z: Optional[complex] = None
    count: int = 0
    note: str = ""
    failed: bool = False
    # canary は「残差が許容値以上」で合格
    detect: bool = False

    def record(self, residual, n=None, z=None):
        self.count += 1
        if residual is None:
            return
        if self.count == 1 or residual > self.worst:
            self.worst = residual
            self.at_n = n
            self.at_z = None if z is None else complex(z)

    @property
    def passed(self) -> bool:
        if self.failed:
            return False
        if self.count == 0:
            return True
        if self.detect:
            return self.worst >= self.tolerance
        return self.worst <= self.tolerance


@dataclass
class Report:
    campaign: Campaign
    results: dict = field(default_factory=dict)
    convergence: Optional[object] = None
    duration_ms: Optional[float] = None
    skipped: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def failures(self) -> list[str]:
        return [name for name, r in self.results.items() if not r.passed]


# ================================================================
# z 標本
# ================================================================
def _exclusion_points(w: WeightSpec) -> list[float]:
    pts = [float(p) for p in atom_poles(w) + prefactor_poles(w)]
    for a in w.atoms:
        if a.kind.value == "power_one_minus_k2x2" and a.p("k2") > 0:
            r = 1 / float(a.p("k2")) ** 0.5
            pts.extend((r, -r))
    return pts


def _hull(w: WeightSpec) -> tuple[float, float]:
    lo, hi = w.support
    # Laguerre は [0, 10] を名目上の包とする
    return float(lo), 10.0 if hi is None else float(hi)


def admissible_z(w: WeightSpec, z: complex) -> bool:
    lo, hi = w.support
    if z.imag == 0:
        if z.real >= float(lo) and (hi is None or z.real <= float(hi)):
            return False
    return all(abs(z - p) >= EXCLUSION_RADIUS for p in _exclusion_points(w))


def default_z_samples(w: WeightSpec, count: int = 0, seed: int | None = None) -> list[complex]:
    """半分は複素（|Im| ∈ [0.5, 3]）、半分は台から 0.5 以上離れた実数"""
    count = count or config.z_sample_count
    seed = config.seed if seed is None else seed
    rng = random.Random(seed)
    lo, hi = _hull(w)
    width = hi - lo
    out: list[complex] = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 100 * count:
            raise ConfigError(f"許容される z 標本を {count} 個作れない")
        if len(out) % 2 == 0:
            re = rng.uniform(lo - width / 2, hi + width / 2)
            im = rng.uniform(0.5, 3.0) * rng.choice((-1, 1))
            z = complex(re, im)
        elif w.family is Family.LAGUERRE:
            z = complex(-rng.uniform(0.5, 3.0), 0)
        else:
            d = rng.uniform(0.5, 2.0)
            z = complex(lo - d if rng.random() < 0.5 else hi + d, 0)
        if admissible_z(w, z):
            out.append(z)
    return out


def plemelj_point(w: WeightSpec) -> Fraction:
    """跳びの確認に使う内点（ジャンプ点・FH 点から離す）"""
    x = PLEMELJ_X[w.family]
    avoid = {j.t for j in w.jumps}
    if w.fh is not None:
        avoid.add(w.fh.t)
    while any(abs(x - a) < Fraction(1, 20) for a in avoid):
        x += Fraction(1, 10)
    return x


# ================================================================
# キャンペーン実行
# ================================================================
class CampaignRunner:
    """Campaign を逐次に実行して Report を組み立てる"""

    def __init__(self, campaign: Campaign):
        self.c = campaign
        self.w = campaign.weight
        self.prec = campaign.precision
        self.ctx = context(self.prec.bits)
        self.overrides = dict(campaign.tolerances)
        self.tab: RecurrenceTable | None = None

    # ── 許容値 ──
    def _tolerance(self, check: str) -> float:
        if check in self.overrides:
            return float(self.overrides[check])
        base = check.split(".")[0]
        if base in self.overrides:
            return float(self.overrides[base])
        tol = {**config.tolerances, **self.overrides}
        if base in ("orthogonality", "kernel_oracle"):
            return EPS_FACTOR * 2.0 ** (1 - self.prec.bits)
        if base == "plemelj":
            return tol["plemelj"]
        if base == "canary":
            return tol["canary_min"]
        if base == "diff_t":
            return tol["diff_t_fh"] if self.w.fh is not None else tol["diff_t"]
        return tol["identity"] if self.w.is_smooth else tol["fh_jump"]

    def _result(self, report: Report, name: str, detect: bool = False) -> CheckResult:
        if name not in report.results:
            report.results[name] = CheckResult(name, self._tolerance(name), detect=detect)
        return report.results[name]

    def run(self) -> Report:
        c = self.c
        t0 = time.monotonic()
        report = Report(c)
        logger.info(f"🔬 キャンペーン開始: {self.w} n_max={c.n_max} z={len(c.z_samples)}個 "
                    f"bits={c.precision_bits} nodes={c.node_count}")
        tab = recurrence_stieltjes(self.w, c.table_size, self.prec)
        if c.perturb is not None:
            j, delta = c.perturb
            tab = tab.perturbed(j, delta)
            logger.warning(f"⚠️ β_{j} に {float(exact(delta)):g} を加えた表で検証")
        self.tab = tab

        for check in c.checks:
            if check in LABELLED_CHECKS and c.family_label is None:
                report.skipped[check] = "family_label なし"
                continue
            method = getattr(self, f"_check_{check}")
            try:
                note = method(report)
            except LadderOpsError as e:
                raise e.with_context(check=check)
            if note:
                report.skipped[check] = note
                logger.info(f"  ⏭️ {check}: {note}")

        report.convergence = self._convergence()
        if config.report_timing:
            report.duration_ms = round((time.monotonic() - t0) * 1000, 1)
        for name, r in report.results.items():
            mark = "✅" if r.passed else "❌"
            logger.info(f"  {mark} {name}: worst={self.ctx.nstr(self.ctx.convert(r.worst), 3)} "
                        f"(tol={r.tolerance:g}, n={r.at_n})")
        logger.info(f"🔬 キャンペーン終了: {'合格' if report.passed else '不合格'}")
        return report

    def _z_loop(self, fn):
        """各 z で fn(z) を呼び、失敗に (z) を載せる"""
        for z in self.c.z_samples:
            try:
                fn(z)
            except LadderOpsError as e:
                raise e.with_context(z=complex(z))

    # ================================================================
    # 個別チェック
    # ================================================================
    def _check_orthogonality(self, report: Report):
        worst, (i, j) = orthogonality_residual(self.tab)
        self._result(report, "orthogonality").record(worst, j)

    def _check_ladder(self, report: Report):
        w, tab, n_max = self.w, self.tab, self.c.n_max
        res = self._result(report, "ladder")

        def at(z):
            pairs = ladder_sweep(w, tab, z, n_max)
            for n in range(1, n_max + 1):
                try:
                    res.record(lowering_residual(w, tab, n, z, pairs), n, z)
                    res.record(raising_residual(w, tab, n, z, pairs), n, z)
                except LadderOpsError as e:
                    raise e.with_context(n=n)
        self._z_loop(at)

    def _check_compat(self, report: Report):
        w, tab, n_max = self.w, self.tab, self.c.n_max
        res = self._result(report, "compat")

        def at(z):
            pairs = ladder_sweep(w, tab, z, n_max + 1)
            for n in range(n_max + 1):
                s1, s2, s2p = compat_residuals(w, tab, n, z, pairs)
                if n < n_max:
                    res.record(s1, n, z)
                    res.record(s2, n, z)
                if s2p is not None:
                    res.record(s2p, n, z)
        self._z_loop(at)

    def _check_rhp(self, report: Report):
        w, tab = self.w, self.tab
        n_hi = min(self.c.n_max, config.rhp_n_max)
        det = self._result(report, "rhp.det")
        trace = self._result(report, "rhp.trace")
        relem = self._result(report, "rhp.r_elements")
        from_r = self._result(report, "rhp.ladder_from_r")
        commute = self._result(report, "rhp.cauchy_commutes")
        cderiv = self._result(report, "rhp.cauchy_derivative")

        def at(z):
            for n in range(1, n_hi + 1):
                frame = y_frame(w, tab, n, z)
                det.record(frame.dety_residual, n, z)
                trace.record(frame.trace_residual, n, z)
                relem.record(max(max(row) for row in r_elements_residual(w, tab, n, z)), n, z)
                from_r.record(ladder_from_r_residual(frame, tab), n, z)
                commute.record(cauchy_commutes_residual(w, tab, n, n, z), n, z)
                commute.record(cauchy_commutes_residual(w, tab, n - 1, n, z, "monomial"), n, z)
                cderiv.record(max(cauchy_derivative_residual(w, tab, n, z).values()), n, z)
        self._z_loop(at)

    def _check_plemelj(self, report: Report):
        res = self._result(report, "plemelj")
        n = min(self.c.n_max, 3)
        x = plemelj_point(self.w)
        try:
            res.record(jump_residual(self.w, self.tab, n, x), n, complex(float(x), 0))
        except (LadderOpsError, ArithmeticError, ValueError) as e:
            # スモーク扱い: 中断せず失敗として記録
            logger.warning(f"⚠️ Plemelj スモーク失敗 (n={n}): {e}")
            res.count += 1
            res.failed = True
            res.note = str(e)

    def _check_oracle(self, report: Report):
        w, tab, prec = self.w, self.tab, self.prec
        ctx = tab.ctx
        N = min(self.c.n_max, ORACLE_N_MAX) + 1
        mv = moments(w, 2 * N, prec)
        orc = recurrence_moment_oracle(mv, N)
        res = self._result(report, "oracle")
        for n in range(N):
            vals = [(tab.alpha[n], orc.alpha[n]), (tab.h[n], orc.h[n]), (tab.p1[n], orc.p1[n])]
            if n >= 1:
                vals.append((tab.beta[n], orc.beta[n]))
            for a, b in vals:
                res.record(_rel(ctx, a, ctx.convert(b)), n)

        label = self.c.family_label
        if label is None:
            return None
        params = identify(w, label)
        closed = None
        if label == "laguerre_classical":
            closed = lambda n: laguerre_classical(n, params["lam"], ctx)  # noqa: E731
        elif label == "jacobi_classical":
            closed = lambda n: jacobi_classical(n, params["alpha"], params["beta"], ctx)  # noqa: E731
        elif label == "shifted_jacobi_classical":
            closed = lambda n: shifted_jacobi_classical(n, params["alpha"], params["beta"], ctx)  # noqa: E731
        if closed is not None:
            cf = self._result(report, "oracle.closed_form")
            for n in range(tab.N):
                v = closed(n)
                pairs = [(tab.alpha[n], v.alpha_n), (tab.h[n], v.h_n), (tab.p1[n], v.p_n)]
                if n >= 1:
                    pairs.append((tab.beta[n], v.beta_n))
                for a, b in pairs:
                    cf.record(_rel(ctx, a, b), n)
        found = []

        def at(z):
            pairs = ladder_sweep(w, tab, z, self.c.n_max)
            for n in range(self.c.n_max + 1):
                A, B = reconstruct_pair(w, tab, n, z, label)
                found.append((max(_rel(ctx, A, pairs[n].A), _rel(ctx, B, pairs[n].B)), n, z))
        try:
            self._z_loop(at)
        except FamilyMismatch:
            return f"{label} は部分分数形を持たない"
        pf = self._result(report, "oracle.partial_fraction")
        for r, n, z in found:
            pf.record(r, n, z)
        return None

    def _check_kernel_oracle(self, report: Report):
        w, tab = self.w, self.tab
        ctx = tab.ctx
        label = self.c.family_label
        params = identify(w, label)
        rng = random.Random(self.c.seed)
        lo, hi = w.support
        top = float(hi) if hi is not None else 10.0
        poles = set(atom_poles(w))
        res = self._result(report, "kernel_oracle")

        def at(z):
            for _ in range(5):
                x = Fraction(rng.uniform(float(lo), top)).limit_denominator(10 ** 6)
                if x <= lo or x in poles:
                    continue
                got = kernel_divdiff(w, z, x, ctx)
                want = named_kernel(label, params, ctx.convert(z), x, ctx)
                res.record(_rel(ctx, got, want), None, z)
        self._z_loop(at)

    def _check_diff_t(self, report: Report):
        label = self.c.family_label
        if label not in T_PARAM:
            return f"{label} は t 微分恒等式を持たない"
        fam, t = t_family_of(self.w, label)
        res = self._result(report, "diff_t")
        for n in range(1, min(self.c.n_max, DIFF_N_MAX) + 1):
            try:
                out = diff_identity_residual(fam, n, t, self.c.step, self.prec)
            except LadderOpsError as e:
                raise e.with_context(n=n)
            res.record(max(out.values()), n)
        return None

    def _check_canary(self, report: Report):
        """β_3 に 1e−6 を加えた表で lowering 残差が十分大きくなるか"""
        tab = self.tab
        if tab.N <= CANARY_INDEX:
            raise DegreeOutOfRange(f"カナリアには N > {CANARY_INDEX} が必要")
        bad = tab.perturbed(CANARY_INDEX, CANARY_DELTA)
        res = self._result(report, "canary", detect=True)
        top = self.c.n_max

        def at(z):
            pairs = ladder_sweep(self.w, bad, z, top)
            for n in range(1, top + 1):
                res.record(lowering_residual(self.w, bad, n, z, pairs), n, z)
        self._z_loop(at)

    def _check_direct_form(self, report: Report):
        w, tab = self.w, self.tab
        if any(sf.exponent <= 0 for sf in w.singular_factors() if sf.key != "fh"):
            return "端点指数が正でない（直接形の端点積分が発散）"
        if w.fh is not None and not shift_admissible(w, FH_SHIFT):
            return "FH 指数が正でない"
        ctx = tab.ctx
        res = self._result(report, "direct_form")

        def at(z):
            pairs = ladder_sweep(w, tab, z, self.c.n_max)
            for n in range(self.c.n_max + 1):
                d = direct_pair(w, tab, n, z)
                r = _rel(ctx, d.A, pairs[n].A)
                if n >= 1:
                    r = max(r, _rel(ctx, d.B, pairs[n].B))
                res.record(r, n, z)
        self._z_loop(at)
        return None

    def _check_ibp(self, report: Report):
        if not self.w.is_smooth:
            return "ジャンプ・FH を含む重み"
        res = self._result(report, "ibp")

        def at(z):
            for n in range(1, self.c.n_max + 1):
                res.record(max(ibp_residuals(self.w, self.tab, n, z).values()), n, z)
        self._z_loop(at)
        return None

    # ── 収束の証拠 ──
    def _convergence(self):
        """ノード数 m/2 と m の表で h_j の最大相対変化（失敗時は None）"""
        half = self.prec.with_nodes(self.prec.nodes // 2)
        try:
            coarse = recurrence_stieltjes(self.w, self.tab.N, half)
        except (BadNodeCount, LadderOpsError) as e:
            logger.warning(f"⚠️ 収束チェックを省略: {e}")
            return None
        ctx = self.tab.ctx
        return max(_rel(ctx, a, ctx.convert(b)) for a, b in zip(self.tab.h, coarse.h))


def _rel(ctx, a, b):
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else abs(a - b)


def run_campaign(c: Campaign) -> Report:
    return CampaignRunner(c).run()
