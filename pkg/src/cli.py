"""
コマンドライン — 重み設定の読み込み、表の構築、検証キャンペーン、各種ダンプ

  recurrence   漸化式表 (α, β, h, 𝐩)
  verify       検証キャンペーン → レポート
  ladder       A_n(z), B_n(z) と内訳・残差
  rhp          Y 行列の恒等式残差
  hankel       Hankel 行列式 D_n
  diff-check   t 微分恒等式

終了コード: 0 合格 / 1 検証失敗 / 2 使い方・設定エラー / 3 数値エラー
"""
from __future__ import annotations

import argparse
import json
import logging
from fractions import Fraction
from typing import Optional, Sequence

from .closedforms import barnes_g_hankel
from .config import config
from .errors import ConfigError, LadderOpsError
from .ladder import compat_residuals, diff_identity_residual, ladder_sweep, lowering_residual, raising_residual
from .opcore import recurrence_stieltjes
from .precision import Precision, exact
from .rhp import jump_residual, r_elements_residual, y_frame
from .serialize import (
    LADDER_HEADER,
    RECURRENCE_HEADER,
    REPORT_HEADER,
    RHP_HEADER,
    fmt,
    hankel_rows,
    ladder_entry,
    ladder_rows,
    recurrence_dict,
    recurrence_rows,
    report_dict,
    report_rows,
    rhp_entry,
    rhp_row,
    to_csv,
    to_json,
    check_output_path,
    write_output,
)
from .verify import ALL_CHECKS, Campaign, default_z_samples, plemelj_point, run_campaign
from .weights import T_PARAM, WeightSpec, identify, t_family_of, weight_from_json

logger = logging.getLogger(__name__)


# ================================================================
# 引数の解釈
# ================================================================
def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--weight", required=True, help="重み設定 JSON のパス")
    p.add_argument("--family", default=None, help="系統ラベル（例: chen_mckay）")
    p.add_argument("--n-max", type=int, default=None, help=f"最大次数 (既定 {config.n_max})")
    p.add_argument("--precision-bits", type=int, default=None, help="作業精度 (bit)")
    p.add_argument("--nodes", type=int, default=None, help="区間あたりの求積ノード数")
    p.add_argument("--seed", type=int, default=None, help="z 標本の乱数シード")
    p.add_argument("--out", default=None, help="出力パス（省略時は標準出力）")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--tol", action="append", default=[], metavar="CHECK=VALUE",
                   help="許容値の上書き（繰り返し可）")
    p.add_argument("--z", action="append", default=[], help="評価点 z（例: 1+2j、繰り返し可）")
    p.add_argument("--n", action="append", type=int, default=[], help="次数（繰り返し可）")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ladderops",
        description="直交多項式の ladder 係数・RHP 恒等式の高精度検証",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, desc in (
        ("recurrence", "漸化式表を出力"),
        ("ladder", "A_n, B_n と内訳を出力"),
        ("rhp", "Y 行列の恒等式残差を出力"),
        ("hankel", "Hankel 行列式を出力"),
    ):
        _add_common(sub.add_parser(name, help=desc))

    p = sub.add_parser("verify", help="検証キャンペーンを実行")
    _add_common(p)
    p.add_argument("--checks", default=None, help=f"カンマ区切り ({','.join(ALL_CHECKS)})")
    p.add_argument("--perturb-beta", default=None, metavar="J=DELTA", help="β_J に DELTA を加えて検証")
    p.add_argument("--step", default=None, help="t 微分の差分幅")

    p = sub.add_parser("diff-check", help="t 微分恒等式を確認")
    _add_common(p)
    p.add_argument("--step", default=None, help="差分幅")
    return parser


def _positive(name: str, v: Optional[int]) -> Optional[int]:
    if v is not None and v <= 0:
        raise ConfigError(f"{name} は正の整数: {v}")
    return v


def _parse_z(text: str) -> complex:
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError as e:
        raise ConfigError(f"z を解釈できない: {text!r}") from e


def _parse_pair(text: str, what: str) -> tuple[str, str]:
    if "=" not in text:
        raise ConfigError(f"{what} は KEY=VALUE 形式: {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def _parse_tolerances(items: list[str]) -> dict:
    out = {}
    for item in items:
        k, v = _parse_pair(item, "--tol")
        if k.split(".")[0] not in ALL_CHECKS and k not in config.tolerances:
            raise ConfigError(f"未知の許容値キー: {k}")
        try:
            out[k] = float(v)
        except ValueError as e:
            raise ConfigError(f"許容値が数値でない: {item!r}") from e
    return out


def load_weight(path: str) -> tuple[WeightSpec, Optional[str]]:
    """重み JSON を読む。"label" キーがあれば系統ラベルとして返す"""
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"重み設定を読めない: {path} ({e})") from e
    w = weight_from_json(text)
    label = None
    try:
        obj = json.loads(text)
        if isinstance(obj, dict) and isinstance(obj.get("label"), str):
            label = obj["label"]
    except ValueError:
        pass
    return w, label


class _Run:
    """サブコマンド共通の設定"""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        check_output_path(args.out)
        self.w, label = load_weight(args.weight)
        self.label = args.family or label
        if self.label is not None:
            identify(self.w, self.label)
        self.n_max = _positive("--n-max", args.n_max) or config.n_max
        bits = _positive("--precision-bits", args.precision_bits)
        nodes = _positive("--nodes", args.nodes)
        self.prec = Precision.from_config(bits, nodes)
        self.seed = config.seed if args.seed is None else args.seed
        self.tolerances = _parse_tolerances(args.tol)
        self.zs = [_parse_z(z) for z in args.z]
        self.ns = list(args.n)
        for n in self.ns:
            if n < 0:
                raise ConfigError(f"--n は 0 以上: {n}")

    def z_samples(self) -> list[complex]:
        return self.zs or default_z_samples(self.w, config.z_sample_count, self.seed)

    def emit(self, header: list[str], rows: list[list], obj) -> None:
        if self.args.format == "csv":
            write_output(to_csv(header, rows), self.args.out)
        else:
            write_output(to_json(obj), self.args.out)


# ================================================================
# サブコマンド
# ================================================================
def cmd_recurrence(run: _Run) -> int:
    tab = recurrence_stieltjes(run.w, run.n_max + 1, run.prec)
    run.emit(RECURRENCE_HEADER, recurrence_rows(tab), recurrence_dict(tab))
    return 0


def _parse_perturb(text: Optional[str]):
    if text is None:
        return None
    j, d = _parse_pair(text, "--perturb-beta")
    try:
        return int(j), exact(d)
    except ValueError as e:
        raise ConfigError(f"--perturb-beta を解釈できない: {text!r}") from e


def cmd_verify(run: _Run) -> int:
    args = run.args
    checks = ALL_CHECKS
    if args.checks:
        checks = tuple(c.strip() for c in args.checks.split(",") if c.strip())
    campaign = Campaign(
        weight=run.w,
        n_max=run.n_max,
        z_samples=tuple(run.z_samples()),
        checks=checks,
        precision_bits=run.prec.bits,
        node_count=run.prec.nodes,
        seed=run.seed,
        family_label=run.label,
        tolerances=tuple(sorted(run.tolerances.items())),
        perturb=_parse_perturb(args.perturb_beta),
        step=None if args.step is None else exact(args.step),
    )
    report = run_campaign(campaign)
    run.emit(REPORT_HEADER, report_rows(report), report_dict(report))
    if not report.passed:
        logger.warning(f"❌ 検証失敗: {', '.join(report.failures())}")
        return 1
    return 0


def cmd_ladder(run: _Run) -> int:
    ns = run.ns or list(range(run.n_max + 1))
    n_hi = max(ns)
    tab = recurrence_stieltjes(run.w, n_hi + 2, run.prec)
    bits = tab.bits
    zs = run.zs or run.z_samples()
    rows, entries, dumped = [], [], []
    for z in zs:
        pairs = ladder_sweep(run.w, tab, z, n_hi + 1)
        chosen = [pairs[n] for n in ns]
        rows += ladder_rows(chosen, bits)
        for p in chosen:
            n = p.n
            lo = lowering_residual(run.w, tab, n, z, pairs) if n >= 1 else None
            ra = raising_residual(run.w, tab, n, z, pairs) if n >= 1 else None
            s1, s2, s2p = compat_residuals(run.w, tab, n, z, pairs)
            entries.append(ladder_entry(n, z, lo, ra, s1, s2, s2p, bits))
            dumped.append(dict(zip(LADDER_HEADER, ladder_rows([p], bits)[0])))
    run.emit(LADDER_HEADER, rows, {"weight": str(run.w), "pairs": dumped, "residuals": entries})
    return 0


def cmd_rhp(run: _Run) -> int:
    ns = run.ns or list(range(1, min(run.n_max, config.rhp_n_max) + 1))
    tab = recurrence_stieltjes(run.w, max(ns) + 1, run.prec)
    x = plemelj_point(run.w)
    entries = []
    for n in ns:
        try:
            jump = jump_residual(run.w, tab, n, x)
        except (LadderOpsError, ArithmeticError, ValueError) as e:
            logger.warning(f"⚠️ Plemelj スモーク失敗 (n={n}): {e}")
            jump = None
        for z in run.z_samples():
            frame = y_frame(run.w, tab, n, z)
            entries.append(rhp_entry(frame, r_elements_residual(run.w, tab, n, z), jump, tab.bits))
    run.emit(RHP_HEADER, [rhp_row(e) for e in entries], {"weight": str(run.w), "frames": entries})
    return 0


def cmd_hankel(run: _Run) -> int:
    tab = recurrence_stieltjes(run.w, run.n_max, run.prec)
    closed = None
    header = ["n", "D"]
    if run.label == "laguerre_classical":
        lam = identify(run.w, run.label)["lam"]
        closed = [barnes_g_hankel(n, lam, tab.ctx) for n in range(1, tab.N + 1)]
        header += ["D_closed", "rel_diff"]
    rows = hankel_rows(tab, closed)
    obj = {"weight": str(run.w), "rows": [dict(zip(header, r)) for r in rows]}
    run.emit(header, rows, obj)
    return 0


def cmd_diff_check(run: _Run) -> int:
    if run.label is None or run.label not in T_PARAM:
        raise ConfigError(f"diff-check には t を持つ --family が必要 ({', '.join(T_PARAM)})")
    fam, t = t_family_of(run.w, run.label)
    step = None if run.args.step is None else exact(run.args.step)
    key = "diff_t_fh" if run.w.fh is not None else "diff_t"
    tol = run.tolerances.get("diff_t", run.tolerances.get(key, config.tolerances[key]))
    ns = run.ns or list(range(1, min(run.n_max, 5) + 1))
    rows, out, ok = [], [], True
    for n in ns:
        res = diff_identity_residual(fam, n, t, step, run.prec)
        for k, v in res.items():
            rows.append([n, k, fmt(v, run.prec.bits, 6)])
        worst = max(res.values())
        ok = ok and worst <= tol
        out.append({"n": n, "residuals": {k: fmt(v, run.prec.bits, 6) for k, v in res.items()},
                    "pass": bool(worst <= tol)})
    run.emit(["n", "quantity", "residual"], rows,
             {"family": run.label, "t": str(Fraction(t)), "tolerance": tol, "entries": out})
    return 0 if ok else 1


COMMANDS = {
    "recurrence": cmd_recurrence,
    "verify": cmd_verify,
    "ladder": cmd_ladder,
    "rhp": cmd_rhp,
    "hankel": cmd_hankel,
    "diff-check": cmd_diff_check,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run = _Run(args)
        return COMMANDS[args.command](run)
    except LadderOpsError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return e.exit_code
