"""
出力整形 — 数値の文字列化、CSV / JSON 書き出し

■ 数値は指数表記・コンテキスト精度の有効桁（ロケール非依存）
■ JSON はキー順固定。REPORT_TIMING=false なら時間を含めずバイト安定
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import sys
from fractions import Fraction

from .config import config
from .errors import ConfigError
from .opcore import RecurrenceTable, hankel_dets
from .precision import context

logger = logging.getLogger(__name__)


def digits_for(bits: int) -> int:
    return max(int(bits * math.log10(2)), 1)


def fmt(x, bits: int | None = None, digits: int | None = None) -> str:
    """実数を指数表記の文字列に"""
    bits = bits or config.precision_bits
    ctx = context(bits)
    digits = digits or digits_for(bits)
    if isinstance(x, Fraction):
        x = ctx.mpf(x.numerator) / x.denominator
    elif isinstance(x, float) and math.isinf(x):
        return "inf"
    return ctx.nstr(ctx.convert(x), digits, min_fixed=0, max_fixed=0)


def fmt_complex(z, bits: int | None = None, digits: int | None = None) -> list[str]:
    ctx = context(bits or config.precision_bits)
    z = ctx.convert(z)
    return [fmt(ctx.re(z), bits, digits), fmt(ctx.im(z), bits, digits)]


def _short(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


# ================================================================
# CSV / JSON
# ================================================================
def to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def check_output_path(path: str | None):
    if not path or path == "-":
        return
    parent = os.path.dirname(path) or "."
    if not os.path.isdir(parent):
        raise ConfigError(f"出力先ディレクトリが存在しない: {parent}")


def write_output(text: str, path: str | None = None):
    """path が None / "-" なら標準出力"""
    if not path or path == "-":
        sys.stdout.write(text)
        return
    check_output_path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as e:
        raise ConfigError(f"出力ファイルに書けない: {path} ({e})") from e
    logger.info(f"💾 出力: {path}")


# ================================================================
# 漸化式表・Hankel 行列式
# ================================================================
RECURRENCE_HEADER = ["n", "alpha", "beta", "h", "p"]


def recurrence_rows(tab: RecurrenceTable) -> list[list]:
    b = tab.bits
    return [
        [n, fmt(tab.alpha[n], b), fmt(tab.beta[n], b), fmt(tab.h[n], b), fmt(tab.p1[n], b)]
        for n in range(tab.N)
    ]


def recurrence_dict(tab: RecurrenceTable) -> dict:
    return {
        "weight": str(tab.weight),
        "source": tab.source,
        "precision_bits": tab.bits,
        "nodes": tab.nodes,
        "rows": [dict(zip(RECURRENCE_HEADER, row)) for row in recurrence_rows(tab)],
    }


def hankel_rows(tab: RecurrenceTable, closed: list | None = None) -> list[list]:
    """n, D_n（closed があれば閉形式と相対差も）"""
    b = tab.bits
    rows = []
    for n, d in enumerate(hankel_dets(tab), start=1):
        row = [n, fmt(d, b)]
        if closed is not None:
            c = closed[n - 1]
            row += [fmt(c, b), fmt(abs(d - c) / abs(c), b, 6)]
        rows.append(row)
    return rows


# ================================================================
# ladder / RHP ダンプ
# ================================================================
LADDER_HEADER = [
    "n", "z_re", "z_im", "A_re", "A_im", "B_re", "B_im",
    "A_smooth_re", "A_smooth_im", "A_counting_re", "A_counting_im",
    "A_jumps_re", "A_jumps_im", "A_fh_re", "A_fh_im",
    "B_smooth_re", "B_smooth_im", "B_counting_re", "B_counting_im",
    "B_jumps_re", "B_jumps_im", "B_fh_re", "B_fh_im",
]


def _parts(p, bits) -> list[str]:
    jumps = sum(p.jump_residues, 0 * p.smooth_integral)
    return (fmt_complex(p.smooth_integral, bits) + fmt_complex(p.counting_term, bits)
            + fmt_complex(jumps, bits) + fmt_complex(p.fh_term, bits))


def ladder_rows(pairs: list, bits: int) -> list[list]:
    rows = []
    for p in pairs:
        rows.append([p.n] + fmt_complex(p.z, bits) + fmt_complex(p.A, bits) + fmt_complex(p.B, bits)
                    + _parts(p.parts_A, bits) + _parts(p.parts_B, bits))
    return rows


def ladder_entry(n: int, z, lowering, raising, s1, s2, s2p, bits: int) -> dict:
    def f(v):
        return None if v is None else fmt(v, bits, 6)
    return {"n": n, "z": _short(z), "lowering": f(lowering), "raising": f(raising),
            "s1": f(s1), "s2": f(s2), "s2p": f(s2p)}


def rhp_entry(frame, r_residuals, jump, bits: int) -> dict:
    return {
        "n": frame.n,
        "z": _short(frame.z),
        "dety_residual": fmt(frame.dety_residual, bits, 6),
        "trace_residual": fmt(frame.trace_residual, bits, 6),
        "r_residuals": [[fmt(v, bits, 6) for v in row] for row in r_residuals],
        "jump_residual": None if jump is None else fmt(jump, bits, 6),
    }


RHP_HEADER = ["n", "z_re", "z_im", "dety_residual", "trace_residual",
              "r11", "r12", "r21", "r22", "jump_residual"]


def rhp_row(entry: dict) -> list:
    (a, b), (c, d) = entry["r_residuals"]
    return [entry["n"], entry["z"][0], entry["z"][1], entry["dety_residual"],
            entry["trace_residual"], a, b, c, d, entry["jump_residual"] or ""]


# ================================================================
# 検証レポート
# ================================================================
def report_dict(report) -> dict:
    c = report.campaign
    bits = c.precision_bits
    results = {}
    for name, r in report.results.items():
        entry = {
            "worst": fmt(r.worst, bits, 6),
            "at": {"n": r.at_n, "z": None if r.at_z is None else _short(r.at_z)},
            "pass": r.passed,
            "tolerance": r.tolerance,
        }
        if r.note:
            entry["note"] = r.note
        results[name] = entry
    meta = {
        "precision_bits": bits,
        "nodes": c.node_count,
        "seed": c.seed,
        "convergence": None if report.convergence is None else fmt(report.convergence, bits, 6),
        "skipped": dict(report.skipped),
    }
    if report.duration_ms is not None:
        meta["duration_ms"] = report.duration_ms
    return {"campaign": c.as_dict(), "results": results, "meta": meta}


REPORT_HEADER = ["check", "worst", "n", "z_re", "z_im", "tolerance", "pass"]


def report_rows(report) -> list[list]:
    d = report_dict(report)
    rows = []
    for name, r in d["results"].items():
        z = r["at"]["z"] or ["", ""]
        rows.append([name, r["worst"], "" if r["at"]["n"] is None else r["at"]["n"],
                     z[0], z[1], r["tolerance"], "pass" if r["pass"] else "fail"])
    return rows
