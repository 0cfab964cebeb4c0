"""
精度コンテキスト

mpmath の既定コンテキスト mp は書き換えず、ビット数ごとに専用の
MPContext を持つ。ユーザー入力のパラメータは Fraction で厳密に保持し、
評価時にだけコンテキストへ持ち上げる。
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

import mpmath

from .config import config
from .errors import BadNodeCount, ConfigError


@lru_cache(maxsize=None)
def context(bits: int) -> mpmath.ctx_mp.MPContext:
    ctx = mpmath.MPContext()
    ctx.prec = bits
    return ctx


def exact(value) -> Fraction:
    """数値を Fraction へ。float は最短表現経由 (0.3 → 3/10)"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ConfigError(f"数値ではありません: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ConfigError(f"有限値ではありません: {value!r}")
        return Fraction(repr(value))
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"数値として解釈できません: {value!r}") from e


def lift(ctx, q):
    """Fraction / int / mp 値をコンテキストの数へ"""
    if isinstance(q, Fraction):
        if q.denominator == 1:
            return ctx.mpf(q.numerator)
        return ctx.mpf(q.numerator) / q.denominator
    if isinstance(q, complex):
        return ctx.mpc(q)
    return ctx.convert(q)


@dataclass(frozen=True)
class Precision:
    """作業精度と求積設定。すべての評価に明示的に渡す"""

    bits: int = 256
    nodes: int = 200
    trunc: Fraction = Fraction(0)

    def __post_init__(self):
        if self.bits < 53:
            raise ConfigError(f"precision_bits が小さすぎます: {self.bits}")
        if self.nodes < 2:
            raise BadNodeCount(f"ノード数は 2 以上が必要: {self.nodes}")

    @classmethod
    def from_config(cls, bits: int | None = None, nodes: int | None = None) -> "Precision":
        return cls(
            bits=bits or config.precision_bits,
            nodes=nodes or config.quad_nodes,
            trunc=exact(config.laguerre_trunc),
        )

    @property
    def ctx(self):
        return context(self.bits)

    @property
    def eps(self):
        return self.ctx.ldexp(1, 1 - self.bits)

    def doubled(self) -> "Precision":
        return replace(self, bits=2 * self.bits)

    def with_nodes(self, nodes: int) -> "Precision":
        return replace(self, nodes=nodes)
