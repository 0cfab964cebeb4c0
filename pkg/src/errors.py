"""例外階層 — exit_code は CLI の終了コードに直結"""


class LadderOpsError(Exception):
    """全エラーの基底。context にはキャンペーン中の (check, n, z) を載せる"""

    exit_code = 2

    def __init__(self, message: str = "", **context):
        super().__init__(message)
        self.context: dict = dict(context)

    def with_context(self, **context) -> "LadderOpsError":
        for k, v in context.items():
            self.context.setdefault(k, v)
        return self

    def __str__(self):
        base = super().__str__()
        if not self.context:
            return base
        ctx = ", ".join(f"{k}={v}" for k, v in self.context.items())
        return f"{base} [{ctx}]"


# ── 入力・設定系 (exit 2) ──
class ConfigError(LadderOpsError):
    pass


class ExponentOutOfRange(LadderOpsError):
    pass


class NegativeWeight(LadderOpsError):
    pass


class BadSupportPoint(LadderOpsError):
    pass


class OutOfSupport(LadderOpsError):
    pass


class SingularPoint(LadderOpsError):
    pass


class ZOnSupport(LadderOpsError):
    pass


class BadNodeCount(LadderOpsError):
    pass


class DegreeOutOfRange(LadderOpsError):
    pass


class FamilyMismatch(LadderOpsError):
    pass


class StepTooLarge(LadderOpsError):
    pass


# ── 数値系 (exit 3) ──
class EvaluationFailure(LadderOpsError):
    exit_code = 3


class PrecisionExhausted(LadderOpsError):
    exit_code = 3
