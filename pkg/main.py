"""
ladderops — 直交多項式の ladder 係数・RHP 恒等式の高精度検証

■ 対象: Laguerre / Jacobi / ShiftedJacobi 型の重み（変形アトム・ジャンプ・FH 因子つき）
■ サブコマンド:
  📐 recurrence   漸化式表 (α_n, β_n, h_n, 𝐩(n))
  🔬 verify       検証キャンペーン（ladder / compat / RHP / オラクル / カナリア …）
  🪜 ladder       A_n(z), B_n(z) と内訳
  🧮 rhp          det Y, R 要素, Plemelj スモーク
  📊 hankel       Hankel 行列式 D_n
  📈 diff-check   t 微分恒等式

使い方: python main.py verify --weight weights/laguerre.json --n-max 8
"""
import logging
import os
import sys

# ── ログ設定 ──
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()

handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]

if os.getenv("ENABLE_FILE_LOG", "false").lower() == "true":
    try:
        os.makedirs("logs", exist_ok=True)
        handlers.append(logging.FileHandler("logs/ladderops.log"))
    except Exception:
        pass

logging.basicConfig(
    level=LOG_LEVEL,
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    handlers=handlers,
)
logger = logging.getLogger("ladderops")

# ── モジュールインポート ──
from src.cli import main  # noqa: E402


if __name__ == "__main__":
    sys.exit(main())
