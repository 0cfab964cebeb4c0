"""設定管理 — 精度・ノード数・許容誤差"""
import os
from dataclasses import dataclass, field
from dotenv import load_dotenv

load_dotenv()


@dataclass
class Config:
    # ── 数値精度 ──
    precision_bits: int = int(os.getenv("PRECISION_BITS", "256"))
    quad_nodes: int = int(os.getenv("QUAD_NODES", "200"))
    laguerre_trunc: float = float(os.getenv("LAGUERRE_TRUNC", "0"))  # 0 = 自動
    retry_on_precision_loss: bool = os.getenv("RETRY_ON_PRECISION_LOSS", "true").lower() == "true"

    # ── 検証キャンペーン ──
    seed: int = int(os.getenv("SEED", "42"))
    n_max: int = int(os.getenv("N_MAX", "8"))
    z_sample_count: int = int(os.getenv("Z_SAMPLE_COUNT", "20"))
    rhp_n_max: int = int(os.getenv("RHP_N_MAX", "6"))

    # ── 出力 ──
    report_timing: bool = os.getenv("REPORT_TIMING", "false").lower() == "true"
    log_level: str = os.getenv("LOG_LEVEL", "INFO").upper()
    enable_file_log: bool = os.getenv("ENABLE_FILE_LOG", "false").lower() == "true"

    # ── 許容誤差ポリシー ──
    # orthogonality / kernel_oracle は ε_work 比例なので precision から算出
    tolerances: dict = field(default_factory=lambda: {
        "identity":    1e-15,   # 恒等式（ladder / compat / rhp / oracle）
        "fh_jump":     1e-8,    # FH・ジャンプを含む重み
        "plemelj":     1e-4,    # 境界値スモーク
        "diff_t":      1e-10,   # t 微分（滑らか）
        "diff_t_fh":   1e-8,    # t 微分（FH）
        "canary_min":  1e-8,    # 摂動検知の下限
        "regime":      1e-6,    # 差分商 step/2 の一致度
    })


config = Config()
