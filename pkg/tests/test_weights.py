"""重みモデル: 構築時の検証・評価・v′・分割差分カーネル"""
import json
import random
from fractions import Fraction

import pytest

from src.closedforms import named_kernel
from src.errors import (
    BadSupportPoint,
    ConfigError,
    ExponentOutOfRange,
    FamilyMismatch,
    NegativeWeight,
    OutOfSupport,
    SingularPoint,
    ZOnSupport,
)
from src.weights import (
    Family,
    eval_vprime,
    eval_weight,
    identify,
    kernel_divdiff,
    make_weight,
    preset,
    sigma,
    t_family,
    vprime_divdiff,
    weight_from_json,
    weight_to_json,
)

EXP = [("exp_linear", {"c": 1})]


# ── 構築 ──
def test_classical_laguerre_is_valid():
    w = make_weight("laguerre", 0.5, EXP)
    assert w.family is Family.LAGUERRE
    assert w.lam == Fraction(1, 2)
    assert w.is_smooth


def test_exponent_at_minus_one_rejected():
    with pytest.raises(ExponentOutOfRange):
        make_weight("laguerre", -1.0, EXP)
    with pytest.raises(ExponentOutOfRange):
        make_weight("jacobi", (0, -1))


def test_jump_weight_with_zero_start_is_valid():
    w = make_weight("laguerre", -0.5, EXP, jumps=[(1, 1)], omega0=0)
    assert w.has_step and not w.is_smooth
    assert w.step_value(Fraction(1, 2)) == 0
    assert w.step_value(Fraction(1)) == 1


def test_negative_partial_sum_rejected():
    with pytest.raises(NegativeWeight):
        make_weight("laguerre", 0, EXP, jumps=[(1, -2)])


def test_jump_points_must_be_in_support_and_increasing():
    with pytest.raises(BadSupportPoint):
        make_weight("jacobi", (0, 0), jumps=[(2, 1)])
    with pytest.raises(BadSupportPoint):
        make_weight("jacobi", (0, 0), jumps=[(Fraction(1, 2), 1), (Fraction(1, 4), 1)])


def test_fh_constraints():
    with pytest.raises(ExponentOutOfRange):
        make_weight("jacobi", (0, 0), fh=(0, 0, 1, 0))
    with pytest.raises(BadSupportPoint):
        make_weight("shifted_jacobi", (0, 0), fh=(1, 1, 1, 0))
    with pytest.raises(NegativeWeight):
        make_weight("jacobi", (0, 0), fh=(0, 1, 1, -2))


def test_atom_admissibility():
    with pytest.raises(ConfigError):
        make_weight("jacobi", (0, 0), [("exp_inv_x", {"s": 1})])
    with pytest.raises(ConfigError):
        make_weight("laguerre", 0, [("power_shift", {"c": 1, "gamma": 1})])  # 減衰なし
    with pytest.raises(BadSupportPoint):
        make_weight("shifted_jacobi", (0, 0), [("power_shift_neg", {"t": Fraction(1, 2), "gamma": 1})])
    with pytest.raises(ConfigError):
        make_weight("laguerre", 0, [("no_such_atom", {})])


# ── 評価 ──
def test_eval_weight_examples(ctx, rel):
    assert rel(eval_weight(preset("laguerre_classical", lam=0), 1, ctx), ctx.exp(-1)) < 1e-35
    assert rel(eval_weight(preset("jacobi_classical", alpha=0, beta=0), 0.3, ctx), 1) < 1e-35
    w = preset("laguerre_classical", lam=Fraction(-1, 2))
    assert rel(eval_weight(w, 4, ctx), ctx.exp(-4) / 2) < 1e-35


def test_eval_weight_outside_support(ctx, legendre):
    with pytest.raises(OutOfSupport):
        eval_weight(legendre, 1.5, ctx)
    with pytest.raises(OutOfSupport):
        eval_weight(legendre, 1, ctx)


def test_eval_weight_right_limit_at_jump(ctx, rel):
    w = preset("laguerre_jump", lam=0, omega0=1, points=[(1, 2)])
    assert rel(eval_weight(w, 1, ctx), 3 * ctx.exp(-1)) < 1e-35


def test_eval_vprime_examples(ctx, rel):
    assert rel(eval_vprime(preset("laguerre_classical", lam=2), 1, ctx), -1) < 1e-35
    assert abs(eval_vprime(preset("jacobi_classical", alpha=1, beta=1), 0, ctx)) < 1e-35
    w = preset("pollaczek_jacobi", alpha=0, beta=0, t=1)
    assert rel(eval_vprime(w, 0.5, ctx), -4) < 1e-35


def test_eval_vprime_rejects_jump_point(ctx):
    w = preset("laguerre_jump", lam=0, omega0=1, points=[(1, 1)])
    with pytest.raises(SingularPoint):
        eval_vprime(w, 1, ctx)


def test_vprime_divdiff_laguerre(ctx, rel):
    # v′ = 1 − 2/x なので差分商は 2/(zx)
    w = preset("laguerre_classical", lam=2)
    assert rel(vprime_divdiff(w, 2j, 3, ctx), ctx.mpc(0, -1) / 3) < 1e-35
    with pytest.raises(ZOnSupport):
        vprime_divdiff(w, 1, 3, ctx)


def test_vprime_matches_log_derivative(ctx, chen_mckay):
    x = ctx.mpf(7) / 10
    h = ctx.mpf(10) ** -10
    fd = -(ctx.ln(eval_weight(chen_mckay, x + h, ctx)) - ctx.ln(eval_weight(chen_mckay, x - h, ctx))) / (2 * h)
    v = eval_vprime(chen_mckay, x, ctx)
    assert abs(fd - v) <= 1e-6 * abs(v)


def test_sigma_per_family(laguerre0, legendre):
    assert sigma(laguerre0, 3) == 3
    assert sigma(legendre, 3) == -8
    assert sigma(preset("shifted_jacobi_classical", alpha=0, beta=0), 3) == -6


# ── カーネル ──
def test_kernel_classical(ctx, rel, laguerre_half):
    assert rel(kernel_divdiff(laguerre_half, 2j, 3, ctx), 1) < 1e-35
    w = preset("jacobi_classical", alpha=Fraction(1, 2), beta=Fraction(3, 2))
    assert rel(kernel_divdiff(w, 2 + 1j, 0.25, ctx), 2) < 1e-35


def test_kernel_chen_mckay_example(ctx, rel):
    w = preset("chen_mckay", lam=0, gamma=1, t=1)
    want = 1 - 1 / (2 * (1 + 2 * ctx.j))
    assert rel(kernel_divdiff(w, 2j, 1, ctx), want) < 1e-35


def test_kernel_rejects_z_on_support(ctx, legendre):
    with pytest.raises(ZOnSupport):
        kernel_divdiff(legendre, 0.5, 0.3, ctx)


@pytest.mark.parametrize("label, params", [
    ("chen_mckay", {"lam": Fraction(-1, 2), "gamma": 1, "t": 1}),
    ("chen_its", {"lam": 0, "s": Fraction(1, 2)}),
    ("laguerre_multi_shift", {"lam": 0, "shifts": [(1, 2), (3, Fraction(1, 2))]}),
    ("jacobi_exp_linear", {"alpha": Fraction(1, 2), "beta": 0, "t": 2}),
    ("jacobi_symmetric_exp_quad", {"alpha": Fraction(1, 2), "t": 1}),
    ("jacobi_symmetric_k2", {"alpha": 0, "gamma": Fraction(3, 2), "k2": Fraction(1, 4)}),
    ("jacobi_symmetric_exp_inv_x2", {"alpha": 1, "t": Fraction(1, 3)}),
    ("jacobi_symmetric_exp_inv_one_minus_x2", {"alpha": 0, "t": 1}),
    ("pollaczek_jacobi", {"alpha": Fraction(3, 10), "beta": 1, "t": Fraction(2, 5)}),
    ("shifted_jacobi_power", {"alpha": Fraction(1, 5), "beta": Fraction(1, 5), "gamma": 1, "t": Fraction(-1, 2)}),
])
def test_kernel_matches_named_closed_form(ctx, rel, label, params):
    w = preset(label, **params)
    p = identify(w, label)
    rng = random.Random(7)
    lo, hi = w.support
    top = float(hi) if hi is not None else 8.0
    for _ in range(10):
        z = complex(rng.uniform(-3, 3), rng.choice((-1, 1)) * rng.uniform(0.5, 2))
        x = Fraction(rng.uniform(float(lo) + 0.05, top - 0.05)).limit_denominator(10 ** 6)
        got = kernel_divdiff(w, z, x, ctx)
        want = named_kernel(label, p, ctx.mpc(z), x, ctx)
        assert rel(got, want) < 1e-30


# ── JSON・プリセット ──
def test_json_reads_decimals_exactly():
    text = json.dumps({
        "family": "shifted_jacobi", "alpha": 0.3, "beta": 0,
        "atoms": [{"kind": "exp_inv_x", "params": {"s": 0.1}}],
        "label": "pollaczek_jacobi",
    })
    w = weight_from_json(text)
    assert w.alpha == Fraction(3, 10)
    assert w.atoms[0].p("s") == Fraction(1, 10)
    assert weight_from_json(weight_to_json(w)) == w


def test_json_jumps_and_fh():
    w = weight_from_json({
        "family": "laguerre", "lambda": -0.5,
        "atoms": [{"kind": "exp_linear", "params": {"c": 1}}],
        "jumps": {"omega0": 0, "points": [{"t": 0.5, "omega": 1}, {"t": 2, "omega": -1}]},
        "fh": None,
    })
    assert [j.t for j in w.jumps] == [Fraction(1, 2), Fraction(2)]
    assert w.omega0 == 0


@pytest.mark.parametrize("text", ["{not json", json.dumps({"lambda": 0}), json.dumps({"family": "hermite"})])
def test_json_malformed(text):
    with pytest.raises(ConfigError):
        weight_from_json(text)


@pytest.mark.parametrize("extra", [
    {"fh": {"t": 1}},
    {"jumps": {"omega0": 0, "points": [{"t": 0.5}]}},
    {"jumps": [{"t": 0.2, "omega": 1}]},
    {"atoms": [{"kind": "power_shift", "params": 3}]},
    {"fh": [1, 2]},
])
def test_json_malformed_parts(extra):
    obj = {"family": "laguerre", "lambda": 0, "atoms": [{"kind": "exp_linear", "params": {"c": 1}}]}
    with pytest.raises(ConfigError):
        weight_from_json(json.dumps({**obj, **extra}))


def test_json_keeps_non_decimal_fractions():
    w = preset("chen_mckay", lam=Fraction(1, 3), gamma=Fraction(2, 7), t=Fraction(1, 2))
    obj = weight_to_json(w)
    assert obj["lambda"] == "1/3"
    assert obj["atoms"][1]["params"]["c"] == 0.5
    assert weight_from_json(json.dumps(obj)) == w


def test_identify_and_mismatch(chen_mckay):
    params = identify(chen_mckay, "chen_mckay")
    assert params == {"lam": Fraction(-1, 2), "gamma": 2, "t": 1}
    with pytest.raises(FamilyMismatch):
        identify(chen_mckay, "laguerre_classical")
    with pytest.raises(FamilyMismatch):
        preset("no_such_family")


def test_t_family_rebuilds_weight(chen_mckay):
    fam = t_family("chen_mckay", lam=Fraction(-1, 2), gamma=2, t=1)
    assert fam.at(1) == chen_mckay
    assert fam.at(Fraction(3, 2)).atoms[1].p("c") == Fraction(3, 2)
    with pytest.raises(FamilyMismatch):
        t_family("laguerre_classical", lam=0)
