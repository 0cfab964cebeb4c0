"""ladder 係数 A_n, B_n と関連する恒等式"""
from fractions import Fraction

import pytest

from src.errors import DegreeOutOfRange, FamilyMismatch, StepTooLarge, ZOnSupport
from src.ladder import (
    aux_quantities,
    check_table,
    compat_residuals,
    counting_terms,
    diff_identity_residual,
    direct_pair,
    ibp_residuals,
    jump_residues,
    ladder_pair,
    ladder_sweep,
    lowering_residual,
    raising_residual,
    reconstruct_pair,
)
from src.opcore import recurrence_stieltjes
from src.precision import Precision
from src.weights import preset, t_family

from conftest import PREC

TOL = 1e-25
Z_POINTS = (1 + 2j, -0.75 + 0.5j, -1.5)


# ── 閉形式 ──
@pytest.mark.parametrize("z", [-2, 1 + 2j, -1.5])
def test_classical_laguerre_pair(ctx, rel, laguerre_half, laguerre_half_tab, z):
    zz = ctx.convert(z)
    for p in ladder_sweep(laguerre_half, laguerre_half_tab, z):
        assert rel(p.A, 1 / zz) < TOL
        if p.n:
            assert rel(p.B, -p.n / zz) < TOL


def test_laguerre_example_values(rel, laguerre0, laguerre0_tab):
    # z = 2 は台の上なので実軸の反対側で
    p = ladder_pair(laguerre0, laguerre0_tab, 3, -2)
    assert rel(p.A, -0.5) < TOL
    assert rel(p.B, 1.5) < TOL


def test_jacobi_example_values(ctx, rel, legendre, legendre_tab):
    p = ladder_pair(legendre, legendre_tab, 1, 2)
    assert rel(p.A, -1) < TOL
    for n in range(legendre_tab.N - 1):
        z = ctx.mpc(0.5, 1.5)
        p = ladder_pair(legendre, legendre_tab, n, z)
        assert rel(p.A, (2 * n + 1) / (1 - z * z)) < TOL
        if n:
            assert rel(p.B, (n * z - legendre_tab.p1[n]) / (1 - z * z)) < TOL


def test_parts_sum_to_total(two_jump, two_jump_tab):
    p = ladder_pair(two_jump, two_jump_tab, 3, 1 + 1j)
    assert len(p.parts_A.jump_residues) == 2
    assert abs(p.parts_A.total() - p.A) == 0
    assert abs(p.parts_B.total() - p.B) == 0


def test_counting_terms(laguerre0, laguerre0_tab, legendre, legendre_tab):
    assert counting_terms(laguerre0, laguerre0_tab, 3, 2j) == (0, -3)
    cA, cB = counting_terms(legendre, legendre_tab, 2, 2)
    assert cA == 5
    assert abs(cB - 4) < 1e-35
    with pytest.raises(FamilyMismatch):
        check_table(legendre, laguerre0_tab)


def test_pair_errors(laguerre0, laguerre0_tab, legendre):
    with pytest.raises(ZOnSupport):
        ladder_pair(laguerre0, laguerre0_tab, 2, 1)
    with pytest.raises(DegreeOutOfRange):
        ladder_pair(laguerre0, laguerre0_tab, laguerre0_tab.N, 2j)
    with pytest.raises(FamilyMismatch):
        ladder_pair(legendre, laguerre0_tab, 1, 2j)


# ── lowering / raising / compat ──
LADDER_FIXTURES = [
    "chen_mckay", "pollaczek", "two_jump", "jacobi_fh",
    "chen_its", "laguerre_fh", "jacobi_exp", "symmetric_exp_quad", "shifted_power",
]
FH_TOL = 1e-12


@pytest.mark.parametrize("name", LADDER_FIXTURES)
def test_lowering_and_raising(request, name):
    w = request.getfixturevalue(name)
    tab = request.getfixturevalue(f"{name}_tab")
    tol = TOL if w.fh is None else FH_TOL
    for z in Z_POINTS + (1.7 + 0.4j,):
        pairs = ladder_sweep(w, tab, z)
        for n in range(1, tab.N - 1):
            assert lowering_residual(w, tab, n, z, pairs) < tol
            assert raising_residual(w, tab, n, z, pairs) < tol


def test_lowering_by_hand(laguerre0, laguerre0_tab):
    # P₁′ + B₁P₁ − β₁A₁P₀ = 1 − 2/3 − 1/3
    assert lowering_residual(laguerre0, laguerre0_tab, 1, 3) < TOL
    assert lowering_residual(laguerre0, laguerre0_tab, 0, 3) == 0


@pytest.mark.parametrize("name", ["laguerre_half", "legendre"] + LADDER_FIXTURES)
def test_compatibility(request, name):
    w = request.getfixturevalue(name)
    tab = request.getfixturevalue(f"{name}_tab")
    tol = TOL if w.fh is None else FH_TOL
    for z in Z_POINTS:
        pairs = ladder_sweep(w, tab, z)
        for n in range(tab.N - 2):
            s1, s2, s2p = compat_residuals(w, tab, n, z, pairs)
            assert s1 < tol and s2 < tol
            assert (s2p is None) == (n == 0)
            if s2p is not None:
                assert s2p < tol


def test_compat_needs_next_degree(laguerre0, laguerre0_tab):
    with pytest.raises(DegreeOutOfRange):
        compat_residuals(laguerre0, laguerre0_tab, laguerre0_tab.N - 1, 2j)


def test_canary_breaks_lowering(laguerre_half, laguerre_half_tab):
    bad = laguerre_half_tab.perturbed(3, Fraction(1, 10 ** 6))
    worst = max(lowering_residual(laguerre_half, bad, n, 1 + 2j) for n in range(1, 6))
    assert worst >= 1e-8


# ── 補助量・部分分数形 ──
def test_zero_omega_jump_has_no_residue():
    w = preset("laguerre_jump", lam=0, omega0=1, points=[(1, 0)])
    tab = recurrence_stieltjes(w, 5, PREC)
    R, r = jump_residues(w, tab, 3)
    assert R == [0] and r == [0]


@pytest.mark.parametrize("label, params, z, tol", [
    ("jacobi_exp_linear", {"alpha": Fraction(1, 2), "beta": Fraction(1, 2), "t": 1}, 2j, 1e-20),
    ("chen_mckay", {"lam": Fraction(-1, 2), "gamma": 2, "t": 1}, 1.7 + 0.4j, 1e-20),
    ("chen_its", {"lam": Fraction(1, 2), "s": Fraction(1, 2)}, -1 + 1j, 1e-20),
    ("laguerre_two_jump", {"lam": Fraction(-1, 2), "t1": Fraction(1, 2), "t2": 2}, 1 + 1j, 1e-20),
    ("jacobi_symmetric_exp_quad", {"alpha": Fraction(1, 2), "t": 1}, 0.3 + 0.8j, 1e-20),
    ("jacobi_symmetric_k2", {"alpha": 0, "gamma": Fraction(3, 2), "k2": Fraction(1, 4)}, 1.2 + 0.6j, 1e-20),
    ("pollaczek_jacobi", {"alpha": Fraction(3, 10), "beta": Fraction(3, 10), "t": Fraction(2, 5)}, 1.7 + 0.4j, 1e-20),
    ("shifted_jacobi_power", {"alpha": Fraction(1, 5), "beta": Fraction(1, 5), "gamma": 1, "t": Fraction(-1, 2)}, 2, 1e-20),
    ("jacobi_symmetric_exp_inv_x2", {"alpha": Fraction(1, 2), "t": Fraction(1, 4)}, 0.4 + 0.9j, 1e-15),
    ("jacobi_symmetric_exp_inv_one_minus_x2", {"alpha": Fraction(1, 2), "t": Fraction(1, 2)}, 0.3 + 0.8j, 1e-15),
    ("laguerre_fh", {"lam": Fraction(-1, 2), "t": 1, "gamma": Fraction(6, 5), "A": 1, "B": Fraction(1, 2)}, 1 + 1j, FH_TOL),
    ("jacobi_fh", {"alpha": Fraction(1, 2), "beta": Fraction(-1, 2), "t": Fraction(1, 5), "gamma": Fraction(3, 2), "A": 1, "B": Fraction(1, 2)}, 2j, FH_TOL),
    ("shifted_jacobi_fh", {"alpha": Fraction(1, 2), "beta": Fraction(1, 2), "t": Fraction(2, 5), "gamma": Fraction(3, 2), "A": 1, "B": Fraction(1, 2)}, 1.5 + 0.5j, FH_TOL),
])
def test_partial_fraction_matches_integral_form(rel, label, params, z, tol):
    w = preset(label, **params)
    tab = recurrence_stieltjes(w, 6, PREC)
    for n in range(1, 5):
        p = ladder_pair(w, tab, n, z)
        A, B = reconstruct_pair(w, tab, n, z, label)
        assert rel(A, p.A) < tol
        assert rel(B, p.B) < tol


def test_symmetric_exp_quad_aux(ctx, rel):
    w = preset("jacobi_symmetric_exp_quad", alpha=Fraction(1, 2), t=1)
    tab = recurrence_stieltjes(w, 6, PREC)
    aux = aux_quantities(w, tab, 3, "jacobi_symmetric_exp_quad")
    assert rel(aux["Rn"], 2 * 3 + 1 + 1 - 2 * (tab.beta[4] + tab.beta[3])) < 1e-35
    assert "qn" in aux


def test_aux_rejects_wrong_label(chen_mckay, chen_mckay_tab):
    with pytest.raises(FamilyMismatch):
        aux_quantities(chen_mckay, chen_mckay_tab, 2, "chen_its")


# ── 直接形・部分積分 ──
def test_direct_form_matches_for_positive_exponents(rel):
    w = preset("chen_mckay", lam=Fraction(1, 2), gamma=2, t=1)
    tab = recurrence_stieltjes(w, 6, PREC)
    for n in range(5):
        d = direct_pair(w, tab, n, 1 + 1j)
        p = ladder_pair(w, tab, n, 1 + 1j)
        assert not d.divergent
        assert rel(d.A, p.A) < 1e-20
        if n:
            assert rel(d.B, p.B) < 1e-20


def test_direct_form_flags_divergence(laguerre_half, laguerre_half_tab):
    assert direct_pair(laguerre_half, laguerre_half_tab, 2, 1j).divergent


def test_direct_form_disagrees_below_zero_exponent(laguerre_fh, laguerre_fh_tab):
    # λ = −1/2 では端点積分が発散し、直接形の B_n は定理の形と一致しない
    d = direct_pair(laguerre_fh, laguerre_fh_tab, 2, 1 + 1j)
    p = ladder_pair(laguerre_fh, laguerre_fh_tab, 2, 1 + 1j)
    assert d.divergent
    assert abs(d.B - p.B) > 1e-3


@pytest.mark.parametrize("name", ["laguerre_half", "legendre", "chen_mckay", "pollaczek"])
def test_integration_by_parts(request, name):
    w = request.getfixturevalue(name)
    tab = request.getfixturevalue(f"{name}_tab")
    for n in range(1, tab.N - 2):
        res = ibp_residuals(w, tab, n, 1.5 + 1j)
        assert max(res.values()) < 1e-20
        assert ("shifted_moment" in res) == (w.family.value == "jacobi")


def test_integration_by_parts_needs_smooth_weight(two_jump, two_jump_tab):
    with pytest.raises(FamilyMismatch):
        ibp_residuals(two_jump, two_jump_tab, 2, 1j)


# ── t 微分 ──
DIFF_PREC = Precision(128, 64)


@pytest.mark.parametrize("label, params, t, tol", [
    ("shifted_jacobi_power", {"alpha": Fraction(1, 5), "beta": Fraction(1, 5), "gamma": 1}, Fraction(-1, 2), 1e-10),
    ("chen_mckay", {"lam": Fraction(-1, 2), "gamma": 2}, 1, 1e-10),
    ("jacobi_exp_linear", {"alpha": Fraction(1, 2), "beta": Fraction(1, 2)}, 1, 1e-10),
    ("jacobi_symmetric_exp_quad", {"alpha": Fraction(1, 2)}, Fraction(1, 2), 1e-10),
    ("pollaczek_jacobi", {"alpha": Fraction(3, 10), "beta": Fraction(3, 10)}, Fraction(2, 5), 1e-10),
    ("shifted_jacobi_fh", {"alpha": Fraction(1, 2), "beta": Fraction(1, 2), "gamma": Fraction(3, 2), "A": 1, "B": Fraction(1, 2)}, Fraction(2, 5), 1e-8),
    ("laguerre_fh", {"lam": Fraction(-1, 2), "gamma": Fraction(6, 5), "A": 1, "B": Fraction(1, 2)}, Fraction(3, 2), 1e-8),
])
def test_t_derivative_identities(label, params, t, tol):
    fam = t_family(label, **params)
    out = diff_identity_residual(fam, 3, t, Fraction(1, 10 ** 12), DIFF_PREC)
    assert out
    assert max(out.values()) < tol


def test_symmetric_exp_quad_at_zero_t():
    fam = t_family("jacobi_symmetric_exp_quad", alpha=Fraction(1, 2))
    out = diff_identity_residual(fam, 2, 0, Fraction(1, 10 ** 12), DIFF_PREC)
    assert out["2t_lnh"] < 1e-30
    assert out["lnh"] < 1e-10


def test_t_derivative_rejects_bad_step():
    fam = t_family("chen_mckay", lam=0, gamma=1)
    with pytest.raises(StepTooLarge):
        diff_identity_residual(fam, 2, 1, 0, DIFF_PREC)
