"""共通フィクスチャ — 精度を落とした表をセッション単位で使い回す"""
from fractions import Fraction

import pytest

from src.opcore import recurrence_stieltjes
from src.precision import Precision, context
from src.weights import make_weight, preset

# 128 bit でも恒等式の許容値 1e-15 には十分
BITS = 128
NODES = 80
PREC = Precision(BITS, NODES)
CTX = context(BITS)


def _rel(a, b):
    a, b = CTX.convert(a), CTX.convert(b)
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else abs(a - b)


@pytest.fixture(scope="session")
def prec():
    return PREC


@pytest.fixture(scope="session")
def ctx():
    return CTX


@pytest.fixture(scope="session")
def rel():
    return _rel


# ── 重み ──
@pytest.fixture(scope="session")
def laguerre0():
    return preset("laguerre_classical", lam=0)


@pytest.fixture(scope="session")
def laguerre_half():
    return preset("laguerre_classical", lam=Fraction(-1, 2))


@pytest.fixture(scope="session")
def legendre():
    return preset("jacobi_classical", alpha=0, beta=0)


@pytest.fixture(scope="session")
def chen_mckay():
    return preset("chen_mckay", lam=Fraction(-1, 2), gamma=2, t=1)


@pytest.fixture(scope="session")
def pollaczek():
    return preset("pollaczek_jacobi", alpha=Fraction(3, 10), beta=Fraction(3, 10), t=Fraction(1, 2))


@pytest.fixture(scope="session")
def two_jump():
    return preset("laguerre_two_jump", lam=Fraction(-1, 2), t1=Fraction(1, 2), t2=2)


@pytest.fixture(scope="session")
def jacobi_fh():
    return make_weight("jacobi", (Fraction(1, 2), Fraction(1, 2)), fh=(Fraction(1, 5), Fraction(3, 2), 1, Fraction(1, 2)))


@pytest.fixture(scope="session")
def chen_its():
    return preset("chen_its", lam=Fraction(-1, 2), s=Fraction(3, 10))


@pytest.fixture(scope="session")
def laguerre_fh():
    return preset("laguerre_fh", lam=Fraction(-1, 2), t=1, gamma=Fraction(6, 5), A=1, B=Fraction(1, 2))


@pytest.fixture(scope="session")
def jacobi_exp():
    return preset("jacobi_exp_linear", alpha=Fraction(2, 5), beta=Fraction(-3, 5), t=1)


@pytest.fixture(scope="session")
def symmetric_exp_quad():
    return preset("jacobi_symmetric_exp_quad", alpha=Fraction(-2, 5), t=Fraction(1, 2))


@pytest.fixture(scope="session")
def shifted_power():
    return preset("shifted_jacobi_power", alpha=Fraction(-3, 10), beta=Fraction(-3, 10), gamma=1, t=Fraction(-1, 2))


# ── 漸化式表 ──
@pytest.fixture(scope="session")
def laguerre0_tab(laguerre0):
    return recurrence_stieltjes(laguerre0, 8, PREC)


@pytest.fixture(scope="session")
def laguerre_half_tab(laguerre_half):
    return recurrence_stieltjes(laguerre_half, 8, PREC)


@pytest.fixture(scope="session")
def legendre_tab(legendre):
    return recurrence_stieltjes(legendre, 8, PREC)


@pytest.fixture(scope="session")
def chen_mckay_tab(chen_mckay):
    return recurrence_stieltjes(chen_mckay, 8, PREC)


@pytest.fixture(scope="session")
def pollaczek_tab(pollaczek):
    return recurrence_stieltjes(pollaczek, 8, PREC)


@pytest.fixture(scope="session")
def two_jump_tab(two_jump):
    return recurrence_stieltjes(two_jump, 7, PREC)


@pytest.fixture(scope="session")
def jacobi_fh_tab(jacobi_fh):
    return recurrence_stieltjes(jacobi_fh, 7, PREC)


@pytest.fixture(scope="session")
def chen_its_tab(chen_its):
    return recurrence_stieltjes(chen_its, 7, PREC)


@pytest.fixture(scope="session")
def laguerre_fh_tab(laguerre_fh):
    return recurrence_stieltjes(laguerre_fh, 7, PREC)


@pytest.fixture(scope="session")
def jacobi_exp_tab(jacobi_exp):
    return recurrence_stieltjes(jacobi_exp, 7, PREC)


@pytest.fixture(scope="session")
def symmetric_exp_quad_tab(symmetric_exp_quad):
    return recurrence_stieltjes(symmetric_exp_quad, 7, PREC)


@pytest.fixture(scope="session")
def shifted_power_tab(shifted_power):
    return recurrence_stieltjes(shifted_power, 7, PREC)
