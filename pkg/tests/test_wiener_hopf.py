import math

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import BM, SN, SP, TWO_SIDED, admissible_models
from levyqueue.levy_model import JumpSide, LevyModel, laplace_exponent, levy_exponent
from levyqueue.wiener_hopf import (
    BETA_GRID,
    RootClusteringError,
    characteristic_roots,
    factorize,
    gauge_scale,
    kappa,
    kappa_dq0,
    kbar,
    kund,
    log_kbar_dq,
)

SQ3 = math.sqrt(3.0)


def test_bm_roots_q1():
    rho, delta, lead = characteristic_roots(BM, 1.0)
    assert rho == pytest.approx([1 + SQ3], abs=1e-12)
    assert delta == pytest.approx([SQ3 - 1], abs=1e-12)
    assert lead == pytest.approx(0.5)


def test_bm_roots_q0_origin_descends():
    rho, delta, _ = characteristic_roots(BM, 0.0)
    assert rho == pytest.approx([2.0])
    assert delta == pytest.approx([0.0], abs=1e-14)
    assert kund(BM, 0.0, 0.0) == 0
    assert kbar(BM, 0.0, 0.0).real > 0


def test_sp_roots_q1():
    rho, delta, lead = characteristic_roots(SP, 1.0)
    # roots of s^2 - (0.5 - q) s - q, split by half-plane
    disc = math.sqrt(0.25 + 4)
    assert rho == pytest.approx([(-0.5 + disc) / 2], abs=1e-12)
    assert delta == pytest.approx([(0.5 + disc) / 2], abs=1e-12)
    assert lead == pytest.approx(1.0)
    assert (rho[0] * -delta[0]).real == pytest.approx(-1.0)


def test_roots_solve_the_equation(any_model):
    for q in (0.0, 0.3, 2.0):
        rho, delta, _ = characteristic_roots(any_model, q)
        for r in list(rho) + [-d for d in delta]:
            if abs(r) > 0:
                assert abs(q - laplace_exponent(any_model, r)) < 1e-10


def test_normalization_examples():
    assert (kbar(BM, 2.0, 0.0) * kund(BM, 2.0, 0.0)).real == pytest.approx(2.0, rel=1e-12)
    assert kappa(BM, "ascending", 1.0, 0.0) == pytest.approx(math.sqrt(0.5) * (1 + SQ3))
    for th in (0.0, 0.5, 3.0):
        assert (kbar(BM, 0, 0) / kbar(BM, 0, th)).real == pytest.approx(2 / (th + 2), rel=1e-13)
        assert (kbar(SP, 0, 0) / kbar(SP, 0, th)).real == pytest.approx(
            0.5 * (th + 1) / (th + 0.5), rel=1e-13
        )


def test_kappa_rejects_unknown_side():
    with pytest.raises(ValueError):
        kappa(BM, "sideways", 1.0, 0.0)


def test_kappa_dq0_examples():
    for th in (0.0, 1.0, 4.0):
        assert kappa_dq0(BM, th) == pytest.approx(math.sqrt(0.5), rel=1e-12)
    v = kappa_dq0(SP, 0.0)
    assert math.isfinite(v) and v > 0


def test_log_kbar_dq_matches_finite_difference(any_model):
    h = 1e-6
    for q in (0.5, 2.0):
        for th in (0.0, 1.0):
            fd = (np.log(kbar(any_model, q + h, th)) - np.log(kbar(any_model, q - h, th))) / (2 * h)
            assert log_kbar_dq(any_model, q, th) == pytest.approx(fd.real, rel=1e-6)


def test_clustering_rejected():
    # at q = 0 the roots near 2 are 2 +- sqrt(2 * rate): a tiny up rate with
    # decay 2 nearly doubles the Brownian root
    crafted = LevyModel(-1.0, 1.0, JumpSide(1e-16, ((1.0, 2.0),)))
    with pytest.raises(RootClusteringError):
        factorize(crafted, 0.0)
    fine = LevyModel(-1.0, 1.0, JumpSide(1e-6, ((1.0, 2.0),)))
    assert factorize(fine, 0.0).residual < 1e-8


def test_continuity_in_q(any_model):
    a = factorize(any_model, 0.0)
    b = factorize(any_model, 1e-8)
    assert np.allclose(np.sort_complex(a.ascending.zeros), np.sort_complex(b.ascending.zeros), atol=1e-3)
    assert np.allclose(np.sort_complex(a.descending.zeros), np.sort_complex(b.descending.zeros), atol=1e-3)


def test_dump_lists_roots():
    text = factorize(BM, 1.0).dump()
    assert "2.732050808" in text and "factor residual" in text


@given(admissible_models())
@settings(max_examples=120, deadline=None)
def test_factorization_identities_random(model):
    for q in (0.5, 1.0, 2.0):
        f = factorize(model, q)
        assert len(f.ascending.zeros) == model.n_ascending()
        assert len(f.descending.zeros) == model.n_descending()
        assert np.all(f.ascending.zeros.real > 0) and np.all(f.descending.zeros.real > 0)
        for beta in BETA_GRID:
            lhs = q - levy_exponent(model, beta)
            rhs = kund(model, q, 1j * beta) * kbar(model, q, -1j * beta)
            assert abs(lhs - rhs) <= 1e-8 * abs(lhs)
    for a in (0.1, 0.5, 1, 2, 5, 10):
        assert abs((kbar(model, a, 0) * kund(model, a, 0)).real - a) <= 1e-8 * a
    f0 = factorize(model, 0.0)
    assert kund(model, 0.0, 0.0) == 0 and kbar(model, 0.0, 0.0).real > 0
    assert len(f0.descending.zeros) == model.n_descending()
    assert kappa_dq0(model, 0.0) >= 0


def test_gauge_scale_changes_split_only():
    a = kbar(TWO_SIDED, 1.0, 0.7)
    with gauge_scale(10.0):
        b = kbar(TWO_SIDED, 1.0, 0.7)
        c = kund(TWO_SIDED, 1.0, 0.7)
    assert b == pytest.approx(10 * a)
    assert c * b == pytest.approx(kund(TWO_SIDED, 1.0, 0.7) * a)


def test_sn_factor_counts():
    f = factorize(SN, 1.0)
    assert len(f.ascending.zeros) == 1 and len(f.descending.zeros) == 2
