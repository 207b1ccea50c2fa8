import io

import numpy as np
import pytest

from conftest import BM, SP, TWO_SIDED
from levyqueue import inversion as I
from levyqueue import transforms as T

X = np.round(np.arange(0.1, 3.0001, 0.1), 12)


def test_bm_stationary_cdf_exact():
    rows = I.invert_cdf(I.formula_request(BM, "stationary", X))
    err = max(abs(f - (1 - np.exp(-2 * x))) for x, f in rows)
    assert err <= 1e-8


def test_sp_stationary_cdf_with_atom():
    req = I.formula_request(SP, "stationary", X)
    assert req.atom_at_zero == pytest.approx(0.5)
    rows = I.invert_cdf(req)
    assert max(abs(f - (1 - 0.5 * np.exp(-0.5 * x))) for x, f in rows) <= 1e-8


def test_degenerate_unit_mass():
    rows = I.invert_cdf(I.InversionRequest(lambda s: 1.0, 1.0, [0.5, 1.0, 7.0]))
    assert [f for _, f in rows] == [1.0, 1.0, 1.0]


def test_min_workload_atom_is_busy_probability():
    req = I.formula_request(BM, "min-workload", X, q=1.0)
    assert req.atom_at_zero == pytest.approx(T.busy_period_transform(BM, 1.0), rel=1e-14)


@pytest.mark.parametrize(
    "formula, kw",
    [
        ("stationary", {}),
        ("min-workload", {"q": 1.0}),
        ("transient-factor", {"q": 1.0}),
        ("exp-initial", {"q": 1.0, "lambda": 2.0}),
        ("conditional-min", {"q": 0.5}),
        ("limit-conditional", {}),
        ("residual-life-q0", {}),
    ],
)
def test_monotone_bounded_and_round_trip(formula, kw):
    q = kw.pop("q", None)
    xs = np.concatenate([np.linspace(0.005, 4, 400), np.linspace(4.1, 40, 200)])
    req = I.formula_request(TWO_SIDED, formula, xs, q=q, **kw)
    F = np.array([f for _, f in I.invert_cdf(req)])
    assert np.all(np.diff(F) >= 0)
    assert F[0] >= req.atom_at_zero and F[-1] <= 1
    assert F[-1] >= 1 - 5e-3
    # integrate e^{-theta x} dF with trapezoids, atom included
    grid = np.concatenate([[0.0], xs])
    cdf = np.concatenate([[req.atom_at_zero], F])
    for th in (0.5, 1.0, 2.0):
        mids = np.exp(-th * grid)
        lst = req.atom_at_zero + np.sum(0.5 * (mids[1:] + mids[:-1]) * np.diff(cdf))
        assert lst == pytest.approx(req.transform(th).real, abs=1e-3)


def test_request_validation():
    with pytest.raises(ValueError):
        I.InversionRequest(lambda s: 1.0, 1.0, [1.0, 0.5]).validate()
    with pytest.raises(ValueError):
        I.InversionRequest(lambda s: 1.0, 1.0, [0.0, 0.5]).validate()
    with pytest.raises(I.InversionError):
        I.InversionRequest(lambda s: 2 / (2 + s), 0.3, [1.0]).validate()
    with pytest.raises(I.InversionError):
        I.formula_request(BM, "busy-period", X, q=1.0)


def test_oscillation_detected():
    # a transform with a jump discontinuity at x=1 makes the Euler sums disagree
    req = I.InversionRequest(lambda s: np.exp(-s), 0.0, [1.0], osc_tol=1e-9)
    with pytest.raises(I.InversionError):
        I.invert_cdf(req)


def test_csv():
    buf = io.StringIO()
    I.write_csv(buf, [(0.5, 0.25)], 0.1, "# h\n")
    assert buf.getvalue() == "# h\n# atom_at_zero=0.1\nx,F\n0.5,0.25\n"
