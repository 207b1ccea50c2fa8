import numpy as np
import pytest
from hypothesis import strategies as st

from levyqueue.levy_model import JumpSide, LevyModel, validate

BM = LevyModel(-1.0, 1.0)
SP = LevyModel(-1.0, 0.0, JumpSide(0.5, ((1.0, 1.0),)))
SN = LevyModel(0.0, 1.0, down=JumpSide(1.0, ((1.0, 2.0),)))
TWO_SIDED = LevyModel(
    -0.5, 0.5, JumpSide(1.0, ((0.4, 2.0), (0.6, 5.0))), JumpSide(0.7, ((0.5, 1.0), (0.5, 3.0)))
)
MODELS = {"bm": BM, "sp": SP, "sn": SN, "two_sided": TWO_SIDED}


@pytest.fixture(params=sorted(MODELS))
def any_model(request):
    return MODELS[request.param]


@st.composite
def jump_sides(draw, max_phases=3):
    n = draw(st.integers(0, max_phases))
    if n == 0:
        return JumpSide()
    rate = draw(st.floats(0.05, 3.0))
    raw = draw(st.lists(st.floats(0.1, 1.0), min_size=n, max_size=n))
    w = np.array(raw) / sum(raw)
    w[-1] = 1.0 - w[:-1].sum()
    # spread decays so they stay pairwise distinct
    base = draw(st.floats(0.3, 3.0))
    gaps = draw(st.lists(st.floats(0.2, 3.0), min_size=n, max_size=n))
    decays = base + np.cumsum(gaps) - gaps[0]
    return JumpSide(rate, tuple(zip(w.tolist(), decays.tolist())))


@st.composite
def admissible_models(draw):
    """Random models with negative mean drift, not pure compound Poisson."""
    up = draw(jump_sides())
    down = draw(jump_sides())
    gvar = draw(st.sampled_from([0.0, 0.0, 0.5]) | st.floats(0.05, 2.0))
    slack = draw(st.floats(0.1, 2.0))
    # pick drift so that E X_1 = -slack
    jump_mean = up.rate * up.mean_size - down.rate * down.mean_size
    model = LevyModel(-slack - jump_mean, gvar, up, down)
    if gvar == 0 and model.drift == 0:
        model = LevyModel(model.drift - 0.1, gvar, up, down)
    assert validate(model).ok, validate(model)
    return model


# PASS/FAIL lines recorded by tests/test_acceptance.py, echoed in the summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
