import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cita import ca
from cita.ca import CitaParams
from cita.errors import InvalidInputError
from oracles import naive_q, naive_run, naive_step

WORKED = np.array([[10, 10, 10], [10, 0, 10], [10, 10, 10]])

grids = arrays(
    np.int64,
    st.tuples(st.integers(1, 9), st.integers(1, 9)),
    elements=st.integers(0, 255),
)
params = st.builds(
    CitaParams,
    nu=st.integers(0, 12),
    gamma=st.sampled_from([0.0, 0.01, 0.03, 0.05, 0.08, 0.1, 0.5, 1.0]),
    iterations=st.integers(1, 12),
)


# ---------------------------------------------------------------- init / params


def test_init_identity():
    assert ca.init_from_image([[0]]).tolist() == [[0]]
    g = ca.init_from_image(np.array([[0, 255], [10, 20]], dtype=np.uint8))
    assert g.tolist() == [[0, 255], [10, 20]]
    assert g.dtype == np.int64


def test_init_preserves_sum(rng):
    img = rng.integers(0, 256, (13, 7)).astype(np.uint8)
    assert ca.init_from_image(img).sum() == int(img.astype(np.int64).sum())


@pytest.mark.parametrize(
    "bad",
    [np.zeros((0, 3)), np.zeros(4), [[256]], [[-1]], [[1.5]], [[np.nan]]],
)
def test_init_rejects(bad):
    with pytest.raises(InvalidInputError):
        ca.init_from_image(bad)


def test_init_accepts_integral_floats():
    assert ca.init_from_image(np.array([[3.0, 255.0]])).tolist() == [[3, 255]]


@pytest.mark.parametrize(
    "kw",
    [dict(nu=-1, gamma=0.1, iterations=1), dict(nu=1, gamma=1.5, iterations=1),
     dict(nu=1, gamma=-0.1, iterations=1), dict(nu=1, gamma=0.1, iterations=0),
     dict(nu=1.5, gamma=0.1, iterations=1)],
)
def test_params_validation(kw):
    with pytest.raises(InvalidInputError):
        CitaParams(**kw)


# ---------------------------------------------------------------- padding / difference


def test_reflect_pad_examples():
    assert ca.reflect_pad(np.array([[7]])).tolist() == [[7] * 3] * 3
    assert ca.reflect_pad(np.array([[1, 2], [3, 4]])).tolist() == [
        [1, 1, 2, 2],
        [1, 1, 2, 2],
        [3, 3, 4, 4],
        [3, 3, 4, 4],
    ]
    assert np.all(ca.reflect_pad(np.full((4, 5), 9)) == 9)


def test_reflect_pad_rectangular(rng):
    g = rng.integers(0, 256, (3, 6))
    p = ca.reflect_pad(g)
    assert p.shape == (5, 8)
    assert np.array_equal(p[1:-1, 1:-1], g)
    assert np.array_equal(p[0, 1:-1], g[0]) and np.array_equal(p[-1, 1:-1], g[-1])
    assert np.array_equal(p[1:-1, 0], g[:, 0]) and np.array_equal(p[1:-1, -1], g[:, -1])
    assert (p[0, 0], p[0, -1], p[-1, 0], p[-1, -1]) == (g[0, 0], g[0, -1], g[-1, 0], g[-1, -1])


def test_local_difference():
    assert ca.local_difference(ca.reflect_pad(np.full((3, 3), 4)), 1, 1) == 0
    g = np.full((3, 3), 10)
    g[0, 0] = 0
    assert ca.local_difference(ca.reflect_pad(g), 1, 1) == 10
    g = np.full((3, 3), 10)
    g[1, 1] = 0
    assert ca.local_difference(ca.reflect_pad(g), 1, 1) == 0
    with pytest.raises(IndexError):
        ca.local_difference(ca.reflect_pad(g), 3, 0)


# ---------------------------------------------------------------- pit growth


def test_pit_growth_examples():
    assert all(ca.pit_growth(d, 0.0) == 0 for d in range(255))
    assert ca.pit_growth(5, 0.05) == 12
    assert ca.pit_growth(254, 1.0) == 1


def test_pit_growth_uses_decimal_gamma():
    # 0.03 is stored slightly below 3/100; the product 100 * 0.03 must still floor to 3
    assert ca.pit_growth(155, 0.03) == 3


@pytest.mark.parametrize("gamma", [0.01, 0.03, 0.05, 0.07, 0.1, 0.33, 1.0])
def test_pit_growth_matches_oracle(gamma):
    assert [ca.pit_growth(d, gamma) for d in range(255)] == [naive_q(d, gamma) for d in range(255)]


@pytest.mark.parametrize("d", [-1, 255, 300])
def test_pit_growth_domain(d):
    with pytest.raises(InvalidInputError):
        ca.pit_growth(d, 0.5)


# ---------------------------------------------------------------- step / run


def test_step_worked_example():
    new, mass = ca.step(WORKED, CitaParams(nu=5, gamma=0.05, iterations=1))
    assert mass == 96
    assert new.tolist() == [[22, 22, 22], [22, 0, 22], [22, 22, 22]]
    assert naive_step(WORKED.tolist(), 5, 0.05) == (new.tolist(), 96)


def test_step_does_not_mutate_input():
    g = WORKED.copy()
    ca.step(g, CitaParams(5, 0.05, 1))
    assert np.array_equal(g, WORKED)


def test_constant_grid_is_inert():
    g = np.full((6, 4), 77)
    new, mass = ca.step(g, CitaParams(1, 0.5, 1))
    assert mass == 0 and np.array_equal(new, g)
    assert not ca.run(g, CitaParams(1, 0.5, 20)).cumulative_mass.any()


def test_nu_zero_corrodes_flat_regions():
    new, mass = ca.step(np.full((2, 3), 40), CitaParams(0, 0.05, 1))
    assert np.all(new == 40 + 12) and mass == 6 * 12


def test_gamma_zero_is_inert(rng):
    g = rng.integers(0, 256, (8, 8))
    new, mass = ca.step(g, CitaParams(0, 0.0, 1))
    assert mass == 0 and np.array_equal(new, g)


def test_run_worked_example():
    s = ca.run(WORKED, CitaParams(5, 0.05, 1))
    assert s.cumulative_mass.tolist() == [96]


def test_run_matches_naive_over_many_steps(rng):
    g = rng.integers(0, 256, (7, 9))
    for nu, gamma in [(1, 0.05), (0, 0.08), (5, 0.3), (3, 1.0)]:
        final, masses = naive_run(g, nu, gamma, 25)
        s = ca.run(g, CitaParams(nu, gamma, 25))
        assert s.per_iteration_mass.tolist() == masses
        assert s.final_states.tolist() == final


def test_run_is_deterministic(rng):
    g = rng.integers(0, 256, (16, 16))
    p = CitaParams(1, 0.05, 30)
    assert ca.run(g, p) == ca.run(g.copy(), p)


def test_states_can_exceed_255():
    # the deepest cell sees a shallow neighbour 55 levels up, so it keeps growing past 255
    g = np.array([[0, 100, 200, 255]])
    s = ca.run(g, CitaParams(1, 0.5, 10))
    assert s.final_states.max() > 255


@settings(max_examples=60, deadline=None)
@given(grids, params)
def test_mass_accounting_properties(g, p):
    s = ca.run(g, p)
    per, cum = s.per_iteration_mass, s.cumulative_mass
    assert per.shape == cum.shape == (p.iterations,)
    assert np.all(per >= 0)
    assert np.all(np.diff(cum) >= 0)
    assert np.array_equal(cum, np.cumsum(per))
    assert cum[-1] == s.final_states.sum() - g.sum()
    assert np.all(s.final_states >= g)
    zero = np.flatnonzero(per == 0)
    if zero.size:
        assert not per[zero[0]:].any()


@settings(max_examples=60, deadline=None)
@given(grids, params)
def test_per_step_conservation_and_increment_bound(g, p):
    cur = g
    bound = ca.pit_growth(0, p.gamma)
    for _ in range(min(p.iterations, 5)):
        new, mass = ca.step(cur, p)
        inc = new - cur
        assert mass == inc.sum()
        assert inc.min() >= 0 and inc.max() <= bound
        cur = new


@settings(max_examples=40, deadline=None)
@given(grids, params)
def test_symmetry_invariance(g, p):
    ref = ca.run(g, p).cumulative_mass
    for t in (np.rot90(g, 1), np.rot90(g, 2), np.rot90(g, 3), g[:, ::-1], g[::-1, :], g.T):
        assert np.array_equal(ca.run(np.ascontiguousarray(t), p).cumulative_mass, ref)


@settings(max_examples=40, deadline=None)
@given(grids, params, st.integers(0, 500))
def test_constant_offset_invariance(g, p, k):
    assert ca.run(g + k, p) == ca.run(g, p)


def test_grid_validation():
    with pytest.raises(InvalidInputError):
        ca.run(np.array([[1.0]]), CitaParams(1, 0.1, 1))
    with pytest.raises(InvalidInputError):
        ca.step(np.array([[-1]]), CitaParams(1, 0.1, 1))
