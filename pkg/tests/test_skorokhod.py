import numpy as np
import pytest

from conftest import random_monotone_path, random_step_path
from oracles import brute_m1, omega_brute
from sklab import cadlag, skorokhod
from sklab._kernels import gn_oscillation
from sklab.cadlag import CadlagPath
from sklab.errors import DomainError
from sklab.harness.experiments import merging_atoms_distances


def y_n(u, n):
    return CadlagPath([0.5 - 1.0 / n, 0.5], [u / 2.0, 0.0], [0.0])


ZERO = cadlag.constant(0.0)


@pytest.mark.parametrize("n", [3, 10, 50])
@pytest.mark.parametrize("u", [1.0, 2.0])
def test_bump_distance_is_half_height(u, n):
    r = skorokhod.m1_distance(y_n(u, n), ZERO)
    assert r.value == pytest.approx(u / 2.0, abs=1e-9)
    assert r.lower <= u / 2.0 <= r.upper
    assert r.closed


def test_identity_is_zero(rng):
    for _ in range(20):
        x = random_step_path(rng)
        assert skorokhod.m1_distance(x, x).value == 0.0


def test_monotone_shift_example():
    x = CadlagPath([0.5 - 0.1], [0.5], [0.0])
    y = CadlagPath([0.5], [0.5], [0.0])
    assert skorokhod.m1_distance_monotone(x, y) == pytest.approx(0.1, abs=1e-15)
    assert skorokhod.m1_distance(x, y).value == pytest.approx(0.1, abs=1e-9)


def test_monotone_closed_form_matches_general(rng):
    for _ in range(60):
        x = random_monotone_path(rng)
        y = random_monotone_path(rng)
        a = skorokhod.m1_distance_monotone(x, y)
        b = skorokhod.m1_distance(x, y)
        assert b.lower - 1e-12 <= a <= b.upper + 1e-12


def test_monotone_rejects_non_monotone():
    with pytest.raises(DomainError):
        skorokhod.m1_distance_monotone(y_n(1.0, 10), ZERO)


@pytest.mark.parametrize("seed", range(12))
def test_general_distance_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    x = random_step_path(rng, max_jumps=3, scale=1.0)
    y = random_step_path(rng, max_jumps=3, scale=1.0)
    h = 0.004
    lo, hi = brute_m1(x, y, h)
    r = skorokhod.m1_distance(x, y)
    assert lo - 1e-9 <= r.value <= hi + 1e-9


def test_two_dimensional_brute_force():
    rng = np.random.default_rng(99)
    for _ in range(4):
        x = random_step_path(rng, max_jumps=2, dim=2, scale=1.0)
        y = random_step_path(rng, max_jumps=2, dim=2, scale=1.0)
        lo, hi = brute_m1(x, y, 0.005)
        r = skorokhod.m1_distance(x, y)
        assert lo - 1e-9 <= r.value <= hi + 1e-9


def test_endpoint_pinning(rng):
    for _ in range(100):
        x = random_step_path(rng)
        y = random_step_path(rng)
        r = skorokhod.m1_distance(x, y)
        assert r.value >= abs(x.eval(1.0)[0] - y.eval(1.0)[0])
        assert r.value >= abs(x.eval(0.0)[0] - y.eval(0.0)[0])


def test_dimension_checks():
    with pytest.raises(DomainError):
        skorokhod.m1_distance(ZERO, cadlag.constant([0.0, 0.0]))
    with pytest.raises(DomainError):
        skorokhod.wm1_distance(ZERO, ZERO)


def test_wm1_identical_and_coordinate_shift():
    x = CadlagPath([0.3, 0.6], [[1.0, 0.0], [2.0, 1.0]], [0.0, 0.0])
    assert skorokhod.wm1_distance(x, x).value == 0.0
    shifted = CadlagPath(x.jump_times, x.post_jump_values + np.array([0.25, 0.0]), x.initial_value + [0.25, 0.0])
    assert skorokhod.wm1_distance(x, shifted).value == pytest.approx(0.25, abs=1e-9)


def test_merging_atoms_wm1_shrinks_to_one_over_n():
    prev = np.inf
    for n in range(3, 51):
        d = merging_atoms_distances(1.0, n)
        assert d["wm1"]["value"] == pytest.approx(min(1.0 / n, 0.5), abs=1e-9)
        assert d["wm1"]["value"] <= prev + 1e-12
        prev = d["wm1"]["value"]
    assert prev <= 0.02 + 1e-12


@pytest.mark.parametrize("u", [1.0, 2.0])
def test_merging_atoms_strong_distance_and_factor_two(u):
    for n in (3, 4, 10, 50):
        d = merging_atoms_distances(u, n)
        assert d["y"]["value"] == pytest.approx(u / 2.0, abs=1e-9)
        assert d["strong"]["value"] == pytest.approx(max(1.0 / n, u / 4.0), abs=1e-9)
        assert d["y"]["lower"] <= 2.0 * d["strong"]["upper"] + 1e-9
    # the unit-constant domination fails in the max-norm
    d = merging_atoms_distances(u, 50)
    assert d["y"]["lower"] > d["strong"]["upper"] + 0.1


def test_merging_atoms_phi2_monotone_distance_tends_to_zero():
    vals = []
    for n in (5, 20, 80, 320):
        x = CadlagPath([0.5], [2.0], [0.0])
        y = CadlagPath([0.5 - 1.0 / n, 0.5], [0.5, 2.0], [0.0])
        vals.append(skorokhod.m1_distance_monotone(x, y))
    assert vals == sorted(vals, reverse=True)
    assert vals[-1] <= 1.0 / 320 + 1e-15


@pytest.mark.parametrize(
    "args,expected",
    [((0.0, 1.0, 2.0), 0.0), ((0.0, 0.5, 0.0), 0.5), ((5.0, 1.0, 4.0), 3.0), ((2.0, 1.0, 0.0), 0.0)],
)
def test_point_oscillation(args, expected):
    assert skorokhod.m1_point_oscillation(*args) == expected


def test_omega_bump():
    n = 10
    bump = CadlagPath([0.5 - 1.0 / n, 0.5], [1.0, 0.0], [0.0])
    assert skorokhod.omega_delta(bump, 2.0 / n) == 1.0
    assert skorokhod.omega_delta(bump, 1.0 / n) == 0.0
    assert skorokhod.omega_delta(bump, 1.0) == 1.0


def test_omega_monotone_is_zero(rng):
    for _ in range(50):
        x = random_monotone_path(rng, max_jumps=10)
        for d in (0.01, 0.3, 1.0):
            assert skorokhod.omega_delta(x, d) == 0.0


def test_omega_against_brute_force(rng):
    for _ in range(40):
        x = random_step_path(rng, max_jumps=7)
        d = float(rng.uniform(0.02, 0.6))
        assert skorokhod.omega_delta(x, d) == pytest.approx(omega_brute(x, d), abs=1e-12)


def test_omega_errors():
    with pytest.raises(DomainError):
        skorokhod.omega_delta(ZERO, 0.0)
    with pytest.raises(DomainError):
        skorokhod.omega_delta(cadlag.constant([0.0, 1.0]), 0.1)


def test_grid_kernel_equals_omega_delta():
    rng = np.random.default_rng(5)
    for n in (3, 10, 57, 200):
        for _ in range(10):
            x = rng.standard_cauchy(n)
            v = cadlag.from_samples(x, "cumulative-sum")
            w = cadlag.from_samples(x, "running-max")
            g = cadlag.linear_combination([v, w], [1.0, -2.0])
            assert gn_oscillation(x) == skorokhod.omega_delta(g, 2.0 / n)
