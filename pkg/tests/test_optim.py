import cmath
import math

import numpy as np
import pytest

from hypcap.geometry import ConstraintSpec, hyp_distance, hyp_to_euclidean, HyperbolicDisk
from hypcap.optim import (InfeasibleStartError, OptimizationProblem, OptimizationResult,
                          OptimizerOptions, constraint_values, dedupe, maximize, multistart,
                          numerical_gradient, objective, random_start)
from hypcap.specialfn import hyp_disk_capacity

DISK = ConstraintSpec("disk-centers", 0.6)
LINE = ConstraintSpec("interval-centers", 0.75)


def ring(m, R=0.75):
    return np.array([R * cmath.exp(2j * math.pi * j / m) for j in range(m)])


def small_disk_problem(**kw):
    return OptimizationProblem((0.3, 0.3, 0.3), DISK, n_solver=32, n_polish=64, **kw)


def small_line_problem():
    return OptimizationProblem((0.2, 0.3, 0.2), LINE, n_solver=32, n_polish=64)


def monotone_per_fidelity(trace):
    by_n = {}
    for t in trace:
        by_n.setdefault(t.n, []).append(t.cap)
    return all(np.all(np.diff(c) >= -1e-12) for c in by_n.values())


# --- objective --------------------------------------------------------------

def test_objective_table2_case_a():
    p = OptimizationProblem((0.2,) * 6, ConstraintSpec("disk-centers", 0.75))
    assert objective(ring(6), p, n=256) == pytest.approx(13.7574, abs=1e-3)


def test_objective_single_disk_independent_of_center(rng):
    p = OptimizationProblem((0.7,), symmetry_pin=False)
    for _ in range(5):
        z = 0.8 * math.sqrt(rng.uniform()) * cmath.exp(2j * math.pi * rng.uniform())
        assert objective([z], p, n=256) == pytest.approx(hyp_disk_capacity(0.7), abs=1e-8)


def test_objective_permutation_invariant(rng):
    z = np.array([0.5, -0.3 + 0.4j, -0.2 - 0.5j])
    p = OptimizationProblem((0.2, 0.3, 0.4), symmetry_pin=False)
    q = OptimizationProblem((0.4, 0.2, 0.3), symmetry_pin=False)
    assert objective(z, p, n=128) == pytest.approx(objective(z[[2, 0, 1]], q, n=128), abs=1e-10)


def test_objective_overlap_is_failure_signal():
    p = OptimizationProblem((0.5, 0.5), symmetry_pin=False)
    assert objective([0.1, -0.1], p, n=32) == -math.inf


def test_objective_counts_calls():
    from hypcap.optim import _Counter

    c = _Counter()
    p = OptimizationProblem((0.2,))
    objective([0.3], p, n=32, counter=c)
    objective([0.4], p, n=32, counter=c)
    assert c.calls == 2


# --- numerical gradient -----------------------------------------------------

def test_gradient_single_centered_disk_vanishes():
    p = OptimizationProblem((0.5,), symmetry_pin=False)
    g, one_sided = numerical_gradient([0.0], p, n=128)
    assert not one_sided
    assert np.max(np.abs(g)) < 1e-4


def test_gradient_symmetric_pair_antisymmetric():
    p = OptimizationProblem((0.3, 0.3), symmetry_pin=False)
    g, _ = numerical_gradient([0.4, -0.4], p, n=128)
    assert g[0] == pytest.approx(-g[2], abs=1e-6)
    assert abs(g[1]) < 1e-6 and abs(g[3]) < 1e-6
    q = OptimizationProblem((0.3, 0.3), LINE)
    gl, _ = numerical_gradient([0.4, -0.4], q, n=128)
    assert gl.shape == (2,)
    assert gl[0] == pytest.approx(-gl[1], abs=1e-6)


def test_gradient_matches_independent_reevaluation():
    p = OptimizationProblem((0.2, 0.3, 0.25), ConstraintSpec("disk-centers", 0.75))
    z = np.array([0.5, -0.2 + 0.5j, -0.3 - 0.4j])
    h = 1e-5
    g, _ = numerical_gradient(z, p, h=h, n=64)
    x = p.to_vars(z)
    i = 2
    e = np.zeros_like(x)
    e[i] = h
    fd = (objective(p.to_centers(x + e), p, n=64) - objective(p.to_centers(x - e), p, n=64)) / (2 * h)
    assert g[i] == pytest.approx(fd, abs=1e-12)
    assert g.shape == (5,)  # pinned: the imaginary part of center 1 is not a variable


def test_gradient_one_sided_fallback_flagged():
    p = OptimizationProblem((0.2, 0.2), LINE)
    # place the disks 1e-6 apart so that the inward stencil point overlaps
    x = math.tanh(0.1 + 2.5e-7)  # rho(x, -x) = 4 artanh(x) = 0.4 + 1e-6
    g, one_sided = numerical_gradient([x, -x], p, h=1e-5, n=64)
    assert one_sided
    assert np.all(np.isfinite(g))


# --- constraints and starts --------------------------------------------------

def test_constraint_values_disk_kind():
    p = OptimizationProblem((0.1, 0.2), ConstraintSpec("disk-centers", 0.5), symmetry_pin=False)
    z = np.array([0.3, -0.4j])
    g, J = constraint_values(p.to_vars(z), p, jacobian=True)
    assert g[0] == pytest.approx(hyp_distance(z[0], z[1]) - 0.3 - p.margin)
    assert g[1:] == pytest.approx([0.25 - 0.09, 0.25 - 0.16])
    assert J.shape == (3, 4)
    # Jacobian of the pairwise constraint against finite differences
    x = p.to_vars(z)
    for i in range(4):
        e = np.zeros(4)
        e[i] = 1e-7
        fd = (constraint_values(x + e, p)[0] - constraint_values(x - e, p)[0]) / 2e-7
        assert J[0, i] == pytest.approx(fd, abs=1e-6)


def test_constraint_values_interval_kind():
    p = OptimizationProblem((0.1, 0.1), LINE)
    g = constraint_values(np.array([0.5, -0.25]), p)
    assert g[1:] == pytest.approx([0.25, 1.25, 1.0, 0.5])


def test_constraint_values_whole_disk():
    spec = ConstraintSpec("disk-centers", 0.6, whole_disk=True)
    p = OptimizationProblem((0.3,), spec)
    c = hyp_to_euclidean(HyperbolicDisk(0.2, 0.3))
    assert constraint_values(np.array([0.2]), p)[0] == pytest.approx(0.6 - abs(c.center) - c.radius)


@pytest.mark.parametrize("spec", [DISK, LINE, ConstraintSpec("disk-centers", 0.6, whole_disk=True)])
def test_random_start_feasible_and_seeded(spec):
    p = OptimizationProblem((0.3, 0.2, 0.25, 0.2), spec)
    z1 = random_start(p, np.random.default_rng(3))
    z2 = random_start(p, np.random.default_rng(3))
    assert np.array_equal(z1, z2)
    assert np.all(constraint_values(p.to_vars(z1), p) > 0)
    if spec.kind == "interval-centers":
        assert np.all(z1.imag == 0) and np.all(np.diff(z1.real) > 0)
    else:
        assert z1[0].imag == 0 and z1[0].real > 0


def test_random_start_infeasible_problem():
    p = OptimizationProblem((1.0, 1.0, 1.0), ConstraintSpec("interval-centers", 0.3))
    with pytest.raises(InfeasibleStartError):
        random_start(p, np.random.default_rng(0), attempts=20)


def test_maximize_rejects_infeasible_start():
    p = small_disk_problem()
    with pytest.raises(InfeasibleStartError):
        maximize([0.1, 0.12, -0.3], p)  # overlapping
    with pytest.raises(InfeasibleStartError):
        maximize([0.59, 0.59j, -0.65], p)  # outside |z| <= R
    with pytest.raises(ValueError):
        maximize([0.3, -0.3], p)  # wrong count


# --- maximize ---------------------------------------------------------------

@pytest.fixture(scope="module")
def disk_run():
    p = small_disk_problem()
    start = random_start(p, np.random.default_rng(5))
    return p, start, maximize(start, p)


def test_maximize_equal_disks_disperse(disk_run):
    p, _, r = disk_run
    assert r.converged
    assert r.stationarity <= 1e-4 and r.violation <= 1e-9
    assert np.allclose(np.abs(r.centers), 0.6, atol=1e-4)
    d = r.distances()
    assert d.max() - d.min() < 2e-3
    # check against the capacity of the exactly symmetric configuration
    assert r.cap == pytest.approx(objective(ring(3, 0.6), p, n=64), abs=1e-6)


def test_maximize_pin_and_trace(disk_run):
    p, start, r = disk_run
    assert r.centers[0].imag == 0 and r.centers[0].real > 0
    assert r.evaluations > 0 and len(r.trace) > 1
    assert monotone_per_fidelity(r.trace)
    assert r.trace[0].cap == pytest.approx(objective(start, p), abs=1e-12)
    assert {t.n for t in r.trace} <= {p.n_solver, p.n_polish}
    assert r.trace[-1].n == p.n_polish


def test_maximize_pin_invariance(disk_run):
    p, start, r = disk_run
    q = small_disk_problem(symmetry_pin=False)
    free = maximize(start * cmath.exp(0.3j), q)
    assert free.cap == pytest.approx(r.cap, abs=1e-6)


def test_maximize_seeded_determinism():
    p = small_line_problem()
    start = random_start(p, np.random.default_rng(11))
    a, b = maximize(start, p), maximize(start, p)
    assert len(a.trace) == len(b.trace)
    for s, t in zip(a.trace, b.trace):
        assert s.cap == t.cap and np.array_equal(s.centers, t.centers)


def test_maximize_interval_outer_disks_at_ends():
    p = small_line_problem()
    r = maximize(random_start(p, np.random.default_rng(2)), p)
    assert r.converged
    x = np.sort(r.centers.real)
    assert x[0] == pytest.approx(-0.75, abs=1e-6) and x[-1] == pytest.approx(0.75, abs=1e-6)
    assert np.all(r.centers.imag == 0)
    assert monotone_per_fidelity(r.trace)


def test_maximize_whole_disk_constraint():
    spec = ConstraintSpec("disk-centers", 0.6, whole_disk=True)
    p = OptimizationProblem((0.3, 0.3), spec, n_solver=32, n_polish=64)
    r = maximize(random_start(p, np.random.default_rng(1)), p)
    assert r.converged
    for z in r.centers:
        c = hyp_to_euclidean(HyperbolicDisk(z, 0.3))
        assert abs(c.center) + c.radius == pytest.approx(0.6, abs=1e-6)
    # the two disks end up opposite each other
    assert abs(r.centers[0] + r.centers[1]) < 1e-3


def test_maximize_iteration_cap_returns_best_so_far():
    p = small_line_problem()
    start = random_start(p, np.random.default_rng(4))
    r = maximize(start, p, OptimizerOptions(max_iter=2))
    assert not r.converged
    assert r.cap >= objective(start, p) - 1e-12
    assert np.all(constraint_values(p.to_vars(r.centers), p) >= -1e-9)


# --- multistart and dedupe ---------------------------------------------------

def _fake(cap):
    return OptimizationResult(np.zeros(1, complex), cap, [], 0, True, 0.0, 0.0)


def test_dedupe_by_capacity_value():
    levels = dedupe([_fake(1.0), _fake(2.0), _fake(1.00005), _fake(1.5)], tol=1e-4)
    assert [r.cap for r in levels] == [2.0, 1.5, 1.00005]


def test_multistart_k1_reduces_to_maximize():
    p = small_line_problem()
    (only,) = multistart(p, 1, seed=7)
    direct = maximize(random_start(p, np.random.default_rng(7)), p)
    assert only.cap == direct.cap
    assert np.array_equal(only.centers, direct.centers)


def test_multistart_sorted_and_deterministic():
    p = small_line_problem()
    levels, runs = multistart(p, 3, seed=1, return_all=True)
    again, _ = multistart(p, 3, seed=1, return_all=True)
    assert len(runs) == 3
    assert [r.cap for r in levels] == sorted((r.cap for r in levels), reverse=True)
    assert [r.cap for r in levels] == [r.cap for r in again]
    with pytest.raises(ValueError):
        multistart(p, 0)
