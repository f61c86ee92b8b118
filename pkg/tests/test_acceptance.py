"""Acceptance criteria 1 to 9.

Each test prints one ``CRITERION k PASS|FAIL`` line (collected into the
terminal summary by ``conftest.py``) and then asserts the same condition.
Criteria 3 to 5 run full maximizations and take several minutes together.
"""

import cmath
import math

import numpy as np
import pytest
from scipy.integrate import quad

from hypcap import config as cfgmod
from hypcap import experiments as ex
from hypcap.bie import capacity
from hypcap.geometry import (Constellation, ConstraintSpec, EuclideanCircle, GeometryError,
                             HyperbolicDisk, rotate)
from hypcap.optim import OptimizationProblem, multistart
from hypcap.specialfn import ellip_K, hyp_disk_capacity, mu

TABLE1 = {5: 9.47487674904924, 6: 10.0486182568334, 7: 10.4636668610180, 8: 10.7735173309461}
CASE_C = (2.9128, 2.4504, 2.4363, 2.4363, 2.4504, 2.9128)
TABLE3 = (15.4245, 15.4263, 15.4266)


@pytest.fixture
def report(request):
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def emit(k, ok, detail):
        line = f"CRITERION {k} {'PASS' if ok else 'FAIL'}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return emit


def ring(m, rad=0.5, r=0.1):
    return [EuclideanCircle(rad * cmath.exp(2j * math.pi * j / m), r) for j in range(m)]


def test_criterion_1_exact_disk_oracle(report):
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(20):
        z = 0.8 * math.sqrt(rng.uniform()) * cmath.exp(2j * math.pi * rng.uniform())
        r = rng.uniform(0.1, 1.5)
        worst = max(worst, abs(capacity([HyperbolicDisk(z, r)], 256).cap - hyp_disk_capacity(r)))
    ok = worst <= 1e-8
    report(1, ok, f"20 random single disks at n=256, max |dcap| = {worst:.2e} (tol 1e-8)")
    assert ok


def test_criterion_2_table1(report):
    devs = {m: abs(capacity(ring(m), 1024).cap - ref) for m, ref in TABLE1.items()}
    ok = max(devs.values()) <= 1e-9
    report(2, ok, "table 1 at n=1024, |dcap| = "
           + ", ".join(f"m={m}: {d:.1e}" for m, d in devs.items()) + " (tol 1e-9)")
    assert ok


@pytest.mark.slow
def test_criterion_3_six_equal_disks(report):
    p = OptimizationProblem((0.2,) * 6, ConstraintSpec("disk-centers", 0.75))
    best = multistart(p, 5, seed=0)[0]
    dcap = abs(best.cap - 13.7574)
    drad = float(np.max(np.abs(np.abs(best.centers) - 0.75)))
    dgap = float(np.max(np.abs(best.distances() - 2.6161)))
    ok = best.converged and dcap <= 1e-3 and drad <= 1e-4 and dgap <= 2e-3
    report(3, ok, f"table 2 case A, 5 starts: cap {best.cap:.6f} (|d| {dcap:.1e} <= 1e-3), "
           f"max ||z|-0.75| {drad:.1e} (<= 1e-4), max gap dev {dgap:.1e} (<= 2e-3), "
           f"converged {best.converged}")
    assert ok


@pytest.mark.slow
def test_criterion_4_one_large_disk(report):
    radii = (0.8, 0.2, 0.2, 0.2, 0.2, 0.2)
    p = OptimizationProblem(radii, ConstraintSpec("disk-centers", 0.75))
    best = multistart(p, 2, seed=0)[0]
    dcap = abs(best.cap - 16.6416)
    aligned = ex.match_case(best, radii, CASE_C, cyclic=True)
    ddist = aligned[1] if aligned else math.inf
    ok = best.converged and dcap <= 2e-3 and ddist <= 5e-3
    report(4, ok, f"table 2 case C: cap {best.cap:.6f} (|d| {dcap:.1e} <= 2e-3), "
           f"max distance dev {ddist:.1e} (<= 5e-3)")
    assert ok


@pytest.mark.slow
def test_criterion_5_local_maxima(report):
    p = OptimizationProblem((0.4, 0.4, 0.2, 0.2, 0.2, 0.2), ConstraintSpec("disk-centers", 0.75))
    levels, runs = multistart(p, 20, seed=0, dedupe_tol=1e-4, return_all=True)
    caps = sorted(r.cap for r in levels if r.converged)
    # pair each reference level with a distinct computed level
    matched, free = [], list(caps)
    for ref in TABLE3:
        near = [c for c in free if abs(c - ref) <= 2e-3]
        if near:
            c = min(near, key=lambda c: abs(c - ref))
            free.remove(c)
            matched.append((ref, c))
    ok = len(matched) >= 3
    detail = ", ".join(f"{ref} <- {c:.6f}" for ref, c in matched)
    report(5, ok, f"table 3, 20 starts: {len(caps)} distinct levels {[round(c, 6) for c in caps]}; "
           f"matched {len(matched)}/3 ({detail}) within 2e-3")
    assert ok


@pytest.mark.slow
def test_criterion_6_interval(report):
    ref = ex.load_reference(5)
    spec = ConstraintSpec("interval-centers", 0.75)
    parts, ok = [], True
    for case in ref["case"][:2]:
        p = OptimizationProblem(tuple(case["radii"]), spec)
        best = multistart(p, 2, seed=0)[0]
        dcap = abs(best.cap - case["cap"])
        aligned = ex.match_case(best, case["radii"], case["distances"], cyclic=False)
        ddist = aligned[1] if aligned else math.inf
        ok &= best.converged and dcap <= 1e-3 and ddist <= 5e-3
        parts.append(f"case {case['label']} cap {best.cap:.6f} (|d| {dcap:.1e}), gap dev {ddist:.1e}")
    report(6, ok, "table 5: " + "; ".join(parts) + " (tol 1e-3 / 5e-3)")
    assert ok


def test_criterion_7_special_functions(report):
    rng = np.random.default_rng(7)
    e1 = abs(mu(math.sqrt(0.5)) - math.pi / 2)
    rs = rng.uniform(0.001, 0.999, 100)
    e2 = max(abs(mu(r) * mu(math.sqrt(1 - r * r)) - math.pi ** 2 / 4) for r in rs)
    e3 = 0.0
    for r in np.linspace(0.05, 0.95, 19):
        # t = sin(theta) removes the endpoint singularity at t = 1
        q = quad(lambda th: 1 / math.sqrt(1 - (r * math.sin(th)) ** 2), 0, math.pi / 2,
                 epsabs=0.0, epsrel=1e-13, limit=200)[0]
        e3 = max(e3, abs(ellip_K(r) - q))
    ok = e1 <= 1e-13 and e2 <= 1e-12 and e3 <= 1e-12
    report(7, ok, f"|mu(1/sqrt2) - pi/2| {e1:.1e} (<= 1e-13), product identity {e2:.1e} (<= 1e-12), "
           f"AGM vs quadrature K {e3:.1e} (<= 1e-12)")
    assert ok


def _random_constellation(rng, m):
    for _ in range(1000):
        z = 0.8 * np.sqrt(rng.uniform(size=m)) * np.exp(2j * np.pi * rng.uniform(size=m))
        try:
            return Constellation.from_centers(z, rng.uniform(0.05, 0.6, size=m))
        except GeometryError:
            continue
    raise RuntimeError("no sample")


def test_criterion_8_properties(report):
    rng = np.random.default_rng(8)
    sub = -math.inf  # worst (signed) violation of  max_j cap_j <= cap <= sum_j cap_j
    for _ in range(50):
        c = _random_constellation(rng, int(rng.integers(2, 6)))
        cap = capacity(c, 256).cap
        single = [hyp_disk_capacity(r) for r in c.radii]
        sub = max(sub, cap - sum(single), max(single) - cap)
    c = _random_constellation(rng, 4)
    base = capacity(c, 256).cap
    rot = max(abs(capacity(rotate(c, phi), 256).cap - base) for phi in (0.4, 1.3, 2.9, 5.0))
    sym = capacity(ring(6), 256)
    beq = float(np.ptp(sym.b))
    spread = sym.max_spread
    alpha = abs(capacity(ring(5), 256, alpha=0).cap - capacity(ring(5), 256, alpha=0.2 + 0.7j).cap)
    ref = capacity(ring(5), 1024).cap
    ns = np.array([16, 24, 32, 48])
    err = np.array([abs(capacity(ring(5), n).cap - ref) for n in ns])
    live = err > 1e-13
    slope = np.polyfit(ns[live], np.log10(err[live]), 1)[0] if live.sum() >= 2 else 0.0
    conv = live.sum() >= 3 and slope < -0.1 and bool(np.all(np.diff(err[live]) < 0))
    ok = (sub <= 1e-8 and rot <= 1e-9 and beq <= 1e-8 and spread <= 1e-8 and alpha <= 1e-9 and conv)
    report(8, ok, f"subadditivity/max bound worst margin {sub:.1e} (<= 1e-8), rotation {rot:.1e} "
           f"(<= 1e-9), b_k spread {beq:.1e} (<= 1e-8), h spread {spread:.1e} (<= 1e-8), "
           f"alpha {alpha:.1e} (<= 1e-9), convergence slope {slope:.2f} decades/node "
           f"(errors {', '.join(f'{e:.1e}' for e in err)})")
    assert ok


def test_criterion_9_condensation(report):
    cfg = cfgmod.from_dict({"command": "condense", "solver": {"n": 1024},
                            "condense": {"m": 6, "R": 0.75, "r_min": 0.1, "r_max": 1.2, "points": 23}})
    rows = ex.run_condense(cfg).rows
    area = all(r["area_single"] > r["area_m"] for r in rows)
    sign = np.sign([r["perimeter_single"] - r["perimeter_m"] for r in rows])
    changes = int(np.count_nonzero(np.diff(sign)))
    cross = next((rows[i]["r"] for i in range(1, len(rows)) if sign[i] != sign[i - 1]), math.nan)
    trip = max(r["roundtrip_error"] for r in rows)
    ok = area and changes == 1 and all(r["feasible"] for r in rows) and trip <= 1e-10
    report(9, ok, f"6-disk ring, {len(rows)} radii in [0.1, 1.2]: single-disk area larger everywhere "
           f"{area}, perimeter sign changes {changes} (first at r={cross:.2f}), round trip {trip:.1e}")
    assert ok
