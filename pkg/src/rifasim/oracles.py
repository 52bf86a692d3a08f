"""Independent numeric oracles and the self-check suites built on them.

Each oracle is a brute-force or stepwise computation kept deliberately
separate from the closed forms it validates: sequence enumeration for the
urn law, exact Gamma for the Stirling form, stepwise distance stepping for
link expiry, and Monte Carlo urn runs for the limiting share distribution.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import kernels, mobility, pheromone


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    elapsed_s: float


def enumerate_urn_distribution(intensities, quantum, b):
    """Exact count-vector law at horizon b by walking every draw sequence.

    Multiplies per-step proportional probabilities along each of the n**b
    sequences and accumulates them per count vector. Only sane for small n, b.
    """
    n = len(intensities)
    dist: dict[tuple, float] = {}
    state = [float(c) for c in intensities]
    counts = [0] * n

    def rec(depth, prob):
        if depth == b:
            key = tuple(counts)
            dist[key] = dist.get(key, 0.0) + prob
            return
        total = sum(state)
        for d in range(n):
            p = state[d] / total
            state[d] += quantum
            counts[d] += 1
            rec(depth + 1, prob * p)
            counts[d] -= 1
            state[d] -= quantum

    rec(0, 1.0)
    return dist


def stepwise_link_expiry(p, q, tr, dt=1e-3):
    """First multiple of dt at which the pair's distance exceeds tr.

    Steps exact constant-velocity positions; never consults the closed form.
    The scan is bounded by (tr + d0)/v_rel, past which the separation must
    exceed tr by the triangle inequality.
    """
    rvx = p.vx - q.vx
    rvy = p.vy - q.vy
    vrel = math.hypot(rvx, rvy)
    if vrel == 0.0:
        return math.inf
    d0 = mobility.distance(p, q)
    max_steps = int(((tr + d0) / vrel) / dt) + 2
    arr = lambda v: np.array([v], dtype=np.float64)
    out = kernels.first_exit_steps(arr(p.x), arr(p.y), arr(p.vx), arr(p.vy),
                                   arr(q.x), arr(q.y), arr(q.vx), arr(q.vy),
                                   float(tr), float(dt), max_steps)
    k = int(out[0])
    return math.inf if k < 0 else k * dt


def ks_statistic_uniform(samples) -> float:
    """Two-sided Kolmogorov-Smirnov statistic against Uniform(0, 1)."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return float(max(np.max(hi - x), np.max(x - lo)))


def ks_critical_value(n: int, alpha: float) -> float:
    """Asymptotic critical D for the two-sided KS test at level alpha."""
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


def draw_inrange_pairs(count, rng, tr=200.0, area=1200.0, speed_lo=20.0, speed_hi=25.0):
    """Random kinematic pairs already within radio range, as component arrays."""
    px = rng.uniform(0.0, area, count)
    py = rng.uniform(0.0, area, count)
    ang = rng.uniform(0.0, 2 * math.pi, count)
    rad = tr * np.sqrt(rng.uniform(0.0, 1.0, count))
    qx = px + rad * np.cos(ang)
    qy = py + rad * np.sin(ang)
    hp = rng.uniform(0.0, 2 * math.pi, count)
    hq = rng.uniform(0.0, 2 * math.pi, count)
    sp = rng.uniform(speed_lo, speed_hi, count)
    sq = rng.uniform(speed_lo, speed_hi, count)
    return (px, py, sp * np.cos(hp), sp * np.sin(hp),
            qx, qy, sq * np.cos(hq), sq * np.sin(hq))


# ---------------------------------------------------------------------------
# suites

def urn_enumeration_suite(max_b=6) -> SuiteResult:
    """Closed-form urn probabilities vs exhaustive sequence enumeration."""
    start = time.perf_counter()
    worst = 0.0
    worst_norm = 0.0
    cases = 0
    for n in (2, 3):
        for combo in np.ndindex(*(3,) * n):
            intensities = [c + 1 for c in combo]  # entries in {1, 2, 3}
            for t in (1.0, 2.0):
                table = pheromone.PheromoneTable(
                    {i: float(c) for i, c in enumerate(intensities)}, t)
                for b in range(1, max_b + 1):
                    exact = enumerate_urn_distribution(intensities, t, b)
                    total = 0.0
                    for key, p_ref in exact.items():
                        p = pheromone.urn_probability(table, pheromone.CountVector(key))
                        worst = max(worst, abs(p - p_ref))
                        total += p
                        cases += 1
                    worst_norm = max(worst_norm, abs(total - 1.0))
    passed = worst <= 1e-9 and worst_norm <= 1e-9
    detail = f"{cases} count vectors, max |err|={worst:.2e}, max |sum-1|={worst_norm:.2e}"
    return SuiteResult("urn-enumeration", passed, detail, time.perf_counter() - start)


def stirling_suite() -> SuiteResult:
    """Stirling-form error vs exact Gamma: <1% on [10,100], monotone decreasing."""
    start = time.perf_counter()
    errors = []
    for b in range(10, 101):
        exact = math.gamma(b)
        rel = abs(pheromone.stirling_gamma(b) - exact) / exact
        errors.append(rel)
    below = max(errors) < 0.01
    monotone = all(errors[i + 1] < errors[i] for i in range(len(errors) - 1))
    err5 = abs(pheromone.stirling_gamma(5) - math.gamma(5)) / math.gamma(5)
    passed = below and monotone and err5 < 0.03
    detail = (f"max rel err on [10,100]={max(errors):.4%}, monotone={monotone}, "
              f"err(5)={err5:.4%}")
    return SuiteResult("stirling-gamma", passed, detail, time.perf_counter() - start)


def link_expiry_suite(let_fn=None, pairs=1000, dt=1e-3, tr=200.0, seed=1405) -> SuiteResult:
    """Closed-form link expiry vs the dt-stepwise oracle over random in-range pairs."""
    start = time.perf_counter()
    if let_fn is None:
        let_fn = mobility.link_expiry_from_components
    rng = np.random.default_rng(seed)
    px, py, pvx, pvy, qx, qy, qvx, qvy = draw_inrange_pairs(pairs, rng, tr=tr)

    rvx = pvx - qvx
    rvy = pvy - qvy
    vrel = np.sqrt(rvx * rvx + rvy * rvy)
    d0 = np.sqrt((px - qx) ** 2 + (py - qy) ** 2)
    max_steps = int(np.max(((tr + d0) / np.maximum(vrel, 1e-9)) / dt)) + 2
    steps = kernels.first_exit_steps(px, py, pvx, pvy, qx, qy, qvx, qvy, tr, dt, max_steps)

    worst_abs = 0.0
    failures = 0
    for i in range(pairs):
        formula = let_fn(px[i], py[i], pvx[i], pvy[i], qx[i], qy[i], qvx[i], qvy[i], tr)
        oracle = steps[i] * dt
        err = abs(formula - oracle)
        worst_abs = max(worst_abs, err)
        if err > max(0.005 * oracle, 0.010):
            failures += 1

    # zero relative velocity must yield the infinite marker
    static_ok = let_fn(0.0, 0.0, 12.0, -3.0, 50.0, 10.0, 12.0, -3.0, tr) == math.inf
    passed = failures == 0 and static_ok
    detail = (f"{pairs} pairs, failures={failures}, worst |err|={worst_abs * 1e3:.3f} ms, "
              f"static->inf={static_ok}")
    return SuiteResult("link-expiry-numeric", passed, detail, time.perf_counter() - start)


def limiting_density_suite(runs=10_000, steps=2000, seed=917, alpha=0.01) -> SuiteResult:
    """Monte Carlo urn shares vs the Dirichlet/Beta limit law.

    C=(1,1), t=1 shares must pass KS against Uniform(0,1); C=(2,1) shares
    must average 2/3 within 0.02.
    """
    start = time.perf_counter()
    rng = np.random.default_rng(seed)

    def shares_for(c0):
        got = np.empty(runs, np.float64)
        block = 2000
        done = 0
        while done < runs:
            m = min(block, runs - done)
            draws = rng.random((m, steps))
            counts = kernels.urn_counts(np.array(c0, np.float64), 1.0, draws)
            got[done:done + m] = counts[:, 0] / steps
            done += m
        return got

    uniform_shares = shares_for((1.0, 1.0))
    d_stat = ks_statistic_uniform(uniform_shares)
    d_crit = ks_critical_value(runs, alpha)
    ks_ok = d_stat < d_crit

    skewed = shares_for((2.0, 1.0))
    mean_err = abs(float(np.mean(skewed)) - 2.0 / 3.0)
    mean_ok = mean_err <= 0.02

    passed = ks_ok and mean_ok
    detail = (f"KS D={d_stat:.5f} (crit {d_crit:.5f} at alpha={alpha}), "
              f"|mean-2/3|={mean_err:.4f}")
    return SuiteResult("limiting-density-ks", passed, detail, time.perf_counter() - start)


def rwp_center_suite(steps=1_000_000, dt=0.5, seed=230) -> SuiteResult:
    """Long-run random-waypoint positions concentrate around the area center."""
    start = time.perf_counter()
    area = mobility.AreaSpec(1200.0, 1200.0)
    rng = np.random.default_rng(seed)
    kin = mobility.NodeKinematics(float(rng.uniform(0, area.width)),
                                  float(rng.uniform(0, area.height)))
    kin, wp = mobility.initial_waypoint_state(kin, area, (20.0, 25.0), (10.0, 10.0), rng)
    sx = sy = 0.0
    for _ in range(steps):
        kin, wp = mobility.advance_waypoint(kin, wp, dt, area, (20.0, 25.0), (10.0, 10.0), rng)
        sx += kin.x
        sy += kin.y
    mx, my = sx / steps, sy / steps
    tol = 0.05 * area.width
    off = math.hypot(mx - area.width / 2, my - area.height / 2)
    passed = abs(mx - area.width / 2) <= tol and abs(my - area.height / 2) <= tol
    detail = f"mean=({mx:.1f}, {my:.1f}), offset from center={off:.1f} m (tol {tol:.0f} m/axis)"
    return SuiteResult("rwp-center-bias", passed, detail, time.perf_counter() - start)


ALL_SUITES = {
    "urn": urn_enumeration_suite,
    "stirling": stirling_suite,
    "let": link_expiry_suite,
    "dirichlet": limiting_density_suite,
    "rwp": rwp_center_suite,
}


def run_suites(names=None, let_fn=None):
    """Run the named suites (all by default) and return their results."""
    results = []
    for name in names or ALL_SUITES:
        fn = ALL_SUITES[name]
        if name == "let" and let_fn is not None:
            results.append(fn(let_fn=let_fn))
        else:
            results.append(fn())
    return results
