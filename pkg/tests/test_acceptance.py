"""The ten acceptance criteria at their stated tolerances.

Reference resolution: S^1 with N=256, T^2 with 64^2, time step 1e-3.
Each test prints one PASS/FAIL line; the lines are collected again in the
terminal summary.
"""
import numpy as np

from wptlab import manifold as mf
from wptlab.delta_scheme import DeltaGeodesic, run_delta_scheme
from wptlab.geodesic import generate_geodesic
from wptlab.measure import otto_norm
from wptlab.qstep import compare_to_pde, run_scheme
from wptlab.scenarios import sphere_delta_default, torus_delta
from wptlab.transport_pde import solve_parallel_pde
from wptlab.weak_residual import weak_residual

from conftest import S1_QS, T2_QS


def _ratios(vals):
    return [b / a for a, b in zip(vals, vals[1:])]


def test_c01_conservation(s1_pde, acceptance_report):
    d1, d2 = s1_pde[1000].meta["drift"], s1_pde[2000].meta["drift"]
    fall = d1 / d2
    ok = d1 <= 1e-4 and fall >= 4.0
    acceptance_report(1, ok, f"drift(dt=1e-3)={d1:.3e} <= 1e-4, fall on halving={fall:.6f} >= 4")
    assert d1 <= 1e-4
    assert fall >= 4.0


def test_c02_uniqueness_gauge(s1, s1_paths, s1_pde, acceptance_report):
    other = solve_parallel_pde(s1_paths[1000], s1[3], initial_guess="zero")
    diff = float(np.abs(other.grad(0) - s1_pde[1000].grad(0)).max())
    ok = diff <= 1e-9
    acceptance_report(2, ok, f"max |grad eta(0) difference| = {diff:.3e} <= 1e-9")
    assert ok


def test_c03_transported_pairing_identity(s1, s1_paths, s1_pde, acceptance_report):
    from wptlab.transport_pde import pairing_identity_check

    x = s1[0].nodes[0]

    def f(t):
        return (1 + t) * np.cos(x)

    def f_t(t):
        return np.cos(x)

    r = {T: pairing_identity_check(s1_paths[T], s1_pde[T], f, f_t) for T in (1000, 2000)}
    fall = r[1000] / r[2000]
    ok = r[1000] <= 1e-3 and fall >= 2.0
    acceptance_report(3, ok, f"residual={r[1000]:.3e} <= 1e-3, fall on halving={fall:.3f} >= 2")
    assert r[1000] <= 1e-3
    assert fall >= 2.0


def test_c04_weak_solution(s1, s1_paths, s1_pde, acceptance_report):
    m = s1[0]
    path, sol = s1_paths[1000], s1_pde[1000]
    V = np.array([sol.grad(j) for j in range(len(sol.times))])
    r = weak_residual(path, V, V[0], V[-1])
    bad = weak_residual(path, V, V[0], V[-1] + mf.grad(m, np.sin(m.nodes[0])))
    ok = r <= 1e-3 and bad >= 1e-2
    acceptance_report(4, ok, f"residual={r:.3e} <= 1e-3, corrupted={bad:.3e} >= 1e-2")
    assert r <= 1e-3
    assert bad >= 1e-2


def test_c05_norm_convergence(s1, s1_pde, s1_schemes, acceptance_report):
    m = s1[0]
    g1_norm = otto_norm(s1_schemes[8].path.density(1.0), mf.grad(m, s1[3]))
    errs = [compare_to_pde(s1_schemes[Q], s1_pde[1000])["err_0"] for Q in S1_QS]
    ratios = _ratios(errs)
    ok = all(q <= 0.75 for q in ratios) and errs[-1] <= 0.05 * g1_norm
    acceptance_report(
        5, ok,
        "err_0=" + ", ".join(f"{e:.3e}" for e in errs)
        + "; ratios=" + ", ".join(f"{q:.3f}" for q in ratios) + " <= 0.75"
        + f"; err_0(64)/|grad eta1|={errs[-1] / g1_norm:.3e} <= 0.05",
    )
    assert all(q <= 0.75 for q in ratios)
    assert errs[-1] <= 0.05 * g1_norm


def test_c06_norm_drift(s1_schemes, acceptance_report):
    drift = [s1_schemes[Q].norm_drift() for Q in S1_QS]
    mono = all(b < a for a, b in zip(drift, drift[1:]))
    ok = mono and drift[-1] <= 0.1
    acceptance_report(
        6, ok,
        "drift=" + ", ".join(f"{d:.6e}" for d in drift) + " strictly decreasing, last <= 0.1",
    )
    assert drift[-1] <= 0.1
    assert mono


def test_c07_operator_estimates(s1_diagnostics, t2_diagnostics, acceptance_report):
    parts, ok = [], True
    for name, diags, qs in (("s1", s1_diagnostics, (8, 16, 32)), ("t2", t2_diagnostics, T2_QS)):
        ab = [diags[Q].ab_minus_identity.max() for Q in qs]
        wl = [diags[Q].wl_gap.max() for Q in qs]
        fall_ab = [a / b for a, b in zip(ab, ab[1:])]
        fall_wl = [a / b for a, b in zip(wl, wl[1:])]
        ok &= min(fall_ab + fall_wl) >= 1.5
        parts.append(
            f"{name}: |AB-I| falls " + "/".join(f"{f:.2f}" for f in fall_ab)
            + ", |W-L| falls " + "/".join(f"{f:.2f}" for f in fall_wl)
        )
    acceptance_report(7, ok, "; ".join(parts) + " (each >= 1.5)")
    assert ok


def test_c08_delta_case(acceptance_report):
    m, x, v, nu = sphere_delta_default()
    errs = [run_delta_scheme(DeltaGeodesic(m, x, v, Q), nu)["err"] for Q in S1_QS]
    ratios = _ratios(errs)
    mt, xt, vt, nut = torus_delta()
    flat = max(run_delta_scheme(DeltaGeodesic(mt, xt, vt, Q), nut)["err"]
               for Q in (1, 2, 3, 7, 8, 16, 32, 64))
    ok = all(q <= 0.75 for q in ratios) and errs[-1] <= 1e-2 and flat <= 1e-15
    acceptance_report(
        8, ok,
        "sphere err=" + ", ".join(f"{e:.3e}" for e in errs)
        + "; ratios=" + ", ".join(f"{q:.3f}" for q in ratios)
        + f"; torus max err={flat:.1e}",
    )
    assert all(q <= 0.75 for q in ratios)
    assert errs[-1] <= 1e-2
    assert flat <= 1e-15


def test_c09_trivial_path(s1, acceptance_report):
    m, mu0, _, eta1 = s1
    path = generate_geodesic(mu0, np.zeros(m.shape), T=1000)
    g1 = mf.grad(m, eta1)
    worst = max(float(np.abs(run_scheme(path, g1, Q).fields - g1).max()) for Q in (1, 7, 64))
    ok = worst <= 1e-12
    acceptance_report(9, ok, f"max |V_Q(t) - grad eta1| over Q in (1, 7, 64) = {worst:.3e} <= 1e-12")
    assert ok


def test_c10_nonnegative_curvature(s1, t2, s1_schemes, t2_schemes, acceptance_report):
    slack = []
    for (m, *_, eta1), outs in ((s1, s1_schemes), (t2, t2_schemes)):
        for Q, out in outs.items():
            n1 = otto_norm(out.path.density(1.0), mf.grad(m, eta1))
            n0 = otto_norm(out.path.density(0.0), out.V0)
            slack.append(n0 - (n1 - 2.0 / Q))
    for scen in (sphere_delta_default, torus_delta):
        m, x, v, nu = scen()
        for Q in S1_QS:
            nu0 = run_delta_scheme(DeltaGeodesic(m, x, v, Q), nu)["nu0"]
            slack.append(np.sqrt(nu0.second_moment()) - (np.sqrt(nu.second_moment()) - 2.0 / Q))
    worst = min(slack)
    ok = worst >= 0.0
    acceptance_report(10, ok, f"min of |V_Q(0)| - (|grad eta1| - 2/Q) over all scenarios = {worst:.3e} >= 0")
    assert ok
