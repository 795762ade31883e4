"""Acceptance criteria A1 to A10 at their stated tolerances.

A1 and the trajectory checks (A3 to A5, A7) share one run of the shipped
preset on n = 2^20, L = 2^17 up to t = 8, which takes a few minutes.
"""
import math

import numpy as np
import pytest
from conftest import record_criterion

from fracspread import cli
from fracspread.config import preset_config
from fracspread.eigen import coupling_bounds, perron_of_model, principal_eigenpair
from fracspread.envelope import (
    align_supersolution,
    build_subsolution,
    build_supersolution,
    front_constants,
    homogeneity_constant,
    homogeneity_ratios,
    lower_bound_check,
    min_sub_t1,
    residual_certificate,
    sub_minorization,
    super_domination,
    upper_bound_check,
)
from fracspread.errors import ValidationError
from fracspread.evolve import compare_evolutions, make_initial, simulate
from fracspread.fronts import exponent_report, level_radius, theoretical_exponent
from fracspread.linsys import (
    LinearizedSystem,
    commutator_integral,
    duhamel_identity_residual,
    linear_upper_field,
    sector_lattice,
    sector_norm_check,
)
from fracspread.model import ModelSpec, preset_model
from fracspread.spectral import Grid, heat_kernel

pytestmark = pytest.mark.slow


@pytest.fixture(scope="session")
def preset_cfg():
    return preset_config()


@pytest.fixture(scope="session")
def run(preset_cfg):
    """The acceptance trajectory, produced exactly as the CLI produces it."""
    return cli._simulate(preset_cfg)


@pytest.fixture(scope="session")
def consts(preset_cfg):
    model = preset_cfg.model()
    eig = perron_of_model(model)
    cb = coupling_bounds(model)
    D = homogeneity_constant(model.delta, model.dim, model.alpha)
    return model, eig, cb, D


# -- A1 -------------------------------------------------------------------------------


def test_a1_spreading_exponent(run, consts):
    model, eig, _, _ = consts
    rep = exponent_report(run, [1e-2, 1e-3], eig.lambda1, model.alpha_min)
    slopes = ", ".join(f"u{r[0]}/mu={r[1]:g}: {r[2]:.4f}" for r in rep.rows)
    ok = rep.within(0.10) and rep.mu_spread < 0.05 and rep.component_spread < 0.05
    record_criterion(
        "A1", ok,
        f"predicted {rep.predicted:.4f}; {slopes}; mu spread {rep.mu_spread:.4f}, "
        f"component spread {rep.component_spread:.4f}",
    )
    assert rep.predicted == 0.5
    assert run.meta["box_min"] >= -1e-9 * model.lambda_big and run.meta["box_excess"] <= 1e-9 * model.lambda_big
    assert rep.within(0.10)
    assert rep.mu_spread < 0.05 and rep.component_spread < 0.05


def test_a1_cli_front_speed(run, preset_cfg, tmp_path, monkeypatch):
    import csv

    monkeypatch.setattr(cli, "_simulate", lambda cfg, t_end=None: run)
    assert cli.main(["front-speed", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4 and all(float(r["rel_err"]) < 0.10 for r in rows)
    assert (tmp_path / "plot_fronts.py").exists()


def test_a1_front_invariants(run, consts):
    model, eig, cb, D = consts
    mus = [1e-2, 1e-3]
    rep = exponent_report(run, mus, eig.lambda1, model.alpha_min)
    lam_hat = rep.predicted
    sup = build_supersolution(model, eig, D)
    t0 = 1.0
    t1 = align_supersolution(sup, run.at(t0))
    lb = lower_bound_check(run, cb.gamma_mm, model.dim, model.alpha_min)
    sub = build_subsolution(model, eig, D, min_sub_t1(D, eig.lambda1), lb.c_lower, cb.gamma_mm)
    fc = front_constants(sup, sub, mus, t0, t1)
    lo, hi = rep.window
    dx = run.grid.dx
    for tr in rep.traces:
        k = mus.index(tr.mu)
        c_up = fc.c_per_component[tr.component - 1, k]
        started = False
        prev = -math.inf
        for t, R in tr.samples:
            if R is not None and R >= 10 * dx:
                started = True
            if started:
                assert R is not None and R >= prev  # nondecreasing after onset
                prev = R
            if lo <= t <= hi:
                # envelope sandwich with 20% slack in the constants
                assert R >= 0.8 * fc.C_lower * math.exp(lam_hat * t)
                assert R <= 1.2 * c_up * math.exp(lam_hat * t)
    for s in run.snapshots:
        for i in range(model.m):
            r_hi = level_radius(s, i, 1e-2)
            r_lo = level_radius(s, i, 1e-3)
            if r_hi is not None:
                assert r_lo is not None and r_hi <= r_lo


# -- A2 -------------------------------------------------------------------------------


def test_a2_exponent_tracks_alpha():
    with pytest.raises(ValidationError, match="smallest exponent"):
        preset_model().replace(alpha=(1.0, 1.0))
    model = preset_model().replace(alpha=(1.0, 0.9))
    g = Grid(2**17, 2.0**14)
    u0 = make_initial("compact_bump", [1.0, 1.0], g, lambda_big=model.lambda_big)
    traj = simulate(model, u0, g, t_end=12.0, dt=0.01, snapshot_times=np.arange(0, 12.0 + 1e-9, 0.25))
    rep = exponent_report(traj, [1e-2, 1e-3], 1.0, 0.9)
    slopes = ", ".join(f"{r[2]:.4f}" for r in rep.rows)
    ok = rep.within(0.15)
    record_criterion("A2", ok, f"alpha=(1,1) rejected; alpha=(1,0.9) predicted {rep.predicted:.4f}, fitted {slopes}")
    assert rep.predicted == pytest.approx(1 / 2.8)
    assert ok


# -- A3 -------------------------------------------------------------------------------


def test_a3_comparison_principle(run, consts):
    model, _, cb, _ = consts
    lam = model.lambda_big
    g = Grid(2**14, 2.0**11)
    pairs = [
        (make_initial("compact_bump", [0.5, 0.3], g), make_initial("compact_bump", [0.6, 0.9], g, r=2.0)),
        (make_initial("compact_bump", [1.0, 1.0], g), make_initial("algebraic_tail", [1.5, 1.2], g, alpha=model.alpha)),
    ]
    violation = max(compare_evolutions(model, lo, hi, t_end=2.0, dt=0.01) for lo, hi in pairs)
    sys_ = LinearizedSystem.from_model(model, cb)
    u0 = run.snapshots[0]
    dom = -math.inf
    for t in (1.0, 2.0, 4.0, 8.0):
        lin = linear_upper_field(sys_, u0, t)
        dom = max(dom, float(np.max(run.at(t).u - lin.u)))
    ok = violation <= 1e-10 * lam and dom <= 1e-8
    record_criterion("A3", ok, f"ordered-data violation {violation:.3e} (tol {1e-10 * lam:.1e}); "
                               f"max(u - linear upper field) {dom:.3e} (tol 1e-8)")
    assert violation <= 1e-10 * lam
    assert dom <= 1e-8


# -- A4 -------------------------------------------------------------------------------


def test_a4_algebraic_tail(run, consts):
    model, eig, _, _ = consts
    rep = upper_bound_check(run, eig.lambda1, model.dim, model.alpha_min)
    tails = {(t, i): s for t, i, _, s in rep.rows if t in (2.0, 4.0)}
    target = -(1 + 2 * model.alpha_min)
    tails_ok = all(abs(s - target) <= 0.1 for s in tails.values()) and len(tails) == 4
    finite = all(math.isfinite(r[2]) for r in rep.rows)
    growth_ok = all(s <= 1.2 * eig.lambda1 for s in rep.growth_slopes)
    ok = tails_ok and finite and growth_ok
    record_criterion(
        "A4", ok,
        "tail slopes " + ", ".join(f"t={t:g} u{i}: {s:.4f}" for (t, i), s in sorted(tails.items()))
        + f"; C1 growth rates {', '.join(f'{s:.3f}' for s in rep.growth_slopes)} (max {1.2 * eig.lambda1:.2f})",
    )
    assert tails_ok and finite and growth_ok


# -- A5 -------------------------------------------------------------------------------


def test_a5_lower_bound_constant(run, consts):
    model, _, cb, _ = consts
    lb = lower_bound_check(run, cb.gamma_mm, model.dim, model.alpha_min, fit_window=(1.0, 2.0))
    ok = lb.c_lower > 0 and lb.later_min_ratio >= lb.c_lower
    record_criterion("A5", ok, f"c = {lb.c_lower:.6g} fitted on [1, 2]; smallest later ratio {lb.later_min_ratio:.6g}")
    assert ok


# -- A6 -------------------------------------------------------------------------------


def test_a6_homogeneity_constant():
    g = Grid(2**14, 2.0**10)
    core = g.core_mask()
    x = g.x[core]
    e_half = np.max(np.abs(homogeneity_ratios(1.0, 1, 0.5, 0.5, g)[core] - (1 - x ** 2) / (1 + x ** 2)))
    e_one = np.max(np.abs(homogeneity_ratios(1.0, 1, 1.0, 0.5, g)[core] - (2 - 6 * x ** 2) / (1 + x ** 2) ** 2))
    res = homogeneity_constant(1.0, 1, (1.0, 0.5), grid=g, detail=True)
    ok = e_half <= 1e-6 and e_one <= 1e-6 and abs(res.D - 2) <= 1e-3 and res.drift < 0.05
    record_criterion("A6", ok, f"ratio errors {e_half:.2e} (alpha 0.5), {e_one:.2e} (alpha 1); "
                               f"D = {res.D:.9f}, refinement drift {res.drift:.2e}")
    assert ok


# -- A7 -------------------------------------------------------------------------------


def test_a7_envelopes(run, consts):
    model, eig, cb, D = consts
    sup = build_supersolution(model, eig, D)
    lb = lower_bound_check(run, cb.gamma_mm, model.dim, model.alpha_min)
    t1_sub = min_sub_t1(D, eig.lambda1)
    sub = build_subsolution(model, eig, D, t1_sub, lb.c_lower, cb.gamma_mm, grid=run.grid)
    tt = np.linspace(0.0, 40.0, 4001)
    b_res = max(float(np.max(np.abs(env.b_ode_residual(tt)))) for env in (sup, sub))
    rgrid = Grid(2**15, 2.0**12)
    times = [0.0, 1.0, 2.0, 4.0]
    rs = residual_certificate(sup, model, times, rgrid, rtol=1e-6)
    rb = residual_certificate(sub, model, times, rgrid, rtol=1e-6)
    t0 = 1.0
    t1 = align_supersolution(sup, run.at(t0))
    dom = super_domination(sup, run, t0, t1)
    mino = sub_minorization(sub, run)
    ok = b_res < 1e-10 and rs.ok and rb.ok and dom <= 1e-8 and mino <= 1e-8
    record_criterion(
        "A7", ok,
        f"b-ODE residual {b_res:.2e}; super residual min {min(r[4] for r in rs.rows):.3e} "
        f"(tol -{1e-6 * sup.a:.1e}); sub residual max {max(r[4] for r in rb.rows):.3e} (tol {1e-6 * sub.a:.1e}); "
        f"domination {dom:.2e}, minorization {mino:.2e}",
    )
    assert b_res < 1e-10
    assert rs.ok, rs.failures()
    assert rb.ok, rb.failures()
    assert dom <= 1e-8 and mino <= 1e-8


# -- A8 -------------------------------------------------------------------------------


def test_a8_sector_and_duhamel():
    sys_ = LinearizedSystem.from_model(preset_model())
    zs = sector_lattice(sys_)
    ts = (0.5, 1.0, 2.0, 4.0)
    sec = sector_norm_check(sys_, zs, ts)
    duh = max(duhamel_identity_residual(sys_, z, t) for z in zs for t in ts)
    dbl = 0.0
    for z in zs:
        for t in ts:
            a = commutator_integral(sys_, z, t, n_quad=16)
            b = commutator_integral(sys_, z, t, n_quad=32)
            dbl = max(dbl, float(np.max(np.abs(a - b))) / max(1.0, float(np.max(np.abs(b)))))
    special = 0.0
    for s in (LinearizedSystem((0.5,), 5.0), LinearizedSystem((0.5, 0.5), 5.0)):
        for z in sector_lattice(s):
            for t in ts:
                special = max(special, duhamel_identity_residual(s, z, t))
    ok = sec.ok and sec.min_slack >= 0 and duh <= 1e-8 and dbl < 1e-10 and special < 1e-12
    record_criterion("A8", ok, f"sector min slack {sec.min_slack:.3e} over {len(sec.rows)} samples; "
                               f"Duhamel residual {duh:.2e}; doubling change {dbl:.2e}; m=1/equal-alpha {special:.2e}")
    assert ok


# -- A9 -------------------------------------------------------------------------------


def test_a9_eigen_oracle():
    rng = np.random.default_rng(20240601)
    worst_val = worst_vec = 0.0
    for _ in range(200):
        m = int(rng.integers(1, 6))
        M = rng.uniform(0.05, 3.0, size=(m, m))
        np.fill_diagonal(M, rng.uniform(-4.0, 4.0, size=m))
        e = principal_eigenpair(M)
        w, V = np.linalg.eig(M)
        k = int(np.argmax(w.real))
        v = np.abs(V[:, k].real)
        v /= v.max()
        worst_val = max(worst_val, abs(e.lambda1 - w[k].real))
        worst_vec = max(worst_vec, float(np.max(np.abs(e.phi1 - v))))
    ok = worst_val <= 1e-10 and worst_vec <= 1e-8
    record_criterion("A9", ok, f"200 Metzler matrices: eigenvalue error {worst_val:.2e}, eigenvector error {worst_vec:.2e}")
    assert ok


# -- A10 ------------------------------------------------------------------------------


def test_a10_kernel_oracles():
    g = Grid(2**16, 2.0**12)
    core = g.core_mask()
    line = heat_kernel(0.5, 1.0, g, whole_line=True)
    cauchy = 1.0 / (math.pi * (1.0 + g.x ** 2))
    e_cauchy = float(np.max(np.abs(line.values[core] / cauchy[core] - 1)))
    e_mass = max(abs(heat_kernel(a, t, g).mass - 1) for a in (0.25, 0.5, 0.75, 1.0) for t in (0.1, 1.0, 10.0))
    # self-similarity: p(t, x) = t^(-1/2a) p(1, x t^(-1/2a)), on a domain scaled the same way
    e_self = 0.0
    for a in (0.5, 0.75):
        for t in (0.25, 4.0):
            s = t ** (1 / (2 * a))
            kt = heat_kernel(a, t, g).values
            k1 = heat_kernel(a, 1.0, Grid(g.n, g.length / s)).values / s
            e_self = max(e_self, float(np.max(np.abs(kt - k1)) / np.max(k1)))
    # semigroup: p(t) * p(s) = p(t + s) by direct circular summation on a small torus
    sg = Grid(512, 64.0)
    idx = (np.arange(sg.n)[:, None] - np.arange(sg.n)[None, :] + sg.center) % sg.n
    e_semi = 0.0
    for a in (0.5, 0.75):
        p1, p2, p12 = (heat_kernel(a, t, sg).values for t in (0.6, 1.4, 2.0))
        conv = (p1[idx] * p2[None, :]).sum(axis=1) * sg.dx
        e_semi = max(e_semi, float(np.max(np.abs(conv - p12)) / np.max(p12)))
    ok = e_cauchy <= 1e-6 and e_mass <= 1e-6 and e_self <= 1e-6 and e_semi <= 1e-6
    record_criterion("A10", ok, f"Cauchy rel. error {e_cauchy:.2e}; mass error {e_mass:.2e}; "
                                f"self-similarity {e_self:.2e}; semigroup {e_semi:.2e}")
    assert ok
