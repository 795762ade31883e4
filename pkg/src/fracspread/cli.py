"""Command-line entry point.

Exit codes: 0 success, 1 validation or certificate failure, 2 numerical
failure (blow-up, guard band, failed consistency check).
"""
import argparse
import csv
import datetime
import math
import os
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from fracspread import __version__, kernels
from fracspread.config import load_config, preset_config
from fracspread.errors import CertificateError, NumericalError, ValidationError
from fracspread.spectral import Grid, heat_kernel, kernel_tail_fit, set_fft_workers


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, complex):
        return repr(v)
    return "" if v is None else str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def snapshot_name(t):
    return f"snap_t{t:.4f}.csv"


def write_snapshot(state, directory, stride=1):
    x = state.grid.x[::stride]
    u = state.u[:, ::stride]
    header = ["x"] + [f"u_{i + 1}" for i in range(state.m)]
    path = Path(directory) / snapshot_name(state.t)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, np.column_stack([x, u.T]), delimiter=",", fmt="%.17g")
    return path


def write_manifest(directory, command, cfg, args, extra=None):
    g = cfg["grid"]
    rows = [
        ("command", command),
        ("model_hash", cfg.model().model_hash()),
        ("n", g["n"]),
        ("L", g["L"]),
        ("dt", cfg["time"]["dt"]),
        ("t_end", cfg["time"]["t_end"]),
        ("seed", args.seed),
        ("threads", args.threads),
        ("backend", kernels.BACKEND),
        ("fracspread_version", __version__),
        ("numpy_version", np.__version__),
        ("scipy_version", scipy.__version__),
        ("python_version", platform.python_version()),
        ("created", datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")),
    ]
    for k, v in (extra or {}).items():
        rows.append((k, v))
    return write_csv(Path(directory) / "run.csv", ["key", "value"], rows)


PLOT_TEMPLATE = '''"""Plot ln R against t for every traced level set (generated file)."""
import csv
import math
from collections import defaultdict

import matplotlib.pyplot as plt

FRONTS = {fronts!r}
SUMMARY = {summary!r}

series = defaultdict(list)
with open(FRONTS) as fh:
    for row in csv.DictReader(fh):
        if row["R"] not in ("", "nan"):
            series[(row["component"], row["mu"])].append((float(row["t"]), math.log(float(row["R"]))))

summary = {{}}
with open(SUMMARY) as fh:
    for row in csv.DictReader(fh):
        summary[(row["component"], row["mu"])] = row

fig, ax = plt.subplots(figsize=(6, 4))
predicted = None
for key, pts in sorted(series.items()):
    t, lr = zip(*pts)
    row = summary.get(key, {{}})
    slope = row.get("slope", "nan")
    label = f"u_{{key[0]}}, mu={{key[1]}} (slope {{slope}})"
    if slope in ("", "nan"):
        label += " insufficient data"
    ax.plot(t, lr, "o-", ms=3, label=label)
    if row.get("predicted") not in (None, "", "nan"):
        predicted = float(row["predicted"])
        anchor = (t[len(t) // 2], lr[len(lr) // 2])
if not series:
    ax.text(0.5, 0.5, "insufficient data", ha="center", va="center", transform=ax.transAxes)
if predicted is not None and series:
    tt = [min(p[0] for s in series.values() for p in s), max(p[0] for s in series.values() for p in s)]
    ax.plot(tt, [anchor[1] + predicted * (x - anchor[0]) for x in tt], "k--", label=f"predicted slope {{predicted:.4g}}")
ax.set_xlabel("t")
ax.set_ylabel("ln R")
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig({png!r}, dpi=150)
'''


def emit_plot_script(directory, fronts="fronts.csv", summary="summary.csv", name="plot_fronts.py"):
    """Write a standalone matplotlib script that plots ln R vs t."""
    d = Path(directory)
    for f in (fronts, summary):
        if not (d / f).exists():
            raise ValidationError(f"cannot emit plot script: {d / f} is missing")
    path = d / name
    path.write_text(PLOT_TEMPLATE.format(fronts=fronts, summary=summary, png="fronts.png"))
    return path


# -- subcommands ----------------------------------------------------------------


def _simulate(cfg, t_end=None):
    from fracspread.evolve import make_initial, simulate

    model = cfg.model()
    grid = cfg.grid()
    ic = cfg["ic"]
    u0 = make_initial(ic["kind"], ic["h"], grid, r=ic["r"], alpha=model.alpha,
                      lambda_big=model.lambda_big, center=ic["center"])
    ver = cfg["verify"]
    guard = ver["guard_tol"] if ver["guard_tol"] is not None else 1e-6 * model.lambda_big
    t_end = cfg["time"]["t_end"] if t_end is None else t_end
    times = [t for t in cfg.snapshot_times() if t <= t_end + 1e-12]
    return simulate(model, u0, grid, t_end=t_end, dt=cfg["time"]["dt"], snapshot_times=times, guard_tol=guard)


def cmd_simulate(cfg, args, out):
    traj = _simulate(cfg)
    if cfg["output"]["write_snapshots"]:
        for s in traj.snapshots:
            write_snapshot(s, out, cfg["output"]["snapshot_stride"])
    write_manifest(out, "simulate", cfg, args, {k: v for k, v in traj.meta.items()})
    print(f"simulated {len(traj.snapshots)} snapshots to t = {traj.times[-1]:g} in {traj.meta['steps']} steps")
    return 0


def cmd_front_speed(cfg, args, out):
    from fracspread.eigen import perron_of_model
    from fracspread.fronts import exponent_report

    model = cfg.model()
    eig = perron_of_model(model)
    traj = _simulate(cfg)
    fr = cfg["fronts"]
    rep = exponent_report(traj, fr["mu"], eig.lambda1, model.alpha_min, model.dim, window=fr["window"])
    rows = []
    for tr in rep.traces:
        for t, R in tr.samples:
            rows.append((tr.component, tr.mu, t, float("nan") if R is None else R))
    write_csv(Path(out) / "fronts.csv", ["component", "mu", "t", "R"], rows)
    write_csv(Path(out) / "summary.csv", ["component", "mu", "slope", "stderr", "predicted", "rel_err"],
              [r[:6] for r in rep.rows])
    emit_plot_script(out)
    write_manifest(out, "front-speed", cfg, args, {"window": f"{rep.window[0]}:{rep.window[1]}",
                                                   "mu_spread": rep.mu_spread,
                                                   "component_spread": rep.component_spread})
    for r in rep.rows:
        print(f"component {r[0]} mu {r[1]:g}: slope {r[2]:.4f} +- {r[3]:.1e}, predicted {r[4]:.4f}, "
              f"rel_err {r[5]:.3f}")
    print(f"mu spread {rep.mu_spread:.4f}, component spread {rep.component_spread:.4f}")
    ok = rep.within(fr["slope_rtol"]) and rep.mu_spread < fr["spread_tol"] and rep.component_spread < fr["spread_tol"]
    if not ok:
        print("front-speed: fitted exponents miss the tolerance", file=sys.stderr)
        return 1
    return 0


CERT_HEADER = ["check", "t", "i", "worst_x", "value", "tolerance", "pass"]


def _verify_hypotheses(cfg, args, out):
    from fracspread.model import validate_hypotheses

    model = cfg.model()
    rep = validate_hypotheses(model, n_samples=cfg["verify"]["n_samples"], seed=args.seed)
    rows = [(name, "", "", "", value, 0.0, ok) for name, value, ok in rep.rows()]
    write_csv(Path(out) / "certificate.csv", CERT_HEADER, rows)
    for r in rows:
        print(f"{r[0]}: {r[4]:.6g} {'pass' if r[6] else 'FAIL'}")
    if not rep.ok:
        print(f"hypotheses failed: {', '.join(rep.failures())}", file=sys.stderr)
        return 1
    return 0


def _lower_constant(cfg, traj=None):
    from fracspread.eigen import coupling_bounds
    from fracspread.envelope import lower_bound_check

    model = cfg.model()
    cb = coupling_bounds(model)
    if traj is None:
        traj = _simulate(cfg, t_end=min(2.0, cfg["time"]["t_end"]))
    return lower_bound_check(traj, cb.gamma_mm, model.dim, model.alpha_min), cb


def _verify_residuals(cfg, args, out):
    from fracspread.eigen import perron_of_model
    from fracspread.envelope import (
        build_subsolution,
        build_supersolution,
        homogeneity_constant,
        min_sub_t1,
        residual_certificate,
    )

    model = cfg.model()
    ver = cfg["verify"]
    eig = perron_of_model(model)
    D = homogeneity_constant(model.delta, model.dim, model.alpha)
    rgrid = Grid(ver["residual_n"], ver["residual_L"])
    sup = build_supersolution(model, eig, D)
    lb, cb = _lower_constant(cfg)
    t1 = ver["sub_t1"] if ver["sub_t1"] is not None else min_sub_t1(D, eig.lambda1)
    sub = build_subsolution(model, eig, D, t1, lb.c_lower, cb.gamma_mm, grid=rgrid)
    rows = []
    tt = np.linspace(0.0, 40.0, 401)
    for env in (sup, sub):
        r = float(np.max(np.abs(env.b_ode_residual(tt))))
        rows.append((f"{env.sign}_b_ode", 40.0, 0, 0.0, r, 1e-10, r < 1e-10))
    for env in (sup, sub):
        rows += residual_certificate(env, model, ver["residual_times"], rgrid, ver["residual_rtol"]).rows
    write_csv(Path(out) / "certificate.csv", CERT_HEADER, rows)
    print(f"D = {D:.6g}, super a = {sup.a:.6g}, sub a = {sub.a:.6g} (t1 = {t1:g})")
    return _report_rows(rows)


def _report_rows(rows):
    bad = [r for r in rows if not r[6]]
    for r in rows:
        print(f"{r[0]} t={_fmt(r[1])} i={_fmt(r[2])}: {r[4]:.3e} (tol {r[5]:.1e}) {'pass' if r[6] else 'FAIL'}")
    if bad:
        print(f"{len(bad)} certificate check(s) failed", file=sys.stderr)
        return 1
    return 0


def _verify_lower(cfg, args, out):
    from fracspread.eigen import perron_of_model
    from fracspread.envelope import build_subsolution, homogeneity_constant, min_sub_t1, sub_minorization

    model = cfg.model()
    traj = _simulate(cfg)
    lb, cb = _lower_constant(cfg, traj)
    rows = [("lower_ratio", t, i, x, v, lb.c_lower, v >= lb.c_lower * (1 - 1e-12)) for t, i, v, x in lb.rows]
    eig = perron_of_model(model)
    D = homogeneity_constant(model.delta, model.dim, model.alpha)
    t1 = cfg["verify"]["sub_t1"] if cfg["verify"]["sub_t1"] is not None else min_sub_t1(D, eig.lambda1)
    if traj.times[-1] >= t1:
        sub = build_subsolution(model, eig, D, t1, lb.c_lower, cb.gamma_mm, grid=traj.grid)
        worst = sub_minorization(sub, traj)
        tol = cfg["verify"]["domination_tol"]
        rows.append(("sub_minorization", traj.times[-1], 0, 0.0, worst, tol, worst <= tol))
    write_csv(Path(out) / "certificate.csv", CERT_HEADER, rows)
    print(f"lower-bound constant c = {lb.c_lower:.6g}")
    return _report_rows(rows)


def _verify_upper(cfg, args, out):
    from fracspread.eigen import perron_of_model
    from fracspread.envelope import (
        align_supersolution,
        build_supersolution,
        homogeneity_constant,
        super_domination,
        upper_bound_check,
    )

    model = cfg.model()
    eig = perron_of_model(model)
    traj = _simulate(cfg)
    rep = upper_bound_check(traj, eig.lambda1, model.dim, model.alpha_min)
    rows = [("C1", t, i, 0.0, c1, math.inf, math.isfinite(c1)) for t, i, c1, _ in rep.rows]
    for i, s in enumerate(rep.growth_slopes):
        rows.append(("C1_growth_rate", traj.times[-1], i + 1, 0.0, s, rep.max_rate * eig.lambda1,
                     s <= rep.max_rate * eig.lambda1))
    t0 = cfg["verify"]["super_t0"]
    if traj.times[-1] >= t0:
        D = homogeneity_constant(model.delta, model.dim, model.alpha)
        sup = build_supersolution(model, eig, D)
        t1 = align_supersolution(sup, traj.at(t0))
        worst = super_domination(sup, traj, t0, t1)
        tol = cfg["verify"]["domination_tol"]
        rows.append(("super_domination", traj.times[-1], 0, t1, worst, tol, worst <= tol))
    write_csv(Path(out) / "certificate.csv", CERT_HEADER, rows)
    return _report_rows(rows)


def cmd_verify(cfg, args, out):
    handler = {
        "hypotheses": _verify_hypotheses,
        "residuals": _verify_residuals,
        "lower": _verify_lower,
        "upper": _verify_upper,
    }[args.what]
    code = handler(cfg, args, out)
    write_manifest(out, f"verify-{args.what}", cfg, args)
    return code


def cmd_kernel(cfg, args, out):
    grid = Grid(args.n, args.L)
    prof = heat_kernel(args.alpha, args.t, grid, whole_line=args.whole_line)
    write_csv(Path(out) / "kernel.csv", ["x", "p"], zip(prof.x, prof.values))
    fit = kernel_tail_fit(prof)
    print(
        f"alpha={args.alpha:g} t={args.t:g} mass={prof.mass:.12g} slope={fit.slope:.6g} "
        f"constant={fit.constant:.6g} algebraic={_fmt(fit.algebraic)} "
        f"B_lo={prof.tail_constant_lower:.6g} B_up={prof.tail_constant_upper:.6g}"
    )
    return 0


def cmd_linsys(cfg, args, out):
    from fracspread.linsys import (
        LinearizedSystem,
        duhamel_identity_residual,
        linear_matrix_kernel,
        sector_lattice,
        sector_norm_check,
    )

    model = cfg.model()
    sys_ = LinearizedSystem.from_model(model)
    zs = sector_lattice(sys_, radii=args.radii)
    rep = sector_norm_check(sys_, zs, args.t)
    write_csv(Path(out) / "sector.csv", ["z_re", "z_im", "t", "lhs", "rhs", "slack"],
              [(z.real, z.imag, t, lhs, rhs, sl) for z, t, lhs, rhs, sl in rep.rows])
    duh = [(z.real, z.imag, t, duhamel_identity_residual(sys_, z, t)) for z in zs for t in args.t]
    write_csv(Path(out) / "duhamel.csv", ["z_re", "z_im", "t", "residual"], duh)
    grid = Grid(args.n, args.L)
    K = linear_matrix_kernel(sys_, args.kernel_t, grid)
    m = sys_.m
    header = ["x"] + [f"K_{i + 1}{j + 1}" for i in range(m) for j in range(m)]
    cols = [grid.x] + [K[i, j] for i in range(m) for j in range(m)]
    write_csv(Path(out) / "linsys_kernel.csv", header, zip(*cols))
    worst = max(r[3] for r in duh)
    print(f"sector bound: {len(rep.rows)} samples, min slack {rep.min_slack:.3e}; max Duhamel residual {worst:.3e}")
    if not rep.ok or worst > 1e-8:
        print("linsys: bound or identity check failed", file=sys.stderr)
        return 1
    return 0


def cmd_eigen(cfg, args, out):
    from fracspread.eigen import coupling_bounds, perron_of_model

    model = cfg.model()
    eig = perron_of_model(model)
    cb = coupling_bounds(model, seed=args.seed)
    rows = [("lambda1", eig.lambda1)]
    rows += [(f"phi1_{i + 1}", v) for i, v in enumerate(eig.phi1)]
    rows += [(f"gamma_{i + 1}{j + 1}", cb.gamma[i, j]) for i in range(model.m) for j in range(model.m)]
    rows.append(("l", cb.l))
    write_csv(Path(out) / "eigen.csv", ["name", "value"], rows)
    for k, v in rows:
        print(f"{k},{_fmt(v)}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "front-speed": cmd_front_speed,
    "verify": cmd_verify,
    "kernel": cmd_kernel,
    "linsys": cmd_linsys,
    "eigen": cmd_eigen,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration (YAML); defaults to the shipped preset")
    common.add_argument("--out", help="output directory (overrides output.directory)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    common.add_argument("--t-end", type=float, dest="t_end")
    common.add_argument("--mu", type=float, nargs="+")

    ap = argparse.ArgumentParser(prog="fracspread", description="Fractional cooperative reaction-diffusion toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate and write snapshots")
    sub.add_parser("front-speed", parents=[common], help="measure the spreading exponent")
    v = sub.add_parser("verify", parents=[common], help="run a certificate check")
    v.add_argument("--what", choices=["residuals", "lower", "upper", "hypotheses"], required=True)
    k = sub.add_parser("kernel", parents=[common], help="heat kernel profile and tail fit")
    k.add_argument("--alpha", type=float, required=True)
    k.add_argument("--t", type=float, default=1.0)
    k.add_argument("--n", type=int, default=2**14)
    k.add_argument("--L", type=float, default=2.0**10)
    k.add_argument("--whole-line", action="store_true", help="subtract periodic images")
    ls = sub.add_parser("linsys", parents=[common], help="sector bounds, Duhamel identity, matrix kernel")
    ls.add_argument("--t", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ls.add_argument("--radii", type=float, nargs="+", default=[0.0, 0.5, 1.0, 2.0, 4.0, 8.0])
    ls.add_argument("--kernel-t", type=float, default=1.0)
    ls.add_argument("--n", type=int, default=2**14)
    ls.add_argument("--L", type=float, default=2.0**10)
    sub.add_parser("eigen", parents=[common], help="Perron eigenpair and coupling bounds")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else preset_config()
        cfg = cfg.with_overrides(t_end=args.t_end, mu=args.mu)
        set_fft_workers(args.threads)
        out = args.out or os.path.join(cfg["output"]["directory"], cfg["output"]["prefix"])
        os.makedirs(out, exist_ok=True)
        return COMMANDS[args.command](cfg, args, out)
    except CertificateError as exc:
        print(f"certificate failure: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
