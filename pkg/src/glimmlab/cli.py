"""Command-line front end.

Subcommands: riemann, evolve, functionals, trace, discrepancy, converge,
monitor, rho.  Runs are configured by a JSON file (--config, see
glimmlab.config for the schema); the most common knobs are also exposed as
flags, and flags win over the config file.

Exit codes: 0 success, 2 assertion violations found, 1 runtime error.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import functionals as F
from . import harness as H
from . import tracing as TR
from .config import ExperimentConfig
from .errors import GlimmLabError
from .riemann import liu_admissibility_check, solve_riemann
from .sampling import vdc_sequence, verify_discrepancy_bound
from .scheme import evolve, interface_fans
from .svgplot import write_loglog

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2


def _out_path(args, name):
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _load_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
    else:
        cfg = ExperimentConfig(model_name=getattr(args, "model", None) or "cubic")
    if getattr(args, "model", None):
        cfg.model_name = args.model
    if getattr(args, "eps", None):
        cfg.eps = args.eps
    if getattr(args, "T", None):
        cfg.T = args.T
    if getattr(args, "seq", None):
        cfg.seq_spec = args.seq
    if getattr(args, "ic", None):
        cfg.ic_spec = _parse_ic_flag(args.ic)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _parse_ic_flag(spec):
    if spec.startswith("file:"):
        with open(spec[5:]) as fh:
            return json.load(fh)
    return spec


def _prepare(cfg):
    model = cfg.build_model()
    ic = H.make_ic(cfg.ic_spec) if cfg.ic_spec is not None else None
    seq = H.make_sequence(cfg.seq_spec)
    return model, ic, seq


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path}")


def cmd_riemann(args):
    cfg = _load_config(args)
    model, ic, _ = _prepare(cfg)
    if ic is None:
        raise GlimmLabError("riemann needs an initial jump (--ic riemann:uL,uR)")
    sol = solve_riemann(model, ic.left, ic.right, grid_n=cfg.grid_n)
    rows = []
    violations = 0
    for fan in sol.fans:
        rep = liu_admissibility_check(model, fan)
        violations += len(rep.violations)
        for comp in fan.components:
            rows.append([fan.family, comp.kind.value, comp.size,
                         *comp.left_state, *comp.right_state,
                         comp.speed_lo, comp.speed_hi,
                         model.normalize_speed(comp.speed_lo),
                         model.normalize_speed(comp.speed_hi)])
    n = model.N
    header = (["family", "kind", "size"]
              + [f"left_{i}" for i in range(n)] + [f"right_{i}" for i in range(n)]
              + ["speed_lo", "speed_hi", "speed_lo_hat", "speed_hi_hat"])
    _write_csv(_out_path(args, "riemann.csv"), header, rows)
    for row in rows:
        print(",".join(str(v) for v in row))
    return EXIT_VIOLATION if violations else EXIT_OK


def cmd_evolve(args):
    cfg = _load_config(args)
    model, ic, seq = _prepare(cfg)
    traj = evolve(model, ic, cfg.eps, cfg.T, seq, grid_n=cfg.grid_n,
                  tv_budget=cfg.tv_budget)
    prof = traj.profiles[-1]
    rows = [[j, prof.x_left(j), *prof.state(j)]
            for j in range(prof.j_lo - 1, prof.j_hi + 2)]
    header = ["j", "x_left"] + [f"u_{i}" for i in range(model.N)]
    path = Path(args.out_csv) if args.out_csv else _out_path(args, "profile.csv")
    _write_csv(path, header, rows)
    return EXIT_OK


def cmd_functionals(args):
    cfg = _load_config(args)
    model, ic, seq = _prepare(cfg)
    v0 = H._initial_strength(model, ic, cfg.eps, seq)
    consts = cfg.build_constants(v0, model.delta0)
    traj = evolve(model, ic, cfg.eps, cfg.T, seq, constants=consts,
                  snapshots="all", record_ledger=True, grid_n=cfg.grid_n,
                  tv_budget=cfg.tv_budget)
    canc = {}
    for entry in traj.ledger:
        d = F.interaction_deltas(model, entry, consts)
        canc[entry.step] = canc.get(entry.step, 0.0) + d.cancellation
    rows = []
    prev = None
    for i, s in enumerate(traj.snapshots):
        d_ups = 0.0 if prev is None else s.Upsilon - prev.Upsilon
        rows.append([i, s.V, s.Q1, s.Qq, s.Qcubic, s.Upsilon, d_ups,
                     canc.get(i, 0.0)])
        prev = s
    _write_csv(_out_path(args, "functionals.csv"),
               ["i", "V", "Q1", "Qq", "Qcubic", "Upsilon", "dUpsilon",
                "cancellation"], rows)
    bad = sum(1 for r in rows[1:] if r[6] > 1e-9 * max(rows[0][1], 1e-12))
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_trace(args):
    cfg = _load_config(args)
    model, ic, seq = _prepare(cfg)
    v0 = H._initial_strength(model, ic, cfg.eps, seq)
    consts = cfg.build_constants(v0, model.delta0)
    traj = evolve(model, ic, cfg.eps, cfg.T, seq, constants=consts,
                  snapshots="all", record_fans=True, grid_n=cfg.grid_n,
                  tv_budget=cfg.tv_budget)
    n = args.n if args.n is not None else traj.steps
    rep = TR.trace_interval(traj, args.m, n)
    rows = [[i, s] for i, s in zip(range(rep.m, rep.n + 1),
                                   rep.secondary_strength)]
    _write_csv(_out_path(args, "trace_secondary.csv"),
               ["i", "secondary_strength"], rows)
    ratios = rep.ratios
    summary = (f"interval=[{rep.m},{rep.n}] dUpsilon={rep.d_upsilon:.6e} "
               f"matched={rep.matched} canceled={rep.canceled} "
               f"secondary_ratio={ratios['secondary']:.4g} "
               f"size_ratio={ratios['size_change']:.4g} "
               f"speed_ratio={ratios['speed_change']:.4g}")
    print(summary)
    with open(_out_path(args, "trace_summary.txt"), "w") as fh:
        fh.write(summary + "\n")
    return EXIT_OK


def cmd_discrepancy(args):
    seq = H.make_sequence("vdc" if args.kind == "vdc" else f"seed:{args.seed or 0}")
    rep = verify_discrepancy_bound(seq, args.nmax)
    from .sampling import discrepancy
    rows = []
    for k in sorted({2 ** j for j in range(1, int(np.log2(args.nmax)) + 1)}):
        if k >= args.nmax:
            break
        d = discrepancy(seq, 1, 1 + k)
        rows.append([1, 1 + k, d.value, d.normalized])
    d = discrepancy(seq, rep.argmax_m, rep.argmax_n)
    rows.append([rep.argmax_m, rep.argmax_n, d.value, d.normalized])
    _write_csv(_out_path(args, "discrepancy.csv"), ["m", "n", "D", "ratio"], rows)
    print(f"worst normalized ratio {rep.worst_ratio:.6f} at "
          f"(m,n)=({rep.argmax_m},{rep.argmax_n}) exhaustive={rep.exhaustive}")
    return EXIT_OK if rep.worst_ratio <= 1.0 else EXIT_VIOLATION


def cmd_converge(args):
    cfg = _load_config(args)
    model, ic, seq = _prepare(cfg)
    ladder = cfg.eps_ladder or tuple(2.0 ** (-k) for k in range(6, 12))
    result = H.run_convergence(model, ic, cfg.T, ladder, seq,
                               reference=cfg.reference, grid_n=cfg.grid_n,
                               tv_budget=max(cfg.tv_budget, 2.5))
    path = _out_path(args, "convergence.csv")
    H.write_convergence_csv(result, path)
    print(f"wrote {path}; fitted slope {result.slope:.3f}")
    if args.svg:
        xs = [np.sqrt(r.eps) * abs(np.log(r.eps)) for r in result.rows if not r.failed]
        ys = [r.error for r in result.rows if not r.failed]
        write_loglog(_out_path(args, "convergence.svg"), xs, ys,
                     title="L1 error vs sqrt(eps)|log eps|",
                     xlabel="sqrt(eps)|log eps|", ylabel="L1 error",
                     guide_slope=1.0)
    failed = any(r.failed for r in result.rows)
    return EXIT_ERROR if failed else EXIT_OK


def cmd_monitor(args):
    cfg = _load_config(args)
    model = cfg.build_model()
    builder = lambda v0: cfg.build_constants(v0, model.delta0)
    rep = H.monitor_suite(model, cfg.trials, seed=cfg.seed, eps=cfg.eps,
                          T=cfg.T, tv_target=cfg.tv_target,
                          constants_builder=builder,
                          seq=H.make_sequence(cfg.seq_spec))
    rows = [[v.trial, v.step, v.d_upsilon, v.tolerance] for v in rep.violations]
    _write_csv(_out_path(args, "monitor.csv"),
               ["trial", "step", "d_upsilon", "tolerance"], rows)
    print(f"{rep.trials} trials on {rep.model}: {len(rep.violations)} violations, "
          f"worst increase {rep.worst_increase:.3e}")
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def cmd_rho(args):
    cfg = _load_config(args)
    model, ic, seq = _prepare(cfg)
    v0 = H._initial_strength(model, ic, cfg.eps, seq)
    consts = cfg.build_constants(v0, model.delta0)
    traj = evolve(model, ic, cfg.eps, cfg.T, seq, constants=consts,
                  snapshots="all", grid_n=cfg.grid_n, tv_budget=cfg.tv_budget)
    sched = H.rho_schedule(traj, cfg.rho if args.rho is None else args.rho)
    rows = [[i, sched.boundaries[i], sched.boundaries[i + 1], sched.kinds[i]]
            for i in range(len(sched.kinds))]
    _write_csv(_out_path(args, "rho_intervals.csv"),
               ["idx", "m_lo", "m_hi", "kind"], rows)
    print(f"rho={sched.rho:.4g}: {sched.count} intervals "
          f"(type1={sched.kinds.count(1)}, type2={sched.kinds.count(2)}), "
          f"count*rho={sched.implied_constant:.3f}")
    return EXIT_OK


def build_parser():
    # global flags are accepted both before and after the subcommand
    glob = argparse.ArgumentParser(add_help=False)
    glob.add_argument("--config", default=argparse.SUPPRESS,
                      help="JSON experiment config")
    glob.add_argument("--out", default=argparse.SUPPRESS,
                      help="output directory (default: cwd)")
    glob.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                      help="seed override")
    glob.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                      help="numba thread count for the discrepancy scan")

    p = argparse.ArgumentParser(prog="glimmlab",
                                description="Random-choice solver and "
                                            "interaction-functional harness")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, ic=True):
        sp.add_argument("--model", help="built-in model name")
        sp.add_argument("--eps", type=float)
        sp.add_argument("--T", type=float)
        sp.add_argument("--seq", help="vdc | seed:<n>")
        if ic:
            sp.add_argument("--ic", help="riemann:<uL...>,<uR...> | file:<path>")

    sp = sub.add_parser("riemann", parents=[glob],
                        help="solve one Riemann problem, CSV fan table")
    common(sp)
    sp.set_defaults(fn=cmd_riemann)

    sp = sub.add_parser("evolve", parents=[glob],
                        help="run the scheme, write the final profile")
    common(sp)
    sp.add_argument("--out-csv", dest="out_csv", help="profile CSV path")
    sp.set_defaults(fn=cmd_evolve)

    sp = sub.add_parser("functionals", parents=[glob],
                        help="per-step functional CSV")
    common(sp)
    sp.set_defaults(fn=cmd_functionals)

    sp = sub.add_parser("trace", parents=[glob],
                        help="wave-tracing report on [m, n]")
    common(sp)
    sp.add_argument("--m", type=int, default=0)
    sp.add_argument("--n", type=int, default=None)
    sp.set_defaults(fn=cmd_trace)

    sp = sub.add_parser("discrepancy", parents=[glob],
                        help="windowed discrepancy scan")
    sp.add_argument("--kind", choices=["vdc", "pseudorandom"], default="vdc")
    sp.add_argument("--nmax", type=int, default=4096)
    sp.set_defaults(fn=cmd_discrepancy)

    sp = sub.add_parser("converge", parents=[glob],
                        help="mesh-ladder convergence study")
    common(sp)
    sp.add_argument("--svg", action="store_true", help="also write an SVG plot")
    sp.set_defaults(fn=cmd_converge)

    sp = sub.add_parser("monitor", parents=[glob],
                        help="random small-TV monotonicity suite")
    common(sp, ic=False)
    sp.set_defaults(fn=cmd_monitor)

    sp = sub.add_parser("rho", parents=[glob],
                        help="interval scheduling diagnostic")
    common(sp)
    sp.add_argument("--rho", type=float, default=None)
    sp.set_defaults(fn=cmd_rho)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads:
        try:
            import numba
            numba.set_num_threads(args.threads)
        except Exception:
            pass
    try:
        return args.fn(args)
    except GlimmLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
