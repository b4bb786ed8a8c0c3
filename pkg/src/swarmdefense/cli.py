"""Command-line front end.

Subcommands:
  simulate <config.json> --out DIR       run a scenario, write trace/event CSVs
  bench --grid SPEC --reps N --out DIR   solver wall-time / cost-gap benchmark
  cluster <points.csv>                   swarm identification on raw points
  assign <snapshot.json> --solver NAME   one split reassignment, printed
  plot <trace.csv> --out FILE.svg        trajectory plot (matplotlib)

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np


def _cmd_simulate(args) -> int:
    from . import simulation
    config = simulation.load_config(args.config)
    if args.duration is not None:
        config.duration = args.duration
    trace = simulation.run(config)
    os.makedirs(args.out, exist_ok=True)
    trace_path = os.path.join(args.out, "trace.csv")
    events_path = os.path.join(args.out, "events.csv")
    trace.write_trace_csv(trace_path)
    trace.write_events_csv(events_path)
    counts = {}
    for e in trace.events:
        counts[e.kind] = counts.get(e.kind, 0) + 1
    print(f"wrote {trace_path} ({len(trace.records)} rows) and {events_path}")
    for kind in sorted(counts):
        print(f"  {kind}: {counts[kind]}")
    if not trace.completed:
        print("simulation aborted early; see error events", file=sys.stderr)
        return 1
    return 0


def _parse_grid(spec: str):
    parts = {}
    for chunk in spec.split(";"):
        key, _, vals = chunk.partition("=")
        key = key.strip().lower()
        if key not in ("na", "nac", "nuc") or not vals:
            raise ValueError(f"bad grid chunk {chunk!r}; expected na=..;nac=..;nuc=..")
        parts[key] = [int(v) for v in vals.split(",")]
    if set(parts) != {"na", "nac", "nuc"}:
        raise ValueError("grid spec needs na=, nac= and nuc= sections")
    cells = []
    for n_a in parts["na"]:
        for n_ac in parts["nac"]:
            for n_uc in parts["nuc"]:
                if n_a - n_uc >= 3 * n_ac:
                    cells.append((n_a, n_ac, n_uc))
    if not cells:
        raise ValueError("grid spec produced no feasible cells")
    return cells


def _cmd_bench(args) -> int:
    from . import bench
    cells = _parse_grid(args.grid) if args.grid else bench.default_grid()
    solvers = [s.strip() for s in args.solvers.split(",")]
    records = bench.bench_assign(
        cells, reps=args.reps, solvers=solvers, n_ac_max=args.n_ac_max,
        base_seed=args.seed, workers=args.workers, time_limit=args.time_limit,
        allow_large=args.unsafe_large, out_dir=args.out)
    print(bench.summarize(records))
    print(f"wrote {os.path.join(args.out, 'bench.csv')}")
    return 0


def _cmd_cluster(args) -> int:
    from . import clustering
    pts = []
    with open(args.points) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.lower().startswith(("x", "#")):
                continue
            x, y = line.split(",")[:2]
            pts.append((float(x), float(y)))
    if not pts:
        raise ValueError("no points in input file")
    if args.eps is not None:
        params = clustering.ClusteringParams(eps=args.eps, min_pts=args.min_pts)
    else:
        params = clustering.dbscan_params(len(pts), args.defenders, args.string_length)
    part = clustering.cluster(np.array(pts), params)
    out = {
        "eps": params.eps, "min_pts": params.min_pts,
        "clusters": [{"members": c,
                      "center": part.centers[k].tolist(),
                      "radius": float(part.radii[k])}
                     for k, c in enumerate(part.clusters)],
        "unclustered": part.unclustered,
    }
    print(json.dumps(out, indent=2))
    return 0


def _cmd_assign(args) -> int:
    from . import assignment as asg
    with open(args.snapshot) as fh:
        snap = asg.snapshot_from_dict(json.load(fh))
    solver = {"miqcqp": asg.solve_split_miqcqp,
              "rs_miqcqp": asg.solve_split_rs_miqcqp,
              "heuristic": lambda s: asg.solve_split_hierarchical(
                  s, n_ac_max=args.n_ac_max)}[args.solver]
    result = solver(snap)
    problems = asg.check_split_assignment(snap, result.teams, result.interceptors)
    if problems:
        raise RuntimeError(f"solver returned an invalid assignment: {problems}")
    print(f"solver: {result.solver}")
    print(f"objective: {result.objective:.6f}")
    for k, team in enumerate(result.teams):
        ids = result.team_ids(snap, k)
        print(f"cluster {k} (size {snap.cluster_sizes[k]}): defenders "
              + " ".join(map(str, ids)))
    for i, p in sorted(result.interceptors.items()):
        print(f"straggler {snap.unclustered_ids[i]}: defender {snap.defender_ids[p]}")
    return 0


def _cmd_plot(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    tracks = {}
    classes = {}
    with open(args.trace) as fh:
        header = fh.readline()
        for line in fh:
            f = line.rstrip("\n").split(",")
            if len(f) < 7:
                continue
            aid, cls = f[1], f[2]
            tracks.setdefault(aid, []).append((float(f[3]), float(f[4])))
            classes[aid] = cls
    if not tracks:
        raise ValueError("trace file holds no rows")
    fig, ax = plt.subplots(figsize=(8, 8))
    for aid, pts in sorted(tracks.items()):
        xy = np.array(pts)
        color = "tab:red" if classes[aid] == "attacker" else "tab:blue"
        ax.plot(xy[:, 0], xy[:, 1], color=color, linewidth=0.8, alpha=0.7)
        ax.plot(xy[-1, 0], xy[-1, 1], "o", color=color, markersize=2.5)
    if args.config:
        from .simulation import load_config
        cfg = load_config(args.config)
        world = cfg.world
        ax.add_patch(plt.Circle(world.protected_center, world.protected_radius,
                                fill=False, color="k", linewidth=1.5))
        for c, r in world.safe_areas:
            ax.add_patch(plt.Circle(c, r, fill=False, color="g", linestyle="--"))
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("agent trajectories (red: attackers, blue: defenders)")
    fig.savefig(args.out, bbox_inches="tight")
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swarmdefense",
                                description="area-defense assignment toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario config")
    sim.add_argument("config")
    sim.add_argument("--out", default="out")
    sim.add_argument("--duration", type=float, default=None,
                     help="override the configured duration [s]")
    sim.set_defaults(func=_cmd_simulate)

    be = sub.add_parser("bench", help="solver benchmark over an instance grid")
    be.add_argument("--grid", default=None,
                    help="cells as 'na=12,20;nac=1,2;nuc=0,2' (default: full grid)")
    be.add_argument("--reps", type=int, default=30)
    be.add_argument("--solvers", default="miqcqp,rs_miqcqp,heuristic")
    be.add_argument("--out", default="bench_out")
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--workers", type=int, default=1)
    be.add_argument("--time-limit", type=float, default=None,
                    help="per-solve wall budget [s]; timeouts marked in the CSV")
    be.add_argument("--n-ac-max", type=int, default=3)
    be.add_argument("--unsafe-large", action="store_true",
                    help="lift the exact-solver size guard")
    be.set_defaults(func=_cmd_bench)

    cl = sub.add_parser("cluster", help="swarm identification on a points CSV")
    cl.add_argument("points", help="CSV with x,y per line")
    cl.add_argument("--eps", type=float, default=None)
    cl.add_argument("--min-pts", type=int, default=3)
    cl.add_argument("--defenders", type=int, default=16)
    cl.add_argument("--string-length", type=float, default=10.0)
    cl.set_defaults(func=_cmd_cluster)

    asn = sub.add_parser("assign", help="solve one split snapshot")
    asn.add_argument("snapshot")
    asn.add_argument("--solver", default="rs_miqcqp",
                     choices=("miqcqp", "rs_miqcqp", "heuristic"))
    asn.add_argument("--n-ac-max", type=int, default=3)
    asn.set_defaults(func=_cmd_assign)

    pl = sub.add_parser("plot", help="render a trace CSV to vector graphics")
    pl.add_argument("trace")
    pl.add_argument("--out", default="trace.svg")
    pl.add_argument("--config", default=None,
                    help="scenario config for world geometry overlays")
    pl.set_defaults(func=_cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
