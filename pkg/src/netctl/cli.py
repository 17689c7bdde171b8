"""Command-line front-end: gramian reports, selection sweeps, control synthesis,
and boundary-control scaling studies.  Node indices on the command line and in
output files are 1-based.

Exit codes: 0 success, 1 I/O failure, 2 domain/precondition failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import decoupled as dc
from . import partition as pt
from .bounds import symmetric_lambda_min_bound, tightest_upper_bound
from .errors import NetctlError
from .gramian import (
    INFINITE,
    ControlSet,
    gramian_finite,
    gramian_infinite,
    min_energy_input,
    write_trajectory_csv,
)
from .netmodel import (
    Network,
    asymmetric_line_network,
    circulant_network,
    line_network,
    load_network,
    spectral_facts,
)

_GENERATORS = {
    "line": (line_network, (int,)),
    "circulant": (circulant_network, (int, float)),
    "asymline": (asymmetric_line_network, (int,)),
}


def _parse_generator(spec: str) -> Network:
    parts = spec.split(":")
    name, args = parts[0], parts[1:]
    if name not in _GENERATORS:
        raise ValueError(f"unknown generator {name!r}; expected one of {sorted(_GENERATORS)}")
    fn, sig = _GENERATORS[name]
    if len(args) != len(sig):
        raise ValueError(f"generator {name!r} takes {len(sig)} argument(s), got {len(args)}")
    return fn(*(cast(a) for cast, a in zip(sig, args)))


def _load_input(args) -> Network:
    has_gen = getattr(args, "gen", None) is not None
    has_input = getattr(args, "input", None) is not None
    if has_gen == has_input:
        raise ValueError("exactly one of --gen or --input is required")
    if has_gen:
        return _parse_generator(args.gen)
    return load_network(args.input, format=getattr(args, "net_format", None))


def _parse_nodes(spec: str, n: int) -> ControlSet:
    try:
        nodes = [int(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError:
        raise ValueError(f"invalid --nodes value {spec!r}; expected comma-separated integers") from None
    if not nodes:
        raise ValueError("--nodes must list at least one node")
    if min(nodes) < 1 or max(nodes) > n:
        raise ValueError(f"--nodes entries must lie in [1, {n}]")
    return ControlSet(tuple(k - 1 for k in nodes))


def _parse_horizon(spec: str, allow_auto: bool = False):
    if spec == "inf":
        return INFINITE
    if allow_auto and spec == "auto":
        return None
    try:
        value = int(spec)
    except ValueError:
        raise ValueError(f"invalid horizon {spec!r}; expected a positive integer or 'inf'") from None
    if value < 1:
        raise ValueError(f"horizon must be >= 1, got {value}")
    return value


def _parse_range(spec: str):
    if ".." in spec:
        lo_s, hi_s = spec.split("..", 1)
        lo, hi = int(lo_s), int(hi_s)
        if lo > hi:
            raise ValueError(f"empty range {spec!r}")
        return list(range(lo, hi + 1))
    return [int(spec)]


def _load_vector(path, n: int) -> np.ndarray:
    if str(path).endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        vec = np.asarray(data, dtype=float)
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read().replace(",", " ")
        try:
            vec = np.asarray([float(tok) for tok in text.split()])
        except ValueError:
            raise ValueError(f"target file {path!r} is not a list of numbers") from None
    vec = vec.reshape(-1)
    if vec.shape[0] != n:
        raise ValueError(f"target vector has length {vec.shape[0]}, expected {n}")
    return vec


def _write_text(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(_csv_cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_gramian(args) -> int:
    net = _load_input(args)
    ks = _parse_nodes(args.nodes, net.n)
    horizon = _parse_horizon(args.horizon)
    if horizon == INFINITE:
        report = gramian_infinite(net, ks, deflate_consensus=args.deflate_consensus)
    else:
        report = gramian_finite(net, ks, horizon)
    _write_text(args.out, json.dumps(report.to_dict()) + "\n")
    return 0


def _selection_lambda_min(net, method, m, horizon, trials, seed, cap):
    if method == "brute":
        result = pt.brute_force_select(net, m, horizon, metric="lambda_min", cap=cap)
        return result.objective
    if method == "partition":
        result = pt.select_by_partitioning(net, m, horizon=horizon)
        return pt._whole_network_lambda_min(net, result.control_set, horizon)
    if method == "trace":
        result = pt.trace_optimal_select(net, m, horizon)
        return pt._whole_network_lambda_min(net, result.control_set, horizon)
    if method == "modal":
        result = pt.modal_select(net, m)
        return pt._whole_network_lambda_min(net, result.control_set, horizon)
    # median over random draws
    rng = np.random.default_rng(seed)
    values = []
    for _ in range(trials):
        subset = tuple(sorted(rng.choice(net.n, size=m, replace=False).tolist()))
        values.append(pt._whole_network_lambda_min(net, ControlSet(subset), horizon))
    return float(np.median(values))


def cmd_sweep(args) -> int:
    net = _load_input(args)
    if args.m is not None and args.m_range is not None:
        raise ValueError("pass either --m or --m-range, not both")
    if args.m is not None:
        m_values = [args.m]
    elif args.m_range is not None:
        m_values = _parse_range(args.m_range)
    else:
        raise ValueError("one of --m or --m-range is required")
    if min(m_values) < 1 or max(m_values) > net.n:
        raise ValueError(f"m values must lie in [1, {net.n}]")
    horizon = _parse_horizon(args.horizon)
    if args.method == "brute":
        for m in m_values:
            if math.comb(net.n, m) > args.cap:
                raise NetctlError(
                    f"brute-force sweep at m={m} needs {math.comb(net.n, m)} subsets, "
                    f"over the cap of {args.cap}"
                )
    facts = spectral_facts(net)
    rows = []
    for m in m_values:
        lam = _selection_lambda_min(net, args.method, m, horizon, args.trials, args.seed, args.cap)
        bound_diag = tightest_upper_bound(facts, m).value if facts.diagonalizable else None
        if facts.symmetric and facts.schur_stable:
            sym = symmetric_lambda_min_bound(facts, m, horizon)
            term1, term2 = sym.horizon_term, sym.tail_term
        else:
            term1 = term2 = None
        rows.append((m, float(lam), bound_diag, term1, term2))
    header = ["m", "lambda_min", "bound_diagonalizable", "bound_symmetric_horizon", "bound_symmetric_tail"]
    _write_text(args.out, _csv_text(header, rows))
    return 0


def _blocks_by_size_splitting(net: Network, count: int):
    """Partition into ``count`` blocks by repeatedly Fiedler-splitting the largest."""
    if not 1 <= count <= net.n:
        raise ValueError(f"--blocks must lie in [1, {net.n}]")
    blocks = [tuple(range(net.n))]
    while len(blocks) < count:
        order = sorted(range(len(blocks)), key=lambda i: (-len(blocks[i]), blocks[i][0]))
        idx = order[0]
        if len(blocks[idx]) < 2:
            raise NetctlError(f"cannot split {net.n} nodes into {count} blocks")
        a, b = pt.fiedler_bipartition(net, blocks[idx])
        first, second = (a, b) if a[0] < b[0] else (b, a)
        blocks[idx : idx + 1] = [first, second]
    return blocks


def _load_partition_file(path, n: int):
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    try:
        blocks = [[int(i) - 1 for i in blk] for blk in obj["blocks"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"invalid partition file: {exc}") from None
    return blocks


def cmd_control(args) -> int:
    net = _load_input(args)
    target = _load_vector(args.target, net.n)
    if abs(float(np.linalg.norm(target)) - 1.0) > 1e-9:
        raise ValueError("target must be unit norm")
    if args.mode == "min-energy":
        if args.nodes is None:
            raise ValueError("--nodes is required in min-energy mode")
        ks = _parse_nodes(args.nodes, net.n)
        horizon = _parse_horizon(args.horizon)
        if horizon == INFINITE:
            raise ValueError("min-energy synthesis needs a finite horizon")
        traj = min_energy_input(net, ks, horizon, target)
        plan_payload = {
            "mode": "min-energy",
            "control_nodes": [k + 1 for k in ks.nodes],
            "horizon": horizon,
            "energy": traj.energy,
        }
        print(f"energy {traj.energy!r}")
    else:
        if args.partition is not None:
            blocks = _load_partition_file(args.partition, net.n)
        elif args.blocks is not None:
            blocks = _blocks_by_size_splitting(net, args.blocks)
        else:
            raise ValueError("decoupled mode needs --blocks N or --partition FILE")
        part = pt.make_partition(net, blocks)
        if args.nodes is not None:
            ks = _parse_nodes(args.nodes, net.n)
        else:
            boundary = sorted({i for psi in part.boundary for i in psi})
            if not boundary:
                raise ValueError("partition has no boundary nodes; pass --nodes explicitly")
            ks = ControlSet(tuple(boundary))
        horizon = _parse_horizon(args.horizon, allow_auto=True) if args.horizon else None
        if horizon == INFINITE:
            raise ValueError("decoupled synthesis needs a finite or auto horizon")
        plan = dc.synthesize_decoupled(net, part, ks, target, horizon=horizon)
        traj, _ = dc.simulate_decoupled(net, plan)
        plan_payload = plan.to_dict()
        plan_payload["mode"] = "decoupled"
        plan_payload["energy"] = traj.energy
        print(f"energy {traj.energy!r}")
        print(f"certificate {plan.energy_bound!r}")
    with open(f"{args.out}.plan.json", "w", encoding="utf-8") as fh:
        json.dump(plan_payload, fh)
        fh.write("\n")
    write_trajectory_csv(traj, f"{args.out}.traj.csv")
    return 0


def scaling_rows(cluster_size_values, cluster_count_values, rho, trials, seed):
    """One row per family member: boundary-controlled lambda_min, its certificate
    reciprocal, and the median lambda_min under random selection of equal size.
    """
    rows = []
    rng = np.random.default_rng(seed)
    for nb, N in zip(cluster_size_values, cluster_count_values):
        n = nb * N
        net = circulant_network(n, rho)
        blocks = [tuple(range(i * nb, (i + 1) * nb)) for i in range(N)]
        part = pt.make_partition(net, blocks)
        boundary = sorted({i for psi in part.boundary for i in psi})
        ks = ControlSet(tuple(boundary))
        lam_boundary = gramian_infinite(net, ks).lambda_min
        horizon = dc.auto_horizon(net, part, ks)
        gains = dc.gain_matrices(net, part, ks, horizon)
        lower = 1.0 / dc.decoupled_energy_bound(gains)
        draws = []
        for _ in range(trials):
            subset = tuple(sorted(rng.choice(n, size=len(ks), replace=False).tolist()))
            draws.append(gramian_infinite(net, ControlSet(subset)).lambda_min)
        rows.append((N, nb, n, float(lam_boundary), float(lower), float(np.median(draws))))
    return rows


def cmd_scaling(args) -> int:
    nb_values = _parse_range(args.nb)
    count_values = _parse_range(args.blocks)
    if len(nb_values) > 1 and len(count_values) > 1:
        raise ValueError("sweep either --nb or --blocks, not both")
    if len(nb_values) == 1:
        nb_values = nb_values * len(count_values)
    if len(count_values) == 1:
        count_values = count_values * len(nb_values)
    if args.rho <= 0 or args.rho >= 1:
        raise ValueError("--rho must lie in (0, 1) for infinite-horizon scaling")
    rows = scaling_rows(nb_values, count_values, args.rho, args.trials, args.seed)
    header = [
        "clusters",
        "cluster_size",
        "n",
        "lambda_min_boundary",
        "lower_bound_certificate",
        "lambda_min_random_median",
    ]
    _write_text(args.out, _csv_text(header, rows))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_input_flags(sub):
    sub.add_argument("--gen", help="generator spec, e.g. line:5, circulant:24:0.5, asymline:6")
    sub.add_argument("--input", help="network file (edge-list CSV, Matrix Market, dense JSON)")
    sub.add_argument(
        "--format",
        dest="net_format",
        choices=("edge-list-csv", "matrix-market", "dense-json"),
        help="input file format (default: infer from suffix)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netctl",
        description="Network controllability analysis and control synthesis "
        "(node indices are 1-based on the command line)",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    g = subs.add_parser("gramian", help="controllability Gramian report (JSON)")
    _add_input_flags(g)
    g.add_argument("--nodes", required=True, help="comma-separated control nodes, 1-based")
    g.add_argument("--horizon", required=True, help="positive integer or 'inf'")
    g.add_argument("--deflate-consensus", action="store_true", help="project out the agreement mode")
    g.add_argument("--out", help="output path (default: stdout)")
    g.set_defaults(func=cmd_gramian)

    s = subs.add_parser("sweep", help="lambda_min and bounds vs number of control nodes (CSV)")
    _add_input_flags(s)
    s.add_argument("--method", required=True, choices=("brute", "partition", "trace", "modal", "random"))
    s.add_argument("--m", type=int, help="single control-set size")
    s.add_argument("--m-range", help="inclusive size range a..b")
    s.add_argument("--horizon", required=True, help="positive integer or 'inf'")
    s.add_argument("--trials", type=int, default=20, help="draws for --method random")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--cap", type=int, default=pt.DEFAULT_SUBSET_CAP)
    s.add_argument("--out", help="output path (default: stdout)")
    s.set_defaults(func=cmd_sweep)

    c = subs.add_parser("control", help="synthesize an input and write plan + trajectory files")
    _add_input_flags(c)
    c.add_argument("--mode", required=True, choices=("min-energy", "decoupled"))
    c.add_argument("--nodes", help="control nodes (decoupled default: partition boundary)")
    c.add_argument("--target", required=True, help="unit target vector file (JSON list or text)")
    c.add_argument("--horizon", help="positive integer, 'inf', or 'auto' (decoupled default)")
    c.add_argument("--blocks", type=int, help="auto-partition into this many blocks")
    c.add_argument("--partition", help="partition JSON file with 1-based 'blocks'")
    c.add_argument("--out", required=True, help="output prefix for .plan.json and .traj.csv")
    c.set_defaults(func=cmd_control)

    sc = subs.add_parser("scaling", help="boundary-control scaling study on ring networks (CSV)")
    sc.add_argument("--nb", required=True, help="cluster size, fixed int or range a..b")
    sc.add_argument("--blocks", required=True, help="cluster count, fixed int or range a..b")
    sc.add_argument("--rho", type=float, default=0.5)
    sc.add_argument("--trials", type=int, default=20)
    sc.add_argument("--seed", type=int, default=0)
    sc.add_argument("--out", help="output path (default: stdout)")
    sc.set_defaults(func=cmd_scaling)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"netctl: i/o error: {exc}", file=sys.stderr)
        return 1
    except (NetctlError, ValueError) as exc:
        print(f"netctl: error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    raise SystemExit(main())
