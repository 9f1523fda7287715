"""Batch command line driver.

Four subcommands: `solve` runs one scheme on one channel realization,
`sweep-k` and `sweep-j` run paired Monte-Carlo grids over the ER count or
the slot count, and `rank-analysis` reports the relaxed-solution rank
profile over an ER grid. Every sweep requires an explicit --seed so runs
are reproducible; rows land in a CSV (plus an optional JSON mirror) and
stdout only carries human-oriented summaries.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np
import yaml

from .experiments import (
    SCHEMES,
    Scenario,
    build_scenario,
    emit_csv,
    emit_json,
    load_config,
    run_scenario,
    run_single,
)

_DEFAULT_SYSTEM = {"n_elements": 32, "n_ers": 4}
_K_GRID = "2,4,8,12,16"
_J_GRID = "1,2,3,4,5,6"


def _parse_grid(text):
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise ValueError(f"empty grid {text!r}")
    return tuple(out)


def _parse_overrides(pairs):
    overrides = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ValueError(f"--set expects KEY=VALUE, got {pair!r}")
        overrides[key.strip()] = yaml.safe_load(value)
    return overrides


def _scenario(args, **scenario_fields):
    overrides = _parse_overrides(args.overrides)
    if args.config:
        sc = load_config(args.config, overrides)
    else:
        sc = build_scenario({"system": dict(_DEFAULT_SYSTEM)}, overrides)
    return dataclasses.replace(sc, **scenario_fields)


def _emit(records, sc, args):
    if args.out:
        emit_csv(records, args.out)
        print(f"wrote {len(records)} rows to {args.out}")
    if args.json:
        emit_json(records, args.json, sc)
        print(f"wrote JSON mirror to {args.json}")


def _print_rows(records):
    for r in records:
        j = "-" if r.j is None else r.j
        rank = "-" if r.rank_estimate is None else r.rank_estimate
        print(f"scheme={r.scheme} k={r.k} j={j} seed={r.realization_seed} "
              f"e_joules={r.e_joules:.6e} total={r.total_energy_joules:.6e} "
              f"rank={rank} iterations={r.iterations} wall_ms={r.wall_ms:.0f} "
              f"status={r.status}")


def _print_group_means(records, key_name, key_fn):
    groups = {}
    for r in records:
        groups.setdefault((r.scheme, key_fn(r)), []).append(r.e_joules)
    for (scheme, key), es in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1] or 0)):
        print(f"scheme={scheme} {key_name}={key} mean_e={np.mean(es):.6e} n={len(es)}")


def _cmd_solve(args):
    sc = _scenario(args, schemes=(args.scheme,), sweep="none", grid=(),
                   n_realizations=1, master_seed=args.seed)
    records = run_single(sc, args.seed, j_slots=args.j)
    _print_rows(records)
    _emit(records, sc, args)
    return 0 if all(r.status == "ok" for r in records) else 1


def _cmd_sweep_k(args):
    sc = _scenario(args, schemes=_schemes_arg(args), sweep="k-grid",
                   grid=_parse_grid(args.grid), master_seed=args.seed,
                   **_realizations_arg(args))
    records = run_scenario(sc)
    _print_group_means(records, "k", lambda r: r.k)
    _emit(records, sc, args)
    return 0 if all(r.status == "ok" for r in records) else 1


def _cmd_sweep_j(args):
    sc = _scenario(args, schemes=_schemes_arg(args), sweep="j-grid",
                   grid=_parse_grid(args.grid), master_seed=args.seed,
                   **_realizations_arg(args))
    records = run_scenario(sc)
    _print_group_means(records, "j", lambda r: r.j)
    _emit(records, sc, args)
    return 0 if all(r.status == "ok" for r in records) else 1


def _cmd_rank_analysis(args):
    sc = _scenario(args, schemes=("upper-bound",), sweep="k-grid",
                   grid=_parse_grid(args.grid), master_seed=args.seed,
                   **_realizations_arg(args))
    records = run_scenario(sc)
    by_k = {}
    for r in records:
        if r.rank_estimate is not None:
            by_k.setdefault(r.k, []).append(r.rank_estimate)
    for k in sorted(by_k):
        ranks = by_k[k]
        print(f"k={k} mean_rank={np.mean(ranks):.3f} min={min(ranks)} "
              f"max={max(ranks)} n={len(ranks)}")
    _emit(records, sc, args)
    return 0 if all(r.status == "ok" for r in records) else 1


def _schemes_arg(args):
    if args.schemes:
        return tuple(s.strip() for s in args.schemes.split(",") if s.strip())
    return args.default_schemes


def _realizations_arg(args):
    return {"n_realizations": args.realizations} if args.realizations else {}


def _add_common(p):
    p.add_argument("--config", help="YAML scenario file")
    p.add_argument("--set", action="append", dest="overrides", metavar="KEY=VALUE",
                   help="override a config key (repeatable); dotted section "
                        "prefixes like system.n_elements disambiguate")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--json", help="JSON mirror output path")


def _add_sweep_common(p, default_grid, default_schemes):
    _add_common(p)
    p.add_argument("--grid", default=default_grid,
                   help=f"comma list or lo-hi range (default {default_grid})")
    p.add_argument("--seed", type=int, required=True, help="master seed")
    p.add_argument("--realizations", type=int, default=None,
                   help="channel realizations per grid point")
    p.add_argument("--schemes", default=None,
                   help=f"comma list (default {','.join(default_schemes)})")
    p.set_defaults(default_schemes=default_schemes)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="irswet",
        description="IRS-assisted multiuser wireless energy transfer: "
                    "upper bound, static and dynamic passive beamforming, "
                    "and TDMA baselines.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="one scheme on one channel realization")
    _add_common(p)
    p.add_argument("--scheme", required=True, choices=SCHEMES)
    p.add_argument("--seed", type=int, default=0, help="channel seed")
    p.add_argument("--j", type=int, default=None,
                   help="slot count for the dynamic scheme (default: relaxed-"
                        "solution rank)")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("sweep-k", help="paired Monte-Carlo sweep over ER count")
    _add_sweep_common(p, _K_GRID, SCHEMES)
    p.set_defaults(func=_cmd_sweep_k)

    p = sub.add_parser("sweep-j", help="dynamic-scheme sweep over slot count")
    _add_sweep_common(p, _J_GRID, ("dynamic",))
    p.set_defaults(func=_cmd_sweep_j)

    p = sub.add_parser("rank-analysis",
                       help="relaxed-solution rank profile over an ER grid")
    _add_common(p)
    p.add_argument("--grid", default=_K_GRID)
    p.add_argument("--seed", type=int, required=True, help="master seed")
    p.add_argument("--realizations", type=int, default=None)
    p.set_defaults(func=_cmd_rank_analysis)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
