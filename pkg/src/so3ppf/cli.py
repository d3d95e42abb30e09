"""Command-line interface.

Subcommands:

* ``run``     one simulation; writes ``run_<filter>_<seed>.csv`` and a stats
  JSON next to it.
* ``compare`` several configs; writes one ``compare.csv`` table.
* ``verify``  numeric identity/oracle suites; prints PASS/FAIL lines.

``--out`` falls back to the ``SO3PPF_OUT_DIR`` environment variable.  On
error the process prints one machine-readable line ``error: <type>: <msg>``
to stderr and exits nonzero.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import harness, verify
from .errors import So3ppfError
from .harness import FILTER_NAMES

_SET_KEYS_HELP = "config key to override, e.g. --set dt=0.001 --set k1=10"


def _out_dir(args) -> str:
    out = args.out or harness.default_out_dir()
    if not out:
        raise SystemExit(f"error: cli: --out required (or set {harness.OUT_DIR_ENV})")
    os.makedirs(out, exist_ok=True)
    return out


def _base_config(args) -> harness.SimConfig:
    config = harness.load_config(args.config) if args.config else harness.default_config()
    if args.set:
        merged = harness.parse_config_text("\n".join(args.set))
        keys = set()
        for item in args.set:
            key = item.split("=", 1)[0].strip()
            if key.startswith("window_"):
                keys.add("windows")
            else:
                keys.add("filter_name" if key == "filter" else key)
        config = replace(config, **{k: getattr(merged, k) for k in keys})
    return config


def _add_common(sub):
    sub.add_argument("--config", help="flat key = value config file")
    sub.add_argument("--out", help=f"output directory (default ${harness.OUT_DIR_ENV})")
    sub.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help=_SET_KEYS_HELP)


def _cmd_run(args) -> int:
    config = _base_config(args)
    config = replace(config, seed=args.seed, filter_name=args.filter)
    out = _out_dir(args)
    log, stats = harness.run(config)
    base = os.path.join(out, f"run_{config.filter_name}_{config.seed}")
    with open(base + ".csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(log.to_csv())
    with open(base + ".stats.json", "w", encoding="utf-8") as fh:
        fh.write(harness.stats_json(stats))
    for w in stats.windows:
        print(f"{config.filter_name} seed={config.seed} window [{w.t_start:g}, {w.t_end:g}] s: "
              f"mean={w.mean:.6g} std={w.std:.6g} violations={w.violations}")
    print(f"final_err={stats.final_err:.6g} total_violations={stats.total_violations}")
    print(f"wrote {base}.csv")
    return 0


def _cmd_compare(args) -> int:
    base = _base_config(args)
    out = _out_dir(args)
    configs = []
    for spec in args.filters.split(","):
        spec = spec.strip()
        if ":" in spec:
            name, param = spec.split(":", 1)
            if name == "passive":
                configs.append(replace(base, filter_name=name, k1=float(param)))
            elif name == "mekf":
                configs.append(replace(base, filter_name=name, mekf_case=int(param)))
            else:
                raise SystemExit(f"error: cli: filter {name!r} takes no parameter")
        else:
            configs.append(replace(base, filter_name=spec))
    configs = [replace(c, seed=s) for s in args.seeds for c in configs]
    rows = harness.compare_report(configs)
    path = os.path.join(out, "compare.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(harness.report_to_csv(rows))
    for r in rows:
        print(f"{r['filter']:18s} seed={r['seed']} [{r['t_start']:g}, {r['t_end']:g}] s: "
              f"mean={r['mean']:.6g} std={r['std']:.6g} violations={r['violations']}")
    print(f"wrote {path}")
    return 0


def _cmd_verify(_args) -> int:
    return 0 if verify.run_all() else 1


def _parse_seeds(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="so3ppf",
        description="Attitude-filter simulations with prescribed performance envelopes")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single simulation -> CSV + stats JSON")
    _add_common(p_run)
    p_run.add_argument("--seed", type=int, required=True)
    p_run.add_argument("--filter", required=True, choices=FILTER_NAMES)
    p_run.set_defaults(fn=_cmd_run)

    p_cmp = sub.add_parser("compare", help="multi-config comparison table")
    _add_common(p_cmp)
    p_cmp.add_argument("--filters", required=True,
                       help="comma list, e.g. semi-direct,direct,passive:100,mekf:3")
    p_cmp.add_argument("--seeds", type=_parse_seeds, default=[1],
                       help="comma list of seeds (default 1)")
    p_cmp.set_defaults(fn=_cmd_compare)

    p_ver = sub.add_parser("verify", help="run the numeric property suites")
    p_ver.set_defaults(fn=_cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except So3ppfError as ex:
        print(f"error: {type(ex).__name__}: {ex}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as ex:
        print(f"error: {type(ex).__name__}: {ex}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
