"""Command-line client: gen, eval, sweep, cdf, serve.

All commands except ``serve`` are thin clients of the HTTP service; without
``--server`` they run against an in-process instance, so no daemon is needed
for local work. Outputs are deterministic for a fixed config and seed.

Exit codes: 0 success, 2 validation/config error (argparse usage errors
share this code), 3 log/config parse error, 4 I/O error, 1 anything else.
"""

from __future__ import annotations

import argparse
import sys

import httpx

from .client import ServiceClient, ServiceError
from .config import RunConfig, apply_overrides, load_config
from .errors import ParseError, ValidationError

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_VALIDATION = 2
EXIT_PARSE = 3
EXIT_IO = 4

_CODE_TO_EXIT = {
    "validation_error": EXIT_VALIDATION,
    "parse_error": EXIT_PARSE,
    "io_error": EXIT_IO,
}

_TABLE_COLUMNS = [
    ("mode", 6),
    ("t_d_us", 7),
    ("mean_us", 9),
    ("std_us", 9),
    ("min_us", 7),
    ("max_us", 9),
    ("p50_us", 7),
    ("p90_us", 7),
    ("p99_us", 8),
    ("p999_us", 8),
    ("mean_attempts", 13),
    ("lost", 6),
    ("n", 9),
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="duolink",
        description="Replay redundancy policies over dual-channel packet logs.",
    )
    parser.add_argument(
        "--server",
        metavar="URL",
        help="base URL of a running duolink service (default: run in-process)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="override the base seed")

    p_gen = sub.add_parser("gen", parents=[common], help="generate two synthetic channel logs")
    p_gen.add_argument("--n", type=int, required=True, help="packets per channel")
    p_gen.add_argument("--out-a", required=True, metavar="FILE")
    p_gen.add_argument("--out-b", required=True, metavar="FILE")

    trace_common = argparse.ArgumentParser(add_help=False, parents=[common])
    trace_common.add_argument("--trace-a", required=True, metavar="FILE")
    trace_common.add_argument("--trace-b", required=True, metavar="FILE")
    trace_common.add_argument(
        "--tolerance", type=int, metavar="US", help="pairing tolerance in microseconds"
    )
    trace_common.add_argument(
        "--max-pairs", type=int, metavar="N", help="truncate to the first N aligned pairs"
    )

    p_eval = sub.add_parser(
        "eval", parents=[trace_common], help="evaluate modes at one deferral time"
    )
    p_eval.add_argument("--modes", help="comma-separated modes (default: all seven)")
    p_eval.add_argument("--td", type=int, metavar="US", help="deferral time override")
    p_eval.add_argument("--out", metavar="PREFIX", help="write report + CDF files here")

    p_sweep = sub.add_parser(
        "sweep", parents=[trace_common], help="evaluate modes across a deferral grid"
    )
    p_sweep.add_argument("--modes", help="comma-separated modes (default: all seven)")
    p_sweep.add_argument("--grid", help="comma-separated deferral times in microseconds")
    p_sweep.add_argument("--out", required=True, metavar="FILE", help="sweep table CSV")

    p_cdf = sub.add_parser(
        "cdf", parents=[trace_common], help="latency CDF of one mode"
    )
    p_cdf.add_argument("--mode", default="A+B", help="mode to evaluate (default A+B)")
    p_cdf.add_argument("--td", type=int, metavar="US", help="deferral time override")
    p_cdf.add_argument("--out", required=True, metavar="FILE", help="CDF data file")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)

    return parser


def _load_effective_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    return apply_overrides(config, seed=args.seed)


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise ValidationError(f"bad integer list {text!r}") from exc


def _fmt_cell(name: str, value) -> str:
    if value is None:
        return "-"
    if name in ("mean_us", "std_us"):
        return str(round(value))
    if name == "mean_attempts":
        return f"{value:.4f}"
    return str(value)


def format_table(rows: list[dict]) -> str:
    """Human-readable summary, durations rounded to whole microseconds."""
    lines = ["  ".join(name.rjust(width) for name, width in _TABLE_COLUMNS)]
    for row in rows:
        lines.append(
            "  ".join(
                _fmt_cell(name, row.get(name)).rjust(width)
                for name, width in _TABLE_COLUMNS
            )
        )
    return "\n".join(lines)


def cmd_gen(client: ServiceClient, args) -> int:
    config = _load_effective_config(args)
    resp = client.gen(
        config=config.model_dump(mode="json"),
        n=args.n,
        out_a=args.out_a,
        out_b=args.out_b,
    )
    for ch in resp["channels"]:
        line = f"channel {ch['channel_id']}: {ch['n']} packets, {ch['lost']} lost"
        if ch["mean_attempts"] is not None:
            line += f", mean attempts {ch['mean_attempts']:.4f}"
        print(line)
    print(f"rng {resp['rng_algorithm']}, config {resp['config_hash']}")
    print(f"wrote {resp['out_a']} and {resp['out_b']}")
    return EXIT_OK


def cmd_eval(client: ServiceClient, args) -> int:
    config = _load_effective_config(args)
    resp = client.eval(
        config=config.model_dump(mode="json"),
        trace_a=args.trace_a,
        trace_b=args.trace_b,
        modes=args.modes.split(",") if args.modes else None,
        t_d_us=args.td,
        tolerance_us=args.tolerance,
        max_pairs=args.max_pairs,
        out=args.out,
    )
    print(
        f"{resp['n_pairs']} pairs (dropped {resp['dropped_a']}/{resp['dropped_b']}), "
        f"t_d {resp['t_d_us']} us, config {resp['config_hash']}"
    )
    if resp["pearson_r"] is not None:
        print(f"latency correlation r = {resp['pearson_r']:.6f}")
    print(format_table(resp["rows"]))
    for path in resp["files"]:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_sweep(client: ServiceClient, args) -> int:
    config = _load_effective_config(args)
    resp = client.sweep(
        config=config.model_dump(mode="json"),
        trace_a=args.trace_a,
        trace_b=args.trace_b,
        modes=args.modes.split(",") if args.modes else None,
        grid=_parse_int_list(args.grid) if args.grid else None,
        tolerance_us=args.tolerance,
        max_pairs=args.max_pairs,
        out=args.out,
    )
    print(
        f"{len(resp['rows'])} cells over {resp['n_pairs']} pairs, "
        f"config {resp['config_hash']}"
    )
    print(f"wrote {resp['out']}")
    return EXIT_OK


def cmd_cdf(client: ServiceClient, args) -> int:
    config = _load_effective_config(args)
    resp = client.cdf(
        config=config.model_dump(mode="json"),
        trace_a=args.trace_a,
        trace_b=args.trace_b,
        mode=args.mode,
        t_d_us=args.td,
        tolerance_us=args.tolerance,
        max_pairs=args.max_pairs,
        out=args.out,
    )
    print(
        f"mode {resp['mode']}: {resp['n_points']} points, "
        f"delivery ratio {resp['delivery_ratio']:.6f}"
    )
    print(f"wrote {resp['out']}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("duolink.service.app:app", host=args.host, port=args.port)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "serve":
            return cmd_serve(args)
        client = ServiceClient(base_url=args.server)
        handler = {
            "gen": cmd_gen,
            "eval": cmd_eval,
            "sweep": cmd_sweep,
            "cdf": cmd_cdf,
        }[args.command]
        return handler(client, args)
    except ServiceError as exc:
        print(f"error ({exc.code}): {exc.message}", file=sys.stderr)
        return _CODE_TO_EXIT.get(exc.code, EXIT_OTHER)
    except ParseError as exc:
        print(f"error (parse): {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"error (validation): {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error (io): {exc}", file=sys.stderr)
        return EXIT_IO
    except httpx.ConnectError as exc:
        print(f"error (connect): {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
