"""Command-line benchmarks and validators.

Subcommands::

    bench         full vs LSH attention: KFLOPs, dot products, mean time
    sweep         LSH cost over a grid of (hash fns, bands, table size)
    collide-prob  analytic vs Monte Carlo collision probability per angle
    demo-forward  one encoder forward pass per attention mode

Shared flags: ``--seed``, ``--output``, ``--format {csv,json}``,
``--config FILE``. The config file is a flat JSON object keyed by flag name
without the leading dashes (``{"seq-len": 12, "bands-list": [1, 2]}``);
flags given on the command line override it.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from itertools import product

import numpy as np

from ._backend import kernels
from ._random import derive_seed, make_rng
from .attention import FULL, LSH, AttentionInputs, full_scores, lsh_scores
from .encoder import EncoderConfig, encoder_forward, init_encoder
from .errors import ConfigError, InputError, ShapeError
from .instrumentation import (
    SweepRecord,
    baseline_dot_count,
    baseline_flops,
    count_lsh_dot_products,
    expected_lsh_dot_products,
    lsh_flops_model,
    time_attention,
)
from .simhash import LshConfig, analytic_collision_probability, build_hash_family, monte_carlo_collision_rate

BENCH_COLUMNS = ["metric", FULL, LSH]
COLLIDE_COLUMNS = [
    "theta", "bands", "table_size", "num_hash_fns", "dim", "trials", "seed",
    "analytic", "empirical", "std_error", "abs_gap",
]
DEMO_COLUMNS = ["mode", "shape", "finite", "dot_products", "kflops"]

# sub-streams of --seed
_INPUT_STREAM = 0
_FAMILY_STREAM = 1


class UsageError(Exception):
    pass


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _non_negative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {text}")
    return value


def _int_list(text):
    items = [t for t in str(text).split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a non-empty comma-separated list")
    return [_positive_int(t.strip()) for t in items]


_PI_TERM = re.compile(r"^\s*(?:(?P<num>[0-9.eE+-]+)\s*\*?\s*)?pi\s*(?:/\s*(?P<den>[0-9.eE+-]+))?\s*$")


def parse_angle(text):
    """A float, or a multiple of pi such as ``pi/4``, ``3pi/4`` or ``0.5*pi``."""
    text = str(text).strip()
    m = _PI_TERM.match(text)
    if m:
        value = float(m.group("num") or 1.0) * math.pi / float(m.group("den") or 1.0)
    else:
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an angle: {text!r}") from None
    if not 0.0 <= value <= math.pi:
        raise argparse.ArgumentTypeError(f"angle {text} outside [0, pi]")
    return value


def _angle_list(text):
    items = [t for t in str(text).split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a non-empty comma-separated list of angles")
    return [parse_angle(t) for t in items]


def _add_shared(p):
    p.add_argument("--seed", type=_seed, default=0, help="master seed (default 0)")
    p.add_argument("--output", "-o", default="-", help="output file, '-' for stdout")
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.add_argument("--config", default=None, help="JSON file of flag values; flags override it")


def _add_attention_dims(p, *, heads=2):
    p.add_argument("--batch", type=_positive_int, default=1)
    p.add_argument("--heads", type=_positive_int, default=heads)
    p.add_argument("--seq-len", type=_positive_int, default=10)
    p.add_argument("--head-dim", type=_positive_int, default=64)


def _add_lsh(p):
    p.add_argument("--bands", type=_positive_int, default=2)
    p.add_argument("--table-size", type=_positive_int, default=64)
    p.add_argument("--num-hash-fns", type=_positive_int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="simhash-attention",
        description="SimHash LSH attention benchmarks and validators.",
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("bench", help="full vs LSH attention cost table", allow_abbrev=False)
    _add_attention_dims(p)
    _add_lsh(p)
    p.add_argument("--samples", type=_positive_int, default=100, help="LSH executions averaged for dot products")
    p.add_argument("--runs", type=_positive_int, default=1000, help="timed executions per mode")
    _add_shared(p)
    p.set_defaults(func=cmd_bench, default_format="csv")

    p = sub.add_parser("sweep", help="LSH cost over a configuration grid", allow_abbrev=False)
    _add_attention_dims(p)
    p.add_argument("--bands-list", type=_int_list, default=[1, 2, 3, 4])
    p.add_argument("--hashfns-list", type=_int_list, default=[1, 2, 3, 4])
    p.add_argument("--tablesize-list", type=_int_list, default=[64])
    p.add_argument("--collided-pairs", type=_non_negative_int, default=0,
                   help="collided pairs charged in the kflops column (0: hashing cost only)")
    p.add_argument("--samples", type=_positive_int, default=10)
    p.add_argument("--runs", type=_non_negative_int, default=20, help="timed executions per point (0: skip)")
    _add_shared(p)
    p.set_defaults(func=cmd_sweep, default_format="csv")

    p = sub.add_parser("collide-prob", help="analytic vs Monte Carlo collision probability", allow_abbrev=False)
    p.add_argument("--theta-list", type=_angle_list, default=_angle_list("0,pi/4,pi/2,3pi/4,pi"))
    _add_lsh(p)
    p.add_argument("--dim", type=_positive_int, default=64)
    p.add_argument("--trials", type=_positive_int, default=100_000)
    _add_shared(p)
    p.set_defaults(func=cmd_collide_prob, default_format="csv")

    p = sub.add_parser("demo-forward", help="encoder forward pass in both attention modes", allow_abbrev=False)
    p.add_argument("--seq-len", type=_positive_int, default=10)
    p.add_argument("--hidden-size", type=_positive_int, default=128)
    p.add_argument("--num-layers", type=_positive_int, default=2)
    p.add_argument("--num-heads", type=_positive_int, default=2)
    p.add_argument("--intermediate-size", type=_positive_int, default=512)
    p.add_argument("--vocab-size", type=_positive_int, default=1024)
    p.add_argument("--max-seq-len", type=_positive_int, default=128)
    _add_lsh(p)
    _add_shared(p)
    p.set_defaults(func=cmd_demo_forward, default_format="json")
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices.get(name)
    return None


def _apply_config_file(parser, argv):
    """Install values from ``--config`` as defaults of the chosen subcommand."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    sub = _subparser(parser, known.command)
    if sub is None:
        return
    try:
        with open(known.config, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        sub.error(f"cannot read config file {known.config}: {exc}")
    if not isinstance(data, dict):
        sub.error("config file must hold a flat JSON object")

    actions = {a.option_strings[0][2:]: a for a in sub._actions if a.option_strings and a.option_strings[0].startswith("--")}
    defaults = {}
    for key, value in data.items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            sub.error(f"unknown key in config file: {key!r}")
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        if action.type is not None:
            try:
                value = action.type(str(value))
            except (argparse.ArgumentTypeError, ValueError) as exc:
                sub.error(f"config key {key!r}: {exc}")
        if action.choices is not None and value not in action.choices:
            sub.error(f"config key {key!r}: invalid choice {value!r}")
        defaults[action.dest] = value
    sub.set_defaults(**defaults)


def _emit(args, text):
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv_text(columns, rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(obj):
    return json.dumps(obj, indent=2) + "\n"


def _lsh_config(args, dim, seed):
    return LshConfig(args.bands, args.table_size, args.num_hash_fns, dim, seed=seed)


def _random_inputs(args):
    rng = make_rng(args.seed, _INPUT_STREAM)
    return AttentionInputs.random(args.batch, args.heads, args.seq_len, args.head_dim, rng)


def cmd_bench(args):
    inputs = _random_inputs(args)
    B, H, L, d = inputs.shape

    lsh_dots = []
    lsh_flops = []
    families = []
    for i in range(args.samples):
        cfg = _lsh_config(args, d, derive_seed(args.seed, _FAMILY_STREAM, i))
        family = build_hash_family(cfg)
        families.append(family)
        dots = count_lsh_dot_products(lsh_scores(inputs, family).masks)
        lsh_dots.append(dots)
        lsh_flops.append(lsh_flops_model(cfg, B, H, L, dots))
    full_time = time_attention(FULL, inputs, runs=args.runs)
    lsh_time = time_attention(LSH, inputs, families[0], runs=args.runs)

    rows = [
        {"metric": "kflops", FULL: baseline_flops(B, H, L, d) / 1000, LSH: float(np.mean(lsh_flops)) / 1000},
        {"metric": "dot_products", FULL: float(baseline_dot_count(B, H, L)), LSH: float(np.mean(lsh_dots))},
        {"metric": "mean_time_s", FULL: full_time.mean_s, LSH: lsh_time.mean_s},
    ]
    if args.format == "csv":
        return _csv_text(BENCH_COLUMNS, rows)
    expected, variance = expected_lsh_dot_products(inputs, families[0].config)
    return _json_text({
        "config": {
            "batch": B, "heads": H, "seq_len": L, "head_dim": d,
            "bands": args.bands, "table_size": args.table_size, "num_hash_fns": args.num_hash_fns,
            "seed": args.seed, "samples": args.samples, "runs": args.runs,
        },
        "backend": kernels.name,
        "rows": rows,
        "time_std_s": {FULL: full_time.std_s, LSH: lsh_time.std_s},
        "lsh_dot_products_analytic": {"mean": expected, "binomial_std_of_mean": math.sqrt(variance / args.samples)},
    })


def cmd_sweep(args):
    inputs = _random_inputs(args)
    B, H, L, d = inputs.shape
    if args.collided_pairs > baseline_dot_count(B, H, L):
        raise UsageError(f"--collided-pairs cannot exceed batch*heads*seq_len^2 = {baseline_dot_count(B, H, L)}")
    records = []
    for n, r, m in product(sorted(set(args.hashfns_list)), sorted(set(args.bands_list)), sorted(set(args.tablesize_list))):
        if m < 2:
            raise UsageError("table sizes must be >= 2")
        families = [
            build_hash_family(LshConfig(r, m, n, d, seed=derive_seed(args.seed, _FAMILY_STREAM, i)))
            for i in range(args.samples)
        ]
        dots = [count_lsh_dot_products(lsh_scores(inputs, fam).masks) for fam in families]
        cfg = families[0].config
        mean_time = time_attention(LSH, inputs, families[0], runs=args.runs).mean_s if args.runs else math.nan
        records.append(SweepRecord(
            bands=r, table_size=m, num_hash_fns=n, batch=B, heads=H, seq_len=L, head_dim=d,
            seed=args.seed, mode=LSH,
            kflops=lsh_flops_model(cfg, B, H, L, args.collided_pairs) / 1000,
            dot_products=float(np.mean(dots)), runs=args.runs, mean_time_s=mean_time,
        ))
    rows = [rec.as_dict() for rec in records]
    if args.format == "csv":
        return _csv_text(SweepRecord.columns(), rows)
    return _json_text({"records": rows})


def cmd_collide_prob(args):
    rows = []
    for k, theta in enumerate(args.theta_list):
        cfg = LshConfig(args.bands, args.table_size, args.num_hash_fns, args.dim, seed=args.seed)
        analytic = analytic_collision_probability(theta, cfg)
        empirical = monte_carlo_collision_rate(theta, cfg, args.trials, derive_seed(args.seed, k))
        rows.append({
            "theta": theta, "bands": args.bands, "table_size": args.table_size,
            "num_hash_fns": args.num_hash_fns, "dim": args.dim, "trials": args.trials, "seed": args.seed,
            "analytic": analytic, "empirical": empirical,
            "std_error": math.sqrt(analytic * (1.0 - analytic) / args.trials),
            "abs_gap": abs(empirical - analytic),
        })
    if args.format == "csv":
        return _csv_text(COLLIDE_COLUMNS, rows)
    return _json_text({"rows": rows})


def cmd_demo_forward(args):
    num_heads = args.num_heads
    if args.hidden_size % num_heads:
        raise ConfigError(f"hidden_size {args.hidden_size} is not divisible by num_heads {num_heads}")
    head_dim = args.hidden_size // num_heads
    config = EncoderConfig(
        hidden_size=args.hidden_size, num_layers=args.num_layers, num_heads=num_heads,
        intermediate_size=args.intermediate_size, vocab_size=args.vocab_size,
        max_seq_len=args.max_seq_len, attention_mode=FULL,
        lsh=_lsh_config(args, head_dim, derive_seed(args.seed, _FAMILY_STREAM)), seed=args.seed,
    )
    state = init_encoder(config)
    tokens = make_rng(args.seed, _INPUT_STREAM).integers(0, config.vocab_size, size=args.seq_len)
    outputs = {mode: encoder_forward(state, tokens, mode) for mode in (FULL, LSH)}

    modes = {}
    for mode, out in outputs.items():
        modes[mode] = {
            "shape": list(out.hidden.shape),
            "finite": bool(np.all(np.isfinite(out.hidden))),
            "dot_products": out.counters.dot_products,
            "kflops": out.counters.kflops,
        }
    diff = float(np.linalg.norm(outputs[FULL].hidden - outputs[LSH].hidden))
    attn_diff = float(np.linalg.norm(outputs[FULL].attention_outputs[0] - outputs[LSH].attention_outputs[0]))
    if args.format == "csv":
        rows = [{"mode": m, **{k: (json.dumps(v) if k == "shape" else v) for k, v in info.items()}} for m, info in modes.items()]
        return _csv_text(DEMO_COLUMNS, rows)
    return _json_text({
        "seq_len": args.seq_len,
        "seed": args.seed,
        "tokens": tokens.tolist(),
        "modes": modes,
        "output_diff_norm": diff,
        "attention_diff_norm": attn_diff,
    })


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    try:
        text = args.func(args)
    except (UsageError, ConfigError, ShapeError, InputError) as exc:
        _subparser(parser, args.command).error(str(exc))
    _emit(args, text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
