"""Command-line interface.

Subcommands: ``decompose``, ``construct``, ``simulate``, ``visualize`` and
``rate-loss``. Exit status is 0 on success, 2 on a usage error and 1 on a
domain error. ``--out -`` writes to standard output.
"""

import argparse
import json
import sys

import numpy as np

from .channel import ChannelSpec
from .codec import simulate
from .construct import METHODS, code_from_json, code_to_json, construct
from .decompose import capacity_profile, rate_loss
from .errors import CapacityError, DomainError, StructureError

FORMAT_VERSION = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _spec(args):
    return ChannelSpec.from_snr_db(args.snr_db, amplitude=args.amplitude, poly_order=args.poly_order)


def _emit(text, out):
    if out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _dump(obj):
    return json.dumps(obj, indent=2) + "\n"


def _r6(x):
    return round(float(x), 6)


def profile_json(profile, spec):
    """Capacity profile as an ordered JSON document."""
    return {
        "format_version": FORMAT_VERSION,
        "L": profile.L,
        "snr_db": _r6(spec.snr_db),
        "amplitude": float(spec.amplitude),
        "poly_order": int(spec.poly_order),
        "channel_capacity": _r6(profile.channel_capacity),
        "capacities": [_r6(c) for c in profile.capacities],
        "raw": [float(c) for c in profile.raw],
    }


def polarization_graph(L, spec):
    """Vertices (level, index, mi) and parent-child edges of the polarization tree."""
    vertices, edges = [], []
    cap = capacity_profile(2, spec).channel_capacity
    vertices.append({"level": 0, "index": 1, "mi": _r6(cap)})
    n, level = 2, 1
    while n <= L:
        prof = capacity_profile(n, spec)
        for k, c in enumerate(prof.capacities, start=1):
            vertices.append({"level": level, "index": k, "mi": _r6(c)})
            parent = (k + 1) // 2
            edges.append({"parent": [level - 1, parent], "child": [level, k]})
        n *= 2
        level += 1
    return {
        "format_version": FORMAT_VERSION,
        "L": L,
        "snr_db": _r6(spec.snr_db),
        "vertices": vertices,
        "edges": edges,
    }


def _cmd_decompose(args):
    spec = _spec(args)
    _emit(_dump(profile_json(capacity_profile(args.block_length, spec), spec)), args.out)


def _cmd_construct(args):
    if not 0.0 <= args.rate <= 1.0:
        raise DomainError(f"rate must lie in [0, 1], got {args.rate}")
    K = int(round(args.rate * args.block_length))
    code = construct(args.method, args.block_length, K, _spec(args), frames=args.frames, seed=args.seed)
    _emit(code_to_json(code) + "\n", args.out)


def _load_code(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return code_from_json(fh.read())
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"cannot read code file {path!r}: {exc}") from None


def _cmd_simulate(args):
    code = _load_code(args.code)
    if args.snr_db_step <= 0:
        raise DomainError("snr step must be positive")
    count = int(np.floor((args.snr_db_stop - args.snr_db_start) / args.snr_db_step + 1e-9)) + 1
    if count < 1:
        raise DomainError("empty SNR range")
    grid = [round(args.snr_db_start + k * args.snr_db_step, 10) for k in range(count)]
    spec = ChannelSpec.from_snr_db(grid[0], amplitude=args.amplitude, poly_order=args.poly_order)
    table = simulate(code, spec, grid, args.frames, seed=args.seed)
    _emit(table.to_csv(), args.out)


def _cmd_visualize(args):
    _emit(_dump(polarization_graph(args.block_length, _spec(args))), args.out)


def _cmd_rate_loss(args):
    code = _load_code(args.code)
    spec = _spec(args)
    value = rate_loss(capacity_profile(code.L, spec), code.info_set)
    sys.stdout.write(f"{value:.4f}\n")


def _add_channel(p, snr_required=True):
    p.add_argument("--snr-db", type=float, required=snr_required, help="SNR in dB, A^2 / (4 sigma^2)")
    p.add_argument("--amplitude", type=float, default=1.0, help="input level A (default 1)")
    p.add_argument("--poly-order", type=int, default=7, help="log-polynomial coefficient count (default 7)")


def build_parser():
    parser = _Parser(prog="polardecomp", description="Polar subchannel capacities by polarization-factor decomposition.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decompose", help="capacities of all subchannels as JSON")
    p.add_argument("--block-length", type=int, required=True)
    _add_channel(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("construct", help="choose an information set")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--block-length", type=int, required=True)
    p.add_argument("--rate", type=float, required=True)
    _add_channel(p)
    p.add_argument("--frames", type=int, default=100_000, help="frames for the mc method")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_construct)

    p = sub.add_parser("simulate", help="BER/FER of a code under SC decoding as CSV")
    p.add_argument("--code", required=True)
    p.add_argument("--snr-db-start", type=float, required=True)
    p.add_argument("--snr-db-stop", type=float, required=True)
    p.add_argument("--snr-db-step", type=float, required=True)
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--poly-order", type=int, default=7)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("visualize", help="polarization tree data as JSON")
    p.add_argument("--block-length", type=int, required=True)
    _add_channel(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_visualize)

    p = sub.add_parser("rate-loss", help="print the rate loss of a code in bits")
    p.add_argument("--code", required=True)
    _add_channel(p)
    p.set_defaults(func=_cmd_rate_loss)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (DomainError, StructureError, CapacityError) as exc:
        print(f"polardecomp: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
