"""Command-line entry point: ``evlife <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error. Every subcommand accepts
``--config FILE`` with ``key = value`` lines named after the long options
(dashes or underscores); command-line flags override the file.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .buffer_filter import FilterMode, FilterParams, filter_events, support_mask
from .edge_render import RenderQuery, accumulate_count, accumulate_time, lifetime_map, render_lifetime
from .evaluation import CdmParams, cdm, lifetime_stats, sweep_csv, sweep_fig4
from .events_io import (EventFormatError, EventStream, PgmError, SensorGeometry, load_events,
                        load_pgm, save_events, save_pgm, write_pgm_gray)
from .lifetime import process_stream, read_lifetimes_csv, records_geometry, write_lifetimes_csv
from .plane_fit import RansacParams
from .synth import NoiseSpec, StripeScene, gen_stripes, inject_isolated_noise, jitter_timestamps

log = logging.getLogger("evlife")

SEED_ENV = "EVLIFE_SEED"


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _geometry_args(p, required=True):
    p.add_argument("--geometry", type=SensorGeometry.parse, help="sensor size as WIDTHxHEIGHT")
    p.add_argument("--w", "--width", dest="width", type=int)
    p.add_argument("--h", "--height", dest="height", type=int)
    p.set_defaults(_geometry_required=required)


def _geometry(args, parser) -> SensorGeometry | None:
    if args.geometry is not None:
        return args.geometry
    if args.width is not None and args.height is not None:
        return SensorGeometry(args.width, args.height)
    if args._geometry_required:
        parser.error("sensor geometry is required (--geometry WxH or --w/--h)")
    return None


def _filter_args(p):
    p.add_argument("--tau-min", type=float, default=0.01)
    p.add_argument("--mode", choices=[m.value for m in FilterMode], default=FilterMode.SYMMETRIC.value)


def _ransac_args(p):
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--eps", type=float, default=0.01, help="inlier distance threshold")
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--min-inliers", type=int, default=3)
    p.add_argument("--exhaustive", action="store_true")


def _common(p):
    p.add_argument("--config", help="key=value file of option defaults")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evlife", description="Event lifetime estimation and edge rendering.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("synth", help="generate a synthetic stripes sequence")
    _common(p)
    _geometry_args(p)
    p.add_argument("--velocity", type=float, default=100.0)
    p.add_argument("--stripes", type=_floats, default=None, help="initial stripe columns")
    p.add_argument("--stripe-count", type=int, default=8)
    p.add_argument("--stripe-spacing", type=float, default=16.0)
    p.add_argument("--duration", type=float, default=0.5)
    p.add_argument("--polarity", type=int, choices=(0, 1), default=1)
    p.add_argument("--noise-rate", type=float, default=0.0, help="isolated noise, events/s/pixel")
    p.add_argument("--sigma", type=float, default=0.0, help="timestamp jitter, seconds")
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="ground-truth CSV (index,lifetime,is_noise)")

    p = sub.add_parser("filter", help="event buffer noise filter")
    _common(p)
    _geometry_args(p)
    _filter_args(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("detect", help="per-event lifetime estimation")
    _common(p)
    _geometry_args(p)
    _filter_args(p)
    _ransac_args(p)
    p.add_argument("--no-filter", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("render", help="render an edge image")
    _common(p)
    _geometry_args(p, required=False)
    p.add_argument("--mode", choices=("lifetime", "time", "count", "map"), default="lifetime")
    p.add_argument("--at", type=float, default=None)
    p.add_argument("--window", type=float, default=0.03, help="accumulation window, seconds")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--tau-clamp", type=float, default=0.5)
    p.add_argument("--tau-range", type=_floats, default=[0.0, 0.05])
    p.add_argument("--in", dest="input", required=True, help="lifetimes CSV or event text")
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="evaluation tools")
    esub = p.add_subparsers(dest="eval_command", parser_class=_Parser)
    esub.required = True
    q = esub.add_parser("cdm", help="CDM similarity of two PGM edge maps")
    _common(q)
    q.add_argument("--f", required=True)
    q.add_argument("--g", required=True)
    q.add_argument("--eta", type=int, default=3)
    q = esub.add_parser("fig4", help="synthetic window noise sweep")
    _fig4_args(q)
    q = esub.add_parser("lifetime", help="lifetime error and histogram")
    _common(q)
    q.add_argument("--estimates", required=True)
    q.add_argument("--truth", required=True)
    q.add_argument("--bin-width", type=float, default=0.001)
    q.add_argument("--out", required=True)

    p = sub.add_parser("fig4", help="synthetic window noise sweep")
    _fig4_args(p)

    p = sub.add_parser("info", help="summarise an event file")
    _common(p)
    _geometry_args(p)
    p.add_argument("--in", dest="input", required=True)
    return parser


def _fig4_args(p):
    _common(p)
    p.add_argument("--noise", choices=("global", "scattered"), default="global")
    p.add_argument("--sigmas", type=_floats, default=None)
    p.add_argument("--deltas", type=_floats, default=None)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--scatter-fraction", type=float, default=0.2)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--out", required=True)


# ------------------------------------------------------------------ config

def read_config(path) -> dict[str, str]:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _leaf_parser(parser, argv):
    """The subparser that handles argv (for config defaults)."""
    node = parser
    for token in argv:
        actions = [a for a in node._actions if isinstance(a, argparse._SubParsersAction)]
        if not actions:
            break
        if token in actions[0].choices:
            node = actions[0].choices[token]
    return node


def _apply_config(parser, argv, path):
    leaf = _leaf_parser(parser, argv)
    by_dest = {a.dest: a for a in leaf._actions if a.option_strings and a.dest not in ("help", "config")}
    values = read_config(path)
    defaults = {}
    for key, raw in values.items():
        action = by_dest.get(key)
        if action is None:
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            continue
        try:
            value = action.type(raw) if action.type else raw
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config key {key!r}: invalid choice {value!r}")
        defaults[key] = value
    leaf.set_defaults(**defaults)
    for action in leaf._actions:
        if action.dest in defaults:
            action.required = False


def _config_path(argv):
    # read before parsing so the file can supply required options
    for i, token in enumerate(argv):
        if token == "--config":
            if i + 1 == len(argv):
                raise UsageError("--config needs a path")
            return argv[i + 1]
        if token.startswith("--config="):
            return token.split("=", 1)[1]
    return None


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return 0


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _read_text(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


# ---------------------------------------------------------------- commands

def cmd_synth(args, parser):
    geometry = _geometry(args, parser)
    seed = _seed(args)
    positions = args.stripes
    if positions is None:
        positions = [k * args.stripe_spacing for k in range(args.stripe_count)]
    scene = StripeScene(geometry, tuple(positions), args.velocity, args.duration, bool(args.polarity))
    stream, truth = gen_stripes(scene)
    stream, perm = jitter_timestamps(stream, args.sigma, seed=seed)
    truth = truth[perm]
    stream, noise = inject_isolated_noise(stream, NoiseSpec(isolated_rate=args.noise_rate, seed=seed + 1),
                                          t_range=(0.0, args.duration))
    lifetimes = np.full(len(stream), np.nan)
    lifetimes[~noise] = truth
    save_events(args.out, stream)
    if args.truth:
        rows = ["index,lifetime,is_noise\n"]
        rows += [f"{i},{v!r},{int(n)}\n" for i, (v, n) in enumerate(zip(lifetimes.tolist(), noise.tolist()))]
        _write_text(args.truth, "".join(rows))
    log.info("wrote %d events (%d noise)", len(stream), int(noise.sum()))


def cmd_filter(args, parser):
    stream = load_events(args.input, _geometry(args, parser))
    out = filter_events(stream, FilterParams(args.tau_min, args.mode))
    save_events(args.out, out)
    log.info("kept %d of %d events", len(out), len(stream))


def cmd_detect(args, parser):
    stream = load_events(args.input, _geometry(args, parser))
    fparams = None if args.no_filter else FilterParams(args.tau_min, args.mode)
    rparams = RansacParams(window_n=args.window, delta=args.delta, inlier_eps=args.eps,
                           iterations=args.iterations, min_inliers=args.min_inliers,
                           seed=_seed(args), exhaustive=args.exhaustive)
    records = process_stream(stream, fparams, rparams, threads=max(args.threads, 1))
    _write_text(args.out, write_lifetimes_csv(records))


def _load_any(path, geometry):
    """Lifetimes CSV (by header) or event text."""
    text = _read_text(path)
    if text.startswith("t,x,y,p,"):
        records = read_lifetimes_csv(text)
        return records, geometry or records_geometry(records)
    if geometry is None:
        raise UsageError("event text input needs --geometry")
    from .events_io import parse_event_text
    return parse_event_text(text, geometry), geometry


def cmd_render(args, parser):
    geometry = _geometry(args, parser)
    data, geometry = _load_any(args.input, geometry)
    if args.mode == "map":
        if isinstance(data, EventStream):
            raise UsageError("--mode map needs a lifetimes CSV")
        lo, hi = args.tau_range
        with open(args.out, "wb") as fh:
            fh.write(write_pgm_gray(lifetime_map(data, geometry, (lo, hi), args.tau_clamp)))
        return
    if args.at is None:
        parser.error("--at is required for this mode")
    if args.mode == "lifetime":
        if isinstance(data, EventStream):
            raise UsageError("--mode lifetime needs a lifetimes CSV")
        image = render_lifetime(data, RenderQuery(args.at, args.tau_clamp), geometry)
    else:
        if not isinstance(data, EventStream):
            data = EventStream.from_events(geometry, (r.event for r in data))
        if args.mode == "time":
            image = accumulate_time(data, args.at, args.window, geometry)
        else:
            image = accumulate_count(data, args.at, args.count, geometry)
    save_pgm(args.out, image)


def cmd_eval_cdm(args, parser):
    report = cdm(load_pgm(args.f), load_pgm(args.g), CdmParams(args.eta))
    print(json.dumps({"f": args.f, "g": args.g, "eta": args.eta, **report.__dict__}, sort_keys=True))


def cmd_fig4(args, parser):
    if args.noise == "global":
        sigmas = args.sigmas or [0.0, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0]
        deltas = args.deltas or [0.0, 0.25]
    else:
        sigmas = args.sigmas or [1.0]
        deltas = args.deltas or [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45]
    ransac = RansacParams(inlier_eps=args.eps, iterations=args.iterations)
    rows = sweep_fig4(args.noise, sigmas, deltas, args.reps, seed=_seed(args),
                      scatter_fraction=args.scatter_fraction, ransac=ransac)
    _write_text(args.out, sweep_csv(rows))


def _read_truth_csv(path) -> np.ndarray:
    lines = _read_text(path).splitlines()
    if not lines or lines[0].strip() != "index,lifetime,is_noise":
        raise EventFormatError(f"{path}: expected header index,lifetime,is_noise")
    values = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            i, v, noise = line.split(",")
            values[int(i)] = np.nan if int(noise) else float(v)
        except ValueError:
            raise EventFormatError(f"{path}:{lineno}: cannot parse {line!r}") from None
    out = np.full(max(values) + 1 if values else 0, np.nan)
    for i, v in values.items():
        out[i] = v
    return out


def cmd_eval_lifetime(args, parser):
    records = read_lifetimes_csv(_read_text(args.estimates))
    truth = _read_truth_csv(args.truth)
    try:
        stats = lifetime_stats(records, truth, args.bin_width)
    except KeyError as exc:
        raise DataError(str(exc.args[0])) from None
    _write_text(args.out, stats.histogram_csv())
    print(json.dumps({"mean_abs_error": stats.mean_abs_error, "n_scored": stats.n_scored}, sort_keys=True))


def cmd_info(args, parser):
    stream = load_events(args.input, _geometry(args, parser))
    kept = int(support_mask(stream).sum())
    info = {
        "events": len(stream),
        "geometry": str(stream.geometry),
        "t_first": float(stream.t[0]) if len(stream) else None,
        "t_last": float(stream.t[-1]) if len(stream) else None,
        "positive": int(stream.p.sum()),
        "negative": int((~stream.p).sum()),
        "buffer_kept": kept,
    }
    print(json.dumps(info, sort_keys=True))


COMMANDS = {
    ("synth",): cmd_synth,
    ("filter",): cmd_filter,
    ("detect",): cmd_detect,
    ("render",): cmd_render,
    ("eval", "cdm"): cmd_eval_cdm,
    ("eval", "fig4"): cmd_fig4,
    ("eval", "lifetime"): cmd_eval_lifetime,
    ("fig4",): cmd_fig4,
    ("info",): cmd_info,
}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        config = _config_path(argv)
        if config:
            _apply_config(parser, argv, config)
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(name)s: %(message)s")
        key = (args.command,) if args.command != "eval" else ("eval", args.eval_command)
        COMMANDS[key](args, _leaf_parser(parser, argv))
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return exc.code or 0
    except (DataError, EventFormatError, PgmError, OSError, ValueError) as exc:
        print(f"evlife: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
