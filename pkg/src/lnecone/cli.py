"""Command-line front end: ``lnecone {analyze,cone,kx,witness,corpus}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
import warnings
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from . import corpus as corpus_mod
from .cone import (
    cone_from_directions,
    cone_lne_profile,
    cone_set_from,
    directions,
    kx_estimate,
    reducedness_report,
    symbolic_cone,
)
from .expr import ParseError
from .metric import lne_profile, lne_scales, parse_grid
from .variety import ProjectionError, branches_of, load_set_json
from .witness import WitnessCurve, table_csv, witness_exponent, witness_table

log = logging.getLogger("lnecone")

EXIT_OK, EXIT_INPUT, EXIT_SAMPLING = 0, 2, 3


class InputError(Exception):
    pass


class Timer:
    def __init__(self):
        self.ms = {}

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.ms[name] = round(1000 * (time.perf_counter() - t0), 3)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings/null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if np.isnan(v):
            return None
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def _load(args):
    """(germ, corpus entry or None) from ``--corpus`` / ``--set``."""
    if args.corpus and args.set:
        raise InputError("give either --corpus or --set, not both")
    if args.corpus:
        try:
            entry = corpus_mod.get(args.corpus)
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from exc
        return list(entry.set), entry
    if args.set:
        path = Path(args.set)
        if not path.exists():
            raise InputError(f"set file not found: {path}")
        try:
            return load_set_json(json.loads(path.read_text())), None
        except (json.JSONDecodeError, KeyError, ValueError, ParseError) as exc:
            raise InputError(f"bad set file {path}: {exc}") from exc
    raise InputError("one of --corpus or --set is required")


def _scales(args, entry):
    if args.scales:
        try:
            return parse_grid(args.scales)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    if entry is not None:
        w = entry.scale_window
        return parse_grid(f"{w['t_max']}:{w['t_min']}:log{w['k']}")
    return parse_grid("0.2:0.0125:log5")


def _samples(args, entry, default):
    if args.samples is not None:
        if args.samples < 1:
            raise InputError("--samples must be positive")
        return args.samples
    if entry is not None and "n" in entry.scale_window:
        return int(entry.scale_window["n"])
    return default


def _vector(text, dim):
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise InputError(f"bad vector {text!r}") from exc
    if len(v) != dim:
        raise InputError(f"vector {text!r} has {len(v)} entries, expected {dim}")
    if np.linalg.norm(v) == 0:
        raise InputError("zero direction")
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(args, timer):
    germ, entry = _load(args)
    scales = _scales(args, entry)
    n = _samples(args, entry, 200)
    conn = args.conn_const
    if conn is None:
        conn = 6.0 if branches_of(germ)[0].local_dim <= 2 else 3.0
    with timer.stage("profile"):
        if len(scales) >= 4:
            report = lne_profile(germ, scales, n=n, seed=args.seed, conn_const=conn)
        elif entry is not None and not args.scales:
            # coarse bundled window: per-scale constants only, no trend
            report = lne_scales(germ, scales, n=n, seed=args.seed, conn_const=conn)
        else:
            raise InputError("analyze needs at least 4 scales")
    config = {"scales": scales, "samples": n, "conn_const": conn}
    result = report.to_dict()
    if entry is not None:
        result["expected"] = entry.expected
    return config, result, report.to_csv()


def cmd_cone(args, timer):
    germ, entry = _load(args)
    sets = branches_of(germ)
    n = args.samples if args.samples is not None else 1000
    scales = parse_grid(args.scales) if args.scales else [1e-2, 1e-3]
    result = {}
    first = sets[0]
    gens = list(first.complex_equations) if first.complex_equations else list(first.equations)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result["symbolic_cone"] = [f.factored_str() for f in symbolic_cone(gens)]
        if len(sets) > 1:
            result["symbolic_cone_branches"] = {
                s.name: [f.factored_str() for f in symbolic_cone(list(s.equations))] for s in sets
            }
    if caught:
        result["symbolic_note"] = str(caught[0].message)
    if not args.symbolic or args.numeric:
        with timer.stage("directions"):
            cloud = directions(germ, scales, n, args.seed)
        result["directions"] = np.round(cloud.directions, 12).tolist()
        result["source_scales"] = cloud.source_scales
        if args.lne:
            with timer.stage("cone_lne"):
                model = cone_from_directions(cloud, cone_set=cone_set_from(germ))
                rep = cone_lne_profile(model, conn_const=_conn(args), seed=args.seed)
            result["cone_lne"] = rep.to_dict()
        kx, reduced = [], None
        if args.kx_count > 0:
            avoid = list(entry.non_simple_directions) if entry is not None else None
            with timer.stage("reducedness"):
                rr = reducedness_report(germ, args.kx_count, cloud=cloud, seed=args.seed,
                                        avoid=avoid, avoid_radius=0.3 if avoid else 0.0)
            kx = [r.to_dict() for r in rr.per_direction]
            reduced = rr.reduced_estimate
            result["unstable"] = [r.to_dict() for r in rr.unstable]
        result["kx"] = kx
        result["reduced_estimate"] = reduced
    config = {"scales": scales, "samples": n, "symbolic_only": bool(args.symbolic and not args.numeric),
              "kx_count": args.kx_count, "lne": bool(args.lne), "conn_const": _conn(args)}
    return config, result, None


def cmd_kx(args, timer):
    germ, entry = _load(args)
    dim = branches_of(germ)[0].real_dim
    if not args.direction:
        raise InputError("kx needs --direction")
    v = _vector(args.direction, dim)
    n = args.samples if args.samples is not None else 2000
    with timer.stage("kx"):
        r = kx_estimate(germ, v, args.eps, args.delta, n, args.seed, conn_const=_conn(args))
    result = {**r.to_dict(), "counts": r.counts, "window_samples": r.samples}
    config = {"direction": v.tolist(), "eps": args.eps, "delta": args.delta, "samples": n,
              "conn_const": _conn(args)}
    return config, result, None


def cmd_witness(args, timer):
    germ, entry = _load(args)
    if args.alpha or args.beta:
        if not (args.alpha and args.beta):
            raise InputError("give both --alpha and --beta")
        try:
            alpha, beta = WitnessCurve.from_json(args.alpha), WitnessCurve.from_json(args.beta)
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise InputError(f"bad curve file: {exc}") from exc
        wgerm, default_grid, default_n, name = germ, None, 8000, "custom"
    else:
        if entry is None or not entry.witnesses:
            raise InputError("this set has no bundled curve pair; pass --alpha/--beta")
        pair = entry.witnesses[0]
        if args.witness:
            match = [w for w in entry.witnesses if w.name == args.witness]
            if not match:
                raise InputError(f"unknown curve pair {args.witness!r}")
            pair = match[0]
        alpha, beta, wgerm = pair.alpha, pair.beta, pair.germ(entry)
        default_grid, default_n, name = pair.grid, pair.n, pair.name
    grid_text = args.grid or default_grid
    if not grid_text:
        raise InputError("witness needs --grid")
    try:
        grid = parse_grid(grid_text)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    n = args.samples if args.samples is not None else default_n
    try:
        with timer.stage("table"):
            rows = witness_table(wgerm, alpha, beta, grid, n, args.seed, conn_const=args.conn_const)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    result = {"pair": name, "rows": [r.to_dict() for r in rows]}
    try:
        result["exponent_fit"] = witness_exponent(rows).to_dict()
    except ValueError:
        result["exponent_fit"] = None
    conn = args.conn_const
    if conn is None:
        conn = 6.0 if branches_of(wgerm)[0].local_dim <= 2 else 3.0
    config = {"grid": grid, "samples": n, "pair": name, "conn_const": conn}
    return config, result, table_csv(rows)


def _conn(args) -> float:
    return 6.0 if args.conn_const is None else args.conn_const


def cmd_corpus(args, timer):
    if args.action == "list":
        names = corpus_mod.list_entries()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "lne", "cone_lne", "reduced", "tags"])
        for nm in names:
            e = corpus_mod.get(nm)
            w.writerow([nm, e.expected["lne"], e.expected["cone_lne"], e.expected["reduced"], ";".join(e.tags)])
        return {"action": "list"}, {"names": names}, buf.getvalue()
    if not args.name:
        raise InputError(f"corpus {args.action} needs an entry name")
    try:
        text = corpus_mod.export(args.name)
    except KeyError as exc:
        raise InputError(str(exc.args[0])) from exc
    if args.action == "export":
        return {"action": "export", "name": args.name}, json.loads(text), None
    e = corpus_mod.get(args.name)
    result = {"name": e.name, "expected": e.expected, "provenance": e.provenance, "tags": list(e.tags),
              "notes": e.notes, "scale_window": e.scale_window,
              "witnesses": [w.name for w in e.witnesses]}
    return {"action": "show", "name": args.name}, result, None


COMMANDS = {"analyze": cmd_analyze, "cone": cmd_cone, "kx": cmd_kx, "witness": cmd_witness, "corpus": cmd_corpus}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--samples", type=int, default=None, help="points per shell / window / ball")
    g.add_argument("--scales", default=None, help='grid "t_max:t_min:logK" or comma list')
    g.add_argument("--conn-const", type=float, default=None,
                   help="connection radius in median spacings (analyze and witness: 6 up to dimension 2, else 3; cone and kx: 6)")
    g.add_argument("--out", default=None, help="write here instead of stdout")
    g.add_argument("--format", choices=["json", "csv"], default="json")
    g.add_argument("--corpus", default=None, help="bundled entry name")
    g.add_argument("--set", default=None, help="set definition JSON file")
    g.add_argument("--timings", action="store_true", help="record wall-clock stage timings in the report")
    g.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="lnecone", description="Inner/outer metric probes, tangent cones and k_X.")
    p.add_argument("--version", action="version", version=f"lnecone {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="LNE profile over shells")
    c = sub.add_parser("cone", parents=[common], help="tangent cone (numeric and symbolic)")
    c.add_argument("--symbolic", action="store_true", help="initial forms only")
    c.add_argument("--numeric", action="store_true", help="with --symbolic, still sample directions")
    c.add_argument("--kx-count", type=int, default=0, help="k_X at this many spread directions")
    c.add_argument("--lne", action="store_true", help="also probe the sampled cone for LNE")
    k = sub.add_parser("kx", parents=[common], help="k_X at one direction")
    k.add_argument("--direction", required=False, help="comma-separated vector")
    k.add_argument("--eps", type=float, default=0.3)
    k.add_argument("--delta", type=float, default=0.05)
    w = sub.add_parser("witness", parents=[common], help="curve-pair ratio table")
    w.add_argument("--grid", default=None, help='"s_max:s_min:logK"')
    w.add_argument("--witness", default=None, help="pair name within the entry")
    w.add_argument("--alpha", default=None, help="curve JSON file")
    w.add_argument("--beta", default=None, help="curve JSON file")
    cp = sub.add_parser("corpus", parents=[common], help="bundled examples")
    cp.add_argument("action", choices=["list", "show", "export"])
    cp.add_argument("name", nargs="?")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    timer = Timer()
    try:
        config, result, csv_text = COMMANDS[args.command](args, timer)
    except (InputError, ValueError) as exc:
        # library ValueErrors are argument checks (bad scales, directions, grids)
        print(f"lnecone: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (RuntimeError, ProjectionError) as exc:
        print(f"lnecone: sampling failed: {exc}", file=sys.stderr)
        return EXIT_SAMPLING
    for stage, ms in timer.ms.items():
        log.info("stage %s: %.1f ms", stage, ms)
    echo = {
        "command": args.command, "corpus": args.corpus, "set": args.set, "seed": args.seed,
        "samples": args.samples, "scales": args.scales, "conn_const": args.conn_const,
        "format": args.format, "out": args.out, **config,
    }
    if args.format == "csv":
        if csv_text is None:
            print(f"lnecone: error: {args.command} has no CSV form", file=sys.stderr)
            return EXIT_INPUT
        text = csv_text
    else:
        timings = dict(timer.ms) if args.timings else {k: None for k in timer.ms}
        report = {"tool": "lnecone", "version": __version__, "config": echo, "result": result,
                  "timings_ms": timings}
        text = json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
