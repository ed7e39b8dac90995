"""Command-line front end: ``upa simulate | expect | limit | compare | replay``.

Exit status: 0 success, 2 usage error, 3 validation error, 4 domain error,
5 failed comparison (or manifest replay mismatch).
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import compare_report
from .asymptotics import limit_distribution, tail_approx
from .errors import DomainError, ValidationError
from .expectation import expected_counts
from .io import (
    RunManifest,
    Table,
    atomic_write,
    digest,
    dump_json,
    file_digest,
    manifest_path,
    table_to_csv,
    table_to_json,
)
from .model import ModelParams, grow, parse_window, simulate

log = logging.getLogger("upagraph")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_DOMAIN, EXIT_TOLERANCE = 0, 2, 3, 4, 5

_FLAG_FOR_FIELD = {
    "init_l": "--init-l",
    "fit_range": "--fit-range",
    "snapshots": "--snapshots",
    "horizon": "--horizon",
}


class ToleranceFailure(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _int_range(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*[:,]\s*(\d+)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    return int(m.group(1)), int(m.group(2))


def _window_text(text: str) -> str:
    if not re.fullmatch(r"fixed:\d+|linear:[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?", text):
        raise argparse.ArgumentTypeError(f"expected fixed:<l> or linear:<alpha>, got {text!r}")
    return text


def _seed(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}")


def _add_model_flags(sp, horizon_required=True):
    sp.add_argument("--p", type=float, required=True, help="probability of the window rule")
    sp.add_argument("--window", type=_window_text, required=True, help="fixed:<l> or linear:<alpha>")
    sp.add_argument("--horizon", type=int, required=horizon_required, help="final time T")
    sp.add_argument("--init-l", type=int, default=None, help="initial star size (linear windows)")
    sp.add_argument("--seed", type=_seed, default=0)


def _add_output_flags(sp):
    sp.add_argument("--out", default=None, help="output file (stdout when omitted)")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="upa", description="Uniform-preferential attachment graphs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="grow a graph and write degree histograms")
    _add_model_flags(sp)
    sp.add_argument("--snapshots", type=_int_list, default=None, help="t1,t2,... (default: horizon)")
    sp.add_argument("--edges", default=None, help="also write the edge list (source,target) here")
    _add_output_flags(sp)

    sp = sub.add_parser("expect", help="exact E[N(k,t)] by recursion (fixed windows)")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--l", type=int, required=True, help="fixed window size")
    sp.add_argument("--times", type=_int_list, required=True, help="t1,t2,...")
    sp.add_argument("--horizon", type=int, default=None, help="default: largest requested time")
    sp.add_argument("--kmax", type=int, default=None, help="default: max(horizon, l + 1)")
    _add_output_flags(sp)

    sp = sub.add_parser("limit", help="asymptotic degree distribution P(k)")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--l", type=int, required=True)
    sp.add_argument("--kmax", type=int, required=True)
    sp.add_argument("--tail-order", type=int, choices=(1, 2), default=None)
    _add_output_flags(sp)

    sp = sub.add_parser("compare", help="score a simulated ensemble against theory")
    _add_model_flags(sp)
    sp.add_argument("--runs", type=int, required=True)
    sp.add_argument("--t", type=int, default=None, help="snapshot time (default: horizon)")
    sp.add_argument("--against", choices=("limit", "expect"), default="limit")
    sp.add_argument("--krange", type=_int_range, default=(1, 20))
    sp.add_argument("--tol", type=float, default=0.02, help="sup-distance tolerance")
    sp.add_argument("--z-tol", type=float, default=4.0)
    sp.add_argument("--fit-range", type=_int_range, default=None)
    sp.add_argument("--slope-tol", type=float, default=None)
    sp.add_argument("--limit-l", type=int, default=None, help="window size of the reference law for linear windows")
    sp.add_argument("--jobs", type=int, default=None, help="worker processes (overrides UPA_THREADS)")
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("replay", help="re-run a manifest and verify output digests")
    sp.add_argument("manifest")
    return parser


def _model_params(args) -> ModelParams:
    return ModelParams(args.p, parse_window(args.window), args.horizon, args.init_l, args.seed)


def _command_line(argv) -> list:
    """argv with output paths made absolute, so a manifest replays from anywhere."""
    out = list(argv)
    for i, tok in enumerate(out[:-1]):
        if tok in ("--out", "--edges"):
            out[i + 1] = str(Path(out[i + 1]).resolve())
    for i, tok in enumerate(out):
        for flag in ("--out=", "--edges="):
            if tok.startswith(flag):
                out[i] = flag + str(Path(tok[len(flag):]).resolve())
    return out


def _emit(table: Table, path, fmt: str, manifest: RunManifest | None) -> bytes:
    data = table_to_json(table, manifest.core() if manifest else None) if fmt == "json" else table_to_csv(table)
    if path is None:
        sys.stdout.write(data.decode("utf-8"))
    else:
        atomic_write(path, data)
        if manifest is not None:
            manifest.outputs[str(Path(path).resolve())] = digest(data)
    return data


def _snapshot_path(out: str, t: int, many: bool) -> str:
    if not many:
        return out
    p = Path(out)
    return str(p.with_name(f"{p.stem}_t{t}{p.suffix}"))


def cmd_simulate(args, manifest):
    params = _model_params(args)
    manifest.params = params.to_dict()
    snaps = args.snapshots if args.snapshots else [params.horizon]
    hists = simulate(params, snaps)
    many = len(hists) > 1
    for h in hists:
        h.check()
        table = Table(["k", "count"], [(k, h.counts[k]) for k in sorted(h.counts)])
        if args.out is None:
            if many:
                sys.stdout.write(f"# t={h.t}\n")
            _emit(table, None, args.format, None)
        else:
            _emit(table, _snapshot_path(args.out, h.t, many), args.format, manifest)
    if args.edges:
        state = grow(ModelParams(params.p, params.window, hists[-1].t, params.init_l, params.seed))
        rows = [(j, tgt) for j, tgt in enumerate(state.edge_targets) if j > 0]
        _emit(Table(["source", "target"], rows), args.edges, "csv", manifest)


def cmd_expect(args, manifest):
    if args.l < 1:
        raise ValidationError(f"window size must be >= 1, got {args.l}", "l")
    horizon = args.horizon if args.horizon is not None else max(args.times)
    kmax = args.kmax if args.kmax is not None else max(horizon, args.l + 1)
    manifest.params = {"p": args.p, "l": args.l, "horizon": horizon, "kmax": kmax, "times": sorted(set(args.times))}
    table = expected_counts(args.p, args.l, horizon, kmax, times=args.times)
    rows = []
    for j, t in enumerate(table.times):
        rows += [(k, int(t), float(table.values[k - 1, j])) for k in range(1, kmax + 1)]
    _emit(Table(["k", "t", "expected"], rows), args.out, args.format, manifest)


def cmd_limit(args, manifest):
    if args.l < 1:
        raise ValidationError(f"window size must be >= 1, got {args.l}", "l")
    manifest.params = {"p": args.p, "l": args.l, "kmax": args.kmax, "tail_order": args.tail_order}
    dist = limit_distribution(args.p, args.l, args.kmax)
    columns = ["k", "pk"]
    cols = [dist.k.tolist(), dist.values.tolist()]
    if args.tail_order:
        columns.append("tail")
        cols.append(np.atleast_1d(tail_approx(args.p, args.l, dist.k, args.tail_order)).tolist())
    table = Table(columns, list(zip(*cols)), {"tail_mass": dist.tail_mass})
    _emit(table, args.out, args.format, manifest)


def cmd_compare(args, manifest):
    params = _model_params(args)
    manifest.params = params.to_dict()
    report = compare_report(
        params,
        args.runs,
        t=args.t,
        against=args.against,
        krange=args.krange,
        tol=args.tol,
        z_tol=args.z_tol,
        fit_range=args.fit_range,
        slope_tol=args.slope_tol,
        limit_l=args.limit_l,
        n_jobs=args.jobs,
    )
    doc = {"manifest": manifest.core(), "schema_version": 1, "report": report}
    data = dump_json(doc)
    if args.out is None:
        sys.stdout.write(data.decode("utf-8"))
    else:
        atomic_write(args.out, data)
        manifest.outputs[str(Path(args.out).resolve())] = digest(data)
    if not report["pass"]:
        raise ToleranceFailure(f"comparison failed: {report['checks']}")


def cmd_replay(args):
    manifest = RunManifest.from_json(Path(args.manifest).read_bytes())
    code = main(manifest.command, write_manifest=False)
    if code != EXIT_OK:
        return code
    bad = [p for p, d in manifest.outputs.items() if not Path(p).exists() or file_digest(p) != d]
    for p in bad:
        print(f"digest mismatch: {p}", file=sys.stderr)
    if not bad:
        print(f"replayed {len(manifest.outputs)} output(s): digests match")
    return EXIT_TOLERANCE if bad else EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "expect": cmd_expect, "limit": cmd_limit, "compare": cmd_compare}


def main(argv=None, write_manifest: bool = True) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "replay":
        return cmd_replay(args)

    command = _command_line(argv)
    manifest = RunManifest(command=command, params={}, seed=getattr(args, "seed", None), version=__version__)
    try:
        COMMANDS[args.command](args, manifest)
    except ValidationError as exc:
        flag = _FLAG_FOR_FIELD.get(exc.field, f"--{exc.field.replace('_', '-')}" if exc.field else "input")
        print(f"upa {args.command}: validation error ({flag}): {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DomainError as exc:
        print(f"upa {args.command}: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ToleranceFailure as exc:
        print(f"upa {args.command}: {exc}", file=sys.stderr)
        code = EXIT_TOLERANCE
    else:
        code = EXIT_OK
    out = getattr(args, "out", None)
    if write_manifest and out is not None and manifest.outputs:
        manifest.write(manifest_path(out))
        log.info("manifest written to %s", manifest_path(out))
    return code


def run():  # console-script entry point
    sys.exit(main())


if __name__ == "__main__":
    run()
