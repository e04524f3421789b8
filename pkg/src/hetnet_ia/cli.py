"""Command-line entry point: ``hetnet-ia {ber,rate,dof,compare,replay}``.

Every command writes delimited result tables plus ``manifest.json`` into the
output directory. The manifest embeds the fully resolved scenario and the
command line options, so ``hetnet-ia replay <out>/manifest.json --out <dir>``
repeats a run from the manifest alone. Output contains no timestamps;
identical inputs give byte-identical files.

Exit codes: 0 success, 2 bad arguments or scenario, 3 numerically degenerate
run, 4 output could not be written.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .dof import DofQuery, dof_blind_ia, dof_grid, dof_hybrid, write_dof_table
from .errors import ConfigError, DegenerateChannel, FactorizationMismatch, FullRank, HetNetError, NotPositiveDefinite
from .scenario import Scenario, example_scenario, load_scenario, snr_range
from .sim import SCHEMA_VERSION, SNR_DEFINITION, SimResult, config_hash, run_ber_sweep, run_rate_sweep

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERIC", "EXIT_IO", "OUT_ENV"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4
OUT_ENV = "HETNET_IA_OUT"
_NUMERIC = (DegenerateChannel, FactorizationMismatch, FullRank, NotPositiveDefinite, FloatingPointError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep argparse's usage text, pin the exit code
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hetnet-ia", description="Hybrid TIM-NOMA / Blind IA heterogeneous network simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _Parser(add_help=False)
    common.add_argument("--scenario", help="YAML scenario or a previous manifest.json (default: built-in example)")
    common.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./results)")
    common.add_argument("--seed", type=int)
    common.add_argument("--format", choices=("tsv", "csv"), default="tsv")
    sweep = _Parser(add_help=False)
    sweep.add_argument("--snr-start", type=float)
    sweep.add_argument("--snr-stop", type=float)
    sweep.add_argument("--snr-step", type=float)
    sweep.add_argument("--frames", type=int)
    sweep.add_argument("--workers", type=int)
    for name, help_ in (("ber", "bit-error-rate sweep"), ("rate", "ergodic rate sweep")):
        sp = sub.add_parser(name, parents=[common, sweep], help=help_)
        sp.add_argument("--scheme", choices=("hybrid", "blind_ia", "tdma"), default="hybrid")
        sp.add_argument("--tdma-context", choices=("hybrid", "blind"), default="hybrid")
    sp = sub.add_parser("compare", parents=[common, sweep], help="hybrid, Blind IA and TDMA on one scenario")
    sp.add_argument("--scheme", choices=("all",), default="all", help=argparse.SUPPRESS)
    sp.add_argument("--skip-ber", action="store_true", help="rates only")
    sp = sub.add_parser("dof", parents=[common], help="closed-form DoF tables")
    sp.add_argument("--scheme", choices=("all", "hybrid", "blind_ia"), default="all")
    sp = sub.add_parser("replay", help="repeat the run recorded in a manifest.json")
    sp.add_argument("manifest", help="manifest.json written by a previous run")
    sp.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./results)")
    return p


def _replay_argv(args) -> list:
    """Rebuild the command line of a recorded run; the scenario comes from the manifest."""
    try:
        m = json.loads(Path(args.manifest).read_text())
        cmd = m["command"]
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {args.manifest}: {exc.strerror}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"not a run manifest: {args.manifest} ({exc})") from None
    if cmd not in ("ber", "rate", "compare", "dof"):
        raise ConfigError(f"manifest records unknown command {cmd!r}")
    argv = [cmd, "--scenario", str(args.manifest), "--format", m.get("format", "tsv")]
    if cmd in ("ber", "rate"):
        argv += ["--scheme", m["scheme"], "--tdma-context", m["tdma_context"]]
    elif cmd == "dof":
        argv += ["--scheme", m["scheme"]]
    elif m.get("skip_ber"):
        argv.append("--skip-ber")
    if args.out:
        argv += ["--out", args.out]
    return argv


# -- output helpers -------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    return str(v)


def _table(header, rows, delimiter) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _long_rows(res: SimResult) -> list:
    rows = []
    for i, snr in enumerate(res.snr_db):
        for u in res.users:
            for metric, src in (("ber", res.ber), ("bit_errors", res.bit_errors), ("bits", res.bits), ("rate", res.rate)):
                if u in src:
                    rows.append((res.scheme, snr, u, metric, src[u][i]))
        if res.total_ber:
            rows.append((res.scheme, snr, "all", "total_ber", res.total_ber[i]))
        if res.sum_rate:
            rows.append((res.scheme, snr, "all", "sum_rate", res.sum_rate[i]))
    return rows


_LONG_HEADER = ("scheme", "snr_db", "user", "metric", "value")


def _summary(res: SimResult, metric: str):
    src = res.ber if metric == "ber" else res.rate
    extra = "total_ber" if metric == "ber" else "sum_rate"
    agg = res.total_ber if metric == "ber" else res.sum_rate
    header = ["snr_db"] + [f"{metric}_{u}" for u in res.users] + [extra]
    rows = [[snr] + [src[u][i] for u in res.users] + [agg[i]] for i, snr in enumerate(res.snr_db)]
    return header, rows


class _Writer:
    def __init__(self, out: Path, fmt: str):
        self.out = out
        self.delim = "\t" if fmt == "tsv" else ","
        self.ext = fmt
        self.files = {}

    def write(self, stem: str, header, rows) -> None:
        self.put(f"{stem}.{self.ext}", _table(header, rows, self.delim))

    def put(self, name: str, text: str) -> None:
        (self.out / name).write_text(text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()


def _versions() -> dict:
    import yaml

    v = {
        "hetnet_ia": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "pyyaml": yaml.__version__,
        "kernel_backend": kernels.backend(),
    }
    if kernels.HAVE_NUMBA:
        import numba

        v["numba"] = numba.__version__
    return v


# -- commands -----------------------------------------------------------------------

def _scenario(args) -> Scenario:
    sc = load_scenario(args.scenario) if args.scenario else example_scenario()
    kw = {"seed": args.seed}
    if hasattr(args, "frames"):
        kw.update(frames=args.frames, workers=args.workers)
        if any(v is not None for v in (args.snr_start, args.snr_stop, args.snr_step)):
            pts = sc.snr_points
            start = pts[0] if args.snr_start is None else args.snr_start
            stop = pts[-1] if args.snr_stop is None else args.snr_stop
            default_step = pts[1] - pts[0] if len(pts) > 1 else 5.0
            step = default_step if args.snr_step is None else args.snr_step
            kw["snr_points"] = snr_range(start, stop, step)
    return sc.with_overrides(**kw).validate()


def _run_sweep(args, sc: Scenario, w: _Writer) -> list:
    cfg = sc.sim_config(args.scheme, args.tdma_context)
    res = run_ber_sweep(cfg) if args.command == "ber" else run_rate_sweep(cfg)
    stem = f"{args.command}_{args.scheme}" + (f"_{args.tdma_context}" if args.scheme == "tdma" else "")
    w.write(stem, _LONG_HEADER, _long_rows(res))
    w.write(f"{stem}_summary", *_summary(res, "ber" if args.command == "ber" else "rate"))
    return [config_hash(cfg)]


def _run_compare(args, sc: Scenario, w: _Writer) -> list:
    runs = [("hybrid", "hybrid"), ("blind_ia", "blind"), ("tdma", "hybrid"), ("tdma", "blind")]
    names = ["hybrid", "blind_ia", "tdma_hybrid", "tdma_blind"]
    cfgs = [sc.sim_config(s, ctx) for s, ctx in runs]
    rates = [run_rate_sweep(c) for c in cfgs]
    rows = []
    for r, n in zip(rates, names):
        rows += [(n,) + row[1:] for row in _long_rows(r)]
    w.write("compare_rate", _LONG_HEADER, rows)
    header = ["snr_db"] + [f"sum_rate_{n}" for n in names]
    w.write("compare_sum_rate", header, [[snr] + [r.sum_rate[i] for r in rates] for i, snr in enumerate(sc.snr_points)])
    if not args.skip_ber:
        bers = [run_ber_sweep(c) for c in cfgs[:3]]
        rows = []
        for r, n in zip(bers, names):
            rows += [(n,) + row[1:] for row in _long_rows(r)]
        w.write("compare_ber", _LONG_HEADER, rows)
        header = ["snr_db"] + [f"total_ber_{n}" for n in names[:3]]
        w.write("compare_total_ber", header, [[snr] + [r.total_ber[i] for r in bers] for i, snr in enumerate(sc.snr_points)])
    return [config_hash(c) for c in cfgs]


def _run_dof(args, sc: Scenario, w: _Writer) -> list:
    t = sc.topology
    rows = []
    if args.scheme in ("all", "hybrid"):
        try:
            rows.append(dof_hybrid(DofQuery(K=t.K, L=t.L, N=t.N, M_r=t.M_r)))
        except HetNetError:
            pass
    if args.scheme in ("all", "blind_ia"):
        try:
            rows.append(dof_blind_ia(DofQuery(K=t.K, L=t.L, N=t.N, M_r=t.M_r)))
        except HetNetError:
            pass
    header = ["scheme", "K", "L", "N", "M_r", "T", "dof_macrocell", "dof_femtocells", "dof_total", "dof_total_over_T"]
    body = [
        [r.scheme, t.K, t.L, t.N, t.M_r, r.T, r.dof_macrocell, r.dof_femtocells, r.dof_total, f"{r.dof_total * r.T}/{r.T}"]
        for r in rows
    ]
    w.write("dof_scenario", header, body)
    grid = dof_grid(K=range(2, 7), L=range(1, 4), N=range(1, 6), x=range(0, 6))
    buf = io.StringIO()
    write_dof_table(grid, buf, delimiter=w.delim)
    w.put(f"dof_grid.{w.ext}", buf.getvalue())
    return []


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or "results")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "replay":
        try:
            args = parser.parse_args(_replay_argv(args))
        except ConfigError as exc:
            print(f"hetnet-ia: config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        sc = _scenario(args)
    except HetNetError as exc:
        print(f"hetnet-ia: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _out_dir(args)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"hetnet-ia: cannot create {out}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    w = _Writer(out, args.format)
    try:
        with np.errstate(invalid="raise", divide="raise"):
            if args.command in ("ber", "rate"):
                hashes = _run_sweep(args, sc, w)
            elif args.command == "compare":
                hashes = _run_compare(args, sc, w)
            else:
                hashes = _run_dof(args, sc, w)
    except ConfigError as exc:
        print(f"hetnet-ia: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC as exc:
        print(f"hetnet-ia: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except HetNetError as exc:  # unsupported topology for the requested scheme, bad c/d
        print(f"hetnet-ia: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"hetnet-ia: cannot write results: {exc}", file=sys.stderr)
        return EXIT_IO
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "scheme": getattr(args, "scheme", None),
        "tdma_context": getattr(args, "tdma_context", None),
        "skip_ber": bool(getattr(args, "skip_ber", False)),
        "format": args.format,
        "scenario": sc.to_mapping(),
        "seed": int(sc.seed),
        "config_hashes": hashes,
        "snr_definition": SNR_DEFINITION,
        "versions": _versions(),
        "outputs": dict(sorted(w.files.items())),
    }
    try:
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        print(f"hetnet-ia: cannot write manifest: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
