"""Command-line client for the analysis service.

Every subcommand builds a request payload from local files, sends it to the
HTTP service (an in-process application instance by default, or a remote
server via --server), and writes the response to files.  Data goes to files or
standard output; progress and timing go to standard error.  Runs that write
files also record a manifest capturing flags, seeds and input digests.

Exit codes: 0 success, 2 usage error, 3 input error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .errors import InvalidInputError, NumericalError, ShapeMarksError
from .fileio import (
    ManifestTimer,
    read_curve_file,
    read_pattern_file,
    write_csv,
    write_pattern_file,
)

log = logging.getLogger("shapemarks.cli")

_SCENARIO_CODES = ("000", "100", "010", "001", "110", "101", "011", "111")


class ServiceClient:
    """Thin HTTP client; talks to an in-process app unless a server is given."""

    def __init__(self, server: str | None = None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=None)
        else:
            from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def post(self, path: str, payload: dict) -> dict:
        started = time.time()
        response = self._client.post(path, json=payload)
        log.info("%s finished in %.2fs", path, time.time() - started)
        if response.status_code == 200:
            return response.json()
        try:
            body = response.json()
        except ValueError:
            body = {"detail": response.text}
        detail = body.get("detail", "request failed")
        if body.get("error_kind") == "numeric":
            raise NumericalError(str(detail))
        raise InvalidInputError(f"service rejected the request: {detail}")


def _write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2))


def _manifest_for(args: argparse.Namespace, command: str) -> ManifestTimer:
    flags = {k: v for k, v in vars(args).items() if k != "func"}
    return ManifestTimer(command=command, flags={k: str(v) for k, v in flags.items()},
                         seed=getattr(args, "seed", None), version=__version__)


def _finish_manifest(manifest: ManifestTimer, anchor: Path) -> None:
    directory = anchor if anchor.is_dir() else anchor.parent
    manifest.write(directory if str(directory) else Path("."))


# ---------------------------------------------------------------------------
# subcommands


def cmd_distance(args) -> int:
    client = ServiceClient(args.server)
    payload = {
        "curve_a": read_curve_file(args.curve_a),
        "curve_b": read_curve_file(args.curve_b),
        "group": args.group,
        "grid_size": args.grid_size,
    }
    result = client.post("/distance", payload)
    print(result["distance"])
    if args.out:
        manifest = _manifest_for(args, "distance")
        manifest.record_input(args.curve_a)
        manifest.record_input(args.curve_b)
        out = Path(args.out)
        _write_json(out, result)
        manifest.record_output(out)
        _finish_manifest(manifest, out)
    return 0


def cmd_geodesic(args) -> int:
    client = ServiceClient(args.server)
    payload = {
        "curve_a": read_curve_file(args.curve_a),
        "curve_b": read_curve_file(args.curve_b),
        "group": args.group,
        "grid_size": args.grid_size,
        "steps": args.steps,
    }
    result = client.post("/geodesic", payload)
    manifest = _manifest_for(args, "geodesic")
    manifest.record_input(args.curve_a)
    manifest.record_input(args.curve_b)
    out = Path(args.out)
    _write_json(out, result)
    manifest.record_output(out)
    _finish_manifest(manifest, out)
    print(result["distance"])
    return 0


def cmd_mean(args) -> int:
    directory = Path(args.curve_dir)
    if not directory.is_dir():
        raise InvalidInputError(f"not a directory: {directory}")
    files = sorted(p for p in directory.iterdir()
                   if p.suffix.lower() in (".json", ".csv"))
    if not files:
        raise InvalidInputError(f"no curve files (*.json, *.csv) in {directory}")
    client = ServiceClient(args.server)
    payload = {
        "curves": [read_curve_file(p) for p in files],
        "group": args.group,
        "grid_size": args.grid_size,
    }
    result = client.post("/mean", payload)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = _manifest_for(args, "mean")
    for p in files:
        manifest.record_input(p)
    _write_json(out_dir / "mean_curve.json", result["mean_curve"])
    _write_json(out_dir / "alignments.json", result["alignments"])
    aligned_dir = out_dir / "aligned"
    aligned_dir.mkdir(exist_ok=True)
    for src, curve in zip(files, result["aligned_curves"]):
        _write_json(aligned_dir / f"{src.stem}.json", curve)
    summary = {"dispersion": result["dispersion"], "group": result["group"],
               "objective_trace": result["objective_trace"],
               "inputs": [str(p) for p in files]}
    _write_json(out_dir / "summary.json", summary)
    for name in ("mean_curve.json", "alignments.json", "summary.json"):
        manifest.record_output(out_dir / name)
    _finish_manifest(manifest, out_dir)
    print(result["dispersion"])
    return 0


def cmd_estimate_k(args) -> int:
    client = ServiceClient(args.server)
    payload = {
        "pattern": read_pattern_file(args.pattern),
        "group": args.group,
        "correction": args.correction,
        "r_steps": args.rsteps,
        "grid_size": args.grid_size,
    }
    if args.rmax is not None:
        payload["r_max"] = args.rmax
    if args.bandwidth is not None:
        payload["bandwidth"] = args.bandwidth
    result = client.post("/estimate-k", payload)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(out, ["r", "K", "L"],
              zip(result["r"], result["k"], result["l"]))
    manifest = _manifest_for(args, "estimate-k")
    manifest.record_input(args.pattern)
    manifest.record_output(out)
    _finish_manifest(manifest, out)
    log.info("c_f=%.6g bandwidth=%.6g", result["c_f"], result["bandwidth"])
    return 0


def cmd_test(args) -> int:
    client = ServiceClient(args.server)
    payload = {
        "pattern": read_pattern_file(args.pattern),
        "group": args.group,
        "s": args.s,
        "alpha": args.alpha,
        "seed": args.seed,
        "correction": args.correction,
        "r_steps": args.rsteps,
        "grid_size": args.grid_size,
        "include_permuted": True,
    }
    if args.rmax is not None:
        payload["r_max"] = args.rmax
    result = client.post("/envelope-test", payload)
    out_json = Path(args.out_json)
    out_csv = Path(args.out_csv)
    _write_json(out_json, result)
    write_csv(out_csv, ["r", "T_obs", "lo", "hi"],
              zip(result["r_grid"], result["t_observed"],
                  result["pointwise_lo"], result["pointwise_hi"]))
    manifest = _manifest_for(args, "test")
    manifest.record_input(args.pattern)
    manifest.record_output(out_json)
    manifest.record_output(out_csv)
    _finish_manifest(manifest, out_json)
    print(json.dumps({"erl_p": result["erl_p"],
                      "deviation_proportion": result["deviation_proportion"]}))
    return 0


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise InvalidInputError(f"config file not found: {p}")
    if p.suffix.lower() == ".toml":
        try:
            import tomllib  # Python >= 3.11
        except ModuleNotFoundError:
            try:
                import tomli as tomllib
            except ModuleNotFoundError as exc:
                raise InvalidInputError(
                    "TOML configs need the tomli package on this Python; use JSON instead"
                ) from exc
        return tomllib.loads(p.read_text())
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{p}: invalid config JSON: {exc.msg}") from exc


def cmd_simulate(args) -> int:
    if args.out_dir is None and args.table is None:
        raise InvalidInputError("simulate needs --out-dir and/or --table")
    scenarios = list(_SCENARIO_CODES) if args.scenario == "all" else [args.scenario]
    for code in scenarios:
        if code not in _SCENARIO_CODES:
            raise InvalidInputError(f"unknown scenario {code!r}; use 000..111 or all")
    config = _load_config_file(args.config)
    client = ServiceClient(args.server)

    manifest = _manifest_for(args, "simulate")
    if args.config:
        manifest.record_input(args.config)
    anchor = None

    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        anchor = out_dir
        for code in scenarios:
            for rep in range(args.replicates):
                cfg = dict(config)
                cfg.update(
                    dep_shape=code[0] == "1",
                    dep_orientation=code[1] == "1",
                    dep_size=code[2] == "1",
                    seed=[args.seed, int(code, 2), rep],
                )
                pattern = client.post("/simulate/pattern", {"config": cfg})
                path = out_dir / f"pattern-{code}-{rep:03d}.json"
                write_pattern_file(path, pattern)
                manifest.record_output(path)
        log.info("wrote %d patterns to %s", len(scenarios) * args.replicates, out_dir)

    if args.table:
        payload = {
            "scenarios": scenarios,
            "replicates": args.replicates,
            "s": args.s,
            "seed": args.seed,
            "alpha": args.alpha,
            "config": config,
            "r_steps": args.rsteps,
        }
        if args.threads is not None:
            payload["threads"] = args.threads
        result = client.post("/simulate/study", payload)
        rows = result["rows"]
        table = Path(args.table)
        table.parent.mkdir(parents=True, exist_ok=True)
        if rows:
            header = list(rows[0].keys())
            write_csv(table, header, ([row.get(k) for k in header] for row in rows))
        manifest.record_output(table)
        anchor = anchor or table
    _finish_manifest(manifest, anchor if anchor is not None else Path("."))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--server", default=None,
                     help="base URL of a running service; default runs in process")
    sub.add_argument("--grid-size", type=int, default=100,
                     help="common discretization for curves (default 100)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapemarks",
        description="Spatial correlation analysis for curve-marked point patterns",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("distance", help="elastic distance between two curve files")
    p.add_argument("curve_a")
    p.add_argument("curve_b")
    p.add_argument("--group", choices=["shape", "size-shape", "orientation-shape"],
                   default="shape")
    p.add_argument("--out", default=None, help="write distance + alignment JSON here")
    _add_common(p)
    p.set_defaults(func=cmd_distance)

    p = subs.add_parser("geodesic", help="geodesic path between two curve files")
    p.add_argument("curve_a")
    p.add_argument("curve_b")
    p.add_argument("--group", choices=["shape", "size-shape", "orientation-shape"],
                   default="shape")
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--out", required=True, help="output JSON path")
    _add_common(p)
    p.set_defaults(func=cmd_geodesic)

    p = subs.add_parser("mean", help="Karcher mean of a directory of curve files")
    p.add_argument("curve_dir")
    p.add_argument("--group", choices=["shape", "size-shape", "orientation-shape"],
                   default="shape")
    p.add_argument("--out-dir", default="mean-output")
    _add_common(p)
    p.set_defaults(func=cmd_mean)

    p = subs.add_parser("estimate-k", help="mark-weighted K function of a pattern file")
    p.add_argument("pattern")
    p.add_argument("--group",
                   choices=["shape", "size-shape", "orientation-shape", "ground"],
                   default="shape")
    p.add_argument("--correction", choices=["translational", "minus", "isotropic"],
                   default="translational")
    p.add_argument("--rmax", type=float, default=None)
    p.add_argument("--rsteps", type=int, default=50)
    p.add_argument("--bandwidth", type=float, default=None,
                   help="override the selected kernel bandwidth")
    p.add_argument("--out", default="k_estimate.csv", help="output CSV (r,K,L)")
    _add_common(p)
    p.set_defaults(func=cmd_estimate_k)

    p = subs.add_parser("test", help="permutation envelope tests of random labeling")
    p.add_argument("pattern")
    p.add_argument("--group", choices=["shape", "size-shape", "orientation-shape"],
                   default="shape")
    p.add_argument("--s", type=int, default=2499, help="permutation count")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rmax", type=float, default=None)
    p.add_argument("--rsteps", type=int, default=50)
    p.add_argument("--correction", choices=["translational", "minus", "isotropic"],
                   default="translational")
    p.add_argument("--out-json", default="envelope.json")
    p.add_argument("--out-csv", default="envelope.csv")
    _add_common(p)
    p.set_defaults(func=cmd_test)

    p = subs.add_parser("simulate", help="generate scenario patterns and study tables")
    p.add_argument("--scenario", default="all",
                   help="three-digit dependence code (shape, orientation, size) or 'all'")
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--s", type=int, default=499, help="permutations per test")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out-dir", default=None, help="write generated pattern files here")
    p.add_argument("--table", default=None, help="write the aggregated study CSV here")
    p.add_argument("--config", default=None, help="TOML/JSON scenario config file")
    p.add_argument("--rsteps", type=int, default=50)
    p.add_argument("--threads", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ShapeMarksError as exc:
        log.error("%s", exc)
        return exc.exit_code
    except OSError as exc:
        log.error("%s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
