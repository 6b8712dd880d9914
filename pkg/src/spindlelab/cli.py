"""Command line front end.

Exit codes: 0 success, 2 input or config parse error, 3 geometry error,
4 domain error (for example r <= r_M), 5 internal invariant violation.
"""

from __future__ import annotations

import json
import math
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import click

from . import __version__
from .bodies import body_from_spec, curvature_summary, expected_area_constant
from .caps import CapsSettings, caps_report
from .config import config_hash, load_config
from .errors import ConfigError, DomainError, SpindleLabError
from .geom_core import read_points, spindle_hull
from .statistics import ExperimentConfig, default_threads, run_experiment


def atomic_write(path: Path, text: str):
    """Write ``text`` to a temporary sibling and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifest(out: Path, raw_config: dict, seed: int, outputs: list[Path], started: str, threads: int):
    manifest = {
        "config_hash": config_hash(raw_config),
        "tool_version": __version__,
        "started": started,
        "finished": _now(),
        "master_seed": seed,
        "threads": threads,
        "outputs": [p.name for p in outputs],
    }
    atomic_write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _echo(quiet: bool, msg: str):
    if not quiet:
        click.echo(msg, err=True)


def _threads(value: int | None) -> int:
    if value is not None:
        if value < 1:
            raise ConfigError("--threads must be at least 1")
        return value
    return default_threads()


def _num(v) -> str:
    return repr(float(v))


def _svg(poly) -> str:
    verts = poly.vertex_array()
    r = poly.radius
    if verts.shape[0] == 0:
        return '<svg xmlns="http://www.w3.org/2000/svg"/>\n'
    lo = verts.min(axis=0) - 0.1 * max(r, 1e-9)
    hi = verts.max(axis=0) + 0.1 * max(r, 1e-9)
    if verts.shape[0] >= 2:
        # every boundary arc has sagitta below r, so pad by it
        lo = lo - r
        hi = hi + r
    w, h = hi - lo
    parts = [f"M {_num(verts[0, 0])} {_num(verts[0, 1])}"]
    k = verts.shape[0]
    for i in range(k if k >= 2 else 0):
        x, y = verts[(i + 1) % k]
        large = 1 if k == 2 and poly.arcs and (poly.arcs[i].sweep > math.pi) else 0
        parts.append(f"A {_num(r)} {_num(r)} 0 {large} 1 {_num(x)} {_num(y)}")
    path = " ".join(parts) + (" Z" if k >= 2 else "")
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{_num(lo[0])} {_num(-hi[1])} {_num(w)} {_num(h)}">\n'
        f'  <g transform="scale(1,-1)"><path d="{path}" fill="none" stroke="black" '
        f'stroke-width="{_num(0.005 * max(w, h))}"/></g>\n</svg>\n'
    )


@click.group()
@click.version_option(__version__, prog_name="spindlelab")
def cli():
    """Random r-spindle hulls: geometry, constants and Monte Carlo checks."""


@cli.command("hull")
@click.argument("input_path", type=click.Path(dir_okay=False, allow_dash=True))
@click.option("--r", "radius", type=float, required=True, help="Spindle radius r.")
@click.option("--out", type=click.Path(dir_okay=False), help="Write the hull record here instead of stdout.")
@click.option("--svg", "svg_path", type=click.Path(dir_okay=False), help="Also write an SVG outline.")
@click.option("--quiet", is_flag=True)
def cmd_hull(input_path, radius, out, svg_path, quiet):
    """Spindle hull of the points in INPUT_PATH ("x y" per line)."""
    try:
        with click.open_file(input_path) as fh:
            points = read_points(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {input_path}: {exc.strerror}") from None
    except ValueError as exc:
        raise ConfigError(f"{input_path}: {exc}") from None
    if not radius > 0:
        raise DomainError("r must be positive")
    poly = spindle_hull(points, radius)
    record = poly.to_record()
    record["area"] = poly.area()
    record["vertex_count"] = poly.vertex_count
    text = json.dumps(record, indent=2) + "\n"
    if out:
        atomic_write(Path(out), text)
        _echo(quiet, f"wrote {out}")
    else:
        click.echo(text, nl=False)
    if svg_path:
        atomic_write(Path(svg_path), _svg(poly))
        _echo(quiet, f"wrote {svg_path}")


@cli.command("constant")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="TOML file with [body] and r.")
@click.option("--body", "kind", type=click.Choice(["disc", "ellipse"]), default="disc", show_default=True)
@click.option("--radius", type=float, default=1.0, show_default=True, help="Disc radius.")
@click.option("--a", type=float, help="Ellipse semi-major axis.")
@click.option("--b", type=float, help="Ellipse semi-minor axis.")
@click.option("--r", "r", type=float, help="Spindle radius r (must exceed r_M).")
def cmd_constant(config_path, kind, radius, a, b, r):
    """Print the limit of E[A(K minus K_n^r)] n^(2/3)."""
    if config_path:
        data = load_config(config_path)
        spec = data.get("body")
        if not isinstance(spec, dict):
            raise ConfigError("config needs a [body] table")
        if r is None:
            r = data.get("r")
    elif kind == "disc":
        spec = {"kind": "disc", "radius": radius}
    else:
        if a is None or b is None:
            raise ConfigError("ellipse needs --a and --b")
        spec = {"kind": "ellipse", "a": a, "b": b}
    if r is None:
        raise ConfigError("missing spindle radius --r")
    body = body_from_spec(spec)
    r_M = curvature_summary(body).r_M
    if not float(r) > r_M:
        raise DomainError(f"r={float(r):.12g} must exceed r_M={r_M:.12g}")
    click.echo(f"{expected_area_constant(body, float(r)):.12g}")


def _load_experiment(config_path, seed):
    raw = load_config(config_path)
    if seed is not None:
        raw = {**raw, "master_seed": seed}
    cfg = ExperimentConfig.from_mapping(raw)
    return raw, cfg


_common = [
    click.option("--config", "config_path", type=click.Path(dir_okay=False, exists=False), required=True),
    click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True, help="Output directory."),
    click.option("--seed", type=int, help="Override the master seed."),
    click.option("--threads", type=int, help="Worker threads (default: SPINDLELAB_THREADS or CPU count)."),
    click.option("--quiet", is_flag=True),
]


def common_options(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@cli.command("experiment")
@common_options
def cmd_experiment(config_path, out_dir, seed, threads, quiet):
    """Run the estimators of a config; write results.csv and manifest.json."""
    started = _now()
    raw, cfg = _load_experiment(config_path, seed)
    nthreads = _threads(threads)
    _echo(quiet, f"experiment {cfg.digest}: n={list(cfg.n_values)} m={cfg.replicates} threads={nthreads}")
    res = run_experiment(cfg, threads=nthreads)
    out = Path(out_dir)
    files = [out / "results.csv", out / "summary.json"]
    atomic_write(files[0], res.to_csv())
    summary = {"config_hash": cfg.digest, "master_seed": cfg.master_seed}
    if res.variance_fit is not None:
        f = res.variance_fit
        summary["variance_fit"] = {"exponent": f.exponent, "intercept": f.intercept, "r_squared": f.r_squared}
    if res.diffops:
        summary["diffops"] = [
            {"n": d.n, "m": d.m, "b3": d.b3, "b3_se": d.b3_se, "b4": d.b4, "b4_se": d.b4_se,
             "n_b3": d.n_b3, "sqrt_n_b4": d.sqrt_n_b4, "p_interact": d.p_interact,
             "p_interact_se": d.p_interact_se, "b1": "not estimated", "b2": "not estimated"}
            for d in res.diffops
        ]
    atomic_write(files[1], json.dumps(summary, indent=2, sort_keys=True) + "\n")
    write_manifest(out, cfg.as_mapping(), cfg.master_seed, files, started, nthreads)
    _echo(quiet, f"wrote {files[0]}")


@cli.command("clt")
@common_options
def cmd_clt(config_path, out_dir, seed, threads, quiet):
    """Normality statistics per n; write clt.csv and standardized_samples.csv."""
    started = _now()
    raw, cfg = _load_experiment(config_path, seed)
    cfg = ExperimentConfig.from_mapping({**cfg.as_mapping(), "estimators": ["clt"]})
    nthreads = _threads(threads)
    _echo(quiet, f"clt {cfg.digest}: n={list(cfg.n_values)} m={cfg.replicates} threads={nthreads}")
    res = run_experiment(cfg, threads=nthreads, keep_samples=True)
    out = Path(out_dir)
    files = [out / "clt.csv", out / "standardized_samples.csv"]
    atomic_write(files[0], res.to_csv())
    atomic_write(files[1], res.samples_csv())
    write_manifest(out, cfg.as_mapping(), cfg.master_seed, files, started, nthreads)
    _echo(quiet, f"wrote {files[0]}")


@cli.command("caps")
@common_options
def cmd_caps(config_path, out_dir, seed, threads, quiet):
    """Cap-limit, sandwich, wet-part and visibility checks; write caps_report.json."""
    started = _now()
    raw = load_config(config_path)
    if seed is not None:
        raw = {**raw, "master_seed": seed}
    try:
        body = body_from_spec(dict(raw["body"]))
        r_M = curvature_summary(body).r_M
        r = float(raw["r"]) if "r" in raw else float(raw.get("r_factor", 1.5)) * r_M
        opts = dict(raw.get("caps", {}))
        for key in ("t_values", "visibility_t"):
            if key in opts:
                opts[key] = tuple(float(v) for v in opts[key])
        settings = CapsSettings(**opts)
        master_seed = int(raw.get("master_seed", 0))
    except KeyError as exc:
        raise ConfigError(f"config is missing {exc.args[0]!r}") from None
    except TypeError as exc:
        raise ConfigError(f"bad caps options: {exc}") from None
    nthreads = _threads(threads)
    _echo(quiet, f"caps: body={raw['body']} r={r:.6g} r_M={r_M:.6g}")
    report = caps_report(body, r, settings, master_seed)
    report.update(config_hash=config_hash(raw), master_seed=master_seed)
    out = Path(out_dir)
    files = [out / "caps_report.json"]
    atomic_write(files[0], json.dumps(report, indent=2, sort_keys=True) + "\n")
    write_manifest(out, raw, master_seed, files, started, nthreads)
    _echo(quiet, f"wrote {files[0]}")


def main(argv=None):
    """Entry point mapping library errors to exit codes."""
    try:
        cli.main(args=argv, prog_name="spindlelab", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(2)
    except SpindleLabError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)
    except Exception as exc:  # noqa: BLE001 - anything else is an internal failure
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(5)
    sys.exit(0)


if __name__ == "__main__":
    main()
