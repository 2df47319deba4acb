"""Command-line driver: ``python -m capillary <command> [options]``.

Commands
--------
verify          run every oracle check and write ``verification_report.json``
volume-product  volume products of catalog bodies
example1        stadium family with obtuse contact angle
example2        ellipse family with obtuse contact angle
linearized      linearized-inequality margins and second-variation cross-checks

Exit codes: 0 pass, 1 check failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from . import bodies as bd
from . import cap_geometry as cg
from . import examples as ex
from . import functionals as fn
from . import linearized as lz
from . import svg
from . import verification as vf
from .errors import NonPositiveSupportError, RegimeError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

ALIASES = {"pi/6": math.pi / 6, "pi/4": math.pi / 4, "pi/3": math.pi / 3, "pi/2": math.pi / 2}
DEFAULT_THETAS = {
    "verify": "pi/6,pi/4,pi/3,0.49pi",
    "volume-product": "pi/3",
    "example1": "2.0943951023931957",
    "example2": "2.0943951023931957",
    "linearized": "pi/6,pi/3,0.45pi",
}
DEFAULT_DIMS = {"verify": "2,3", "volume-product": "2"}
MC_COMMANDS = ("verify", "linearized")
FORMATS = ("json", "csv", "svg")
LINEARIZED_COLUMNS = ("theta", "seed", "margin")


class ConfigError(ValueError):
    pass


def parse_theta(text):
    """Radians, an alias ``pi/6 ... pi/2``, or ``<k>pi`` for a multiple of pi."""
    t = text.strip()
    if t in ALIASES:
        return ALIASES[t]
    if t.endswith("pi"):
        try:
            return float(t[:-2]) * math.pi
        except ValueError:
            pass
    try:
        return float(t)
    except ValueError:
        raise ConfigError(f"cannot parse angle {text!r}; use radians or one of {sorted(ALIASES)}") from None


def _floats(text, what):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse {what} list {text!r}") from None


@dataclass
class RunConfig:
    command: str
    thetas: list
    dims: list
    bodies: list = field(default_factory=list)
    resolution: int | None = None
    samples: int | None = None
    seed: int | None = None
    out: str = "."
    formats: list = field(default_factory=lambda: ["json", "csv"])
    b: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    modes: int = 8

    def as_dict(self):
        return asdict(self)


def build_parser():
    p = argparse.ArgumentParser(prog="capillary", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--theta", help="comma-separated angles in radians or aliases pi/6, pi/4, pi/3, pi/2")
        sp.add_argument("--dim", help="dimension(s), 2 or 3")
        sp.add_argument("--body", action="append", default=[], help="body kind name or inline JSON (repeatable)")
        sp.add_argument("--bodies-file", help="JSON file holding a list of body specs")
        sp.add_argument("--resolution", type=int, help="quadrature resolution (>= 8)")
        sp.add_argument("--samples", type=int, help="Monte Carlo samples")
        sp.add_argument("--seed", type=int, help="seed for every random draw")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--format", default="json,csv", help="comma-separated subset of json,csv,svg")
        return sp

    common(sub.add_parser("verify", help="run all oracle checks"))
    common(sub.add_parser("volume-product", help="volume products of bodies"))
    e1 = common(sub.add_parser("example1", help="stadium family"))
    e1.add_argument("--lambdas", default="1,2,4,8,16")
    e2 = common(sub.add_parser("example2", help="ellipse family"))
    e2.add_argument("--b", default="2,4,8,16,32")
    li = common(sub.add_parser("linearized", help="linearized inequality and second variation"))
    li.add_argument("--modes", type=int, default=8)
    return p


def _load_bodies(args):
    specs = list(args.body)
    if args.bodies_file:
        try:
            with open(args.bodies_file) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read bodies file: {exc}") from None
        if not isinstance(data, list):
            raise ConfigError("bodies file must hold a JSON list")
        specs += [json.dumps(d, sort_keys=True) if isinstance(d, dict) else str(d) for d in data]
    return specs


def config_from_args(args) -> RunConfig:
    cmd = args.command
    thetas = [parse_theta(t) for t in (args.theta or DEFAULT_THETAS[cmd]).split(",") if t.strip()]
    dims = [int(d) for d in _floats(args.dim or DEFAULT_DIMS.get(cmd, "2"), "dim")]
    if any(d not in (2, 3) for d in dims):
        raise ConfigError("dimensions must be 2 or 3")
    if args.resolution is not None and args.resolution < 8:
        raise ConfigError("resolution must be >= 8")
    if args.samples is not None and args.samples < 10_000:
        raise ConfigError("samples must be >= 10000")
    if cmd in MC_COMMANDS and args.seed is None:
        raise ConfigError(f"{cmd} draws random samples and needs --seed")
    formats = [f.strip() for f in args.format.split(",") if f.strip()]
    if any(f not in FORMATS for f in formats):
        raise ConfigError(f"formats must be drawn from {FORMATS}")
    for t in thetas:
        if not 0 < t < math.pi:
            raise ConfigError(f"theta={t} outside (0, pi)")
    acute_only = cmd in ("verify", "volume-product", "linearized")
    if acute_only and any(cg.as_angle(t).regime is cg.Regime.OBTUSE for t in thetas):
        raise ConfigError(
            f"{cmd} runs checks that hold only for acute or right contact angles "
            "(theta <= pi/2); obtuse angles belong to example1/example2"
        )
    if cmd in ("example1", "example2") and any(cg.as_angle(t).regime is not cg.Regime.OBTUSE for t in thetas):
        raise ConfigError(f"{cmd} needs an obtuse contact angle (pi/2 < theta < pi)")
    bodies = _load_bodies(args)
    for spec in bodies:
        try:
            bd.body_from_json(spec, dims[0], thetas[0])
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"bad body spec {spec!r}: {exc}") from None
    cfg = RunConfig(
        cmd, thetas, dims, bodies, args.resolution, args.samples, args.seed,
        args.out, formats,
    )
    if cmd == "example1":
        cfg.lambdas = _floats(args.lambdas, "lambda")
    if cmd == "example2":
        cfg.b = _floats(args.b, "b")
    if cmd == "linearized":
        if args.modes < 1:
            raise ConfigError("modes must be >= 1")
        cfg.modes = args.modes
    return cfg


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_atomic(path, text):
    folder = os.path.dirname(path) or "."
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_report(cfg, name, checks, tables):
    report = {
        "config": cfg.as_dict(),
        "checks": [c.as_dict() for c in checks],
        "tables": tables,
        "version": __version__,
    }
    text = json.dumps(report, sort_keys=True, indent=1, default=_json_default) + "\n"
    path = os.path.join(cfg.out, name)
    _write_atomic(path, text)
    return path


def _csv(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _bodies_for(cfg, n, theta):
    out = []
    for spec in cfg.bodies:
        body = bd.body_from_json(spec, n, theta)
        if body.dim == n:
            out.append(body)
    return out


def cmd_verify(cfg: RunConfig) -> int:
    checks = []
    for n in cfg.dims:
        for theta in cfg.thetas:
            angle = cg.as_angle(theta)
            checks.append(vf.check_lemma1(n, angle, seed=cfg.seed))
            checks.append(vf.check_lemma2(n, angle, seed=cfg.seed))
            checks.append(vf.check_lemma3(n, angle, seed=cfg.seed))
            checks.append(vf.check_two_concavity(n, angle, seed=cfg.seed))
            for body in (bd.double_cap(n, theta), bd.ball(n), bd.box([1.0] * n)):
                checks.append(vf.check_key_inequality(body, angle, cfg.samples, cfg.seed))
            catalog = fn.catalog_bodies(n) + _bodies_for(cfg, n, theta)
            res = cfg.resolution if cfg.resolution else None
            if res and n == 3:
                res = (res, 2 * res)
            checks.append(vf.check_theorem1(n, angle, catalog, res))
            if n == 2:
                seeds = range(cfg.seed, cfg.seed + 20)
                checks.append(lz.check_theorem2(angle, seeds, cfg.resolution or 64))
                checks.append(lz.check_second_variation(angle, range(cfg.seed, cfg.seed + 5)))
    for c in checks:
        print(c.line())
    if "json" in cfg.formats:
        write_report(cfg, "verification_report.json", checks, {})
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_volume_product(cfg: RunConfig) -> int:
    reports = []
    for n in cfg.dims:
        res = cfg.resolution or fn.default_resolution(n)
        if n == 3 and np.isscalar(res):
            res = (res, 2 * res)
        for theta in cfg.thetas:
            bodies = _bodies_for(cfg, n, theta) if cfg.bodies else fn.catalog_bodies(n)
            try:
                reports += fn.sweep(bodies, [theta], n, res)
            except NonPositiveSupportError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_FAIL
    for r in reports:
        print(f"{r.name:28s} n={r.n} theta={r.theta:.6f} product={r.product:.10g} "
              f"bound={r.bound:.10g} margin={r.margin:.3e}")
    eps = {2: 1e-6, 3: 1e-4}
    checks = []
    for r in reports:
        checks.append(vf.CheckResult(
            f"volume_product[{r.name}] n={r.n} theta={r.theta:.6g}", 1, r.margin, eps[r.n],
            bool(r.margin >= -eps[r.n]), None, "cap quadrature", r.as_dict(),
        ))
    tables = {"volume_product": {"columns": list(fn.REPORT_COLUMNS), "rows": [r.as_dict() for r in reports]}}
    if "json" in cfg.formats:
        write_report(cfg, "volume_product_report.json", checks, tables)
    if "csv" in cfg.formats:
        _write_atomic(os.path.join(cfg.out, "volume_product.csv"), fn.reports_to_csv(reports))
    if "svg" in cfg.formats:
        labels = [f"{r.name} {r.theta:.3f}" for r in reports]
        _write_atomic(os.path.join(cfg.out, "volume_product_margins.svg"),
                      svg.bars(labels, [r.margin for r in reports], "bound - product"))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def _family_outputs(cfg, stem, tables):
    for key, table in tables.items():
        if "csv" in cfg.formats:
            _write_atomic(os.path.join(cfg.out, f"{key}.csv"), _csv(ex.FAMILY_COLUMNS, table.rows))
        if "svg" in cfg.formats:
            _write_atomic(os.path.join(cfg.out, f"{key}.svg"),
                          svg.loglog(table.params, table.products, f"volume product, theta={table.theta:.4f}",
                                     table.param_name, "product"))


def _family_command(cfg, stem, build, min_slope=None, min_ratio=None):
    tables, checks = {}, []
    for i, theta in enumerate(cfg.thetas):
        table = build(theta)
        key = stem if len(cfg.thetas) == 1 else f"{stem}_{i}"
        tables[key] = table
        p = table.products
        slope = table.slope if table.slope is not None else ex.growth_exponent(table.params, p)
        ratio = float(p[-1] / p[0])
        for row in table.rows:
            print(f"{table.param_name}={row[0]:<8g} vol_hat={row[1]:.10g} vol_polar={row[2]:.10g} product={row[3]:.10g}")
        verdict = "strictly increasing" if table.increasing else "NOT increasing"
        print(f"theta={theta:.6f}: product {verdict}; fitted growth exponent {slope:.4f}; last/first {ratio:.4g}")
        margin = min(np.diff(p).min() / p.max() if len(p) > 1 else 0.0,
                     slope - min_slope if min_slope is not None else math.inf,
                     ratio - min_ratio if min_ratio is not None else math.inf)
        checks.append(vf.CheckResult(
            f"{stem} theta={theta:.6g}", len(p), float(margin), 0.0,
            bool(table.increasing and margin > 0), None, "closed-form area and arc quadrature",
            {"slope": slope, "last_over_first": ratio, "increasing": table.increasing},
        ))
    if "json" in cfg.formats:
        write_report(cfg, f"{stem}_report.json", checks, {k: t.as_dict() for k, t in tables.items()})
    _family_outputs(cfg, stem, tables)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def cmd_example1(cfg: RunConfig) -> int:
    def build(theta):
        rule = ex.example1_rule(theta, cfg.resolution or 32, max(cfg.lambdas))
        return ex.example1_product(cfg.lambdas, theta, rule)

    return _family_command(cfg, "example1", build, min_ratio=10.0 if len(cfg.lambdas) > 1 else None)


def cmd_example2(cfg: RunConfig) -> int:
    def build(theta):
        return ex.example2_product(cfg.b, theta, cfg.resolution or 32)

    return _family_command(cfg, "example2", build, min_slope=0.8)


def cmd_linearized(cfg: RunConfig) -> int:
    checks, rows, variations = [], [], []
    res = cfg.resolution or 64
    for theta in cfg.thetas:
        angle = cg.as_angle(theta)
        seeds = range(cfg.seed, cfg.seed + 20)
        c = lz.check_theorem2(angle, seeds, res, cfg.modes)
        checks.append(c)
        rows += [(angle.theta, s, m) for s, m in zip(seeds, c.details["margins"])]
        sv = lz.check_second_variation(angle, range(cfg.seed, cfg.seed + 5), resolution=res)
        checks.append(sv)
        variations += [{"theta": angle.theta, **r} for r in sv.details["rows"]]
        print(f"theta={angle.theta:.6f}: min margin {min(c.details['margins']):.6e} over {len(seeds)} seeds; "
              f"constants {max(c.details['constant_margins']):.1e}")
    for c in checks:
        print(c.line())
    tables = {"theorem2": {"columns": list(LINEARIZED_COLUMNS), "rows": [list(r) for r in rows]},
              "second_variation": variations}
    if "json" in cfg.formats:
        write_report(cfg, "linearized_report.json", checks, tables)
    if "csv" in cfg.formats:
        _write_atomic(os.path.join(cfg.out, "linearized.csv"), _csv(LINEARIZED_COLUMNS, rows))
    if "svg" in cfg.formats:
        _write_atomic(os.path.join(cfg.out, "linearized_margins.svg"),
                      svg.bars([f"{t:.3f}/{s}" for t, s, _ in rows], [m for *_, m in rows], "linearized-inequality margins"))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


COMMANDS = {
    "verify": cmd_verify,
    "volume-product": cmd_volume_product,
    "example1": cmd_example1,
    "example2": cmd_example2,
    "linearized": cmd_linearized,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = config_from_args(args)
    except (ConfigError, RegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[cfg.command](cfg)
    except NonPositiveSupportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
