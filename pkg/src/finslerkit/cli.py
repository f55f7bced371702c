"""Command-line interface: ``finslerkit <command> [options]``.

Exit codes: 0 success, 1 verification failure or numerical error,
2 usage error, 3 I/O error.
"""

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from finslerkit import __version__
from finslerkit.catalog import FAMILIES, MetricSpec, build_metric, default_params
from finslerkit.errors import FinslerError
from finslerkit.geometry import ChartPoint, geodesic_spray, geometry_bundle, seed
from finslerkit.jets import fd_oracle

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
TENSORS = ("F", "g", "G", "N", "Phi", "rho", "R", "W0", "W1", "kappa")
# jet degree on F needed by each tensor
TENSOR_ORDER = {"F": 0, "g": 2, "G": 2, "N": 3, "Phi": 4, "rho": 4, "kappa": 4, "R": 5, "W0": 5, "W1": 5}
COMMANDS = ("catalog", "eval", "verify", "geodesic", "oracle", "run-all")


class UsageError(Exception):
    pass


@dataclass
class CliConfig:
    command: str
    metric: MetricSpec | None = None
    point: ChartPoint | None = None
    tensors: tuple = ()
    samples: int = 100
    seed: int = 0
    tol: dict = field(default_factory=dict)
    order: int | None = None
    format: str = "json"
    out: str | None = None
    suite: str | None = None
    expected_kappa: float | None = None
    p_kind: str | None = None
    dt: float = 1e-3
    steps: int = 500
    index: tuple | None = None
    jobs: int = 1
    metrics: list | None = None


# ---------------------------------------------------------------- parsing


def _number_or_list(text):
    parts = [t for t in text.split(",") if t.strip()]
    try:
        vals = [float(t) for t in parts]
    except ValueError as exc:
        raise UsageError(f"not a number list: {text!r}") from exc
    if not vals:
        raise UsageError("empty parameter value")
    return vals[0] if len(vals) == 1 and "," not in text else vals


def parse_params(items):
    params = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"--param expects name=value, got {item!r}")
        name, value = item.split("=", 1)
        params[name.strip()] = _number_or_list(value)
    return params


def parse_point(text):
    """Parse ``"x=0.1,0.2;y=0.3,0.7"`` into a ChartPoint."""
    fields = {}
    for part in text.split(";"):
        if not part.strip():
            continue
        if "=" not in part:
            raise UsageError(f"bad --point segment {part!r}; expected name=v1,v2,...")
        name, value = part.split("=", 1)
        name = name.strip()
        if name not in ("x", "y"):
            raise UsageError(f"unknown --point field {name!r}; use x and y")
        vals = _number_or_list(value)
        fields[name] = np.atleast_1d(np.asarray(vals, dtype=float))
    if set(fields) != {"x", "y"}:
        raise UsageError("--point needs both x=... and y=...")
    try:
        return ChartPoint(fields["x"], fields["y"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _parser():
    parser = argparse.ArgumentParser(prog="finslerkit", description="Numerical Finsler geometry on Taylor jets.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, metric=True):
        p.add_argument("--format", choices=("json", "csv"), default=None)
        p.add_argument("--out", default=None, help="output path (default: standard output)")
        p.add_argument("--config", default=None, help="JSON file with option defaults")
        if metric:
            # required, but may come from --config; checked in parse_args
            p.add_argument("--metric", choices=FAMILIES, default=None)
            p.add_argument("--n", type=int, default=None)
            p.add_argument("--param", action="append", default=None, metavar="NAME=VALUE")

    p = sub.add_parser("catalog", help="list metric families and default parameters")
    common(p, metric=False)

    p = sub.add_parser("eval", help="evaluate tensors at one chart point")
    common(p)
    p.add_argument("--point", required=True)
    p.add_argument("--tensors", default=None, help="comma list from " + ",".join(TENSORS))
    p.add_argument("--order", type=int, default=None, help="jet order (checked against the tensors)")

    p = sub.add_parser("verify", help="run one verification suite")
    common(p)
    p.add_argument("--suite", choices=("cfc", "projflat", "beltrami", "w1_transform"), required=True)
    p.add_argument("--expected-kappa", type=float, default=None)
    p.add_argument("--P-kind", dest="p_kind", default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", action="append", default=None, metavar="CHECK=VALUE")

    p = sub.add_parser("geodesic", help="integrate one geodesic")
    common(p)
    p.add_argument("--point", required=True)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)

    p = sub.add_parser("oracle", help="compare jet partials with finite differences")
    common(p)
    p.add_argument("--point", required=True)
    p.add_argument("--index", default=None, help="multi-index as comma list of 2n integers")

    p = sub.add_parser("run-all", help="run the full verification matrix")
    common(p, metric=False)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--tol", action="append", default=None, metavar="CHECK=VALUE")
    return parser


def _load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    return data


def parse_args(argv):
    """Parse a command line into a :class:`CliConfig`.

    Precedence: command-line flags, then the ``--config`` file, then
    ``FINSLER_SEED`` for the seed, then built-in defaults.
    """
    ns = _parser().parse_args(argv)
    file_cfg = _load_config(ns.config) if getattr(ns, "config", None) else {}

    def pick(name, default=None):
        val = getattr(ns, name, None)
        if val is not None:
            return val
        return file_cfg.get(name, default)

    cfg = CliConfig(command=ns.command)
    cfg.format = pick("format", "json")
    if cfg.format not in ("json", "csv"):
        raise UsageError(f"unknown format {cfg.format!r}")
    cfg.out = pick("out")
    env_seed = os.environ.get("FINSLER_SEED")
    try:
        cfg.seed = int(pick("seed", env_seed if env_seed is not None else 0))
    except ValueError as exc:
        raise UsageError(f"seed must be an integer: {exc}") from exc
    cfg.samples = int(pick("samples", 100))
    if cfg.samples < 1:
        raise UsageError("--samples must be >= 1")
    cfg.jobs = int(pick("jobs", 1))
    tol_items = getattr(ns, "tol", None)
    cfg.tol = dict(file_cfg.get("tol", {}))
    for item in tol_items or ():
        name, _, value = item.partition("=")
        try:
            cfg.tol[name] = float(value)
        except ValueError as exc:
            raise UsageError(f"--tol expects CHECK=number, got {item!r}") from exc

    if hasattr(ns, "metric"):
        family = ns.metric or (file_cfg.get("metric") or {}).get("family")
        if family is None:
            raise UsageError("the --metric flag is required")
        base = file_cfg.get("metric") or {}
        params = dict(base.get("params", {})) if base.get("family") == family else {}
        params.update(parse_params(ns.param))
        n = ns.n if ns.n is not None else int(base.get("n", 2))
        try:
            cfg.metric = MetricSpec(family, n, params)
        except FinslerError as exc:
            raise UsageError(str(exc)) from exc
    if getattr(ns, "point", None) is not None:
        cfg.point = parse_point(ns.point)
        if cfg.metric is not None and cfg.point.n != cfg.metric.n:
            raise UsageError(f"--point has dimension {cfg.point.n} but the metric has n={cfg.metric.n}")

    if ns.command == "eval":
        names = pick("tensors")
        if isinstance(names, str):
            names = [t.strip() for t in names.split(",") if t.strip()]
        names = tuple(names or TENSORS)
        bad = [t for t in names if t not in TENSORS]
        if bad:
            raise UsageError(f"unknown tensors {bad}; choose from {','.join(TENSORS)}")
        cfg.tensors = names
        need = max(TENSOR_ORDER[t] for t in names)
        cfg.order = pick("order", need)
        if cfg.order < need:
            raise UsageError(f"--order {cfg.order} is below the {need} needed by {','.join(names)}")
    elif ns.command == "verify":
        cfg.suite = ns.suite
        cfg.expected_kappa = pick("expected_kappa")
        cfg.p_kind = pick("p_kind")
        if cfg.suite == "w1_transform" and cfg.p_kind is None:
            raise UsageError("--P-kind is required for the w1_transform suite")
    elif ns.command == "geodesic":
        cfg.dt = float(pick("dt", 1e-3))
        cfg.steps = int(pick("steps", 500))
    elif ns.command == "oracle":
        idx = pick("index")
        if idx is not None:
            try:
                cfg.index = tuple(int(t) for t in str(idx).split(","))
            except ValueError as exc:
                raise UsageError(f"--index must be integers: {idx!r}") from exc
            if len(cfg.index) != 2 * cfg.metric.n or min(cfg.index) < 0:
                raise UsageError(f"--index needs {2 * cfg.metric.n} non-negative integers")
    elif ns.command == "run-all":
        cfg.metrics = file_cfg.get("metrics")
    return cfg


# ---------------------------------------------------------------- commands


def _finite(obj, path="output"):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _finite(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _finite(v, f"{path}[{i}]")
    elif isinstance(obj, float) and not np.isfinite(obj):
        raise FinslerError(f"non-finite value at {path}")


def cmd_catalog(cfg):
    rows = []
    for fam in FAMILIES:
        n = 3 if fam == "riemann_counterexample_3d" else 2
        spec = MetricSpec(fam, n)
        rows.append({"family": fam, "n": n, "params": default_params(fam, n), "domain_radius": spec.domain_radius})
    return rows, EXIT_OK


def cmd_eval(cfg):
    F = build_metric(cfg.metric)
    bundle = geometry_bundle(F, cfg.point).as_dict()
    out = {
        "metric": cfg.metric.to_json(),
        "point": {"x": cfg.point.x.tolist(), "y": cfg.point.y.tolist()},
        "tensors": {t: bundle[t] for t in cfg.tensors},
    }
    if "kappa" in cfg.tensors and bundle["kappa"] is None:
        out["tensors"]["kappa"] = "undefined: Jacobi endomorphism is not isotropic"
    return out, EXIT_OK


def _apply_tol(reports, tol):
    for r in reports:
        for c in r.checks:
            if c.name in tol:
                c.tolerance = float(tol[c.name])


def cmd_verify(cfg):
    from finslerkit import verify

    kwargs = {"samples": cfg.samples, "seed": cfg.seed}
    if cfg.suite == "cfc":
        kwargs["expected_kappa"] = cfg.expected_kappa
    if cfg.suite == "w1_transform":
        kwargs["P_kind"] = cfg.p_kind
    report = verify.SUITES[cfg.suite](cfg.metric, **kwargs)
    if not report.convention_flags:
        report.convention_flags = verify.resolve_conventions()
    _apply_tol([report], cfg.tol)
    return [report], verify.exit_status([report])


def cmd_run_all(cfg):
    from finslerkit import verify

    reports = verify.run_all(
        {"seed": cfg.seed, "samples": cfg.samples, "metrics": cfg.metrics, "jobs": cfg.jobs}
    )
    _apply_tol(reports, cfg.tol)
    return reports, verify.exit_status(reports)


def cmd_geodesic(cfg):
    from finslerkit.geodesics import geodesic_integrate, straightness_residual

    spec = cfg.metric
    F = build_metric(spec)
    p = cfg.point
    out = {"metric": spec.to_json(), "x0": p.x.tolist(), "y0": p.y.tolist(), "dt": cfg.dt, "steps": cfg.steps}
    try:
        path = geodesic_integrate(geodesic_spray(F), p.x, p.y, cfg.dt, cfg.steps, inside=spec.contains)
    except FinslerError as exc:
        out["error"] = str(exc)
        out["last_valid_index"] = getattr(exc, "last_valid_index", None)
        return out, EXIT_FAIL
    out["straightness_residual"] = straightness_residual(path, p.y)
    out["path"] = path.tolist()
    return out, EXIT_OK


def cmd_oracle(cfg):
    F = build_metric(cfg.metric)
    p = cfg.point
    n = p.n
    if cfg.index is not None:
        indices = [cfg.index]
    else:
        indices = [m for m in product(range(4), repeat=2 * n) if 1 <= sum(m) <= 3]
    X, Y = seed(p, max(sum(m) for m in indices))
    jet = F(X, Y)
    rows = []
    for m in indices:
        a = float(jet.partial(m))
        b = float(fd_oracle(F, p.x, p.y, m))
        rows.append(
            {"index": list(m), "jet": a, "fd": b, "rel_error": abs(a - b) / max(1.0, abs(a))}
        )
    return {"metric": cfg.metric.to_json(), "x": p.x.tolist(), "y": p.y.tolist(), "partials": rows}, EXIT_OK


# ---------------------------------------------------------------- output


def _report_rows(reports):
    for r in reports:
        for c in r.checks:
            yield {
                "suite": r.suite,
                "family": r.metric.family,
                "n": r.metric.n,
                "seed": r.seed,
                "samples": r.sample_count,
                "expected": r.expected,
                "check": c.name,
                "max_residual": repr(c.max_residual),
                "mean_residual": repr(c.mean_residual),
                "tolerance": repr(c.tolerance),
                "pass": c.passed,
            }


def _flatten(prefix, value):
    arr = np.asarray(value) if not isinstance(value, str) else None
    if arr is None or arr.dtype == object:
        yield prefix, "", value
        return
    for idx in np.ndindex(arr.shape):
        yield prefix, ",".join(map(str, idx)), repr(float(arr[idx]))


def render(command, payload, fmt):
    """Serialize a command result as JSON or CSV text."""
    if command in ("verify", "run-all"):
        obj = [r.to_json() for r in payload]
        if command == "verify":
            obj = obj[0]
    else:
        obj = payload
    _finite(obj)
    if fmt == "json":
        return json.dumps(obj, indent=2, allow_nan=False) + "\n"
    buf = io.StringIO()
    if command in ("verify", "run-all"):
        rows = list(_report_rows(payload))
        fields = list(rows[0]) if rows else ["suite", "family", "check"]
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    elif command == "catalog":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["family", "n", "params", "domain_radius"])
        for row in payload:
            writer.writerow([row["family"], row["n"], json.dumps(row["params"]), repr(row["domain_radius"])])
    elif command == "eval":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["tensor", "index", "value"])
        for name, value in payload["tensors"].items():
            for row in _flatten(name, value):
                writer.writerow(row)
    elif command == "oracle":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["index", "jet", "fd", "rel_error"])
        for row in payload["partials"]:
            writer.writerow([" ".join(map(str, row["index"])), repr(row["jet"]), repr(row["fd"]), repr(row["rel_error"])])
    elif command == "geodesic":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step"] + [f"x{i + 1}" for i in range(len(payload["x0"]))])
        for i, x in enumerate(payload.get("path", [])):
            writer.writerow([i] + [repr(v) for v in x])
    return buf.getvalue()


def emit_report(text, path=None):
    """Write rendered output to ``path`` or standard output; returns an exit code."""
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return EXIT_OK
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"finslerkit: cannot write {path}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


HANDLERS = {
    "catalog": cmd_catalog,
    "eval": cmd_eval,
    "verify": cmd_verify,
    "geodesic": cmd_geodesic,
    "oracle": cmd_oracle,
    "run-all": cmd_run_all,
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_args(argv)
    except SystemExit as exc:  # argparse usage errors and --help/--version
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"finslerkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"finslerkit: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        payload, status = HANDLERS[cfg.command](cfg)
        text = render(cfg.command, payload, cfg.format)
    except FinslerError as exc:
        print(f"finslerkit: error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    io_status = emit_report(text, cfg.out)
    return io_status if io_status != EXIT_OK else status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
