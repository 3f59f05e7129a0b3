"""Command-line interface: JSON configs in, JSON envelopes and CSV tables out.

Subcommands: depend, verify, sweep, bss, entropy, bounds. Every run emits a
result envelope (config echo, version, seeds, wall time, payload); payloads
are deterministic functions of (config, seed) and serialize byte-identically
across reruns. Exit codes: 0 success, 2 config error, 3 numerical
precondition failure, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time

import numpy as np

from . import bounds, bss, charfn, dependence, entropy, models
from .charfn import GridSpec
from .errors import ConfigError, ParseError, PreconditionError, SchemaError, SingularMatrix

ARTIFACT_VERSION = "0.1.0"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_INTERNAL = 4

SWEEP_COLUMNS = (
    "lambda", "seed", "epsilon_hat", "T_prime", "p_floor", "C_eps",
    "cov_bound_rhs", "cov_resid_lhs", "log_resid_max", "log_resid_bound",
    "class_id", "deficit",
)

_SOURCE_KEYS = {
    "gaussian": {"mean", "variance"},
    "uniform": {"lo", "hi"},
    "laplace": {"location", "scale"},
    "rademacher": set(),
    "gaussian-mixture": {"weights", "means", "variances"},
}

_TOP_KEYS = {
    "system", "grid", "n", "seed", "analytic", "sweep", "mixing",
    "bounds", "entropy", "out", "csv",
}


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError("config root must be a JSON object")
    return raw


class _Check:
    """Collects schema violations with JSON-pointer style paths."""

    def __init__(self):
        self.violations: list[tuple[str, str]] = []

    def fail(self, path: str, message: str) -> None:
        self.violations.append((path, message))

    def reject_unknown(self, obj: dict, allowed, path: str) -> None:
        for key in obj:
            if key not in allowed:
                self.fail(f"{path}/{key}", "unknown key")

    def require(self, obj: dict, key: str, path: str):
        if key not in obj:
            self.fail(f"{path}/{key}", "missing required key")
            return None
        return obj[key]

    def raise_if_failed(self) -> None:
        if self.violations:
            raise SchemaError(self.violations)


def _matrix(obj, path: str, check: _Check) -> np.ndarray | None:
    try:
        a = np.array(obj, dtype=float)
    except (TypeError, ValueError):
        check.fail(path, "not a numeric matrix")
        return None
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        check.fail(path, "must be a square matrix")
        return None
    if not np.all(np.isfinite(a)):
        check.fail(path, "entries must be finite")
        return None
    return a


def _source(obj, path: str, check: _Check) -> models.SourceSpec | None:
    if not isinstance(obj, dict):
        check.fail(path, "source must be an object")
        return None
    family = obj.get("family")
    if family not in _SOURCE_KEYS:
        check.fail(f"{path}/family", f"unknown family {family!r}")
        return None
    check.reject_unknown(obj, _SOURCE_KEYS[family] | {"family", "transform"}, path)
    missing = _SOURCE_KEYS[family] - set(obj)
    if missing:
        for key in sorted(missing):
            check.fail(f"{path}/{key}", "missing required key")
        return None
    try:
        if family == "gaussian":
            spec = models.gaussian(obj["mean"], obj["variance"])
        elif family == "uniform":
            spec = models.uniform(obj["lo"], obj["hi"])
        elif family == "laplace":
            spec = models.laplace(obj["location"], obj["scale"])
        elif family == "rademacher":
            spec = models.rademacher()
        else:
            spec = models.gaussian_mixture(obj["weights"], obj["means"], obj["variances"])
        if "transform" in obj:
            t = _matrix(obj["transform"], f"{path}/transform", check)
            if t is None:
                return None
            spec = dataclasses.replace(spec, transform=t)
    except (ValueError, TypeError, SingularMatrix) as exc:
        check.fail(path, str(exc))
        return None
    return spec


def build_system(obj, check: _Check, path: str = "/system") -> models.TwoSumSystem | None:
    if not isinstance(obj, dict):
        check.fail(path, "system must be an object")
        return None
    check.reject_unknown(obj, {"A", "B", "sources", "lambda", "class_tol"}, path)
    a_raw = check.require(obj, "A", path)
    b_raw = check.require(obj, "B", path)
    src_raw = check.require(obj, "sources", path)
    if a_raw is None or b_raw is None or src_raw is None:
        return None
    if not (isinstance(a_raw, list) and isinstance(b_raw, list) and isinstance(src_raw, list)):
        check.fail(path, "A, B and sources must be arrays")
        return None
    if not len(a_raw) == len(b_raw) == len(src_raw) or not a_raw:
        check.fail(path, "A, B and sources must have equal nonzero length")
        return None
    mats_a, mats_b, sources = [], [], []
    for name, raw, out in (("A", a_raw, mats_a), ("B", b_raw, mats_b)):
        for l, m in enumerate(raw):
            parsed = _matrix(m, f"{path}/{name}/{l}", check)
            if parsed is not None:
                try:
                    from . import linalg
                    linalg.invert(parsed)
                except SingularMatrix:
                    check.fail(f"{path}/{name}/{l}", "matrix is singular")
                    parsed = None
            if parsed is not None:
                out.append(parsed)
    for l, s in enumerate(src_raw):
        spec = _source(s, f"{path}/sources/{l}", check)
        if spec is not None:
            sources.append(spec)
    lam = obj.get("lambda", 0.0)
    if not isinstance(lam, (int, float)) or not 0.0 <= lam <= 1.0:
        check.fail(f"{path}/lambda", "must lie in [0, 1]")
        return None
    if check.violations:
        return None
    try:
        return models.TwoSumSystem(
            tuple(mats_a), tuple(mats_b), tuple(sources),
            contamination=float(lam),
            class_tol=float(obj.get("class_tol", 1e-9)),
        )
    except (ValueError, SingularMatrix) as exc:
        check.fail(path, str(exc))
        return None


def build_grid(obj, check: _Check, dim: int, path: str = "/grid") -> GridSpec | None:
    obj = obj if isinstance(obj, dict) else {}
    check.reject_unknown(obj, {"T", "points_per_axis"}, path)
    radius = obj.get("T", 3.0)
    points = obj.get("points_per_axis", 41)
    try:
        return GridSpec(float(radius), int(points), dim)
    except (TypeError, ValueError) as exc:
        check.fail(path, str(exc))
        return None


def build_mixing(obj, check: _Check, path: str = "/mixing") -> bss.MixingModel | None:
    if not isinstance(obj, dict):
        check.fail(path, "mixing must be an object")
        return None
    check.reject_unknown(obj, {"M", "sources", "delta1", "delta2", "eps_threshold"}, path)
    m_raw = check.require(obj, "M", path)
    src_raw = check.require(obj, "sources", path)
    if m_raw is None or src_raw is None:
        return None
    m = _matrix(m_raw, f"{path}/M", check)
    sources = []
    for l, s in enumerate(src_raw):
        spec = _source(s, f"{path}/sources/{l}", check)
        if spec is not None:
            sources.append(spec)
    if check.violations or m is None:
        return None
    try:
        return bss.MixingModel(m, tuple(sources))
    except (ValueError, SingularMatrix) as exc:
        check.fail(path, str(exc))
        return None


def to_jsonable(obj):
    """Recursive conversion of results (dataclasses, numpy) to JSON values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def read_samples_csv(path: str) -> np.ndarray:
    """Sample file: header row of coordinate names, one sample per line."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise ParseError(f"cannot read samples {path}: {exc}") from exc
    if len(rows) < 2:
        raise ParseError(f"{path}: need a header row and at least one sample")
    width = len(rows[0])
    data = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ParseError(f"{path}:{i}: expected {width} columns, got {len(row)}")
        try:
            data.append([float(v) for v in row])
        except ValueError as exc:
            raise ParseError(f"{path}:{i}: {exc}") from exc
    return np.array(data)


def write_samples_csv(path: str, samples: np.ndarray, names=None) -> None:
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    names = names or [f"x{i}" for i in range(x.shape[1])]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in x:
            writer.writerow([repr(float(v)) for v in row])


def sweep_rows(system: models.TwoSumSystem, lambdas, seeds, n: int, grid: GridSpec):
    """One row per (lambda, seed, class), ordered by (lambda, seed, class)."""
    rows = []
    for lam in lambdas:
        contaminated = models.contaminate(system, lam)
        for seed in seeds:
            report = bounds.verify_stability(contaminated, n, seed, grid)
            for class_id, deficit in enumerate(report.measured.class_deficits):
                rows.append({
                    "lambda": float(lam),
                    "seed": int(seed),
                    "epsilon_hat": report.epsilon,
                    "T_prime": report.t_prime,
                    "p_floor": report.p_floor,
                    "C_eps": report.c_eps,
                    "cov_bound_rhs": report.cov_bound,
                    "cov_resid_lhs": report.measured.coupling_residual_max,
                    "log_resid_max": report.measured.log_residual_max,
                    "log_resid_bound": report.log_resid_bound,
                    "class_id": class_id,
                    "deficit": deficit,
                })
    return rows


def write_sweep_csv(path: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([
                repr(row[c]) if isinstance(row[c], float) else row[c]
                for c in SWEEP_COLUMNS
            ])


def _require_section(cfg: dict, key: str):
    if key not in cfg:
        raise SchemaError([(f"/{key}", "missing required section")])
    return cfg[key]


def _build_common(cfg: dict, args):
    check = _Check()
    check.reject_unknown(cfg, _TOP_KEYS, "")
    system = build_system(_require_section(cfg, "system"), check)
    dim = system.dim if system is not None else 1
    grid = build_grid(cfg.get("grid"), check, dim)
    check.raise_if_failed()
    n = int(args.n if args.n is not None else cfg.get("n", 100000))
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
    if args.grid_t is not None or args.grid_points is not None:
        grid = GridSpec(
            float(args.grid_t if args.grid_t is not None else grid.radius),
            int(args.grid_points if args.grid_points is not None else grid.points_per_axis),
            dim,
        )
    return system, grid, n, seed


def cmd_depend(cfg, args):
    if args.x_csv and args.y_csv:
        x = read_samples_csv(args.x_csv)
        y = read_samples_csv(args.y_csv)
        radius = float(args.grid_t) if args.grid_t is not None else 3.0
        points = int(args.grid_points) if args.grid_points is not None else 41
        grid = GridSpec(radius, points, x.shape[1])
        est = dependence.estimate_dependence(x, y, grid)
        return to_jsonable(est), None
    if cfg is None:
        raise SchemaError([("/", "depend needs either two CSV files or --config")])
    system, grid, n, seed = _build_common(cfg, args)
    if cfg.get("analytic", False):
        est = dependence.analytic_dependence(
            charfn.joint_aggregate_cf(system, charfn.s1_weights(system), charfn.s2_weights(system)),
            charfn.aggregate_cf(system, charfn.s1_weights(system)),
            charfn.aggregate_cf(system, charfn.s2_weights(system)),
            grid, system.dim, system.dim,
        )
    else:
        ss = models.sample_system(system, n, seed)
        est = dependence.estimate_dependence(ss.s1, ss.s2, grid)
    return to_jsonable(est), seed


def cmd_verify(cfg, args):
    system, grid, n, seed = _build_common(cfg, args)
    report = bounds.verify_stability(system, n, seed, grid, analytic=bool(cfg.get("analytic", False)))
    return to_jsonable(report), seed


def cmd_sweep(cfg, args):
    system, grid, n, seed = _build_common(cfg, args)
    sweep = _require_section(cfg, "sweep")
    if not isinstance(sweep, dict) or "lambdas" not in sweep:
        raise SchemaError([("/sweep/lambdas", "missing required key")])
    lambdas = [float(v) for v in sweep["lambdas"]]
    seeds = [int(v) for v in sweep.get("seeds", [seed])]
    if any(not 0.0 <= lam <= 1.0 for lam in lambdas):
        raise SchemaError([("/sweep/lambdas", "every value must lie in [0, 1]")])
    rows = sweep_rows(system, lambdas, seeds, n, grid)
    csv_path = args.out_csv or cfg.get("csv")
    if csv_path:
        write_sweep_csv(csv_path, rows)
    return {"columns": list(SWEEP_COLUMNS), "rows": to_jsonable(rows),
            "csv": csv_path}, seeds


def cmd_bss(cfg, args):
    check = _Check()
    check.reject_unknown(cfg, _TOP_KEYS, "")
    mixing_raw = _require_section(cfg, "mixing")
    model = build_mixing(mixing_raw, check)
    grid = build_grid(cfg.get("grid"), check, 1)
    check.raise_if_failed()
    n = int(args.n if args.n is not None else cfg.get("n", 100000))
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
    report = bss.separation_test(
        model, n, seed, grid,
        delta1=float(mixing_raw.get("delta1", 0.05)),
        delta2=float(mixing_raw.get("delta2", 1e-6)),
        eps_threshold=float(mixing_raw.get("eps_threshold", 0.1)),
    )
    return to_jsonable(report), seed


def cmd_entropy(cfg, args):
    system, _, n, seed = _build_common(cfg, args)
    k = int(cfg.get("entropy", {}).get("k", 5))
    gaps = entropy.entropy_gap(system, n, seed, k)
    return to_jsonable(list(gaps)), seed


def cmd_bounds(cfg, args):
    section = _require_section(cfg, "bounds")
    check = _Check()
    check.reject_unknown(section, {"epsilon", "d", "L", "p", "T_prime"}, "/bounds")
    for key in ("epsilon", "d", "L", "p", "T_prime"):
        check.require(section, key, "/bounds")
    check.raise_if_failed()
    consts = bounds.bound_constants(
        float(section["epsilon"]), int(section["d"]), int(section["L"]),
        float(section["p"]), float(section["T_prime"]),
    )
    return to_jsonable(consts), None


_COMMANDS = {
    "depend": cmd_depend,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "bss": cmd_bss,
    "entropy": cmd_entropy,
    "bounds": cmd_bounds,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfstab",
        description="Dependence, stability-bound, separation and entropy checks "
                    "for linear mixtures of independent sources.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("depend", "dependence statistic from a config or two CSV sample files"),
        ("verify", "full stability report for a two-sum system"),
        ("sweep", "contamination sweep to CSV"),
        ("bss", "separation test for a mixing model"),
        ("entropy", "per-class entropy gaps"),
        ("bounds", "evaluate bound constants from epsilon, d, L, p, T_prime"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="JSON experiment config")
        p.add_argument("--seed", type=int, metavar="U64")
        p.add_argument("--out", metavar="PATH", help="write the JSON envelope here")
        p.add_argument("--grid-T", dest="grid_t", type=float, metavar="REAL")
        p.add_argument("--grid-points", dest="grid_points", type=int, metavar="ODD")
        p.add_argument("--n", type=int, metavar="COUNT")
        if name == "depend":
            p.add_argument("x_csv", nargs="?", help="CSV sample file for the first block")
            p.add_argument("y_csv", nargs="?", help="CSV sample file for the second block")
        if name == "sweep":
            p.add_argument("--csv", dest="out_csv", metavar="PATH")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = load_config(args.config) if args.config else None
    started = time.perf_counter()
    needs_config = args.command != "depend" or not (getattr(args, "x_csv", None) and getattr(args, "y_csv", None))
    if cfg is None and needs_config:
        raise SchemaError([("/", f"{args.command} requires --config")])
    payload, seeds = _COMMANDS[args.command](cfg, args)
    envelope = {
        "artifact_version": ARTIFACT_VERSION,
        "command": args.command,
        "config": cfg,
        "seed": to_jsonable(seeds),
        "wall_time_s": round(time.perf_counter() - started, 6),
        "payload": payload,
    }
    text = json.dumps(envelope, sort_keys=True, indent=2)
    out_path = args.out or (cfg.get("out") if cfg else None)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        return run(argv)
    except ConfigError as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, SchemaError):
            record["violations"] = [list(v) for v in exc.violations]
        print(json.dumps(record), file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_PRECONDITION
    except Exception as exc:  # noqa: BLE001 - deliberate catch-all at the boundary
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
