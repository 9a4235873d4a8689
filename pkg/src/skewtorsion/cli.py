"""Command-line front end: ``skewtorsion verify CONFIG`` and ``skewtorsion catalog``.

Config and report are JSON; the schemas are documented in the README.

Exit codes of ``verify``: 0 all checks passed, 2 a check failed or a verdict
was inconsistent, 3 a defect fell in the inconclusive tolerance band, 4 the
config could not be read or validated.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .catalog import CATALOG, catalog_rows, solve_form_space
from .errors import (
    ContractViolation,
    DegenerateDecompositionError,
    DegenerateRankError,
    InconclusiveDefectError,
    InternalInconsistencyError,
    SkewTorsionError,
)
from .exterior import ThreeForm
from .holonomy import (
    SkewTorsionSystem,
    bianchi_residual,
    classify,
    curvature,
    jacobi_defect,
    omega,
    symmetry_defect,
)
from .lie import DEFAULT_SAMPLES, DEFAULT_SEED, Subalgebra
from .numerics import Tolerance, set_default_tolerance

logger = logging.getLogger(__name__)

CONFIG_SCHEMA = "skewtorsion-config/1"
REPORT_SCHEMA = "skewtorsion-report/1"

EXIT_OK = 0
EXIT_CHECK_FAILED = 2
EXIT_INCONCLUSIVE = 3
EXIT_CONFIG = 4

_INCONCLUSIVE = (InconclusiveDefectError, DegenerateRankError, DegenerateDecompositionError)


class ConfigError(Exception):
    """The config file is unreadable or violates the schema."""


# config parsing ---------------------------------------------------------------


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"{where}: missing field '{key}'")
    return mapping[key]


def _int_field(value, where: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}, got {value}")
    return value


def _parse_tolerance(raw, where: str) -> Tolerance:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected an object with 'rel' and 'abs'")
    unknown = set(raw) - {"rel", "abs"}
    if unknown:
        raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")
    try:
        return Tolerance(rel=float(raw.get("rel", 1e-9)), abs=float(raw.get("abs", 1e-9)))
    except (TypeError, ValueError, ContractViolation) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _parse_algebra(raw, where: str, dimension: int | None, tol: Tolerance) -> tuple[dict, int, Subalgebra, ThreeForm | None]:
    """Returns (description, n, algebra, built-in form or None)."""
    if isinstance(raw, str):
        parts = raw.split()
        if len(parts) != 2 or not parts[1].lstrip("-").isdigit():
            raise ConfigError(f"{where}: expected '<catalog name> <integer>', got {raw!r}")
        raw = {"catalog": parts[0], "parameter": int(parts[1])}
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a catalog reference or an explicit matrix list")
    if "catalog" in raw:
        name = raw["catalog"]
        if name not in CATALOG:
            raise ConfigError(f"{where}.catalog: unknown catalog name {name!r}; known: {', '.join(CATALOG)}")
        entry = CATALOG[name]
        param = _int_field(_require(raw, "parameter", where), f"{where}.parameter", entry.min_parameter)
        built = entry.build(param)
        n, algebra = built[0], built[1]
        form = built[2] if entry.has_form else None
        if dimension is not None and dimension != n:
            raise ConfigError(f"{where}: catalog entry '{name} {param}' has dimension {n}, config says {dimension}")
        return {"catalog": name, "parameter": param}, n, algebra, form
    if "matrices" in raw:
        if dimension is None:
            raise ConfigError(f"{where}: 'dimension' is required with explicit matrices")
        try:
            mats = np.array(raw["matrices"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}.matrices: not a numeric array ({exc})") from exc
        if mats.ndim != 3 or mats.shape[1:] != (dimension, dimension):
            raise ConfigError(f"{where}.matrices: expected a list of {dimension}x{dimension} matrices, got shape {mats.shape}")
        try:
            algebra = Subalgebra.span(mats, n=dimension, tol=tol)
            algebra.validate(tol)
        except ContractViolation as exc:
            raise ConfigError(f"{where}.matrices: {exc}") from exc
        return {"matrices": int(mats.shape[0])}, dimension, algebra, None
    raise ConfigError(f"{where}: needs either 'catalog' or 'matrices'")


_SYSTEM_FIELDS = {"name", "algebra", "dimension", "theta", "expect"}
_EXPECT_FIELDS = {"branch", "form_space_dim", "rank", "cohomogeneity"}


def load_config(path: str | Path) -> dict[str, Any]:
    """Read and structurally validate a config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror or exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be an object")
    unknown = set(raw) - {"schema", "tolerance", "seed", "samples", "systems"}
    if unknown:
        raise ConfigError(f"config: unknown fields {sorted(unknown)}")
    if raw.get("schema", CONFIG_SCHEMA) != CONFIG_SCHEMA:
        raise ConfigError(f"schema: expected {CONFIG_SCHEMA!r}, got {raw['schema']!r}")
    systems = _require(raw, "systems", "config")
    if not isinstance(systems, list):
        raise ConfigError("systems: expected a list")
    for i, s in enumerate(systems):
        where = f"systems[{i}]"
        if not isinstance(s, dict):
            raise ConfigError(f"{where}: expected an object")
        unknown = set(s) - _SYSTEM_FIELDS
        if unknown:
            raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")
        _require(s, "algebra", where)
        _require(s, "theta", where)
        if "expect" in s:
            if not isinstance(s["expect"], dict) or set(s["expect"]) - _EXPECT_FIELDS:
                raise ConfigError(f"{where}.expect: allowed fields are {sorted(_EXPECT_FIELDS)}")
    return raw


def _resolve_theta(raw, where: str, n: int, algebra: Subalgebra, form: ThreeForm | None, tol: Tolerance):
    """Returns (mode, list of forms)."""
    if raw == "adjoint":
        if form is None:
            raise ConfigError(f"{where}: theta 'adjoint' needs an adjoint catalog entry")
        return "adjoint", [form]
    if raw == "solve":
        return "solve", solve_form_space(algebra, tol)
    if isinstance(raw, dict) and "entries" in raw:
        try:
            T = ThreeForm.from_entries(n, raw["entries"])
        except (ContractViolation, TypeError, ValueError) as exc:
            raise ConfigError(f"{where}.entries: {exc}") from exc
        return "explicit", [T]
    raise ConfigError(f"{where}: expected 'adjoint', 'solve' or {{'entries': [...]}}")


# verification -----------------------------------------------------------------


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    return value


def _check(name: str, op: str, residual: float, threshold: float, passed: bool | None = None) -> dict:
    residual = float(residual)
    ok = math.isfinite(residual) and (residual <= threshold if passed is None else passed)
    return {"name": name, "op": op, "residual": residual if math.isfinite(residual) else str(residual), "threshold": float(threshold), "passed": bool(ok)}


def _expect_check(key: str, op: str, want, got) -> dict:
    """Compare an expectation; the residual is the numeric gap, or 0/1 for labels."""
    got = _jsonable(got)
    passed = got == want
    if isinstance(want, (int, float)) and isinstance(got, (int, float)) and not isinstance(got, bool):
        residual = abs(float(got) - float(want))
    else:
        residual = 0.0 if passed else 1.0
    return {"name": f"expect_{key}", "op": op, "expected": want, "actual": got, "residual": residual, "threshold": 0.0, "passed": passed}


def _verify_one(label: str, n: int, T: ThreeForm, algebra: Subalgebra, expect: dict, tol: Tolerance, samples: int, seed: int) -> dict:
    start = time.perf_counter()
    sys_ = SkewTorsionSystem(n, T, algebra, tol=tol)
    unit = SkewTorsionSystem(n, T.normalized(), algebra, tol=tol) if T.norm() > 0 else sys_
    checks = [_check("membership", "SkewTorsionSystem.membership_residual", sys_.membership_residual(), tol.abs)]

    R = curvature(unit, tol)
    checks.append(_check("bianchi", "bianchi_residual", bianchi_residual(R), tol.abs))
    ops = unit.operators
    i, j = np.triu_indices(n, 1)
    s = R.scalar()
    s_theta = -float(np.sum(ops[i, :, j] ** 2))
    checks.append(_check("scalar_curvature_identity", "scalar_curvature", abs(s - s_theta), tol.abs * max(1.0, abs(s))))
    if T.norm() > tol.abs:
        checks.append(_check("scalar_curvature_negative", "scalar_curvature", s, -tol.abs, passed=s < -tol.abs))

    om = omega(unit, tol)
    jd = jacobi_defect(T, tol)
    checks.append(_check("omega_matches_jacobi", "omega", abs(float(np.abs(om.coeffs).max(initial=0.0)) - jd), tol.abs))
    sd = symmetry_defect(sys_, tol)
    if sd <= tol.abs:
        checks.append(_check("symmetric_implies_jacobi", "jacobi_defect", jd, 10 * tol.abs))

    verdict = classify(sys_, tol, samples, seed)
    checks.append(_check("verdict_consistent", "classify", float(len(verdict.failures)), 0.0, passed=verdict.branch != "inconsistent"))
    for key, want in sorted(expect.items()):
        got = verdict.branch if key == "branch" else verdict.evidence.get(key)
        checks.append(_expect_check(key, "classify", want, got))

    return {
        "label": label,
        "verdict": verdict.branch,
        "evidence": _jsonable(verdict.evidence),
        "failures": verdict.failures,
        "checks": checks,
        "wall_time_s": time.perf_counter() - start,
    }


def _verify_system(index: int, item: dict, tol: Tolerance, samples: int, seed: int) -> dict:
    where = f"systems[{index}]"
    dimension = item.get("dimension")
    if dimension is not None:
        dimension = _int_field(dimension, f"{where}.dimension", 1)
    name = item.get("name", f"system-{index}")
    start = time.perf_counter()
    desc, n, algebra, form = _parse_algebra(item["algebra"], f"{where}.algebra", dimension, tol)
    entry: dict[str, Any] = {"name": name, "algebra": desc, "dimension": n, "algebra_dim": algebra.dim}
    try:
        mode, forms = _resolve_theta(item["theta"], f"{where}.theta", n, algebra, form, tol)
    except _INCONCLUSIVE as exc:
        entry.update(status="inconclusive", error=str(exc), classified=[], wall_time_s=time.perf_counter() - start)
        return entry
    entry["theta"] = mode
    if mode == "solve":
        entry["form_space_dim"] = len(forms)
    if mode == "explicit":
        try:
            SkewTorsionSystem(n, forms[0], algebra, tol=tol)
        except ContractViolation as exc:
            raise ConfigError(f"{where}.theta: {exc}") from exc
    expect = item.get("expect", {})
    classified = []
    status = "ok"
    for k, T in enumerate(forms):
        label = name if len(forms) == 1 and mode != "solve" else f"{name}[{k}]"
        try:
            per_form = {k: v for k, v in expect.items() if not (mode == "solve" and k == "form_space_dim")}
            result = _verify_one(label, n, T, algebra, per_form, tol, samples, seed)
        except _INCONCLUSIVE as exc:
            classified.append({"label": label, "status": "inconclusive", "error": str(exc), "checks": []})
            status = "inconclusive" if status == "ok" else status
            continue
        except InternalInconsistencyError as exc:
            classified.append({"label": label, "status": "check_failed", "error": str(exc), "checks": []})
            status = "check_failed"
            continue
        if not all(c["passed"] for c in result["checks"]):
            status = "check_failed"
        classified.append(result)
    if mode == "solve" and "form_space_dim" in expect:
        ok = len(forms) == expect["form_space_dim"]
        entry["checks"] = [_expect_check("form_space_dim", "solve_form_space", expect["form_space_dim"], len(forms))]
        if not ok:
            status = "check_failed"
    entry.update(status=status, classified=classified, wall_time_s=time.perf_counter() - start)
    return entry


def build_report(config: dict, tol: Tolerance, seed: int, samples: int) -> tuple[dict, int]:
    systems = [_verify_system(i, s, tol, samples, seed) for i, s in enumerate(config["systems"])]
    statuses = [s["status"] for s in systems]
    if "check_failed" in statuses:
        code = EXIT_CHECK_FAILED
    elif "inconclusive" in statuses:
        code = EXIT_INCONCLUSIVE
    else:
        code = EXIT_OK
    classified = [c for s in systems for c in s["classified"]]
    report = {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "tolerance": {"rel": tol.rel, "abs": tol.abs},
        "seed": seed,
        "samples": samples,
        "systems": systems,
        "summary": {
            "systems": len(systems),
            "classified": len(classified),
            "checks_failed": sum(1 for c in classified for k in c["checks"] if not k["passed"]),
            "inconsistent": sum(1 for c in classified if c.get("verdict") == "inconsistent"),
            "inconclusive": statuses.count("inconclusive"),
            "exit_code": code,
        },
    }
    return _jsonable(report), code


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def run_verify(
    config_path: str | Path,
    output_path: str | Path | None = None,
    *,
    tol: float | None = None,
    seed: int | None = None,
    samples: int | None = None,
    json_stdout: bool = False,
    quiet: bool = False,
) -> int:
    """Verify every system in a config file and write the report; returns the exit code."""
    try:
        config = load_config(config_path)
        tolerance = Tolerance.uniform(tol) if tol is not None else _parse_tolerance(config.get("tolerance", {}), "tolerance")
        seed = seed if seed is not None else _int_field(config.get("seed", DEFAULT_SEED), "seed", 0)
        samples = samples if samples is not None else _int_field(config.get("samples", DEFAULT_SAMPLES), "samples", 1)
        previous = set_default_tolerance(tolerance)
        try:
            report, code = build_report(config, tolerance, seed, samples)
        finally:
            set_default_tolerance(previous)
    except (ConfigError, ContractViolation) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SkewTorsionError as exc:
        print(f"verification error: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE if isinstance(exc, _INCONCLUSIVE) else EXIT_CHECK_FAILED

    text = dump_report(report)
    if output_path is not None:
        Path(output_path).write_text(text, encoding="utf-8")
    if json_stdout:
        sys.stdout.write(text)
    elif not quiet:
        for s in report["systems"]:
            if s.get("theta") == "solve":
                print(f"{s['name']}: form space dimension {s['form_space_dim']}, {len(s['classified'])} systems classified")
            for c in s["classified"]:
                passed = sum(k["passed"] for k in c["checks"])
                print(f"{c['label']}: {c.get('verdict', c.get('status'))} ({passed}/{len(c['checks'])} checks passed)")
        print(f"exit code {code}")
    return code


def catalog_list(out=None) -> str:
    """Render the catalog table; one row per entry."""
    rows = [("name", "parameter", "ambient dim", "algebra dim"), *catalog_rows()]
    text = "\n".join(" | ".join(r) for r in rows) + "\n"
    (out or sys.stdout).write(text)
    return text


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="skewtorsion", description="Verify skew-torsion holonomy systems.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="verify the systems listed in a config file")
    verify.add_argument("config")
    verify.add_argument("-o", "--output", help="write the JSON report here")
    verify.add_argument("--tol", type=float, help="set both relative and absolute tolerance")
    verify.add_argument("--seed", type=int)
    verify.add_argument("--samples", type=int)
    verify.add_argument("--json", action="store_true", help="print the report to stdout")
    verify.add_argument("--quiet", action="store_true")

    sub.add_parser("catalog", help="list catalog entries")

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.ERROR if getattr(args, "quiet", False) else logging.WARNING)
    if args.command == "catalog":
        catalog_list()
        return EXIT_OK
    if args.tol is not None and not (math.isfinite(args.tol) and args.tol > 0):
        print("config error: --tol must be finite and positive", file=sys.stderr)
        return EXIT_CONFIG
    if args.samples is not None and args.samples < 1:
        print("config error: --samples must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    return run_verify(
        args.config, args.output, tol=args.tol, seed=args.seed, samples=args.samples, json_stdout=args.json, quiet=args.quiet
    )


if __name__ == "__main__":
    raise SystemExit(main())
