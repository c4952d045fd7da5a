"""Command-line driver: run a pipeline on a datum and print a JSON report.

Exit codes: 0 when every assertion passed, 1 on a theorem-level failure,
2 on a usage or configuration error. Reports go to stdout (or ``--output``),
progress lines go to stderr.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import sys
import time
from typing import Callable

from . import __version__
from .coinv import build_f_map, exactness
from .coordring import (
    Tier,
    biinvariant_basis,
    ckg_basis,
    dominant_box,
    filtration_report,
    is_integral,
    ring_model,
    so2_invariant_oracle,
    specialize_ring,
)
from .errors import KgError, VerificationError
from .iqsp import IContext, IParams, check_params, default_params, validate_parameters
from .repq import build_irreducible, dump_module, tensor_based
from .rootdata import IRootDatum, load_datum

COMMANDS = (
    "validate-datum",
    "icanonical",
    "coinvariants",
    "ckg-basis",
    "filtration-report",
    "structure-constants",
    "biinvariants",
    "verify",
    "dump-module",
)
CONFIG_KEYS = {"command", "preset", "datum", "params", "bound", "tier", "module", "output", "jobs", "seed"}
OUTPUT_DIR_ENV = "KGCOORD_OUTPUT_DIR"


class UsageError(KgError):
    def __init__(self, message: str):
        super().__init__("CONFIG_INVALID", message)


# ---------------------------------------------------------------------------
# configuration


def _parse_bound(raw) -> int | tuple:
    if isinstance(raw, int):
        return raw
    if isinstance(raw, (list, tuple)):
        return tuple(int(x) for x in raw)
    try:
        parts = [int(x) for x in str(raw).split(",")]
    except ValueError:
        raise UsageError(f"bad bound {raw!r}") from None
    return parts[0] if len(parts) == 1 else tuple(parts)


def _parse_params(raw) -> dict | None:
    """``{"0": [sign, exp], ...}`` as a JSON string or mapping."""
    if raw is None:
        return None
    if isinstance(raw, str):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise UsageError(f"params is not JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError("params must map index -> [sign, exponent]")
    out = {}
    for k, v in raw.items():
        if isinstance(v, dict):
            v = [v.get("sign"), v.get("exp")]
        if not (isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, int) for x in v)):
            raise UsageError(f"parameter {k!r} must be [sign, exponent]")
        try:
            out[int(k)] = (v[0], v[1])
        except ValueError:
            raise UsageError(f"parameter index {k!r} is not an integer") from None
    return out


def _parse_module(raw: str, d: IRootDatum) -> list[tuple]:
    """``"2"`` is V(2); ``"2x2"`` is V(2) (x) V(2); rank two uses ``"1,0x0,1"``."""
    if not raw:
        raise UsageError("--module is required for this command")
    out = []
    for part in str(raw).split("x"):
        try:
            c = tuple(int(x) for x in part.split(","))
        except ValueError:
            raise UsageError(f"bad module {raw!r}") from None
        if len(c) != d.base.rank:
            raise UsageError(f"weight {part!r} needs {d.base.rank} fundamental coordinates")
        out.append(d.base.from_fundamental(c))
    return out


def load_config(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config!r}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        unknown = set(cfg) - CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config fields: {sorted(unknown)}")
    for key in ("preset", "datum", "params", "bound", "tier", "module", "output", "jobs", "seed"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    cfg["command"] = args.command
    if cfg.get("preset") and cfg.get("datum"):
        raise UsageError("give either a preset or a datum, not both")
    if not cfg.get("preset") and not cfg.get("datum"):
        raise UsageError("a preset or a datum is required")
    if "tier" in cfg and cfg["tier"] not in [t.value for t in Tier]:
        raise UsageError(f"unknown tier {cfg['tier']!r}")
    return cfg


def resolve(cfg: dict) -> tuple[IRootDatum, IParams]:
    d = load_datum(cfg.get("preset") or cfg["datum"])
    override = _parse_params(cfg.get("params"))
    if override is not None:
        params = IParams.make(override)
    elif cfg.get("preset"):
        params = default_params(cfg["preset"])
    else:
        raise UsageError("a custom datum needs explicit params")
    check_params(d, params)
    return d, params


# ---------------------------------------------------------------------------
# commands


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _module(d: IRootDatum, weights: list[tuple]):
    mods = [build_irreducible(d.base, w) for w in weights]
    M = mods[0]
    for N in mods[1:]:
        M = tensor_based(M, N)
    return M


def cmd_validate_datum(d, params, cfg) -> dict:
    ctx = IContext(d, params)
    bound = _parse_bound(cfg.get("bound", 2))
    rows = []
    for lam in d.spherical_enumerate(bound):
        ok, detail = validate_parameters(ctx, lam, detail=True)
        rows.append({"lambda": list(lam), "ok": bool(ok), "detail": detail})
    result = {"datum": d.to_json(), "params": params.to_json(), "spherical": rows}
    if not all(r["ok"] for r in rows):
        raise VerificationError("NOT_BASED", "parameters fail validation", details=result)
    return result


def cmd_icanonical(d, params, cfg) -> dict:
    M = _module(d, _parse_module(cfg.get("module"), d))
    return IContext(d, params).icanonical_basis(M).to_json()


def cmd_coinvariants(d, params, cfg) -> dict:
    M = _module(d, _parse_module(cfg.get("module"), d))
    ib = IContext(d, params).icanonical_basis(M)
    try:
        cd = build_f_map(ib, strict=True)
    except VerificationError as exc:
        lenient = build_f_map(ib, strict=False)
        exc.details = {"report": lenient.to_json(), "exactness": exactness(ib)}
        raise
    return {"report": cd.to_json(), "exactness": exactness(ib)}


def cmd_ckg_basis(d, params, cfg) -> dict:
    tier = cfg.get("tier", Tier.GRADED.value)
    basis = ckg_basis(d, params, _parse_bound(cfg.get("bound", 2)), tier, progress=_progress,
                      jobs=int(cfg.get("jobs", 1)))
    out = basis.to_json()
    out["sizes"] = [[list(lam), n] for lam, n in basis.sizes().items()]
    return out


def cmd_filtration_report(d, params, cfg) -> dict:
    bound = _parse_bound(cfg.get("bound", 2))
    basis = ckg_basis(d, params, bound, progress=_progress, jobs=int(cfg.get("jobs", 1)))
    return {"rows": filtration_report(d, params, bound, basis)}


def cmd_structure_constants(d, params, cfg) -> dict:
    bound = _parse_bound(cfg.get("bound", 2))
    if not isinstance(bound, int):
        raise UsageError("structure-constants needs an integer bound")
    table = specialize_ring(d, params, bound, progress=_progress)
    out = table.to_json()
    out["associativity_failures"] = len(table.associativity_failures())
    out["commutativity_failures"] = len(table.commutativity_failures())
    if out["associativity_failures"] or out["commutativity_failures"]:
        raise VerificationError("NOT_ASSOCIATIVE", "specialized table fails associativity or commutativity",
                                details=out)
    return out


def cmd_biinvariants(d, params, cfg) -> dict:
    found = biinvariant_basis(d, params, _parse_bound(cfg.get("bound", 2)))
    return {"counts": [[list(lam), len(v)] for lam, v in found.items()]}


def cmd_dump_module(d, params, cfg) -> dict:
    return dump_module(_module(d, _parse_module(cfg.get("module"), d)))


# ---------------------------------------------------------------------------
# verification suite


def _check(rows: list, name: str, fn: Callable[[], tuple[bool, object]]) -> None:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except VerificationError as exc:
        ok, detail = False, {"error": exc.code, "message": exc.message}
    rows.append({"check": name, "ok": bool(ok), "detail": detail})
    _progress(f"{'PASS' if ok else 'FAIL'} {name} ({time.perf_counter() - t0:.1f}s)")


def verify_suite(d: IRootDatum, params: IParams, bound, seed: int = 0) -> list[dict]:
    """The acceptance checks that apply to ``d`` up to ``bound``.

    Tensor squares and the rank-one ring checks are capped at 4, the size the
    acceptance criteria use.
    """
    base = d.base
    ctx = IContext(d, params)
    rows: list = []
    lams = dominant_box(base, bound)
    mods = [("V", lam) for lam in lams]
    if base.rank == 1:
        cap = min(bound if isinstance(bound, int) else bound[0], 4)
        mods += [("VxV", lam) for lam in dominant_box(base, cap)]
    ibs = {}

    def ib_of(kind, lam):
        if (kind, lam) not in ibs:
            M = build_irreducible(base, lam)
            if kind == "VxV":
                M = tensor_based(M, M)
            ibs[(kind, lam)] = ctx.icanonical_basis(M)
        return ibs[(kind, lam)]

    def name(kind, lam):
        return f"V({list(lam)})" + (f"xV({list(lam)})" if kind == "VxV" else "")

    def icanonical():
        bad = [name(*m) for m in mods if not all(ib_of(*m).flags.values())]
        return not bad, {"modules": len(mods), "failed": bad}

    def coinv():
        bad = []
        for m in mods:
            try:
                build_f_map(ib_of(*m), strict=True)
            except VerificationError as exc:
                bad.append([name(*m), exc.code])
        return not bad, {"modules": len(mods), "failed": bad}

    def hom():
        bad = []
        for lam in lams:
            V = build_irreducible(base, lam)
            want = 1 if d.is_spherical(lam) else 0
            if ctx.hom_dimension(V) != want or (want and not validate_parameters(ctx, lam)):
                bad.append(list(lam))
        return not bad, {"failed": bad}

    basis_box: dict = {}

    def cardinality():
        basis_box["b"] = ckg_basis(d, params, bound)
        return True, [[list(lam), n] for lam, n in basis_box["b"].sizes().items()]

    def filtration():
        rep = filtration_report(d, params, bound, basis_box.get("b"), strict=False)
        return all(r["match"] for r in rep), [[r["lambda"], r["match"]] for r in rep]

    def exact():
        bad = []
        for m in mods:
            for row in exactness(ib_of(*m)):
                keys = ("inclusion_injective", "projection_surjective", "middle_exact", "additive", "dichotomy")
                if not all(row[k] for k in keys):
                    bad.append([name(*m), row["weight"]])
        return not bad, {"failed": bad}

    def biinv():
        found = biinvariant_basis(d, params, bound)
        return True, [[list(lam), len(v)] for lam, v in found.items()]

    _check(rows, "icanonical", icanonical)
    _check(rows, "coinvariants", coinv)
    _check(rows, "hom-dichotomy", hom)
    _check(rows, "ckg-cardinality", cardinality)
    _check(rows, "filtration", filtration)
    _check(rows, "exactness", exact)
    if not d.bullet:
        _check(rows, "biinvariants", biinv)
    if base.rank == 1:
        cap = min(bound if isinstance(bound, int) else bound[0], 4)
        cap -= cap % 2

        def so2():
            sizes = ckg_basis(d, params, cap, Tier.FULL_RANK1).sizes()
            got = [sum(n for lam, n in sizes.items() if lam[0] <= k) for k in range(0, cap + 1, 2)]
            want = [so2_invariant_oracle(k) for k in range(0, cap + 1, 2)]
            return got == want, {"ckg": got, "oracle": want}

        def ring():
            t = specialize_ring(d, params, cap)
            a, c = t.associativity_failures(), t.commutativity_failures()
            return not a and not c, {"associativity_failures": len(a), "commutativity_failures": len(c)}

        def closure():
            rng = random.Random(seed)
            R = ring_model(d, params, 2 * cap)
            low = [a for a in R.star if a[2] <= cap]
            prods = all(is_integral(R.ckg_coords(R.multiply(R.ckg(rng.choice(low)), R.ckg(rng.choice(low)))))
                        for _ in range(25))
            coas = all(is_integral(R.coaction(R.ckg(rng.choice(low)))) for _ in range(25))
            return prods and coas, {"products": prods, "coactions": coas}

        if not d.bullet:
            _check(rows, "so2-oracle", so2)
        _check(rows, "ring-q1", ring)
        _check(rows, "a-form-closure", closure)
    return rows


def cmd_verify(d, params, cfg) -> dict:
    rows = verify_suite(d, params, _parse_bound(cfg.get("bound", 2)), seed=int(cfg.get("seed", 0)))
    out = {"checks": rows, "all_ok": all(r["ok"] for r in rows)}
    if not out["all_ok"]:
        raise VerificationError("VERIFY_FAILED", "some checks failed", details=out)
    return out


HANDLERS = {
    "validate-datum": cmd_validate_datum,
    "icanonical": cmd_icanonical,
    "coinvariants": cmd_coinvariants,
    "ckg-basis": cmd_ckg_basis,
    "filtration-report": cmd_filtration_report,
    "structure-constants": cmd_structure_constants,
    "biinvariants": cmd_biinvariants,
    "verify": cmd_verify,
    "dump-module": cmd_dump_module,
}


# ---------------------------------------------------------------------------
# entry point


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=str)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kgcoord", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"kgcoord {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        s = sub.add_parser(cmd)
        s.add_argument("--config", help="JSON job file; flags override its fields")
        s.add_argument("--preset", help="A1-AI, A1xA1-diag or A2-AI")
        s.add_argument("--datum", help="path to an ı-root datum JSON file")
        s.add_argument("--params", help='JSON like {"0": [1, -1]} for varsigma_0 = q^-1')
        s.add_argument("--bound", help="integer or comma-separated fundamental coordinates")
        s.add_argument("--tier", choices=[t.value for t in Tier])
        s.add_argument("--module", help="'2' for V(2), '2x2' for V(2)xV(2), '1,0' in rank two")
        s.add_argument("--output", help="write the report here instead of stdout")
        s.add_argument("--jobs", type=int, help="worker processes for per-lambda pieces")
        s.add_argument("--seed", type=int, help="seed for randomized checks")
    return p


def _emit(report: dict, cfg: dict) -> None:
    text = _canonical(report) + "\n"
    out = cfg.get("output")
    if out:
        outdir = os.environ.get(OUTPUT_DIR_ENV)
        if outdir and not os.path.isabs(out):
            out = os.path.join(outdir, out)
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _echo(cfg: dict) -> dict:
    return {k: cfg[k] for k in sorted(cfg) if k != "output"}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg: dict = {"command": args.command}
    try:
        cfg = load_config(args)
        d, params = resolve(cfg)
        report_cfg = _echo(cfg)
        digest = hashlib.sha256(_canonical([report_cfg, d.to_json(), params.to_json()]).encode()).hexdigest()
        head = {"config": report_cfg, "input_hash": digest, "version": __version__}
        result = HANDLERS[args.command](d, params, cfg)
    except VerificationError as exc:
        _emit({"config": _echo(cfg), "status": "failed", "error": exc.code, "message": exc.message,
               "details": exc.details}, cfg)
        _progress(f"theorem check failed: {exc}")
        return 1
    except KgError as exc:
        _progress(f"error: {exc}")
        _emit({"config": _echo(cfg), "status": "error", "error": exc.code, "message": exc.message}, {})
        return 2
    _emit({**head, "status": "ok", "result": result}, cfg)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
