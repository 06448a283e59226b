"""Command line interface.

Exit codes: 0 when every check passes, 1 when a mathematical check fails,
2 on input or usage errors.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import io
import json
import os
import sys
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import extension as ext
from . import hoelder, norms, spaces, svg
from .core_metric import (
    SCHEMA,
    FiberlipError,
    LinearQuotient,
    load_fibration,
    validate_metric,
    validate_section,
)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def canonical(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2)


def _read_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    try:
        return text, json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: "
                         f"{exc.msg}") from None


def _spec_path(args) -> str:
    path = args.spec or args.spec_pos
    if not path:
        raise UsageError("this command needs a fibration spec (--spec PATH)")
    return path


def _load(args):
    text, data = _read_json(_spec_path(args))
    F, sections = load_fibration(data)
    return text, F, sections


def _section(F, sections, name):
    if name not in sections:
        raise UsageError(f"no section named {name!r}; have {sorted(sections)}")
    return sections[name]


def _anchor_point(F, phi, label):
    if label is None:
        raise UsageError("--anchor LABEL is required")
    return int(phi.assign[F.label_index(str(label))])


# ---------------------------------------------------------------------------
# commands; each returns (passed, findings, artifacts)


def cmd_validate(args):
    _, F, sections = _load(args)
    report = validate_metric(F.total, tol=args.tol)
    bad = [n for n, s in sections.items() if not validate_section(F, s)]
    findings = {"metric": report.to_dict(), "invalid_sections": bad,
                "n_points": len(F.total), "n_base": F.n_base}
    return report.ok and not bad, findings, {}


def cmd_check_hoelder(args):
    _, F, sections = _load(args)
    phi = _section(F, sections, args.section)
    cert = hoelder.check_intrinsic_hoelder(F, phi, (args.L, args.alpha))
    return cert.holds, cert.to_dict(F.base_ids), {}


def cmd_min_constant(args):
    _, F, sections = _load(args)
    phi = _section(F, sections, args.section)
    c = hoelder.min_constant(F, phi, args.alpha)
    eq = hoelder.check_equivalence_bounded(F, phi, args.alpha)
    return eq["bound_ok"], {"min_constant": c, "alpha": args.alpha, **eq}, {}


def cmd_cones(args):
    _, F, sections = _load(args)
    phi = _section(F, sections, args.section)
    params = (args.L, args.alpha)
    hits = hoelder.graph_cone_violations(F, phi, params)
    cert = hoelder.check_intrinsic_hoelder(F, phi, params)
    ids = F.base_ids
    findings = {
        "avoids_cones": not hits,
        "hoelder_holds": cert.holds,
        "agree": (not hits) == cert.holds,
        "violations": [[ids[v], ids[p]] for v, p in hits[:1000]],
        "n_violations": len(hits),
    }
    artifacts = {}
    if F.total.points.shape[1] >= 2 and F.total.matrix is None:
        v = hits[0][0] if hits else 0
        inside = np.flatnonzero(hoelder.cone_membership(
            F, hoelder.ConeSpec(int(phi.assign[v]), args.L, args.alpha), np.arange(len(F.total))))
        artifacts["cones.svg"] = svg.scatter_svg(F.total.points, {
            "samples": np.arange(len(F.total)), "graph": phi.assign,
            "cone": inside, "vertex": [phi.assign[v]]})
    return not hits, findings, artifacts


def cmd_wrt(args):
    _, F, sections = _load(args)
    phi = _section(F, sections, args.section)
    psi = _section(F, sections, args.psi)
    anchor = _anchor_point(F, psi, args.anchor)
    cert = hoelder.check_hoelder_wrt(F, phi, psi, anchor, (args.L, args.alpha))
    c = hoelder.min_constant_wrt(F, phi, psi, anchor, args.alpha)
    return cert.holds, {**cert.to_dict(F.base_ids), "min_constant": c}, {}


def _norm_context(args):
    if not (args.spec or args.spec_pos):
        # slope-3 graph over the first-coordinate quotient of R^2
        base = np.array([-2.0, -1.0, 0.0, 1.0, 3.0])[:, None]
        ctx = norms.NormContext(LinearQuotient([[1.0, 0.0]]), base,
                                np.hstack([base, 0 * base]), 2)
        return ctx, np.hstack([base, 3 * base])
    _, F, sections = _load(args)
    if F.quotient is None:
        raise UsageError("norms need a linear quotient: give 'pi' and 'base_coords'")
    phi = _section(F, sections, args.section)
    psi = _section(F, sections, args.psi)
    anchor = F.label_index(str(args.anchor)) if args.anchor is not None else 0
    pts = F.total.points
    ctx = norms.NormContext(F.quotient, F.base_coords, pts[psi.assign], anchor)
    return ctx, pts[phi.assign]


def cmd_norms(args):
    ctx, values = _norm_context(args)
    member = ctx.member(values, args.lam)
    out = {}
    agree = True
    for name, nf, sf in (("v1", norms.norm_v1, norms.seminorm_v1),
                         ("v2", norms.norm_v2, norms.seminorm_v2)):
        direct, reduced = sf(member, ctx, "direct"), sf(member, ctx, "reduced")
        agree &= abs(direct - reduced) <= args.tol
        out[name] = {**nf(member, ctx).to_dict(), "reduced_semi_part": reduced}
    out["lambda"] = args.lam
    out["psi_constant"] = ctx.psi_constant()
    out["paths_agree"] = bool(agree)
    return agree, out, {}


def cmd_lemma(args):
    rows = norms.lemma_trials(args.trials, seed=args.seed)
    n_ok = sum(r["ok"] for r in rows)
    worst = max(abs(r["lhs"] - r["rhs"]) for r in rows) if rows else 0.0
    return n_ok == len(rows), {"trials": len(rows), "ok": n_ok, "max_abs_gap": worst}, {}


def cmd_limits(args):
    r = norms.parabola_limit_scenario(args.t)
    passed = r["decreasing"] and r["bounded"] and r["first"][-1] < 1e-3 and r["second"][-1] < 1e-3
    return passed, r, {}


def cmd_asymmetry(args):
    r = norms.asymmetry_demo(args.resolution or 81)
    space = spaces.three_segment_space(args.resolution or 81)
    passed = r["general_inequality_ok"] and r["violated"]
    return passed, r, {"three_segment.svg": svg.three_segment_svg(space)}


def cmd_extend(args):
    text, cfg = _read_json(_spec_path(args))
    params = {k: v for k, v in cfg.items() if k not in ("seed", "resolution")}
    config = spaces.ScenarioConfig("extension_scenario", int(cfg.get("seed", args.seed)),
                                   int(cfg.get("resolution", args.resolution or 21)), params)
    problem = spaces.extension_scenario(config)
    result = ext.global_extension(problem)
    report = ext.verify_extension(problem, result, eps_grid=float(cfg.get("eps_grid", 0.05)))
    findings = {**result.to_dict(), "verification": report.to_dict(), "alpha": problem.alpha}
    artifacts = {}
    if args.csv:
        artifacts["extension.csv"] = _extension_csv(problem, result)
    return report.ok, findings, artifacts


def _extension_csv(problem, result) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = problem.points.shape[1]
    w.writerow([f"x{i}" for i in range(n)] + [f"f{i + 1}" for i in range(problem.s)])
    for p, f in zip(problem.points, result.f):
        w.writerow([repr(float(v)) for v in p] + [repr(float(v)) for v in f])
    return buf.getvalue()


def cmd_gen(args):
    params = {}
    for item in args.param or []:
        key, _, raw = item.partition("=")
        try:
            params[key] = json.loads(raw)
        except json.JSONDecodeError:
            params[key] = raw
    config = spaces.ScenarioConfig(args.kind, args.seed, args.resolution or 9, params)
    if args.kind == "extension_scenario":
        spec = {"schema": SCHEMA, "seed": args.seed, "resolution": config.resolution, **params}
    else:
        spec = spaces.generate(config)
    return True, spec, {"scenario.json": canonical(spec)}


def cmd_suite(args):
    from .suite import run_suite

    only = {int(v) for v in args.only.split(",")} if args.only else None
    results = run_suite(only)
    for r in results:
        print(r.line(), file=sys.stderr)
    findings = {f"criterion_{r.number}": {"name": r.name, "passed": r.passed, **r.detail}
                for r in results}
    return all(r.passed for r in results), findings, {}


HELP = {
    "validate": "check metric axioms and every section of a fibration spec",
    "check-hoelder": "certify the intrinsic (L, alpha) condition for a section",
    "min-constant": "least L for which a section is intrinsically (L, alpha)-Hölder",
    "cones": "list graph points inside graph-vertex cones; writes cones.svg",
    "wrt": "Hölder check of a section with respect to psi at a shared anchor",
    "norms": "both norms of a scaled family member",
    "lemma": "randomized scaling identity trials",
    "limits": "ratio tables of the parabola section at t",
    "asymmetry": "three-segment counterexample; writes three_segment.svg",
    "extend": "level-set extension of a partial graph; --csv writes extension.csv",
    "gen": "generate a scenario spec (scenario.json)",
    "suite": "run the acceptance battery",
}

COMMANDS = {
    "validate": cmd_validate,
    "check-hoelder": cmd_check_hoelder,
    "min-constant": cmd_min_constant,
    "cones": cmd_cones,
    "wrt": cmd_wrt,
    "norms": cmd_norms,
    "lemma": cmd_lemma,
    "limits": cmd_limits,
    "asymmetry": cmd_asymmetry,
    "extend": cmd_extend,
    "gen": cmd_gen,
    "suite": cmd_suite,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("spec_pos", nargs="?", metavar="SPEC", help="JSON spec path")
    common.add_argument("--spec", help="JSON spec path (alternative to SPEC)")
    common.add_argument("--out", help="directory for report.json and artifacts")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--trials", type=int, default=1000)
    common.add_argument("--L", type=float, default=1.0)
    common.add_argument("--alpha", type=float, default=1.0)
    common.add_argument("--lambda", dest="lam", type=float, default=1.0)
    common.add_argument("--resolution", type=int)
    common.add_argument("--section", default="phi")
    common.add_argument("--psi", default="psi")
    common.add_argument("--anchor")

    parser = argparse.ArgumentParser(prog="fiberlip", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=HELP[name])
        if name == "limits":
            p.add_argument("--t", type=float, default=0.0)
        elif name == "extend":
            p.add_argument("--csv", action="store_true")
        elif name == "gen":
            p.add_argument("--kind", required=True, choices=spaces.KINDS)
            p.add_argument("--param", action="append", metavar="KEY=JSON")
        elif name == "suite":
            p.add_argument("--only", help="comma-separated criterion numbers")
    return parser


def _digest(args) -> str:
    payload = {k: v for k, v in sorted(vars(args).items()) if k != "out"}
    path = args.spec or args.spec_pos
    if path and Path(path).is_file():
        payload["spec_sha256"] = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()


def _thread_limit():
    n = os.environ.get("FIBERLIP_THREADS")
    if not n:
        return contextlib.nullcontext()
    return threadpool_limits(int(n))


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        with _thread_limit():
            passed, findings, artifacts = COMMANDS[args.command](args)
    except (UsageError, FiberlipError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = {
        "schema": SCHEMA,
        "command": args.command,
        "inputs_digest": _digest(args),
        "passed": bool(passed),
        "findings": findings,
        "elapsed_ms": round(1000 * (time.perf_counter() - t0), 3),
    }
    print(canonical(findings))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(canonical(report) + "\n")
        for name, content in artifacts.items():
            (out / name).write_text(content)
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
