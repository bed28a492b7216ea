"""Command line front end: synth / verify / dump.

    cfspectra synth  --config c.json --out DIR
    cfspectra verify --bundle DIR [--suite all|algebra|weaklimits|mixing|multiplicity]
    cfspectra dump   --bundle DIR --what spectra|decay|report [--format json|csv] [--out FILE]

Verify exit codes: 0 all gated checks pass, 2 algebra, 3 weak limits,
4 mixing trend, 5 multiplicity (first failing suite in that order).
A verify run also writes its suite reports next to the bundle
(verify_report.json, or the --report path).

Bundle layout (canonical JSON, schema_version fields throughout):

    config.json    the SessionConfig the bundle was built from
    algebra.json   targets, depth, module orders, generator images of the
                   acting automorphism, distinguished-subgroup coordinates /
                   generators (and elements when small), tower group orders,
                   annihilator size and coordinates
    schedule.json  per-stage base height, cuts, i/r parameters, shape kind,
                   regime tags, rigidity fraction and block index
    cocycle.json   per-stage labels and the beta/alpha tables on the cuts
    manifest.json  sha256 over the four payload files

Dump formats: spectra and report as JSON; decay as CSV with columns
lag, pairId, value_numerator, value_denominator (exact fractions).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .cf_builder import validate
from .cocycle_engine import LABEL_PLAIN, LABEL_RIGID_ROTATE
from .errors import CfspectraError
from .finite_algebra import orbit_trace_counts, verify_subgroup
from .koopman_lab import (
    build_component,
    correlation_decay,
    decay_csv,
    exact_spectrum,
    multiplicity_report,
    sample_lags,
    weak_limit_probe,
)
from .session import (
    SessionConfig,
    canonical_json,
    load_bundle,
    save_bundle,
    stored_documents,
    synth,
)

EXIT_OK = 0
EXIT_ALGEBRA = 2
EXIT_WEAKLIMITS = 3
EXIT_MIXING = 4
EXIT_MULTIPLICITY = 5

SUITES = ("algebra", "weaklimits", "mixing", "multiplicity")
_SUITE_EXIT = {
    "algebra": EXIT_ALGEBRA,
    "weaklimits": EXIT_WEAKLIMITS,
    "mixing": EXIT_MIXING,
    "multiplicity": EXIT_MULTIPLICITY,
}


# ---------------------------------------------------------------------------
# verify suites; each returns (passed, report dict)
# ---------------------------------------------------------------------------


def _suite_algebra(session, stored):
    notes = []
    triple = session.triple
    alg = stored.get("algebra.json", {})
    # the stored subgroup must be an honest subgroup whose trace counts
    # still match the stored targets
    if "d_elements" in alg:
        d_set = frozenset(tuple(v) for v in alg["d_elements"])
    else:
        gens = [tuple(v) for v in alg.get("d_generators", [])]
        from .finite_algebra import subgroup_from_generators

        d_set = subgroup_from_generators(triple.module, gens) if gens else frozenset(
            triple.d_elements()
        )
    verify_subgroup(triple.module, d_set)
    counts = orbit_trace_counts(triple.action, d_set)
    targets = set(alg.get("targets", triple.targets))
    if counts != targets:
        raise CfspectraError(
            f"stored subgroup traces {sorted(counts)} != targets {sorted(targets)}"
        )
    if alg and tuple(tuple(v) for v in alg.get("theta_images", [])) != triple.theta.images:
        raise CfspectraError("stored automorphism differs from the rebuilt one")
    dual = session.duality
    if dual.annihilator_size * triple.d_size() != triple.module.size:
        raise CfspectraError("annihilator size bookkeeping broken")
    notes.append(f"trace counts {sorted(counts)} match targets")
    rep = validate(session.schedule, session.config.ratio_bound)
    if not rep.ok:
        raise CfspectraError("schedule validation failed: " + "; ".join(rep.failures))
    notes.append("schedule validation clean")
    return True, {"notes": notes, "validation": rep.to_dict()}


def _probe_stages(session):
    """Highest feasible stage per labelled class kind."""
    chosen = {}
    cap = session.config.state_cap
    for n in range(session.schedule.depth, 0, -1):
        label = session.label(n)
        if label.kind == LABEL_PLAIN or label.kind in chosen:
            continue
        if session.schedule.height(n) > cap:
            continue
        chosen[label.kind] = n
    return chosen


def _suite_weaklimits(session, stored):
    reports = []
    failed = []
    chosen = _probe_stages(session)
    if not chosen:
        return True, {"notes": ["no labelled stages; nothing to probe"], "reports": []}
    for kind, n in sorted(chosen.items()):
        probes = [("eta", 0)]
        if kind == LABEL_RIGID_ROTATE:
            probes.append(("eta", 1 % session.k_order))
        else:
            # skew-tower probe against the first nonzero factor character
            nonzero = [d for d in session.factor_characters()
                       if any(d)]
            if nonzero and session.schedule.height(n) * session.k_order <= session.config.state_cap:
                probes.append(("chi", nonzero[0]))
        for component in probes:
            rep = weak_limit_probe(session, n, component)
            reports.append(rep.to_dict())
            if not rep.passed:
                failed.append(
                    f"stage {n} {component}: {rep.max_deviation:.4g} > {rep.tolerance:.4g}"
                )
    return not failed, {"failed": failed, "reports": reports}


def _suite_mixing(session, stored):
    cfg = session.config
    sched = session.schedule
    depth = sched.depth
    rep = validate(sched, cfg.ratio_bound)
    quantities = rep.mixing_ratios
    trend_ok = rep.mixing_trend_ok
    model = session.model()
    n_cyl = sched.height(cfg.cylinder_level)
    pairs = [(f, g) for f in range(n_cyl) for g in range(n_cyl)]
    h_early, h_late = sched.height(1), sched.height(depth - 1)
    early = correlation_decay(model, pairs, sample_lags(h_early, 2 * h_early),
                              cfg.cylinder_level)
    late_hi = min(2 * h_late, model.height - 1)
    late = correlation_decay(model, pairs, sample_lags(h_late, late_hi),
                             cfg.cylinder_level)
    e_max = max(float(r.value) for r in early)
    l_max = max(float(r.value) for r in late)
    decayed = l_max <= 0.5 * e_max
    doc = {
        "early_window": [h_early, 2 * h_early],
        "late_window": [h_late, late_hi],
        "early_max": e_max,
        "late_max": l_max,
        "decayed": decayed,
        "mixing_ratios": [[q.numerator, q.denominator] for q in quantities],
        "trend_nonincreasing": trend_ok,
    }
    if not decayed:
        doc["diagnostic"] = (
            f"no decay: late max {l_max:.4g} vs early max {e_max:.4g}; "
            "the schedule has no effective staircase part"
        )
    return decayed and trend_ok, doc


def _suite_multiplicity(session, stored):
    depth = min(session.schedule.depth, _spectra_depth_cap(session))
    report = multiplicity_report(session, spectra_depth=depth)
    ok = report.consistent
    expected = set(session.config.targets)
    if report.multiplicities != expected:
        ok = False
    all_verdicts = all(
        all(v.values()) for v in report.equivalence_verdicts.values()
    )
    certs_ok = all(not c.equivalent for c in report.certificates.values())
    doc = report.to_dict()
    doc["expected"] = sorted(expected)
    doc["equivalence_all_equal"] = all_verdicts
    doc["certificates_all_separating"] = certs_ok
    return ok and all_verdicts and certs_ok, doc


def _spectra_depth_cap(session):
    if session.config.spectra_depth is not None:
        return min(session.config.spectra_depth, session.schedule.depth)
    cap = session.config.state_cap
    kappa = session.k_order
    depth = 0
    for n in range(1, session.schedule.depth + 1):
        if session.schedule.height(n) * kappa <= cap:
            depth = n
    return max(depth, 1)


_SUITE_FUNCS = {
    "algebra": _suite_algebra,
    "weaklimits": _suite_weaklimits,
    "mixing": _suite_mixing,
    "multiplicity": _suite_multiplicity,
}


def run_verify(bundle_dir, suites) -> tuple[int, dict]:
    try:
        stored = stored_documents(bundle_dir)
        session = load_bundle(bundle_dir)
    except (CfspectraError, OSError, json.JSONDecodeError, KeyError) as exc:
        return EXIT_ALGEBRA, {"error": f"bundle failed to load: {exc}"}
    results = {}
    exit_code = EXIT_OK
    for suite in suites:
        try:
            passed, doc = _SUITE_FUNCS[suite](session, stored)
        except CfspectraError as exc:
            passed, doc = False, {"error": str(exc)}
        results[suite] = {"passed": passed, "detail": doc}
        if not passed and exit_code == EXIT_OK:
            exit_code = _SUITE_EXIT[suite]
    return exit_code, results


# ---------------------------------------------------------------------------
# dump
# ---------------------------------------------------------------------------


def dump_spectra(session) -> dict:
    depth = _spectra_depth_cap(session)
    out = {"schema_version": 1, "depth": depth, "components": []}
    for e in range(session.k_order):
        chi = session.triple.k_group
        from .finite_algebra import Character

        spec = exact_spectrum(
            build_component(session, Character(chi, (e,)), depth)
        )
        out["components"].append({"kind": "eta", "eta": e, "spectrum": spec.to_dict()})
    for d in session.factor_characters():
        spec = exact_spectrum(
            build_component(session, session.duality.character_of_dual(d), depth)
        )
        out["components"].append({"kind": "chi", "d": list(d), "spectrum": spec.to_dict()})
    return out


def dump_decay(session) -> list:
    cfg = session.config
    model = session.model()
    n_cyl = session.schedule.height(cfg.cylinder_level)
    pairs = [(f, g) for f in range(n_cyl) for g in range(n_cyl)]
    depth = session.schedule.depth
    lags = []
    for n in range(1, depth):
        h = session.schedule.height(n)
        hi = min(2 * h, model.height - 1)
        lags.extend(sample_lags(h, hi, count=8))
    lags = sorted(set(lags))
    return correlation_decay(model, pairs, lags, cfg.cylinder_level)


def run_dump(bundle_dir, what, fmt, out_path):
    session = load_bundle(bundle_dir)
    if what == "spectra":
        text = canonical_json(dump_spectra(session))
    elif what == "decay":
        rows = dump_decay(session)
        if fmt == "csv":
            text = decay_csv(rows)
        else:
            text = canonical_json(
                [{"lag": r.lag, "pair": list(r.pair),
                  "num": r.value.numerator, "den": r.value.denominator}
                 for r in rows]
            )
    elif what == "report":
        depth = _spectra_depth_cap(session)
        text = canonical_json(multiplicity_report(session, spectra_depth=depth).to_dict())
    else:
        raise CfspectraError(f"nothing to dump for {what!r}")
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cfspectra", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("synth", help="build a bundle from a config")
    ps.add_argument("--config", required=True)
    ps.add_argument("--out", required=True)

    pv = sub.add_parser("verify", help="run verification suites on a bundle")
    pv.add_argument("--bundle", required=True)
    pv.add_argument("--suite", default="all", choices=("all",) + SUITES)
    pv.add_argument("--report", help="write the suite reports to this JSON file")

    pd = sub.add_parser("dump", help="export spectra, decay tables or the report")
    pd.add_argument("--bundle", required=True)
    pd.add_argument("--what", required=True, choices=("spectra", "decay", "report"))
    pd.add_argument("--format", default="json", choices=("json", "csv"))
    pd.add_argument("--out")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            config = SessionConfig.from_json(Path(args.config).read_text())
            session = synth(config)
            save_bundle(session, args.out)
            print(f"bundle written to {args.out}")
            return EXIT_OK
        if args.command == "verify":
            suites = SUITES if args.suite == "all" else (args.suite,)
            code, results = run_verify(args.bundle, suites)
            report_path = Path(args.report) if args.report else (
                Path(args.bundle) / "verify_report.json"
            )
            try:
                report_path.write_text(canonical_json(results))
            except OSError:
                pass  # a missing bundle directory already failed above
            for suite in suites:
                res = results.get(suite)
                status = "PASS" if res and res["passed"] else "FAIL"
                print(f"{suite}: {status}")
            if "error" in results:
                print(results["error"])
            return code
        if args.command == "dump":
            return run_dump(args.bundle, args.what, args.format, args.out)
    except CfspectraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
