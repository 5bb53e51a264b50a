"""statgenus command-line interface.

Exit codes: 0 success (statistical shortfalls included), 1 mismatch in a
comparison run without --lenient, 2 usage or configuration error, 3 a failed
exact identity.
"""

from __future__ import annotations

import argparse
import csv
import json
import random
import sys

from .abelian_core import AbelianPGroup
from .arithmetic_ext import (
    admissible_conductors,
    enumerate_extensions,
    handle_from_text,
    predict_rank,
    special_primes,
    tuples_with_primes,
)
from .block_ring import ie_exponent, mj_module, nontrivial_blocks
from .charsum_lab import (
    UnlinkedLab,
    canonical_unlinked_sets,
    charsum_outer_sum,
    classify_maximal_unlinked,
    classify_pairs,
    detector_identity_per_extension,
    sqrt_log_threshold,
)
from .cohomology import cohomology_group, constant_C, n_typical
from .scan import (
    MISMATCH,
    SQRT_LOG,
    ConfigError,
    ScanConfig,
    TableError,
    compare_with_scan,
    dump_json,
    ingest_class_table,
    json_document,
    read_csv,
    scan_to_files,
    summarize,
    write_comparisons,
    write_csv,
)
from .selmer_engine import DualityError, hom_nr_certified, rank_read_off

OK, MISMATCH_EXIT, USAGE, IDENTITY_FAILURE = 0, 1, 2, 3


def _group(text: str) -> AbelianPGroup:
    try:
        return AbelianPGroup.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _blocks(A: AbelianPGroup, selector: str) -> list:
    blocks = nontrivial_blocks(A)
    if selector == "all":
        return blocks
    i = int(selector)
    if not 0 <= i < len(blocks):
        raise ConfigError(f"block index {i} out of range (0..{len(blocks) - 1})")
    return [blocks[i]]


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _open_out(path: str | None):
    if not path or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


# -- subcommands ---------------------------------------------------------------------


def cmd_enumerate(args) -> int:
    A = args.group
    out, close = _open_out(args.out)
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["conductor", "tuple", "surjective"])
        if args.all:
            for f, primes in admissible_conductors(A.p, args.bound):
                for t in tuples_with_primes(A, primes, surjective_only=False):
                    w.writerow([f, t.encode(), int(t.is_surjective)])
        else:
            for h in enumerate_extensions(A, args.bound):
                w.writerow([h.conductor, h.ext.encode(), 1])
    finally:
        if close:
            out.close()
    return OK


def cmd_ring_info(args) -> int:
    A = args.group
    rows = []
    for i, b in enumerate(nontrivial_blocks(A)):
        r = ie_exponent(b)
        levels = [args.level] if args.level else range(1, r + 1)
        for j in levels:
            if j > r:
                raise ConfigError(f"level {j} exceeds r = {r} for block {b.label}")
            M = mj_module(b, j)
            rows.append({"block": i, "label": b.label, "ramification_index": b.ramification_index,
                         "r": r, "level": j, "order": M.order, "exponent": M.exponent})
    _emit({"group": A.label, "blocks": rows})
    return OK


def cmd_cohomology(args) -> int:
    A = args.group
    out = []
    for b in _blocks(A, args.block):
        H = cohomology_group(args.degree, A, mj_module(b, args.level))
        out.append({"block": b.label, "level": args.level, "degree": args.degree,
                    "order": H.order, "invariants": list(H.invariants)})
    _emit({"group": A.label, "groups": out})
    return OK


def cmd_constant(args) -> int:
    A = args.group
    out = []
    for b in _blocks(A, args.block):
        out.append({"block": b.label, "level": args.level,
                    "n_typical_order": n_typical(A, mj_module(b, args.level)).order,
                    "constant": constant_C(A, b, args.level)})
    _emit({"group": A.label, "constants": out})
    return OK


def cmd_special_primes(args) -> int:
    A = args.group
    h = handle_from_text(A, args.tuple)
    out = []
    for b in _blocks(A, args.block):
        sp = special_primes(h, b, args.level)
        out.append({"block": b.label, "level": args.level, "special": sorted(sp.special),
                    "max_levels": {str(v): i for v, i in sorted(sp.max_levels.items())}})
    _emit({"group": A.label, "tuple": h.ext.encode(), "conductor": h.conductor, "blocks": out})
    return OK


def cmd_predict(args) -> int:
    A = args.group
    h = handle_from_text(A, args.tuple)
    out = []
    for b in _blocks(A, args.block):
        pr = predict_rank(h, b, args.level)
        cs = hom_nr_certified(h, b, args.level)
        out.append({"block": b.label, "level": args.level, "predicted_rank": pr.rank,
                    "special_count": pr.special_count, "constant": pr.constant,
                    "certified_size": str(cs.size), "certificate": cs.certificate,
                    "dual_orders": list(cs.dual_orders), "read_off_rank": rank_read_off(h, b, args.level)})
    _emit({"group": A.label, "tuple": h.ext.encode(), "conductor": h.conductor, "blocks": out})
    return OK


def _scan_config(args) -> ScanConfig:
    base = ScanConfig.from_file(args.config) if args.config else ScanConfig()
    updates = {}
    for key, attr in (("group", "group"), ("block", "block"), ("bound", "bound"), ("threshold", "threshold"),
                      ("workers", "workers"), ("seed", "seed"), ("csv", "csv_path"), ("json", "json_path")):
        v = getattr(args, key)
        if v is not None:
            updates[attr] = v
    if args.levels:
        updates["levels"] = tuple(int(x) for x in args.levels.split(","))
    fields = {k: getattr(base, k) for k in ("group", "block", "levels", "bound", "threshold", "workers", "seed", "csv_path", "json_path")}
    fields.update(updates)
    return ScanConfig(**fields)


def cmd_selmer_scan(args) -> int:
    config = _scan_config(args)
    if args.print_config:
        sys.stdout.write(config.to_text())
        return OK
    summary = scan_to_files(config, resume=args.resume)
    _emit({"summary": summary.to_json()})
    return OK


def cmd_charsum(args) -> int:
    A = args.group
    blocks = _blocks(A, args.block)
    verdicts = []
    failed = False
    out, close = _open_out(args.csv) if args.csv else (None, False)
    try:
        w = csv.writer(out, lineterminator="\n") if out else None
        if args.mode == "per-extension":
            if w:
                w.writerow(["block", "level", "conductor", "tuple", "lhs", "rhs"])
            for b in blocks:
                if args.level > ie_exponent(b):
                    raise ConfigError(f"level {args.level} exceeds r for block {b.label}")
                n = bad = 0
                for h in enumerate_extensions(A, args.bound):
                    rep = detector_identity_per_extension(h, b, args.level, strict=False)
                    n += 1
                    bad += not rep.holds
                    if w:
                        w.writerow([b.label, args.level, h.conductor, h.ext.encode(), rep.lhs, rep.rhs])
                verdicts.append({"block": b.label, "handles": n, "mismatches": bad})
                failed |= bad > 0
        else:
            t = sqrt_log_threshold(args.bound) if args.threshold == SQRT_LOG else float(args.threshold)
            if w:
                w.writerow(["block", "level", "bound", "threshold", "members", "lhs", "rhs"])
            for b in blocks:
                rep = charsum_outer_sum(A, b, args.level, args.bound, t, strict=False)
                if w:
                    w.writerow([b.label, args.level, args.bound, t, rep.members, rep.lhs, rep.rhs])
                verdicts.append({"block": b.label, "members": rep.members, "lhs": rep.lhs, "rhs": rep.rhs, "holds": rep.holds})
                failed |= not rep.holds
    finally:
        if close:
            out.close()
    _emit({"group": A.label, "level": args.level, "mode": args.mode, "ok": not failed, "results": verdicts})
    return IDENTITY_FAILURE if failed else OK


def cmd_unlinked(args) -> int:
    A = args.group
    rng = random.Random(args.seed)
    results = []
    failed = False
    for b in _blocks(A, args.block):
        lab = UnlinkedLab(A, classify_pairs(A, b, args.level))
        canon = canonical_unlinked_sets(lab)
        canon_report = []
        for key, S in canon.items():
            m = lab.mask(S)
            canon_report.append({"set": "U" if key == "U" else f"U_f f={list(key)}", "size": len(S),
                                 "unlinked": lab.is_unlinked(m), "maximal": lab.is_maximal_unlinked(m)})
        failed |= not all(c["unlinked"] and c["maximal"] for c in canon_report)
        twisted = {k: S for k, S in canon.items() if k != "U"}
        counts: dict = {}
        no_verdict = 0
        weight_violations = 0
        U = canon["U"]
        bound = lab.weight_bound()
        for i in range(args.samples):
            m = lab.random_maximal(rng, plain_bias=i % 2 == 0)
            v = classify_maximal_unlinked(lab, m, twisted)
            label = "+".join(v.labels) or "none"
            counts[label] = counts.get(label, 0) + 1
            no_verdict += not v.ok
            if lab.members(m) != U and not lab.weight(m) < bound:
                weight_violations += 1
        failed |= no_verdict > 0 or weight_violations > 0
        results.append({"block": b.label, "entries": len(lab.entries), "canonical": canon_report,
                        "samples": args.samples, "verdicts": dict(sorted(counts.items())),
                        "no_verdict": no_verdict, "weight_violations": weight_violations,
                        "weight_bound": str(bound)})
    _emit({"group": A.label, "level": args.level, "seed": args.seed, "ok": not failed, "results": results})
    return IDENTITY_FAILURE if failed else OK


def cmd_ingest(args) -> int:
    table = ingest_class_table(args.table)
    records = read_csv(args.scan) if args.scan else []
    p = args.group.p
    comps = compare_with_scan(table, records, p)
    out, close = _open_out(args.out)
    try:
        write_comparisons(comps, out)
    finally:
        if close:
            out.close()
    for lineno, msg in table.errors:
        sys.stderr.write(f"line {lineno}: {msg}\n")
    mismatches = sum(c.verdict == MISMATCH for c in comps)
    return OK if args.lenient or mismatches == 0 else MISMATCH_EXIT


def cmd_report(args) -> int:
    records = sorted(read_csv(args.scan), key=lambda r: r.key)
    p = args.group.p
    summary = summarize(records, p)
    out, close = _open_out(args.out)
    try:
        if args.format == "csv":
            write_csv(records, out)
        else:
            out.write(dump_json(json_document(None, records, summary)))
    finally:
        if close:
            out.close()
    return OK


# -- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="statgenus", description="Ranks and Selmer statistics of abelian p-extensions of Q.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_text: str, group: bool = True) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_text)
        sp.set_defaults(func=func)
        if group:
            sp.add_argument("--group", type=_group, required=True, help="abelian p-group, e.g. 3, 9, 3x3")
        return sp

    sp = add("enumerate", cmd_enumerate, "list A-extensions by conductor")
    sp.add_argument("--bound", type=int, required=True)
    sp.add_argument("--out", help="CSV path (stdout when omitted)")
    sp.add_argument("--all", action="store_true", help="include non-surjective tuples")

    sp = add("ring-info", cmd_ring_info, "blocks of Z_p[A] and the modules M_j")
    sp.add_argument("--level", type=int)

    sp = add("cohomology", cmd_cohomology, "H^n(A, M_j)")
    sp.add_argument("--block", default="all")
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--degree", type=int, required=True)

    sp = add("constant", cmd_constant, "the rank-formula constant C")
    sp.add_argument("--block", default="all")
    sp.add_argument("--level", type=int, required=True)

    for name, func, text in (("special-primes", cmd_special_primes, "special primes of one extension"),
                             ("predict", cmd_predict, "predicted rank and certified size")):
        sp = add(name, func, text)
        sp.add_argument("--tuple", required=True, help="tuple encoding, e.g. '1:7;2:13'")
        sp.add_argument("--block", default="all")
        sp.add_argument("--level", type=int, required=True)

    sp = add("selmer-scan", cmd_selmer_scan, "conductor sweep with per-handle records", group=False)
    sp.add_argument("--config")
    sp.add_argument("--group")
    sp.add_argument("--block")
    sp.add_argument("--levels", help="comma-separated levels")
    sp.add_argument("--bound", type=int)
    sp.add_argument("--threshold")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--csv")
    sp.add_argument("--json")
    sp.add_argument("--resume", action="store_true")
    sp.add_argument("--print-config", action="store_true", help="print the canonical configuration and exit")

    sp = add("charsum", cmd_charsum, "character-sum identities")
    sp.add_argument("--block", default="all")
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--bound", type=int, required=True)
    sp.add_argument("--mode", choices=("per-extension", "outer"), default="per-extension")
    sp.add_argument("--threshold", default="1", help="number >= 1, or 'sqrtlog' for exp(sqrt(log X))")
    sp.add_argument("--csv")

    sp = add("unlinked", cmd_unlinked, "canonical and random maximal unlinked sets")
    sp.add_argument("--block", default="all")
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("ingest", cmd_ingest, "compare a class-group table with scan records")
    sp.add_argument("--table", required=True)
    sp.add_argument("--scan")
    sp.add_argument("--out")
    sp.add_argument("--lenient", action="store_true", help="exit 0 even on mismatches")

    sp = add("report", cmd_report, "re-emit a scan as CSV or JSON")
    sp.add_argument("--scan", required=True)
    sp.add_argument("--format", choices=("csv", "json"), default="json")
    sp.add_argument("--out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DualityError as exc:
        sys.stderr.write(f"identity failure: {exc}\n")
        return IDENTITY_FAILURE
    except (ConfigError, TableError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
