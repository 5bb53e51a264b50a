"""Conductor sweeps: configuration, per-handle records, summaries, reports and
class-table cross-checks."""

from __future__ import annotations

import configparser
import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import islice
from typing import Iterable, Iterator, Sequence

from .abelian_core import AbelianPGroup
from .arithmetic_ext import enumerate_extensions, handle_from_text, local_data_at, predict_rank
from .block_ring import IdempotentBlock, ie_exponent, nontrivial_blocks
from .charsum_lab import sqrt_log_threshold
from .selmer_engine import EXACT, hom_nr_certified

SCHEMA_VERSION = 1
SQRT_LOG = "sqrtlog"


class ConfigError(ValueError):
    pass


# -- configuration -------------------------------------------------------------------


@dataclass(frozen=True)
class ScanConfig:
    group: str = "3"
    block: str = "all"
    levels: tuple = (1,)
    bound: int = 1000
    threshold: str = SQRT_LOG
    workers: int = 1
    seed: int = 0
    csv_path: str = "scan.csv"
    json_path: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", tuple(sorted({int(d) for d in self.levels})))
        try:
            AbelianPGroup.parse(self.group)
        except ValueError as exc:
            raise ConfigError(f"bad group: {exc}") from exc
        if not self.levels or self.levels[0] < 1:
            raise ConfigError("levels must be positive integers")
        if self.bound < 1:
            raise ConfigError("bound must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.block != "all" and not self.block.isdigit():
            raise ConfigError("block must be 'all' or a block index")
        if self.threshold != SQRT_LOG:
            try:
                t = float(self.threshold)
            except ValueError as exc:
                raise ConfigError(f"threshold must be '{SQRT_LOG}' or a number >= 1") from exc
            if t < 1:
                raise ConfigError("threshold must be at least 1")
        for b in self.blocks():
            r = ie_exponent(b)
            if self.levels[-1] > r:
                raise ConfigError(f"level {self.levels[-1]} exceeds r = {r} for block {b.label}")

    @property
    def abelian_group(self) -> AbelianPGroup:
        return AbelianPGroup.parse(self.group)

    def blocks(self) -> list:
        blocks = nontrivial_blocks(self.abelian_group)
        if self.block == "all":
            return blocks
        i = int(self.block)
        if i >= len(blocks):
            raise ConfigError(f"block index {i} out of range (0..{len(blocks) - 1})")
        return [blocks[i]]

    def threshold_value(self) -> float:
        return sqrt_log_threshold(self.bound) if self.threshold == SQRT_LOG else float(self.threshold)

    @classmethod
    def from_text(cls, text: str) -> "ScanConfig":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        known = {"group": {"group", "block"}, "scan": {"levels", "bound", "threshold", "workers", "seed"}, "output": {"csv", "json"}}
        for section in cp.sections():
            if section not in known:
                raise ConfigError(f"unknown section [{section}]")
            extra = set(cp[section]) - known[section]
            if extra:
                raise ConfigError(f"unknown keys in [{section}]: {', '.join(sorted(extra))}")
        d = cls()
        try:
            return cls(
                group=cp.get("group", "group", fallback=d.group),
                block=cp.get("group", "block", fallback=d.block),
                levels=tuple(int(x) for x in cp.get("scan", "levels", fallback="1").split(",") if x.strip()),
                bound=cp.getint("scan", "bound", fallback=d.bound),
                threshold=cp.get("scan", "threshold", fallback=d.threshold),
                workers=cp.getint("scan", "workers", fallback=d.workers),
                seed=cp.getint("scan", "seed", fallback=d.seed),
                csv_path=cp.get("output", "csv", fallback=d.csv_path),
                json_path=cp.get("output", "json", fallback=d.json_path),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str) -> "ScanConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def to_text(self) -> str:
        return (
            "[group]\n"
            f"group = {self.group}\n"
            f"block = {self.block}\n"
            "\n[scan]\n"
            f"levels = {','.join(str(d) for d in self.levels)}\n"
            f"bound = {self.bound}\n"
            f"threshold = {self.threshold}\n"
            f"workers = {self.workers}\n"
            f"seed = {self.seed}\n"
            "\n[output]\n"
            f"csv = {self.csv_path}\n"
            f"json = {self.json_path}\n"
        )


# -- records -------------------------------------------------------------------------


def _join(xs: Iterable) -> str:
    return ";".join(str(x) for x in xs)


def _split(text: str, conv=int) -> tuple:
    return tuple(conv(x) for x in text.split(";")) if text else ()


@dataclass(frozen=True)
class ScanRecord:
    conductor: int
    encoding: str
    block: str
    levels: tuple
    special_counts: tuple
    constants: tuple
    predicted_ranks: tuple
    dual_vanishing: tuple
    certificate: str
    certified_sizes: tuple
    in_sharp: bool

    COLUMNS = (
        "conductor", "tuple", "block", "levels", "special_counts", "constants",
        "predicted_ranks", "dual_vanishing", "certificate", "certified_sizes", "in_sharp",
    )

    @property
    def key(self) -> tuple:
        return (self.conductor, self.encoding, self.block)

    @property
    def all_dual_vanishing(self) -> bool:
        return all(self.dual_vanishing)

    def read_off_ranks(self, p: int) -> tuple:
        """log_p size(d) - log_p size(d-1) for each level, None where undefined."""
        logs = {}
        for d, s in zip(self.levels, self.certified_sizes):
            logs[d] = _log_exact(s, p)
        logs.setdefault(0, 0)
        out = []
        for d in self.levels:
            lo = logs.get(d - 1)
            hi = logs[d]
            out.append(None if lo is None or hi is None else hi - lo)
        return tuple(out)

    def prediction_matches(self, p: int) -> bool:
        return all(r is not None and r == q for r, q in zip(self.read_off_ranks(p), self.predicted_ranks))

    def to_row(self) -> dict:
        return {
            "conductor": str(self.conductor),
            "tuple": self.encoding,
            "block": self.block,
            "levels": _join(self.levels),
            "special_counts": _join(self.special_counts),
            "constants": _join(self.constants),
            "predicted_ranks": _join(self.predicted_ranks),
            "dual_vanishing": _join(int(x) for x in self.dual_vanishing),
            "certificate": self.certificate,
            "certified_sizes": _join(self.certified_sizes),
            "in_sharp": str(int(self.in_sharp)),
        }

    @classmethod
    def from_row(cls, row: dict) -> "ScanRecord":
        return cls(
            conductor=int(row["conductor"]),
            encoding=row["tuple"],
            block=row["block"],
            levels=_split(row["levels"]),
            special_counts=_split(row["special_counts"]),
            constants=_split(row["constants"]),
            predicted_ranks=_split(row["predicted_ranks"]),
            dual_vanishing=tuple(bool(x) for x in _split(row["dual_vanishing"])),
            certificate=row["certificate"],
            certified_sizes=_split(row["certified_sizes"], Fraction),
            in_sharp=bool(int(row["in_sharp"])),
        )

    def to_json(self) -> dict:
        return {
            "conductor": self.conductor,
            "tuple": self.encoding,
            "block": self.block,
            "levels": list(self.levels),
            "special_counts": list(self.special_counts),
            "constants": list(self.constants),
            "predicted_ranks": list(self.predicted_ranks),
            "dual_vanishing": list(self.dual_vanishing),
            "certificate": self.certificate,
            "certified_sizes": [str(s) for s in self.certified_sizes],
            "in_sharp": self.in_sharp,
        }


def _log_exact(s: Fraction, p: int) -> int | None:
    if s.denominator != 1 or s.numerator < 1:
        return None
    n, k = s.numerator, 0
    while n % p == 0:
        n //= p
        k += 1
    return k if n == 1 else None


def in_sharp_family(handle, t: float) -> bool:
    """Every (a, b) with a != 0 collects tame primes of product > t."""
    A = handle.group
    prods = {(a, b): 1 for a in A.nonzero_elements() for b in A.elements()}
    for q in handle.ramified_primes:
        if q == A.p:
            continue
        data = local_data_at(handle, q)
        prods[(data.inertia, data.frob_part)] *= q
    return all(v > t for v in prods.values())


def compute_record(handle, block: IdempotentBlock, levels: Sequence[int], t: float) -> ScanRecord:
    preds = [predict_rank(handle, block, d) for d in levels]
    sizes = []
    duals: dict = {}
    cert = EXACT
    for d in levels:
        cs = hom_nr_certified(handle, block, d)
        sizes.append(cs.size)
        for k, o in enumerate(cs.dual_orders, start=1):
            duals[k] = o
        if cs.certificate != EXACT:
            cert = cs.certificate
    return ScanRecord(
        conductor=handle.conductor,
        encoding=handle.ext.encode(),
        block=block.label,
        levels=tuple(levels),
        special_counts=tuple(pr.special_count for pr in preds),
        constants=tuple(pr.constant for pr in preds),
        predicted_ranks=tuple(pr.rank for pr in preds),
        dual_vanishing=tuple(duals[d] == 1 for d in levels),
        certificate=cert,
        certified_sizes=tuple(sizes),
        in_sharp=in_sharp_family(handle, t),
    )


def _record_job(args) -> list:
    group_label, encoding, block_indices, levels, t = args
    A = AbelianPGroup.parse(group_label)
    blocks = nontrivial_blocks(A)
    handle = handle_from_text(A, encoding)
    return [compute_record(handle, blocks[i], levels, t) for i in block_indices]


def run_scan(config: ScanConfig, skip: frozenset = frozenset(), batch: int = 256) -> Iterator[ScanRecord]:
    """Records in (conductor, encoding, block) order; keys in ``skip`` are not recomputed."""
    A = config.abelian_group
    all_blocks = nontrivial_blocks(A)
    chosen = [all_blocks.index(b) for b in config.blocks()]
    t = config.threshold_value()

    def jobs() -> Iterator:
        for h in enumerate_extensions(A, config.bound):
            enc = h.ext.encode()
            todo = [i for i in chosen if (h.conductor, enc, all_blocks[i].label) not in skip]
            if todo:
                yield (config.group, enc, tuple(todo), config.levels, t)

    it = jobs()
    if config.workers == 1:
        for job in it:
            yield from _record_job(job)
        return
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        while True:
            chunk = list(islice(it, batch))
            if not chunk:
                break
            for recs in pool.map(_record_job, chunk):
                yield from recs


# -- summary -------------------------------------------------------------------------


@dataclass
class ScanSummary:
    p: int
    handles: int = 0
    records: int = 0
    all_dual_vanishing: int = 0
    prediction_matches: int = 0
    exact: int = 0
    in_sharp: int = 0
    _seen: set = field(default_factory=set, repr=False)

    def add(self, rec: ScanRecord) -> None:
        self.records += 1
        key = (rec.conductor, rec.encoding)
        if key not in self._seen:
            self._seen.add(key)
            self.handles += 1
            self.in_sharp += rec.in_sharp
        self.all_dual_vanishing += rec.all_dual_vanishing
        self.prediction_matches += rec.prediction_matches(self.p)
        self.exact += rec.certificate == EXACT

    @staticmethod
    def _ratio(n: int, d: int) -> float:
        return n / d if d else 0.0

    def to_json(self) -> dict:
        return {
            "handles": self.handles,
            "records": self.records,
            "all_dual_vanishing_proportion": self._ratio(self.all_dual_vanishing, self.records),
            "prediction_match_proportion": self._ratio(self.prediction_matches, self.records),
            "exact_proportion": self._ratio(self.exact, self.records),
            "sharp_fraction": self._ratio(self.in_sharp, self.handles),
        }


def summarize(records: Iterable[ScanRecord], p: int) -> ScanSummary:
    s = ScanSummary(p)
    for r in records:
        s.add(r)
    return s


# -- reports -------------------------------------------------------------------------


def write_csv(records: Iterable[ScanRecord], out) -> int:
    w = csv.DictWriter(out, fieldnames=ScanRecord.COLUMNS, lineterminator="\n")
    w.writeheader()
    n = 0
    for r in records:
        w.writerow(r.to_row())
        n += 1
    return n


def read_csv(path: str) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return [ScanRecord.from_row(row) for row in csv.DictReader(fh)]


def json_document(config: ScanConfig | None, records: Sequence[ScanRecord], summary: ScanSummary) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": None if config is None else config.to_text(),
        "summary": summary.to_json(),
        "records": [r.to_json() for r in records],
    }


def dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _existing_rows(path: str) -> list:
    """Complete rows of a partial scan; a torn final line is dropped."""
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    if not text.endswith("\n"):
        text = text[: text.rfind("\n") + 1]
    rows = list(csv.DictReader(io.StringIO(text)))
    return [ScanRecord.from_row(r) for r in rows]


def scan_to_files(config: ScanConfig, resume: bool = False) -> ScanSummary:
    """Stream records into the configured CSV (resuming a partial file when
    asked), then write the JSON document if configured."""
    p = config.abelian_group.p
    summary = ScanSummary(p)
    done: list = []
    if resume and config.csv_path and os.path.exists(config.csv_path):
        done = _existing_rows(config.csv_path)
        with open(config.csv_path, "w", encoding="utf-8", newline="") as fh:
            write_csv(done, fh)
    elif config.csv_path:
        with open(config.csv_path, "w", encoding="utf-8", newline="") as fh:
            csv.DictWriter(fh, fieldnames=ScanRecord.COLUMNS, lineterminator="\n").writeheader()
    for r in done:
        summary.add(r)
    keep_all = bool(config.json_path)
    collected = list(done) if keep_all else []
    skip = frozenset(r.key for r in done)
    out = open(config.csv_path, "a", encoding="utf-8", newline="") if config.csv_path else None
    try:
        w = csv.DictWriter(out, fieldnames=ScanRecord.COLUMNS, lineterminator="\n") if out else None
        for rec in run_scan(config, skip):
            summary.add(rec)
            if w:
                w.writerow(rec.to_row())
                out.flush()
            if keep_all:
                collected.append(rec)
    finally:
        if out:
            out.close()
    if config.json_path:
        collected.sort(key=lambda r: r.key)
        with open(config.json_path, "w", encoding="utf-8") as fh:
            fh.write(dump_json(json_document(config, collected, summary)))
    return summary


# -- class-table ingestion -----------------------------------------------------------

MATCH = "MATCH"
MISMATCH = "MISMATCH"
UNCOVERED = "UNCOVERED"
MANDATORY = ("conductor", "label", "invariants")


class TableError(ValueError):
    pass


@dataclass(frozen=True)
class ClassTableRow:
    conductor: int
    label: str
    invariants: tuple

    def p_rank(self, p: int) -> int:
        return sum(1 for n in self.invariants if n % p == 0)


@dataclass(frozen=True)
class IngestResult:
    rows: tuple
    errors: tuple

    @property
    def table(self) -> dict:
        return {(r.conductor, r.label): r for r in self.rows}


def ingest_class_table(path: str) -> IngestResult:
    """Rows keyed by (conductor, label); bad rows are collected, not raised."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise TableError(f"cannot read {path}: {exc}") from exc
    if not text.strip():
        return IngestResult((), ())
    try:
        dialect = csv.Sniffer().sniff(text.splitlines()[0], delimiters=",;\t|")
    except csv.Error:
        dialect = csv.excel
    reader = csv.DictReader(io.StringIO(text), dialect=dialect)
    header = [h.strip().lower() for h in (reader.fieldnames or [])]
    missing = [c for c in MANDATORY if c not in header]
    if missing:
        raise TableError(f"missing columns: {', '.join(missing)}")
    reader.fieldnames = header
    rows, errors = [], []
    for lineno, raw in enumerate(reader, start=2):
        try:
            inv_text = (raw["invariants"] or "").strip().strip("[]()")
            invariants = tuple(int(x) for x in inv_text.replace(";", ",").split(",") if x.strip())
            if any(n < 1 for n in invariants):
                raise ValueError("invariant factors must be positive")
            label = (raw["label"] or "").strip()
            if not label:
                raise ValueError("empty label")
            rows.append(ClassTableRow(int(raw["conductor"]), label, invariants))
        except (ValueError, TypeError, AttributeError) as exc:
            errors.append((lineno, str(exc)))
    return IngestResult(tuple(rows), tuple(errors))


@dataclass(frozen=True)
class Comparison:
    conductor: int
    label: str
    observed: int
    predicted: int | None
    verdict: str


def compare_with_scan(table: IngestResult, records: Sequence[ScanRecord], p: int) -> list:
    """Compare the p-rank of each class group with the level-1 predicted rank.

    A row matches a record by label equal to the tuple encoding; otherwise by
    conductor when every record there predicts the same rank.
    """
    by_conductor: dict = {}
    for r in records:
        if 1 in r.levels:
            by_conductor.setdefault(r.conductor, []).append(r)
    out = []
    for row in sorted(table.rows, key=lambda r: (r.conductor, r.label)):
        recs = by_conductor.get(row.conductor, [])
        chosen = [r for r in recs if r.encoding == row.label] or recs
        preds = {r.predicted_ranks[r.levels.index(1)] for r in chosen}
        observed = row.p_rank(p)
        if len(preds) != 1:
            out.append(Comparison(row.conductor, row.label, observed, None, UNCOVERED))
            continue
        pred = preds.pop()
        out.append(Comparison(row.conductor, row.label, observed, pred, MATCH if pred == observed else MISMATCH))
    return out


def write_comparisons(comps: Sequence[Comparison], out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["conductor", "label", "observed_rank", "predicted_rank", "verdict"])
    for c in comps:
        w.writerow([c.conductor, c.label, c.observed, "" if c.predicted is None else c.predicted, c.verdict])
