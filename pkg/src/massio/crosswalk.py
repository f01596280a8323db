"""HS -> NAICS -> BEA concordance translation and trade aggregation.

Concordance CSVs are parsed into validated mappings, composed eagerly into
a single HS -> BEA table, and used to fan import rows out to industry
groupings. A code mapping to k targets splits its value with share 1/k
unless the file carries explicit shares.

All money/weight arithmetic uses exact rationals (fractions.Fraction built
from the decimal strings in the files), so the conservation property --
per-sector totals plus the unmapped bucket equal the input totals -- holds
exactly, not approximately. Unmapped codes are never errors; they
accumulate into a reported bucket.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .errors import EmptyFile, EncodingError, MalformedCode, SchemaViolation
from .prices import IndustryTradeAggregate

_HS_RE = re.compile(r"^\d{6}$")
_NAICS_RE = re.compile(r"^\d+$")
_NAICS_LENGTHS = frozenset({2, 3, 4, 6})
_BEA_RE = re.compile(r"^[0-9A-Za-z]+$")


def validate_code(code: str, kind: str) -> str:
    """Validate one classification code; kind is 'hs', 'naics' or 'bea'."""
    code = code.strip()
    if kind == "hs":
        if not _HS_RE.match(code):
            raise MalformedCode(f"HS code must be exactly 6 digits, got {code!r}")
    elif kind == "naics":
        if not _NAICS_RE.match(code) or len(code) not in _NAICS_LENGTHS:
            raise MalformedCode(
                f"NAICS code must be 2, 3, 4 or 6 digits, got {code!r}"
            )
    elif kind == "bea":
        if not _BEA_RE.match(code):
            raise MalformedCode(f"BEA code must be alphanumeric, got {code!r}")
    else:
        raise ValueError(f"unknown code kind {kind!r}")
    return code


def as_fraction(value) -> Fraction:
    """Exact rational from a decimal string, int, Decimal or Fraction.

    Floats go through their shortest decimal repr, so 0.1 becomes 1/10.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        value = repr(value)
    try:
        return Fraction(Decimal(str(value)))
    except (InvalidOperation, ValueError) as exc:
        raise ValueError(f"not a decimal number: {value!r}") from exc


@dataclass(frozen=True, order=True)
class TradeRecord:
    hs: str
    cif_usd: Fraction
    net_weight_kg: Fraction


@dataclass(frozen=True, order=True)
class DutyRecord:
    hs: str
    duty_usd: Fraction


@dataclass(frozen=True)
class Concordance:
    """Directed code mapping with per-source shares summing to one."""

    label: str
    source_kind: str
    target_kind: str
    entries: Mapping[str, tuple[tuple[str, Fraction], ...]]
    warnings: tuple[str, ...] = ()

    def targets(self, source: str) -> tuple[tuple[str, Fraction], ...]:
        return self.entries.get(source, ())


def build_concordance(
    pairs: Iterable[tuple[str, str] | tuple[str, str, Fraction]],
    *,
    source_kind: str,
    target_kind: str,
    label: str = "<memory>",
) -> Concordance:
    """Concordance from (source, target[, share]) tuples.

    Rows without a share split equally over the source's targets; explicit
    shares must sum to exactly 1 per source. Duplicate (source, target)
    pairs collapse with a warning.
    """
    by_source: dict[str, dict[str, Fraction | None]] = {}
    warnings: list[str] = []
    for row in pairs:
        src = validate_code(row[0], source_kind)
        tgt = validate_code(row[1], target_kind)
        share = as_fraction(row[2]) if len(row) > 2 and row[2] is not None else None
        targets = by_source.setdefault(src, {})
        if tgt in targets:
            if targets[tgt] != share:
                raise SchemaViolation(
                    f"conflicting shares for mapping {src!r} -> {tgt!r}",
                    path=label,
                )
            warnings.append(f"duplicate mapping {src!r} -> {tgt!r} dropped")
            continue
        targets[tgt] = share
    entries: dict[str, tuple[tuple[str, Fraction], ...]] = {}
    for src, targets in by_source.items():
        shares = list(targets.values())
        if all(s is None for s in shares):
            k = len(targets)
            resolved = {t: Fraction(1, k) for t in targets}
        elif any(s is None for s in shares):
            raise SchemaViolation(
                f"source {src!r} mixes rows with and without a share",
                path=label,
            )
        else:
            total = sum(shares)
            if total != 1:
                raise SchemaViolation(
                    f"shares for source {src!r} sum to {total}, expected 1",
                    path=label,
                )
            resolved = dict(targets)
        entries[src] = tuple(sorted(resolved.items()))
    return Concordance(
        label=label,
        source_kind=source_kind,
        target_kind=target_kind,
        entries=entries,
        warnings=tuple(warnings),
    )


def parse_concordance(
    path, *, source_kind: str, target_kind: str
) -> Concordance:
    """Parse a concordance CSV (``source_code,target_code[,share]``)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"{path}: not valid UTF-8 ({exc})") from exc
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise EmptyFile(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    if header[:2] != ["source_code", "target_code"] or (
        len(header) > 2 and header[2] != "share"
    ):
        raise SchemaViolation(
            "header must be source_code,target_code[,share], got "
            + ",".join(header),
            path=path,
            row=1,
        )
    data = rows[1:]
    if not data:
        raise EmptyFile(f"{path}: no data rows")
    pairs = []
    for lineno, row in enumerate(data, start=2):
        if len(row) < 2 or len(row) > 3:
            raise SchemaViolation(
                f"expected 2 or 3 fields, got {len(row)}", path=path, row=lineno
            )
        share = None
        if len(row) == 3 and row[2].strip() != "":
            try:
                share = as_fraction(row[2].strip())
            except ValueError as exc:
                raise SchemaViolation(
                    str(exc), path=path, row=lineno, column="share"
                ) from exc
            if not (0 < share <= 1):
                raise SchemaViolation(
                    f"share must be in (0, 1], got {row[2]!r}",
                    path=path,
                    row=lineno,
                    column="share",
                )
        try:
            pairs.append((row[0], row[1], share))
        except MalformedCode:
            raise
    try:
        return build_concordance(
            pairs, source_kind=source_kind, target_kind=target_kind, label=str(path)
        )
    except MalformedCode as exc:
        raise MalformedCode(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class TranslationResult:
    """BEA shares for one HS code; shares plus unmapped_share sum to 1."""

    shares: tuple[tuple[str, Fraction], ...]
    unmapped_share: Fraction = Fraction(0)

    @property
    def is_unmapped(self) -> bool:
        return not self.shares


UNMAPPED = TranslationResult(shares=(), unmapped_share=Fraction(1))


@dataclass(frozen=True)
class ComposedCrosswalk:
    """Eagerly composed HS -> BEA table (fast lookup, dumpable diagnostics)."""

    table: Mapping[str, TranslationResult]

    def translate(self, hs: str) -> TranslationResult:
        return self.table.get(hs, UNMAPPED)


def compose(hs2naics: Concordance, naics2bea: Concordance) -> ComposedCrosswalk:
    """Compose the two concordances into one HS -> BEA table.

    HS paths whose NAICS code is missing from the second concordance
    contribute to the unmapped share rather than erroring.
    """
    table: dict[str, TranslationResult] = {}
    for hs, naics_targets in hs2naics.entries.items():
        shares: dict[str, Fraction] = {}
        unmapped = Fraction(0)
        for naics, s1 in naics_targets:
            bea_targets = naics2bea.targets(naics)
            if not bea_targets:
                unmapped += s1
                continue
            for bea, s2 in bea_targets:
                shares[bea] = shares.get(bea, Fraction(0)) + s1 * s2
        table[hs] = TranslationResult(
            shares=tuple(sorted(shares.items())), unmapped_share=unmapped
        )
    return ComposedCrosswalk(table=table)


def translate(
    hs: str, hs2naics: Concordance, naics2bea: Concordance
) -> TranslationResult:
    """Translate one HS code through both concordances.

    Convenience wrapper over :func:`compose`; never raises -- unknown or
    malformed codes come back as the unmapped result.
    """
    return compose(hs2naics, naics2bea).translate(hs)


@dataclass
class AggregationDiagnostics:
    trade_rows: int = 0
    duty_rows: int = 0
    unmapped_cif: Fraction = Fraction(0)
    unmapped_weight: Fraction = Fraction(0)
    unmapped_duty: Fraction = Fraction(0)
    unmapped_codes: tuple[str, ...] = ()
    partial_codes: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "trade_rows": self.trade_rows,
            "duty_rows": self.duty_rows,
            "unmapped_cif_usd": float(self.unmapped_cif),
            "unmapped_weight_kg": float(self.unmapped_weight),
            "unmapped_duty_usd": float(self.unmapped_duty),
            "unmapped_codes": list(self.unmapped_codes),
            "partially_mapped_codes": list(self.partial_codes),
        }


@dataclass
class AggregationResult:
    aggregates: list[IndustryTradeAggregate]
    diagnostics: AggregationDiagnostics

    def by_sector(self) -> dict[str, IndustryTradeAggregate]:
        return {a.sector_id: a for a in self.aggregates}


def aggregate(
    trade_records: Iterable[TradeRecord],
    duty_records: Iterable[DutyRecord],
    crosswalk: ComposedCrosswalk,
) -> AggregationResult:
    """Sum CIF, weight and duty per BEA sector using translated shares.

    Inputs are sorted before summation so output is independent of row
    order; with exact rationals the totals conserve to the last unit:
    sum(per-sector) + unmapped == sum(input), separately for each of CIF,
    weight and duty.
    """
    cif: dict[str, Fraction] = {}
    weight: dict[str, Fraction] = {}
    duty: dict[str, Fraction] = {}
    diag = AggregationDiagnostics()
    unmapped_codes: set[str] = set()
    partial_codes: set[str] = set()

    def _lookup(hs: str) -> TranslationResult:
        res = crosswalk.translate(hs)
        if res.is_unmapped:
            unmapped_codes.add(hs)
        elif res.unmapped_share > 0:
            partial_codes.add(hs)
        return res

    def _spread(res: TranslationResult, bucket: dict, value: Fraction) -> None:
        for sector, share in res.shares:
            bucket[sector] = bucket.get(sector, Fraction(0)) + value * share

    for rec in sorted(trade_records):
        diag.trade_rows += 1
        res = _lookup(rec.hs)
        _spread(res, cif, rec.cif_usd)
        _spread(res, weight, rec.net_weight_kg)
        diag.unmapped_cif += rec.cif_usd * res.unmapped_share
        diag.unmapped_weight += rec.net_weight_kg * res.unmapped_share
    for rec in sorted(duty_records):
        diag.duty_rows += 1
        res = _lookup(rec.hs)
        _spread(res, duty, rec.duty_usd)
        diag.unmapped_duty += rec.duty_usd * res.unmapped_share

    sectors = sorted(set(cif) | set(weight) | set(duty))
    aggregates = [
        IndustryTradeAggregate(
            sector_id=s,
            cif_total=cif.get(s, Fraction(0)),
            net_weight_total=weight.get(s, Fraction(0)),
            duty_total=duty.get(s, Fraction(0)),
        )
        for s in sectors
    ]
    diag.unmapped_codes = tuple(sorted(unmapped_codes))
    diag.partial_codes = tuple(sorted(partial_codes))
    return AggregationResult(aggregates=aggregates, diagnostics=diag)
