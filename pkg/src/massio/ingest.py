"""Strict file-format parsing for all CLI inputs.

Every reader validates its schema up front and reports the file, row and
column of the first violation. Numeric fields are parsed as decimal
strings (scientific notation accepted) and converted exactly once: model
arrays to float, trade values to exact rationals for the conservation
arithmetic in the crosswalk.

Schemas (all UTF-8, comma-delimited, header row required, '.' decimal):

    sectors.csv    sector_id,name,kind,level      kind in {goods,service,support}
    a.csv          sector_id,<id>,...             square, sectors order
    d.csv / x.csv  sector_id,value_usd
    r.csv          impact_key,sector_id,intensity_per_usd
    trade.csv      hs_code,cif_usd,net_weight_kg
    duty.csv       hs_code,duty_usd
    hs_naics.csv / naics_bea.csv   source_code,target_code,share (share optional)
    tau.csv        sector_id,tau_ratio
    waste.csv      sector_id,waste_coefficient
    prod.csv       sector_id,mass_kg,coverage     coverage in {good,partial}
"""

from __future__ import annotations

import csv
import sys
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .crosswalk import DutyRecord, TradeRecord, validate_code
from .errors import (
    ConfigError,
    EmptyFile,
    EncodingError,
    MalformedCode,
    SchemaViolation,
)
from .model import ClassificationLevel, SectorKind, SectorRecord
from .quality import Availability

_KINDS = {k.value: k for k in SectorKind}
_LEVELS = {lv.value: lv for lv in ClassificationLevel}


def _read_rows(path: Path, expected_header: Sequence[str] | None) -> list[list[str]]:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"input file does not exist: {path}") from None
    except UnicodeDecodeError as exc:
        raise EncodingError(f"{path}: not valid UTF-8 ({exc})") from exc
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise EmptyFile(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    if expected_header is not None and header != list(expected_header):
        raise SchemaViolation(
            f"expected header {','.join(expected_header)!r}, got {','.join(header)!r}",
            path=path,
            row=1,
        )
    if len(rows) == 1:
        raise EmptyFile(f"{path}: no data rows")
    return rows


def _decimal(text: str, path: Path, row: int, column: str) -> Decimal:
    try:
        return Decimal(text.strip())
    except InvalidOperation:
        raise SchemaViolation(
            f"not a number: {text!r}", path=path, row=row, column=column
        ) from None


def _float(text: str, path: Path, row: int, column: str) -> float:
    return float(_decimal(text, path, row, column))


def _fraction(text: str, path: Path, row: int, column: str) -> Fraction:
    return Fraction(_decimal(text, path, row, column))


def _nonneg(value, text: str, path: Path, row: int, column: str):
    if value < 0:
        raise SchemaViolation(
            f"must be >= 0, got {text!r}", path=path, row=row, column=column
        )
    return value


def _cells(row: list[str], n: int, path: Path, lineno: int) -> list[str]:
    if len(row) != n:
        raise SchemaViolation(
            f"expected {n} fields, got {len(row)}", path=path, row=lineno
        )
    return [c.strip() for c in row]


def read_sectors(path) -> list[SectorRecord]:
    path = Path(path)
    rows = _read_rows(path, ["sector_id", "name", "kind", "level"])
    records: list[SectorRecord] = []
    seen: set[str] = set()
    for lineno, row in enumerate(rows[1:], start=2):
        sid, name, kind, level = _cells(row, 4, path, lineno)
        if not sid:
            raise SchemaViolation("empty sector_id", path=path, row=lineno,
                                  column="sector_id")
        if sid in seen:
            raise SchemaViolation(
                f"duplicate sector_id {sid!r}", path=path, row=lineno,
                column="sector_id",
            )
        seen.add(sid)
        if kind not in _KINDS:
            raise SchemaViolation(
                f"kind must be one of {sorted(_KINDS)}, got {kind!r}",
                path=path, row=lineno, column="kind",
            )
        if level not in _LEVELS:
            raise SchemaViolation(
                f"level must be one of {sorted(_LEVELS)}, got {level!r}",
                path=path, row=lineno, column="level",
            )
        records.append(SectorRecord(sid, name, _KINDS[kind], _LEVELS[level]))
    return records


def read_a_matrix(path, sector_ids: Sequence[str]) -> np.ndarray:
    """Square matrix file; header columns and row order must match sectors."""
    path = Path(path)
    rows = _read_rows(path, None)
    header = [h.strip() for h in rows[0]]
    expected = ["sector_id", *sector_ids]
    if header != expected:
        raise SchemaViolation(
            "matrix columns must list every sector id in sectors.csv order",
            path=path, row=1,
        )
    n = len(sector_ids)
    if len(rows) - 1 != n:
        raise SchemaViolation(
            f"expected {n} data rows, got {len(rows) - 1}", path=path,
            row=len(rows),
        )
    A = np.zeros((n, n))
    for i, (sid, row) in enumerate(zip(sector_ids, rows[1:])):
        lineno = i + 2
        cells = _cells(row, n + 1, path, lineno)
        if cells[0] != sid:
            raise SchemaViolation(
                f"row {i + 1} must be sector {sid!r} (sectors.csv order), "
                f"got {cells[0]!r}",
                path=path, row=lineno, column="sector_id",
            )
        for j, text in enumerate(cells[1:]):
            value = _float(text, path, lineno, sector_ids[j])
            A[i, j] = _nonneg(value, text, path, lineno, sector_ids[j])
    return A


def read_vector(path, sector_ids: Sequence[str], column: str = "value_usd") -> np.ndarray:
    """Per-sector value file keyed by id; must cover every sector exactly once."""
    path = Path(path)
    rows = _read_rows(path, ["sector_id", column])
    values: dict[str, float] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        sid, text = _cells(row, 2, path, lineno)
        if sid in values:
            raise SchemaViolation(
                f"duplicate sector_id {sid!r}", path=path, row=lineno,
                column="sector_id",
            )
        value = _float(text, path, lineno, column)
        values[sid] = _nonneg(value, text, path, lineno, column)
    missing = [s for s in sector_ids if s not in values]
    extra = [s for s in values if s not in set(sector_ids)]
    if missing or extra:
        raise SchemaViolation(
            f"sector coverage mismatch (missing {missing}, unknown {extra})",
            path=path,
        )
    return np.array([values[s] for s in sector_ids])


def read_satellite(path, sector_ids: Sequence[str]) -> tuple[list[str], np.ndarray]:
    """Long-format satellite file; every impact must cover every sector once."""
    path = Path(path)
    rows = _read_rows(path, ["impact_key", "sector_id", "intensity_per_usd"])
    idx = {s: i for i, s in enumerate(sector_ids)}
    per_impact: dict[str, dict[str, float]] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        key, sid, text = _cells(row, 3, path, lineno)
        if not key:
            raise SchemaViolation("empty impact_key", path=path, row=lineno,
                                  column="impact_key")
        if sid not in idx:
            raise SchemaViolation(
                f"unknown sector_id {sid!r}", path=path, row=lineno,
                column="sector_id",
            )
        bucket = per_impact.setdefault(key, {})
        if sid in bucket:
            raise SchemaViolation(
                f"duplicate intensity for impact {key!r}, sector {sid!r}",
                path=path, row=lineno,
            )
        bucket[sid] = _float(text, path, lineno, "intensity_per_usd")
    keys = sorted(per_impact)
    R = np.zeros((len(keys), len(sector_ids)))
    for r, key in enumerate(keys):
        bucket = per_impact[key]
        missing = [s for s in sector_ids if s not in bucket]
        if missing:
            raise SchemaViolation(
                f"impact {key!r} missing sectors {missing}", path=path
            )
        for sid, value in bucket.items():
            R[r, idx[sid]] = value
    return keys, R


def read_trade(path) -> list[TradeRecord]:
    path = Path(path)
    rows = _read_rows(path, ["hs_code", "cif_usd", "net_weight_kg"])
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        hs, cif, weight = _cells(row, 3, path, lineno)
        try:
            hs = validate_code(hs, "hs")
        except MalformedCode as exc:
            raise SchemaViolation(str(exc), path=path, row=lineno,
                                  column="hs_code") from exc
        cif_v = _nonneg(_fraction(cif, path, lineno, "cif_usd"), cif,
                        path, lineno, "cif_usd")
        weight_v = _nonneg(_fraction(weight, path, lineno, "net_weight_kg"),
                           weight, path, lineno, "net_weight_kg")
        records.append(TradeRecord(hs, cif_v, weight_v))
    return records


def read_duty(path) -> list[DutyRecord]:
    path = Path(path)
    rows = _read_rows(path, ["hs_code", "duty_usd"])
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        hs, duty = _cells(row, 2, path, lineno)
        try:
            hs = validate_code(hs, "hs")
        except MalformedCode as exc:
            raise SchemaViolation(str(exc), path=path, row=lineno,
                                  column="hs_code") from exc
        duty_v = _nonneg(_fraction(duty, path, lineno, "duty_usd"), duty,
                         path, lineno, "duty_usd")
        records.append(DutyRecord(hs, duty_v))
    return records


def read_tau(path) -> dict[str, float]:
    path = Path(path)
    rows = _read_rows(path, ["sector_id", "tau_ratio"])
    out: dict[str, float] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        sid, text = _cells(row, 2, path, lineno)
        if sid in out:
            raise SchemaViolation(f"duplicate sector_id {sid!r}", path=path,
                                  row=lineno, column="sector_id")
        value = _float(text, path, lineno, "tau_ratio")
        if value <= 0:
            raise SchemaViolation(
                f"tau_ratio must be > 0, got {text!r}", path=path, row=lineno,
                column="tau_ratio",
            )
        out[sid] = value
    return out


def read_waste(path) -> dict[str, float]:
    path = Path(path)
    rows = _read_rows(path, ["sector_id", "waste_coefficient"])
    out: dict[str, float] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        sid, text = _cells(row, 2, path, lineno)
        if sid in out:
            raise SchemaViolation(f"duplicate sector_id {sid!r}", path=path,
                                  row=lineno, column="sector_id")
        value = _float(text, path, lineno, "waste_coefficient")
        if not (0.0 <= value < 1.0):
            raise SchemaViolation(
                f"waste_coefficient must be in [0, 1), got {text!r}",
                path=path, row=lineno, column="waste_coefficient",
            )
        out[sid] = value
    return out


@dataclass(frozen=True)
class ProductionEntry:
    mass_kg: float
    coverage: Availability


def read_production(path) -> dict[str, ProductionEntry]:
    path = Path(path)
    rows = _read_rows(path, ["sector_id", "mass_kg", "coverage"])
    out: dict[str, ProductionEntry] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        sid, mass, coverage = _cells(row, 3, path, lineno)
        if sid in out:
            raise SchemaViolation(f"duplicate sector_id {sid!r}", path=path,
                                  row=lineno, column="sector_id")
        value = _float(mass, path, lineno, "mass_kg")
        if value <= 0:
            raise SchemaViolation(
                f"mass_kg must be > 0, got {mass!r}", path=path, row=lineno,
                column="mass_kg",
            )
        if coverage not in ("good", "partial"):
            raise SchemaViolation(
                f"coverage must be 'good' or 'partial', got {coverage!r}",
                path=path, row=lineno, column="coverage",
            )
        out[sid] = ProductionEntry(value, Availability(coverage))
    return out


VALID_OVERRIDES = ("data", "price", "input")


@dataclass(frozen=True)
class RunConfig:
    """Parsed run.toml; every referenced file exists before computation."""

    year: str
    level: ClassificationLevel
    sectors: Path
    a: Path
    demand: Path
    gross_output: Path
    satellite: Path
    output_dir: Path
    trade: Path | None = None
    duty: Path | None = None
    hs2naics: Path | None = None
    naics2bea: Path | None = None
    tau: Path | None = None
    waste: Path | None = None
    production: Path | None = None
    overrides: Mapping[str, str] = field(default_factory=dict)


_REQUIRED_INPUTS = ("sectors", "a", "demand", "gross_output", "satellite")
_OPTIONAL_INPUTS = ("trade", "duty", "hs2naics", "naics2bea", "tau", "waste",
                    "production")


def read_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file does not exist: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML ({exc})") from exc

    year = raw.get("year")
    level = raw.get("level")
    if not isinstance(year, str) or not year:
        raise ConfigError(f"{path}: 'year' must be a non-empty string")
    if level not in _LEVELS:
        raise ConfigError(
            f"{path}: 'level' must be one of {sorted(_LEVELS)}, got {level!r}"
        )
    inputs = raw.get("inputs")
    if not isinstance(inputs, dict):
        raise ConfigError(f"{path}: missing [inputs] table")
    base = path.parent

    def _path_for(key: str, required: bool) -> Path | None:
        value = inputs.get(key)
        if value is None:
            if required:
                raise ConfigError(f"{path}: [inputs] is missing {key!r}")
            return None
        p = base / str(value)
        if not p.is_file():
            raise ConfigError(f"{path}: input {key!r} does not exist: {p}")
        return p

    paths = {k: _path_for(k, True) for k in _REQUIRED_INPUTS}
    paths.update({k: _path_for(k, False) for k in _OPTIONAL_INPUTS})

    trade_group = [k for k in ("trade", "duty", "hs2naics", "naics2bea")
                   if paths[k] is not None]
    if trade_group and len(trade_group) != 4:
        raise ConfigError(
            f"{path}: trade inputs must be given together "
            "(trade, duty, hs2naics, naics2bea); "
            f"got only {trade_group}"
        )

    output = raw.get("output", {})
    if not isinstance(output, dict) or "directory" not in output:
        raise ConfigError(f"{path}: missing [output] table with 'directory'")
    overrides_raw = raw.get("overrides", {})
    overrides: dict[str, str] = {}
    for sid, method in overrides_raw.items():
        if method not in VALID_OVERRIDES:
            raise ConfigError(
                f"{path}: override for {sid!r} must be one of "
                f"{VALID_OVERRIDES}, got {method!r}"
            )
        overrides[str(sid)] = str(method)

    return RunConfig(
        year=year,
        level=_LEVELS[level],
        output_dir=base / str(output["directory"]),
        overrides=overrides,
        **paths,
    )
