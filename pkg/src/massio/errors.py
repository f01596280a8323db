"""Exception hierarchy shared by every massio module.

All domain errors derive from :class:`MassioError` so callers can catch one
base class at the CLI boundary while tests assert the specific subclass.
"""

from __future__ import annotations


class MassioError(ValueError):
    """Base class for all massio domain errors."""


# --- model construction ----------------------------------------------------

class DimensionMismatch(MassioError):
    """Array shapes are mutually inconsistent."""


class DuplicateSectorId(MassioError):
    """Two sectors share the same identifier."""


class DuplicateImpactKey(MassioError):
    """Two satellite rows share the same impact key."""


class NonProductiveEconomy(MassioError):
    """Some column of the direct-requirements matrix sums to >= 1."""


class NegativeCoefficient(MassioError):
    """A coefficient or demand entry that must be non-negative is negative."""


class NonPositiveGrossOutput(MassioError):
    """Gross output must be strictly positive for every sector."""


class NonFiniteValue(MassioError):
    """NaN or infinity found in numeric model data."""


class SingularMatrix(MassioError):
    """(I - A) is numerically singular; the input data is corrupt."""


class UnknownImpactCategory(MassioError):
    """Requested impact key is not present in the satellite matrix."""


# --- physical extension ----------------------------------------------------

class MissingPrice(MassioError):
    """A sector has no price estimate."""


class NonPositivePrice(MassioError):
    """A goods price must be strictly positive."""


class UnitMismatch(MassioError):
    """Arithmetic attempted between a kg-tagged and a USD-tagged value."""


# --- price imputation ------------------------------------------------------

class ZeroCif(MassioError):
    """CIF total is zero; no duty rate can be formed."""


class EmptyRates(MassioError):
    """No non-zero duty rates exist; tier bounds are undefined."""


class DegenerateRange(MassioError):
    """All non-zero duty rates are equal; the three-interval split collapses."""


class ZeroWeight(MassioError):
    """Net weight total is zero; the sector cannot be priced from trade data."""


class NonPositiveTau(MassioError):
    """Basic-to-producer price ratio must be strictly positive."""


# --- mass balance ----------------------------------------------------------

class ZeroInputMass(MassioError):
    """Sum of input masses is zero; the input-driven price is undefined."""


class InvalidWasteCoefficient(MassioError):
    """Waste coefficient outside [0, 1)."""


class UnresolvedDependency(MassioError):
    """An input sector has no resolved price yet."""


class NonConvergentCycle(MassioError):
    """Fixed-point iteration over a dependency cycle hit the iteration limit."""

    def __init__(self, message: str, cycle: tuple[str, ...] = ()):
        super().__init__(message)
        self.cycle = cycle


# --- crosswalk & parsing ---------------------------------------------------

class MalformedCode(MassioError):
    """Classification code does not match its required format."""


class EmptyFile(MassioError):
    """File contains no data rows."""


class SchemaViolation(MassioError):
    """Input file violates its schema; message carries file/row/column."""

    def __init__(self, message: str, *, path=None, row: int | None = None,
                 column: str | None = None):
        loc = str(path) if path is not None else "<input>"
        if row is not None:
            loc += f":{row}"
        if column is not None:
            loc += f" (column {column!r})"
        super().__init__(f"{loc}: {message}")
        self.path = path
        self.row = row
        self.column = column


class EncodingError(MassioError):
    """Input file is not valid UTF-8."""


class ConfigError(MassioError):
    """Run configuration is invalid or references missing files."""


# --- quality report --------------------------------------------------------

class NonPositiveMass(MassioError):
    """Percent difference requires strictly positive masses."""


class IllConditionedWarning(UserWarning):
    """(I - A) condition number estimate exceeds 1e12."""
