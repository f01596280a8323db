"""Core economic input-output model and its Leontief algebra.

The model is the standard demand-driven IO system: total output solves
x = A*x + d, i.e. x = (I - A)^{-1} * d, where A is the direct-requirements
matrix in dollar-per-dollar terms (column j holds the input recipe of
sector j) and d is final demand in dollars. Environmental impacts come
from scaling total output elementwise with a per-dollar intensity row of
the satellite matrix.

(I - A) is LU-factored once per model and the factorization is reused for
every demand vector. Models are immutable after construction and all
operations here are pure, so concurrent readers are safe and results are
bit-deterministic for identical inputs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import (
    DimensionMismatch,
    DuplicateImpactKey,
    DuplicateSectorId,
    IllConditionedWarning,
    NegativeCoefficient,
    NonFiniteValue,
    NonPositiveGrossOutput,
    NonProductiveEconomy,
    SingularMatrix,
    UnknownImpactCategory,
)

#: Condition-number threshold above which a warning is emitted.
CONDITION_LIMIT = 1e12


class SectorKind(Enum):
    """What a sector produces, which decides its unit in the physical extension."""

    GOODS = "goods"
    SERVICE = "service"
    #: Industries inside goods-producing subsectors that only provide support
    #: services and move no physical product. Priced like services (p = 1)
    #: but flagged separately in every report.
    SUPPORT = "support"


class ClassificationLevel(Enum):
    SECTOR_12 = "sector12"
    SUMMARY_71 = "summary71"
    DETAIL_400 = "detail400"


@dataclass(frozen=True)
class SectorRecord:
    sector_id: str
    name: str
    kind: SectorKind
    level: ClassificationLevel = ClassificationLevel.SUMMARY_71


@dataclass(frozen=True)
class ImpactCategory:
    """One satellite row, e.g. key='ghg_co2e', unit_numerator='kg CO2e'."""

    key: str
    unit_numerator: str = "kg CO2e"


@dataclass(frozen=True)
class EconomyModel:
    """Validated, immutable IO model. Build through :func:`build_model`.

    Attributes use the conventional IO symbols: A (direct requirements,
    n x n), d (final demand, USD), x (gross output, USD), R (environmental
    satellite, impacts x sectors, impact-per-USD). Row/column order of all
    arrays follows ``sectors``.
    """

    sectors: tuple[SectorRecord, ...]
    A: np.ndarray
    d: np.ndarray
    x: np.ndarray
    R: np.ndarray
    impacts: tuple[ImpactCategory, ...]

    @property
    def n(self) -> int:
        return len(self.sectors)

    @cached_property
    def sector_ids(self) -> tuple[str, ...]:
        return tuple(s.sector_id for s in self.sectors)

    @cached_property
    def _id_index(self) -> dict[str, int]:
        return {s.sector_id: i for i, s in enumerate(self.sectors)}

    @cached_property
    def _impact_index(self) -> dict[str, int]:
        return {c.key: i for i, c in enumerate(self.impacts)}

    def index_of(self, sector_id: str) -> int:
        try:
            return self._id_index[sector_id]
        except KeyError:
            raise KeyError(f"unknown sector id {sector_id!r}") from None

    def record(self, sector_id: str) -> SectorRecord:
        return self.sectors[self.index_of(sector_id)]

    def sectors_of_kind(self, kind: SectorKind) -> tuple[str, ...]:
        return tuple(s.sector_id for s in self.sectors if s.kind is kind)

    def impact_row(self, key: str) -> np.ndarray:
        """Satellite row for one impact category (impact-per-USD)."""
        try:
            return self.R[self._impact_index[key]]
        except KeyError:
            known = ", ".join(sorted(self._impact_index)) or "<none>"
            raise UnknownImpactCategory(
                f"impact category {key!r} not in satellite (have: {known})"
            ) from None

    @cached_property
    def _lu(self):
        """LU factorization of (I - A), computed once and reused.

        Emits IllConditionedWarning when the 1-norm condition estimate of
        (I - A) exceeds CONDITION_LIMIT.
        """
        ima = np.eye(self.n) - self.A
        anorm = np.linalg.norm(ima, 1)
        with warnings.catch_warnings():
            # scipy warns on exact singularity; we raise SingularMatrix below.
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(ima)
        diag = np.abs(np.diag(lu))
        if np.any(diag == 0.0):
            raise SingularMatrix(
                "(I - A) is numerically singular despite validation; "
                "input data is corrupt"
            )
        rcond, info = lapack.dgecon(lu, anorm, norm="1")
        if info == 0 and rcond > 0 and 1.0 / rcond > CONDITION_LIMIT:
            warnings.warn(
                f"(I - A) condition estimate {1.0 / rcond:.3e} exceeds "
                f"{CONDITION_LIMIT:.0e}; results may lose precision",
                IllConditionedWarning,
                stacklevel=3,
            )
        return lu, piv

    def solve_demand(self, d) -> np.ndarray:
        """Total output (I - A)^{-1} * d using the cached factorization."""
        d = _as_vector(d, self.n, "demand")
        return scipy.linalg.lu_solve(self._lu, d)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _as_vector(v, n: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise DimensionMismatch(f"{name} must have shape ({n},), got {v.shape}")
    return v


def _check_finite(a: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(a)):
        raise NonFiniteValue(f"{name} contains NaN or infinity")


def build_model(
    sectors: Sequence[SectorRecord],
    A,
    d,
    x,
    R=None,
    impacts: Iterable[ImpactCategory | str] | None = None,
) -> EconomyModel:
    """Validate inputs eagerly and return an immutable model.

    Productivity is checked with the cheap sufficient condition that every
    column sum of A is < 1, which also guarantees Neumann-series
    convergence. R may be omitted for a purely economic model.

    Raises:
        DimensionMismatch: shapes are mutually inconsistent.
        DuplicateSectorId: a sector id appears twice.
        NegativeCoefficient: A or d has a negative entry.
        NonPositiveGrossOutput: some x entry is <= 0.
        NonProductiveEconomy: some column sum of A is >= 1.
    """
    sectors = tuple(sectors)
    if not sectors:
        raise DimensionMismatch("model needs at least one sector")
    seen: set[str] = set()
    for s in sectors:
        if not s.sector_id:
            raise DuplicateSectorId("sector id must be non-empty")
        if s.sector_id in seen:
            raise DuplicateSectorId(f"duplicate sector id {s.sector_id!r}")
        seen.add(s.sector_id)
    n = len(sectors)

    A = np.asarray(A, dtype=float)
    if A.shape != (n, n):
        raise DimensionMismatch(f"A must be {n}x{n}, got {A.shape}")
    _check_finite(A, "A")
    if np.any(A < 0):
        i, j = np.argwhere(A < 0)[0]
        raise NegativeCoefficient(
            f"A[{sectors[i].sector_id!r}, {sectors[j].sector_id!r}] is negative"
        )
    col_sums = A.sum(axis=0)
    if np.any(col_sums >= 1.0):
        j = int(np.argmax(col_sums))
        raise NonProductiveEconomy(
            f"column sum for sector {sectors[j].sector_id!r} is "
            f"{col_sums[j]:.6f} >= 1; economy is not productive"
        )

    d = _as_vector(d, n, "final demand d")
    _check_finite(d, "d")
    if np.any(d < 0):
        raise NegativeCoefficient("final demand d must be >= 0 elementwise")

    x = _as_vector(x, n, "gross output x")
    _check_finite(x, "x")
    if np.any(x <= 0):
        i = int(np.argmax(x <= 0))
        raise NonPositiveGrossOutput(
            f"gross output for sector {sectors[i].sector_id!r} must be > 0"
        )

    if R is None:
        R = np.zeros((0, n))
        impact_list: tuple[ImpactCategory, ...] = ()
    else:
        R = np.asarray(R, dtype=float)
        if R.ndim != 2 or R.shape[1] != n:
            raise DimensionMismatch(
                f"satellite R must have {n} columns, got shape {R.shape}"
            )
        _check_finite(R, "R")
        if impacts is None:
            raise DimensionMismatch(
                "impacts must be given when a satellite matrix is supplied"
            )
        impact_list = tuple(
            c if isinstance(c, ImpactCategory) else ImpactCategory(str(c))
            for c in impacts
        )
        if len(impact_list) != R.shape[0]:
            raise DimensionMismatch(
                f"{len(impact_list)} impact categories for {R.shape[0]} satellite rows"
            )
        keys = [c.key for c in impact_list]
        if len(set(keys)) != len(keys):
            raise DuplicateImpactKey("impact keys must be unique")

    return EconomyModel(
        sectors=sectors,
        A=_freeze(A),
        d=_freeze(d),
        x=_freeze(x),
        R=_freeze(R),
        impacts=impact_list,
    )


def leontief_inverse(model: EconomyModel) -> np.ndarray:
    """Total-requirements matrix L = (I - A)^{-1}.

    Every diagonal entry is >= 1 and off-diagonals are >= 0 for a valid
    productive model. Deterministic for identical inputs.
    """
    L = scipy.linalg.lu_solve(model._lu, np.eye(model.n))
    L.setflags(write=False)
    return L


def total_output(L: np.ndarray, d) -> np.ndarray:
    """Total output x_hat = L * d for a demand vector d (USD)."""
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionMismatch(f"L must be square, got shape {L.shape}")
    d = _as_vector(d, L.shape[0], "demand")
    return L @ d


def env_impacts(model: EconomyModel, d, category: str) -> np.ndarray:
    """Per-sector environmental impact vector for one category.

    E_i = r_i * (L*d)_i with r the satellite row for ``category``; the
    result is in the category's impact unit (e.g. kg CO2e) per sector.
    """
    r = model.impact_row(category)
    return r * model.solve_demand(d)
