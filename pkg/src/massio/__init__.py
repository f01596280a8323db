"""massio: physically and environmentally extended input-output modeling.

Estimates per-industry characteristic prices ($/kg) by three methods
(direct data, trade-based imputation with duty tiering, input mass
balance), converts monetary IO output into a hybrid physical production
vector and re-bases environmental intensities to a mass basis.
"""

from .errors import MassioError
from .model import (
    ClassificationLevel,
    EconomyModel,
    ImpactCategory,
    SectorKind,
    SectorRecord,
    build_model,
    env_impacts,
    leontief_inverse,
    total_output,
)
from .physical import (
    IntensityVector,
    PhysicalVector,
    PriceEstimate,
    PriceMethod,
    PriceQuality,
    Unit,
    apply_intensity,
    mass_intensity,
    physical_production,
    production_from_gross_output,
)
from .prices import (
    DutyTier,
    DutyTierAssignment,
    IndustryTradeAggregate,
    TauRatio,
    TierBounds,
    assign_tiers,
    basic_price,
    duty_rate,
    impute_prices,
    producer_price,
    tier_bounds,
)
from .massbalance import (
    InputMassRow,
    WasteCoefficient,
    derive_input_masses,
    input_driven_price,
    resolve_input_driven,
)
from .crosswalk import (
    Concordance,
    DutyRecord,
    TradeRecord,
    TranslationResult,
    aggregate,
    compose,
    parse_concordance,
    translate,
)
from .quality import (
    Availability,
    CoverageClass,
    MethodComparison,
    classify_coverage,
    compare_methods,
    percent_difference,
)
from .ingest import RunConfig, read_run_config
from .pipeline import parse_inputs, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "MassioError",
    "ClassificationLevel",
    "EconomyModel",
    "ImpactCategory",
    "SectorKind",
    "SectorRecord",
    "build_model",
    "env_impacts",
    "leontief_inverse",
    "total_output",
    "IntensityVector",
    "PhysicalVector",
    "PriceEstimate",
    "PriceMethod",
    "PriceQuality",
    "Unit",
    "apply_intensity",
    "mass_intensity",
    "physical_production",
    "production_from_gross_output",
    "DutyTier",
    "DutyTierAssignment",
    "IndustryTradeAggregate",
    "TauRatio",
    "TierBounds",
    "assign_tiers",
    "basic_price",
    "duty_rate",
    "impute_prices",
    "producer_price",
    "tier_bounds",
    "InputMassRow",
    "WasteCoefficient",
    "derive_input_masses",
    "input_driven_price",
    "resolve_input_driven",
    "Concordance",
    "DutyRecord",
    "TradeRecord",
    "TranslationResult",
    "aggregate",
    "compose",
    "parse_concordance",
    "translate",
    "Availability",
    "CoverageClass",
    "MethodComparison",
    "classify_coverage",
    "compare_methods",
    "percent_difference",
    "RunConfig",
    "read_run_config",
    "parse_inputs",
    "run_pipeline",
    "__version__",
]
