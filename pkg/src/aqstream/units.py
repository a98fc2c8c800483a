"""Trace-gas unit conversions: column densities, mixing ratios, Dobson units.

The conversion chain normalizes every gas to PPMv before it enters the
event engine:

    column density (molecules/cm2, kg/m2 or DU)
        -> kg/m2                         (linear anchors)
        -> column-averaged ratio TCA     = column / dry-air column (15800 kg/m2)
        -> volume mixing ratio VMR       = TCA * MW(gas) / MW(dry air, 29)

Particulate matter bypasses the chain and stays in ug/m3.

UNSCALED_RATIO_CONVENTION: the formulas are applied exactly as written
above even though dimensional analysis would insert a 1e6 factor for a
"parts per million" label and invert the molecular-weight ratio for a
mass-to-volume conversion. Ratios labelled PPMv here are therefore plain
dimensionless ratios in that convention, and every downstream threshold
(breakpoint bands) is expressed in the same convention, so the cascade is
self-consistent. Do not "fix" one side without the other.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnitError

# Column-density units.
MOLECULES_PER_CM2 = "MOLECULES_PER_CM2"
KG_PER_M2 = "KG_PER_M2"
DOBSON = "DOBSON"
COLUMN_UNITS = frozenset({MOLECULES_PER_CM2, KG_PER_M2, DOBSON})

# Mixing-ratio bases.
VOLUME = "VOLUME"  # PPMv
MASS = "MASS"      # PPMm

UNSCALED_RATIO_CONVENTION = True

# Dry-air anchors tying the two column units together.
DRY_AIR_VCD_MOLEC_CM2 = 2.0e25   # molecules/cm2
DRY_AIR_TC_KG_M2 = 15800.0       # kg/m2, the same column expressed as mass
MW_DRY_AIR = 29.0                # g/mol

# Typical tropospheric ozone column; a test fixture, not used in conversions.
TYPICAL_TROPO_O3_VCD_MOLEC_CM2 = 8.0e17

# One Dobson unit as a molecular column: the molecules in a pure 0.01 mm
# layer at 0 degC and 1 atm, n = P*h/(kB*T) per m2, divided by 1e4 for cm2:
# 101325 * 1e-5 / (1.380649e-23 * 273.15) / 1e4.
DOBSON_MOLEC_CM2 = 2.686780111798444e16


@dataclass(frozen=True, slots=True)
class ColumnDensity:
    """A vertically integrated gas amount (houses VCD, TC and SCD values)."""

    value: float
    unit: str

    def __post_init__(self) -> None:
        if self.unit not in COLUMN_UNITS:
            raise UnitError(f"unknown column unit {self.unit!r}")
        if not self.value >= 0.0:
            raise ValueError(f"column density must be non-negative: {self.value}")


@dataclass(frozen=True, slots=True)
class MixingRatio:
    """A gas amount relative to the rest of the mixture (volume or mass basis)."""

    value: float
    basis: str = VOLUME

    def __post_init__(self) -> None:
        if self.basis not in (VOLUME, MASS):
            raise UnitError(f"unknown mixing basis {self.basis!r}")
        if not self.value >= 0.0:
            raise ValueError(f"mixing ratio must be non-negative: {self.value}")


def vmr_from_amounts(n_gas: float, n_total: float) -> MixingRatio:
    """Volume mixing ratio from gas amount and total amount.

    value = n_gas / (n_total - n_gas): the gas amount relative to the other
    constituents.
    """
    if not 0.0 <= n_gas < n_total:
        raise ValueError(f"need n_total > n_gas >= 0, got n_gas={n_gas}, n_total={n_total}")
    return MixingRatio(n_gas / (n_total - n_gas), VOLUME)


def ppmm_to_ppmv(x: MixingRatio, mw_gas: float) -> MixingRatio:
    """Mass mixing ratio to volume mixing ratio: value * MW(gas) / 29."""
    if x.basis != MASS:
        raise UnitError(f"expected a MASS-basis ratio, got {x.basis}")
    if not mw_gas > 0.0:
        raise ValueError(f"molecular weight must be positive: {mw_gas}")
    return MixingRatio(x.value * mw_gas / MW_DRY_AIR, VOLUME)


def tca_from_column(vcd: ColumnDensity) -> MixingRatio:
    """Total-column-averaged ratio: column (kg/m2) / dry-air column (15800)."""
    if vcd.unit != KG_PER_M2:
        raise UnitError(f"tca_from_column needs {KG_PER_M2}, got {vcd.unit}; convert first")
    return MixingRatio(vcd.value / DRY_AIR_TC_KG_M2, VOLUME)


def vmr_from_tca(tca: MixingRatio, mw_gas: float) -> MixingRatio:
    """Volume mixing ratio from the column-averaged ratio: tca * MW(gas) / 29."""
    if tca.basis != VOLUME:
        raise UnitError(f"expected a VOLUME-basis ratio, got {tca.basis}")
    if not mw_gas > 0.0:
        raise ValueError(f"molecular weight must be positive: {mw_gas}")
    return MixingRatio(tca.value * mw_gas / MW_DRY_AIR, VOLUME)


def column_convert(
    c: ColumnDensity,
    target_unit: str,
    dobson_molec_cm2: float = DOBSON_MOLEC_CM2,
) -> ColumnDensity:
    """Convert a column density between molecules/cm2, kg/m2 and Dobson units.

    All pairs scale linearly through the molecules/cm2 base using the
    dry-air anchor (2e25 molecules/cm2 = 15800 kg/m2) and the Dobson
    column constant.
    """
    if target_unit not in COLUMN_UNITS:
        raise UnitError(f"unknown target column unit {target_unit!r}")
    if c.unit == target_unit:
        return c
    # Normalized-ratio form: dividing by the source anchor first makes the
    # anchor values themselves convert exactly (v/v == 1.0).
    if c.unit == MOLECULES_PER_CM2:
        base = c.value / DRY_AIR_VCD_MOLEC_CM2
    elif c.unit == KG_PER_M2:
        base = c.value / DRY_AIR_TC_KG_M2
    else:  # DOBSON
        base = c.value * (dobson_molec_cm2 / DRY_AIR_VCD_MOLEC_CM2)
    if target_unit == MOLECULES_PER_CM2:
        out = base * DRY_AIR_VCD_MOLEC_CM2
    elif target_unit == KG_PER_M2:
        out = base * DRY_AIR_TC_KG_M2
    else:
        out = base / (dobson_molec_cm2 / DRY_AIR_VCD_MOLEC_CM2)
    return ColumnDensity(out, target_unit)


def normalize_to_engine_unit(raw_value: float, raw_unit: str, pollutant) -> float:
    """Bring a raw measurement into the pollutant's engine unit.

    Column densities are converted through kg/m2 -> TCA -> VMR; mass-basis
    ppm goes through the molecular-weight ratio; values already in PPMv or
    (for particulate matter) ug/m3 pass through unchanged. Raises UnitError
    for unit/pollutant combinations that make no sense; callers treat that
    as a dropped row, not a fatal error.
    """
    from .model import PPMV, UG_M3  # local import to keep units model-free

    if pollutant.unit == UG_M3:
        if raw_unit != UG_M3:
            raise UnitError(f"{pollutant.id}: particulate matter only accepts {UG_M3}, got {raw_unit!r}")
        return float(raw_value)
    if raw_unit == PPMV:
        return float(raw_value)
    if raw_unit == "PPMM":
        return ppmm_to_ppmv(MixingRatio(raw_value, MASS), pollutant.molecular_weight).value
    if raw_unit in COLUMN_UNITS:
        kg = column_convert(ColumnDensity(raw_value, raw_unit), KG_PER_M2)
        return vmr_from_tca(tca_from_column(kg), pollutant.molecular_weight).value
    raise UnitError(f"{pollutant.id}: unsupported raw unit {raw_unit!r}")
