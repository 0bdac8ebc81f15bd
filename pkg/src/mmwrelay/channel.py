"""Link budget for directional mmWave D2D links.

Received power factors into a distance term (log-distance path loss with
log-normal shadowing, beamforming gains folded in) and a blockage penetration
term. Keeping the two factors separate lets callers test the distance term
against a sensitivity threshold independently of blockage state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

C_LIGHT = 299_792_458.0


class ZeroDistanceError(ValueError):
    """Distance at or below zero has no defined path loss."""


class ThresholdUnreachableError(ValueError):
    """The receive threshold cannot be met even at the reference distance."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(lin: float) -> float:
    if lin <= 0.0:
        return -math.inf
    return 10.0 * math.log10(lin)


# dBm/mW conversions are the same arithmetic, named for clarity at call sites
dbm_to_mw = db_to_linear
mw_to_dbm = linear_to_db


@dataclass(frozen=True)
class ChannelParams:
    """Radio parameters; defaults describe a 60 GHz outdoor D2D setup."""

    tx_power_dbm: float = 18.0
    carrier_freq_hz: float = 60.0e9
    ref_dist_m: float = 1.0
    ple: float = 2.5
    shadow_sigma_db: float = 3.5
    bandwidth_hz: float = 20.0e6
    noise_density_dbm_hz: float = -174.0
    snr_threshold_db: float = 20.0
    antenna_m: int = 4
    beamwidth_rad: float = math.pi / 2.0
    sidelobe_gain: float = 0.1
    tx_gain_db: float = 6.0
    rx_gain_db: float = 6.0
    penetration_db: float = math.inf
    rx_threshold_dbm: float | None = None

    def __post_init__(self) -> None:
        if self.carrier_freq_hz <= 0.0 or self.bandwidth_hz <= 0.0:
            raise ValueError("carrier frequency and bandwidth must be positive")
        if self.ref_dist_m <= 0.0:
            raise ValueError("reference distance must be positive")
        if self.shadow_sigma_db < 0.0:
            raise ValueError("shadow sigma must be >= 0")
        if self.antenna_m < 1:
            raise ValueError("antenna element count must be >= 1")
        if not 0.0 < self.beamwidth_rad <= 2.0 * math.pi:
            raise ValueError("beamwidth must be in (0, 2*pi]")
        if self.sidelobe_gain < 0.0:
            raise ValueError("sidelobe gain must be >= 0")
        if self.penetration_db < 0.0:
            raise ValueError("penetration loss must be >= 0 dB (or inf)")

    @classmethod
    def array_gain_preset(cls, **overrides) -> "ChannelParams":
        """Variant with both beam gains set to the full array factor M^2."""
        m = overrides.pop("antenna_m", cls.antenna_m)
        g = 10.0 * math.log10(float(m * m))
        overrides.setdefault("tx_gain_db", g)
        overrides.setdefault("rx_gain_db", g)
        return cls(antenna_m=m, **overrides)

    def wavelength_m(self) -> float:
        return C_LIGHT / self.carrier_freq_hz

    def noise_floor_dbm(self) -> float:
        return self.noise_density_dbm_hz + 10.0 * math.log10(self.bandwidth_hz)

    def gamma_dbm(self) -> float:
        """Receive sensitivity: explicit threshold, else noise floor + SNR margin."""
        if self.rx_threshold_dbm is not None:
            return self.rx_threshold_dbm
        return self.noise_floor_dbm() + self.snr_threshold_db

    def gamma_mw(self) -> float:
        return dbm_to_mw(self.gamma_dbm())


def antenna_gain(theta: float, params: ChannelParams) -> float:
    """Sectored pattern: full array gain M^2 inside the main lobe, a flat
    sidelobe floor outside. Boundary angle counts as main lobe."""
    t = math.remainder(theta, 2.0 * math.pi)
    if abs(t) <= params.beamwidth_rad / 2.0:
        return float(params.antenna_m * params.antenna_m)
    return params.sidelobe_gain


def path_loss_dbm(dist_m: float, shadow_db: float, params: ChannelParams) -> float:
    """Distance component of received power in dBm (beams assumed aligned)."""
    if dist_m <= 0.0:
        raise ZeroDistanceError(f"distance must be positive, got {dist_m}")
    lam = params.wavelength_m()
    fspl_ref = 20.0 * math.log10(lam / (4.0 * math.pi * params.ref_dist_m))
    return (
        params.tx_power_dbm
        + params.tx_gain_db
        + params.rx_gain_db
        + fspl_ref
        - 10.0 * params.ple * math.log10(dist_m / params.ref_dist_m)
        + shadow_db
    )


def path_loss_component(dist_m: float, shadow_db: float, params: ChannelParams) -> float:
    """Distance component of received power in linear mW."""
    return dbm_to_mw(path_loss_dbm(dist_m, shadow_db, params))


def penetration_component(blocked: bool, params: ChannelParams) -> float:
    """Blockage factor: 1 when clear, 10^(-L/10) when blocked (0 for inf)."""
    if not blocked:
        return 1.0
    if math.isinf(params.penetration_db):
        return 0.0
    return db_to_linear(-params.penetration_db)


@dataclass(frozen=True)
class LinkBudgetResult:
    pl_component_mw: float
    penetration_component: float
    rx_power_mw: float
    snr_db: float
    capacity_bps: float

    @property
    def pl_component_dbm(self) -> float:
        return mw_to_dbm(self.pl_component_mw)

    @property
    def rx_power_dbm(self) -> float:
        return mw_to_dbm(self.rx_power_mw)


def snr_and_capacity(pl_mw: float, blocked: bool, params: ChannelParams) -> LinkBudgetResult:
    """Combine the two power factors and evaluate Shannon capacity."""
    pp = penetration_component(blocked, params)
    rx_mw = pl_mw * pp
    noise_mw = dbm_to_mw(params.noise_floor_dbm())
    snr_lin = rx_mw / noise_mw
    capacity = params.bandwidth_hz * math.log2(1.0 + snr_lin)
    return LinkBudgetResult(
        pl_component_mw=pl_mw,
        penetration_component=pp,
        rx_power_mw=rx_mw,
        snr_db=linear_to_db(snr_lin),
        capacity_bps=capacity,
    )


def pl_threshold_test(pl_mw: float, gamma_mw: float) -> int:
    """1 when the distance component alone meets the sensitivity threshold."""
    return 1 if pl_mw >= gamma_mw else 0


def pair_budget(
    dist_m: float, shadow_db: float, blocked: bool, params: ChannelParams
) -> LinkBudgetResult:
    return snr_and_capacity(path_loss_component(dist_m, shadow_db, params), blocked, params)


def max_los_range(params: ChannelParams, shadow_db: float = 0.0) -> float:
    """Largest distance whose unblocked budget still meets the threshold.

    Found by doubling until failure then bisecting to 1 cm. Raises
    ThresholdUnreachableError when even the reference distance falls short.
    """
    gamma = params.gamma_mw()
    lo = params.ref_dist_m
    if path_loss_component(lo, shadow_db, params) < gamma:
        raise ThresholdUnreachableError("threshold not met at reference distance")
    hi = lo * 2.0
    for _ in range(80):
        if path_loss_component(hi, shadow_db, params) < gamma:
            break
        lo = hi
        hi *= 2.0
    else:
        raise ThresholdUnreachableError("threshold met at every probed distance")
    while hi - lo > 1e-2:
        mid = 0.5 * (lo + hi)
        if path_loss_component(mid, shadow_db, params) >= gamma:
            lo = mid
        else:
            hi = mid
    return lo


def draw_shadow_db(rng, params: ChannelParams) -> float:
    """One shadowing sample in dB; rng is a numpy Generator."""
    return params.shadow_sigma_db * float(rng.standard_normal())
