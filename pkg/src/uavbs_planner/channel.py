"""
Air-to-ground channel model.

Line-of-sight probability follows the elevation-angle S-curve, pathloss mixes
the LoS/NLoS excess losses with that probability, and rates use the Shannon
formula with the SNR expressed in the dB domain. GBS links are always LoS.

All powers are in dBm, losses in dB, bandwidths in Hz and rates in bps.
"""

import logging
import math
from typing import Dict, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import DomainError, GeometryError

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0
THERMAL_NOISE_DBM_PER_HZ = -174.0
LN2 = math.log(2.0)

ArrayLike = Union[float, np.ndarray]

# (alpha, beta, mu_los, mu_nlos) of the elevation S-curve per environment
ENVIRONMENTS: Dict[str, Tuple[float, float, float, float]] = {
    "suburban": (4.88, 0.43, 0.1, 21.0),
    "urban": (9.61, 0.16, 1.0, 20.0),
    "dense_urban": (12.08, 0.11, 1.6, 23.0),
    "highrise": (27.23, 0.08, 2.3, 34.0),
}


class ChannelParams(BaseModel):
    """Environment and radio constants. Defaults are the suburban set."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    alpha: float = Field(default=4.88, gt=0, description="Environment constant")
    beta: float = Field(default=0.43, gt=0, description="Environment constant per degree")
    eta: float = Field(default=2.5, gt=0, description="Pathloss exponent")
    mu_los: float = Field(default=0.1, description="Excess pathloss under LoS (dB)")
    mu_nlos: float = Field(default=21.0, description="Excess pathloss under NLoS (dB)")
    f_c: float = Field(default=2e9, gt=0, description="Carrier frequency (Hz)")
    c: float = Field(default=SPEED_OF_LIGHT, description="Speed of light (m/s)")
    p_d: float = Field(default=36.0, description="UAV transmit power (dBm)")
    p_g: float = Field(default=46.0, description="GBS transmit power (dBm)")
    omega_n: float = Field(default=6.0, description="Noise figure (dB)")
    noise_psd_dbm_hz: float = Field(
        default=THERMAL_NOISE_DBM_PER_HZ,
        description="Noise power spectral density (dBm/Hz); 0 gives the bare dB bracket",
    )

    @model_validator(mode="after")
    def _check_constants(self) -> "ChannelParams":
        if self.mu_nlos < self.mu_los:
            raise ValueError("mu_nlos must be >= mu_los")
        if self.c != SPEED_OF_LIGHT:
            raise ValueError("c is fixed at 299792458 m/s")
        return self

    @property
    def free_space_db(self) -> float:
        """Constant A: free-space term at 1 m plus the NLoS excess loss."""
        return 10.0 * self.eta * math.log10(4.0 * math.pi * self.f_c / self.c) + self.mu_nlos

    @property
    def los_gain_db(self) -> float:
        """Constant B = mu_los - mu_nlos (non-positive)."""
        return self.mu_los - self.mu_nlos

    @classmethod
    def for_environment(cls, name: str, **overrides: float) -> "ChannelParams":
        """Suburban/urban/dense_urban/highrise S-curve constants with default radio values."""
        try:
            alpha, beta, mu_los, mu_nlos = ENVIRONMENTS[name]
        except KeyError:
            raise DomainError(
                f"Unknown environment '{name}', expected one of {sorted(ENVIRONMENTS)}"
            ) from None
        values = dict(alpha=alpha, beta=beta, mu_los=mu_los, mu_nlos=mu_nlos)
        values.update(overrides)
        return cls(**values)


class Point3(BaseModel):
    """A position in meters; ``h`` is the altitude above ground."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x: float
    y: float
    h: float = Field(default=0.0, ge=0)

    def horizontal_distance(self, other: "Point3") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def distance(self, other: "Point3") -> float:
        return math.hypot(self.horizontal_distance(other), self.h - other.h)


class GroundStation(BaseModel):
    """A GBS on the ground and the bandwidth it can lend to the UAV (Hz)."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    position: Point3
    bandwidth_hz: float = Field(gt=0)


# ---------------------------------------------------------------------------
# Vectorised building blocks
# ---------------------------------------------------------------------------

def _link_geometry(
    uav: Point3, xs: np.ndarray, ys: np.ndarray, hs: ArrayLike = 0.0
) -> Tuple[np.ndarray, np.ndarray]:
    """Return (3-D distance, elevation angle in degrees) from ground points to the UAV."""
    r = np.hypot(np.asarray(xs, dtype=float) - uav.x, np.asarray(ys, dtype=float) - uav.y)
    dh = np.abs(uav.h - np.asarray(hs, dtype=float))
    d = np.hypot(r, dh)
    if np.any(d == 0.0):
        raise GeometryError("UAV and ground point coincide; distance is zero")
    return d, np.degrees(np.arctan2(dh, r))


def los_probability(params: ChannelParams, theta: ArrayLike) -> ArrayLike:
    """LoS probability for elevation angle(s) in degrees."""
    return 1.0 / (1.0 + params.alpha * np.exp(-params.beta * (np.asarray(theta) - params.alpha)))


def user_pathloss_db(
    params: ChannelParams, uav: Point3, xs: np.ndarray, ys: np.ndarray, hs: ArrayLike = 0.0
) -> np.ndarray:
    """Pathloss from the UAV to many ground users."""
    d, theta = _link_geometry(uav, xs, ys, hs)
    return (
        params.free_space_db
        + 10.0 * params.eta * np.log10(d)
        + params.los_gain_db * los_probability(params, theta)
    )


def gbs_pathloss_db(
    params: ChannelParams, uav: Point3, xs: np.ndarray, ys: np.ndarray, hs: ArrayLike = 0.0
) -> np.ndarray:
    """Pathloss from GBSs to the UAV, LoS probability forced to one."""
    d, _ = _link_geometry(uav, xs, ys, hs)
    return params.free_space_db + 10.0 * params.eta * np.log10(d) + params.los_gain_db


def snr_bandwidth_hz(params: ChannelParams, power_dbm: float, pathloss_db: ArrayLike) -> ArrayLike:
    """Theta: linear SNR times bandwidth (Hz), so that SNR(B) = Theta / B."""
    exponent = (power_dbm - np.asarray(pathloss_db) - params.omega_n - params.noise_psd_dbm_hz) / 10.0
    return np.power(10.0, exponent)


def rate_from_snr_bandwidth(theta_hz: ArrayLike, bandwidth_hz: ArrayLike) -> ArrayLike:
    """Shannon rate B * log2(1 + Theta / B) in bps."""
    bandwidth = np.asarray(bandwidth_hz, dtype=float)
    return bandwidth * np.log1p(np.asarray(theta_hz) / bandwidth) / LN2


def user_snr_bandwidth(
    params: ChannelParams, uav: Point3, xs: np.ndarray, ys: np.ndarray
) -> np.ndarray:
    """Theta of every user link for a UAV position."""
    return snr_bandwidth_hz(params, params.p_d, user_pathloss_db(params, uav, xs, ys))


# ---------------------------------------------------------------------------
# Scalar operations
# ---------------------------------------------------------------------------

def elevation_angle(uav: Point3, ground: Point3) -> float:
    """Elevation angle (degrees) of the UAV seen from a ground point.

    Directly overhead the angle is 90 degrees.
    """
    r = uav.horizontal_distance(ground)
    dh = abs(uav.h - ground.h)
    if r == 0.0 and dh == 0.0:
        raise GeometryError("Elevation angle undefined for coincident points")
    if r == 0.0:
        return 90.0
    return math.degrees(math.atan2(dh, r))


def p_los(params: ChannelParams, theta: float) -> float:
    """LoS probability at elevation ``theta`` (degrees, within [0, 90])."""
    if not 0.0 <= theta <= 90.0:
        raise DomainError(f"Elevation angle must lie in [0, 90], got {theta}")
    return float(los_probability(params, theta))


def pathloss_user(params: ChannelParams, uav: Point3, user: Point3) -> float:
    """Average UAV-to-user pathloss (dB)."""
    if uav.distance(user) == 0.0:
        raise GeometryError("Pathloss undefined at zero distance")
    theta = elevation_angle(uav, user)
    return (
        params.free_space_db
        + 10.0 * params.eta * math.log10(uav.distance(user))
        + params.los_gain_db * p_los(params, theta)
    )


def pathloss_gbs(params: ChannelParams, uav: Point3, gbs: Point3) -> float:
    """GBS-to-UAV pathloss (dB), always LoS."""
    d = uav.distance(gbs)
    if d == 0.0:
        raise GeometryError("Pathloss undefined at zero distance")
    return params.free_space_db + 10.0 * params.eta * math.log10(d) + params.los_gain_db


def data_rate(params: ChannelParams, uav: Point3, user: Point3, bandwidth: float) -> float:
    """Rate (bps) delivered to ``user`` over ``bandwidth`` Hz."""
    if not bandwidth > 0:
        raise DomainError(f"Bandwidth must be positive, got {bandwidth}")
    theta = snr_bandwidth_hz(params, params.p_d, pathloss_user(params, uav, user))
    return float(rate_from_snr_bandwidth(theta, bandwidth))


def backhaul_capacity(params: ChannelParams, uav: Point3, gbs: Point3, b_g: float) -> float:
    """Capacity (bps) of the GBS-to-UAV backhaul over the GBS bandwidth ``b_g``."""
    if not b_g > 0:
        raise DomainError(f"GBS bandwidth must be positive, got {b_g}")
    theta = snr_bandwidth_hz(params, params.p_g, pathloss_gbs(params, uav, gbs))
    return float(rate_from_snr_bandwidth(theta, b_g))


def best_gbs(
    params: ChannelParams, uav: Point3, gbss: Sequence[GroundStation]
) -> Tuple[int, float]:
    """Index and capacity of the GBS with the highest backhaul capacity.

    Ties go to the lowest index.
    """
    if not gbss:
        raise DomainError("best_gbs needs at least one ground station")
    best_index, best_capacity = 0, -math.inf
    for index, station in enumerate(gbss):
        capacity = backhaul_capacity(params, uav, station.position, station.bandwidth_hz)
        if capacity > best_capacity:
            best_index, best_capacity = index, capacity
    return best_index, best_capacity
