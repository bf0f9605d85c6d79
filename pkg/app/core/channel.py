"""
Channel Model

Closed-form packet success probability for a p-persistent broadcast channel with
path loss, Rayleigh fading and multi-user interference, for both the slotted
synchronous (SSP) and slotted asynchronous (SAP) variants, plus the IEEE 802.11p
rate/SIR-threshold table.

The fading power is unit-mean exponential; it is integrated out of the product
form below, so no fading parameter appears here. Noise is ignored (pure SIR).
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)


class ChannelDomainError(ValueError):
    """Raised when a channel quantity is outside its physical domain."""
    pass


class UnknownRateError(ValueError):
    """Raised when a data rate is not one of the tabulated 802.11p rates."""
    pass


class MacMode(str, Enum):
    """p-persistent MAC flavour."""
    SSP = "ssp"
    SAP = "sap"


@dataclass(frozen=True)
class RateEntry:
    """One row of the 802.11p rate table."""
    rate_bps: float
    beta_db: float


# IEEE 802.11p data rates and the SIR thresholds needed to decode them
RATE_TABLE: Tuple[RateEntry, ...] = (
    RateEntry(3.0e6, 5.0),
    RateEntry(4.5e6, 6.0),
    RateEntry(6.0e6, 8.0),
    RateEntry(9.0e6, 11.0),
    RateEntry(12.0e6, 15.0),
    RateEntry(18.0e6, 20.0),
    RateEntry(24.0e6, 25.0),
)

_RATE_LOOKUP: Dict[float, float] = {entry.rate_bps: entry.beta_db for entry in RATE_TABLE}


@dataclass(frozen=True)
class ChannelParams:
    """Propagation and MAC parameters of the success-probability model.

    Attributes:
        alpha: Path-loss exponent, must exceed 1.
        beta_linear: SIR decoding threshold as a linear power ratio.
        mode: SSP or SAP.
        sap_approx: Use 2p instead of the exact 2p - p^2 for SAP interferers.
    """
    alpha: float
    beta_linear: float
    mode: MacMode = MacMode.SSP
    sap_approx: bool = False

    def __post_init__(self) -> None:
        if not self.alpha > 1:
            raise ChannelDomainError(f"Path-loss exponent must be > 1, got {self.alpha}")
        if not self.beta_linear > 0:
            raise ChannelDomainError(f"SIR threshold must be > 0, got {self.beta_linear}")
        object.__setattr__(self, "mode", MacMode(self.mode))

    @classmethod
    def from_rate(cls, rate_bps: float, alpha: float, mode: MacMode = MacMode.SSP,
                  sap_approx: bool = False) -> "ChannelParams":
        """Build parameters with β taken from the rate table."""
        beta = db_to_linear(sir_threshold_for_rate(rate_bps))
        return cls(alpha=alpha, beta_linear=beta, mode=mode, sap_approx=sap_approx)

    @property
    def beta_db(self) -> float:
        return 10.0 * math.log10(self.beta_linear)


@dataclass(frozen=True)
class Interferer:
    """A potential interferer: distance to the receiver and its access probability."""
    r_i: float
    p_i: float

    def __post_init__(self) -> None:
        if not self.r_i > 0:
            raise ChannelDomainError(f"Interferer distance must be > 0, got {self.r_i}")
        if not 0.0 <= self.p_i <= 1.0:
            raise ChannelDomainError(f"Access probability must be in [0, 1], got {self.p_i}")


def db_to_linear(x_db: float) -> float:
    """Convert decibels to a linear power ratio."""
    return 10.0 ** (x_db / 10.0)


def supported_rates() -> List[float]:
    """Tabulated data rates in bits/s, ascending."""
    return [entry.rate_bps for entry in RATE_TABLE]


def sir_threshold_for_rate(rate_bps: float) -> float:
    """SIR decoding threshold in dB for a tabulated 802.11p data rate."""
    for known, beta_db in _RATE_LOOKUP.items():
        if math.isclose(rate_bps, known, rel_tol=1e-9):
            return beta_db
    supported = ", ".join(f"{r / 1e6:g}" for r in supported_rates())
    raise UnknownRateError(
        f"Unsupported data rate {rate_bps:g} bit/s; supported rates (Mbps): {supported}"
    )


def sap_effective_probability(p: float, approx: bool = False) -> float:
    """Effective per-slot activity of an unsynchronized interferer.

    An interferer overlaps at most two slots of a transmission, so it is active
    with probability p + p - p*p. With ``approx`` the small-p form 2p is used,
    clamped to 1.
    """
    if not 0.0 <= p <= 1.0:
        raise ChannelDomainError(f"Access probability must be in [0, 1], got {p}")
    if approx:
        return min(2.0 * p, 1.0)
    return min(2.0 * p - p * p, 1.0)


def effective_probability(p: float, params: ChannelParams) -> float:
    """Interferer activity as seen by a receiver under the configured MAC mode."""
    if params.mode is MacMode.SAP:
        return sap_effective_probability(p, approx=params.sap_approx)
    return p


def packet_success(r: float, interferers: Iterable[Interferer], params: ChannelParams) -> float:
    """Probability that a receiver at distance r decodes a packet.

    Product over interferers of p_i / (1 + β r^α r_i^-α) + (1 - p_i). Interferers
    with zero activity contribute a factor of one and are skipped.
    """
    if not r > 0:
        raise ChannelDomainError(f"Link distance must be > 0, got {r}")
    result = 1.0
    for interferer in interferers:
        p = effective_probability(interferer.p_i, params)
        if p == 0.0:
            continue
        ratio = (r / interferer.r_i) ** params.alpha
        result *= p / (1.0 + params.beta_linear * ratio) + (1.0 - p)
    return result


def packet_success_many(link_distances: np.ndarray, interferer_distances: np.ndarray,
                        interferer_probs: np.ndarray, params: ChannelParams,
                        mask: np.ndarray = None) -> np.ndarray:
    """Vectorized packet_success over many links at once.

    Args:
        link_distances: Shape (...,) transmitter-receiver distances.
        interferer_distances: Shape (..., K) distances from each interferer to the receiver.
        interferer_probs: Shape (..., K) or (K,) raw access probabilities.
        params: Channel parameters.
        mask: Optional boolean (..., K); False entries are not interferers for that link.

    Returns:
        Array of success probabilities with the shape of ``link_distances``.
    """
    r = np.asarray(link_distances, dtype=float)
    d = np.asarray(interferer_distances, dtype=float)
    if np.any(r <= 0):
        raise ChannelDomainError("Link distances must be > 0")
    if np.any(d <= 0):
        raise ChannelDomainError("Interferer distances must be > 0")

    p = np.broadcast_to(np.asarray(interferer_probs, dtype=float), d.shape)
    if params.mode is MacMode.SAP:
        p = np.minimum(2.0 * p, 1.0) if params.sap_approx else np.minimum(2.0 * p - p * p, 1.0)

    ratio = (r[..., None] / d) ** params.alpha
    factors = p / (1.0 + params.beta_linear * ratio) + (1.0 - p)
    if mask is not None:
        factors = np.where(mask, factors, 1.0)
    return np.prod(factors, axis=-1)


def interferers_from_arrays(distances: Sequence[float], probs: Sequence[float]) -> List[Interferer]:
    """Pair up distance and probability sequences."""
    return [Interferer(float(r), float(p)) for r, p in zip(distances, probs)]
