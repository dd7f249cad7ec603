"""Steering vectors and Rician communication/sensing channels.

The BS carries a single shared-aperture ULA of N = n_tx + n_rx elements at
half-wavelength spacing, phase-referenced to the aperture center: element m
(0-indexed over the full aperture) responds with exp(j*pi*(m - (N-1)/2)*beta)
toward direction cosine beta = sin(theta)*cos(phi). The transmit steering
vector takes the first n_tx elements, the receive vector the last n_rx.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidBeta
from .numerics import SeededRng, sample_complex_gaussian
from .scenario import ScenarioGeometry, SystemParams


def _aperture_phases(beta: float, n_total: int) -> np.ndarray:
    if abs(beta) > 1.0:
        raise InvalidBeta(f"|beta| = {abs(beta)} > 1")
    m = np.arange(n_total, dtype=float)
    return np.exp(1j * np.pi * (m - (n_total - 1) / 2.0) * beta)


def steering_tx(beta: float, n_tx: int, n_total: int) -> np.ndarray:
    """Transmit steering vector (n_tx, 1): first n_tx elements of the aperture."""
    return _aperture_phases(beta, n_total)[:n_tx, None]


def steering_rx(beta: float, n_rx: int, n_total: int) -> np.ndarray:
    """Receive steering vector (n_rx, 1): last n_rx elements of the aperture."""
    return _aperture_phases(beta, n_total)[n_total - n_rx:, None]


def comm_amplitude_los(params: SystemParams, distance: float) -> float:
    """Amplitude of the LoS communication path at the given distance."""
    return np.sqrt(params.l0 * (distance / params.d0) ** (-params.alpha))


def comm_channel(params: SystemParams, geometry: ScenarioGeometry,
                 rng: SeededRng, node_k: int, los_only: bool = False) -> np.ndarray:
    """Communication/powering channel h_k, shape (n_tx, 1).

    Rician mix of a deterministic steering-vector LoS part with decaying
    path loss l0 * (d/d0)^(-alpha) and an i.i.d. CN(0,1) scattered part with
    exponent alpha_nlos. ``los_only`` returns the pure LoS part exactly.
    """
    n_total = params.n_tx + params.n_rx
    d = geometry.distances[node_k]
    a_t = steering_tx(geometry.beta[node_k], params.n_tx, n_total)
    h_los = comm_amplitude_los(params, d) * a_t
    if los_only:
        return h_los
    amp_nlos = np.sqrt(params.l0 * (d / params.d0) ** (-params.alpha_nlos))
    h_nlos = amp_nlos * sample_complex_gaussian(rng, params.n_tx, 1)
    kap = params.kappa
    return np.sqrt(kap / (kap + 1)) * h_los + np.sqrt(1 / (kap + 1)) * h_nlos


def sensing_amplitude_los(params: SystemParams, distance: float) -> float:
    """Amplitude of the LoS echo path (round trip 2*d, scaled by the RCS)."""
    return np.sqrt(params.l0 * (2.0 * distance / params.d0) ** (-params.alpha) * params.rcs)


def sensing_channel(params: SystemParams, geometry: ScenarioGeometry,
                    rng: SeededRng, node_k: int, los_only: bool = False) -> np.ndarray:
    """Mono-static sensing channel H_k, shape (n_rx, n_tx).

    The LoS part is the rank-1 outer product a_r(beta) a_t(beta)^H (echo
    arrival angle equals departure angle) with round-trip distance 2*d_k and
    RCS-scaled gain; the scattered part is i.i.d. CN(0,1) with the NLoS
    exponent.
    """
    n_total = params.n_tx + params.n_rx
    d = geometry.distances[node_k]
    beta = geometry.beta[node_k]
    a_t = steering_tx(beta, params.n_tx, n_total)
    a_r = steering_rx(beta, params.n_rx, n_total)
    h_los = sensing_amplitude_los(params, d) * (a_r @ a_t.conj().T)
    if los_only:
        return h_los
    amp_nlos = np.sqrt(params.l0 * (2.0 * d / params.d0) ** (-params.alpha_nlos) * params.rcs)
    h_nlos = amp_nlos * sample_complex_gaussian(rng, params.n_rx, params.n_tx)
    kap = params.kappa
    return np.sqrt(kap / (kap + 1)) * h_los + np.sqrt(1 / (kap + 1)) * h_nlos


@dataclass(frozen=True)
class ChannelSet:
    """Per-node channels: h (K, n_tx) rows h_k, h_big (K, n_rx, n_tx) H_k."""

    h: np.ndarray
    h_big: np.ndarray
    los_only: bool = False

    @property
    def n_nodes(self) -> int:
        return self.h.shape[0]

    @classmethod
    def draw(cls, params: SystemParams, geometry: ScenarioGeometry,
             rng: SeededRng, los_only: bool = False) -> "ChannelSet":
        """Draw all per-node channels using independent derived streams, so
        node order never changes any realization."""
        k_nodes = geometry.n_nodes
        h = np.zeros((k_nodes, params.n_tx), dtype=np.complex128)
        h_big = np.zeros((k_nodes, params.n_rx, params.n_tx), dtype=np.complex128)
        for k in range(k_nodes):
            h[k] = comm_channel(params, geometry, rng.derive("comm", k), k,
                                los_only=los_only).ravel()
            h_big[k] = sensing_channel(params, geometry, rng.derive("sens", k), k,
                                       los_only=los_only)
        return cls(h=h, h_big=h_big, los_only=los_only)
