"""The three performance functionals and feasibility checking.

All values are computed in the linear domain; dB conversions happen only at
I/O boundaries. Beamformers w_k carry units of sqrt(watts); combiners u_k
are unit-norm by convention (the sensing SINR is scale-invariant in u_k).
"""

from dataclasses import dataclass, field

import numpy as np

from .scenario import SystemParams

REL_TOL = 1e-9        # relative feasibility tolerance for SINR ratios
ABS_TOL_W = 1e-15     # absolute floor for power comparisons [W]


@dataclass
class BeamformingState:
    """Transmit beamformers w (K, n_tx), receive combiners u (K, n_rx),
    power-splitting ratios rho (K,) in (0, 1)."""

    w: np.ndarray | None
    u: np.ndarray
    rho: np.ndarray

    def copy(self) -> "BeamformingState":
        return BeamformingState(
            w=None if self.w is None else self.w.copy(),
            u=self.u.copy(),
            rho=self.rho.copy(),
        )

    @property
    def total_power(self) -> float:
        if self.w is None:
            return 0.0
        return float(np.sum(np.abs(self.w) ** 2))


def received_powers(h: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Matrix P with P[k, j] = |h_k^H w_j|^2, shapes h (K, n_tx), w (K, n_tx)."""
    cross = h.conj() @ w.T
    return np.abs(cross) ** 2


def comm_sinr(h: np.ndarray, state: BeamformingState, params: SystemParams,
              node_k: int) -> float:
    """Communication SINR at the decoder of node k.

    (1-rho)|h_k^H w_k|^2 over (1-rho)(interference + antenna noise) plus the
    decoder noise, which the splitter does not attenuate.
    """
    p = received_powers(h[node_k:node_k + 1], state.w)[0]
    rho = state.rho[node_k]
    signal = p[node_k]
    interference = p.sum() - signal
    return ((1.0 - rho) * signal
            / ((1.0 - rho) * (interference + params.sigma2_c) + params.delta2))


def harvested_power(h: np.ndarray, state: BeamformingState, params: SystemParams,
                    node_k: int) -> float:
    """Power harvested at node k: zeta * rho * (total received power + noise)."""
    p = received_powers(h[node_k:node_k + 1], state.w)[0]
    return params.zeta * state.rho[node_k] * (p.sum() + params.sigma2_c)


def sensing_covariances(h_big: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Per-node echo covariances M[j] = H_j S H_j^H with S = sum_l w_l w_l^H."""
    # H_j S H_j^H = (H_j W^T)(H_j W^T)^H where W rows are the beamformers
    hw = np.einsum("jrt,lt->jrl", h_big, w)
    return np.einsum("jrl,jsl->jrs", hw, hw.conj())


def sensing_sinr(h_big: np.ndarray, state: BeamformingState, params: SystemParams,
                 node_k: int) -> float:
    """Sensing SINR for node k's echo after receive combining.

    Desired echo power through u_k over the other targets' echoes plus the
    receiver noise; depends on the beam set only through S = sum_l w_l w_l^H.
    """
    cov = sensing_covariances(h_big, state.w)
    u = state.u[node_k]
    quad = np.einsum("r,jrs,s->j", u.conj(), cov, u).real
    signal = quad[node_k]
    interference = quad.sum() - signal
    noise = params.sigma2_s * float(np.vdot(u, u).real)
    return signal / (interference + noise)


def all_metrics(h: np.ndarray, h_big: np.ndarray, state: BeamformingState,
                params: SystemParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(sinr_c, sinr_s, harvested) arrays over all nodes in one pass."""
    k_nodes = h.shape[0]
    p = received_powers(h, state.w)
    rho = state.rho
    sig = np.diag(p).copy()
    intf = p.sum(axis=1) - sig
    sinr_c = (1.0 - rho) * sig / ((1.0 - rho) * (intf + params.sigma2_c) + params.delta2)
    harvested = params.zeta * rho * (p.sum(axis=1) + params.sigma2_c)

    cov = sensing_covariances(h_big, state.w)
    quad = np.einsum("kr,jrs,ks->kj", state.u.conj(), cov, state.u).real
    s_sig = np.diag(quad).copy()
    s_intf = quad.sum(axis=1) - s_sig
    u_norm2 = np.sum(np.abs(state.u) ** 2, axis=1)
    sinr_s = s_sig / (s_intf + params.sigma2_s * u_norm2)
    assert sinr_c.shape == (k_nodes,)
    return sinr_c, sinr_s, harvested


def sum_harvested(h: np.ndarray, state: BeamformingState, params: SystemParams) -> float:
    p = received_powers(h, state.w)
    return float(np.sum(params.zeta * state.rho * (p.sum(axis=1) + params.sigma2_c)))


@dataclass
class ConstraintReport:
    """Per-node metric values, margins over the thresholds, and the overall
    feasibility verdict for the joint design problem."""

    sinr_c: np.ndarray
    sinr_s: np.ndarray
    harvested: np.ndarray
    total_power: float
    feasible: bool
    margins: dict = field(default_factory=dict)


def check_constraints(h: np.ndarray, h_big: np.ndarray, state: BeamformingState,
                      params: SystemParams,
                      thresholds: tuple[float, float, float] | None = None) -> ConstraintReport:
    """Evaluate all constraints of the joint problem at ``state``.

    ``thresholds`` is the (gamma, eta, e_min) triple, possibly scaled by the
    relaxation factor; defaults to the full values from ``params``. Margins
    are (value - threshold) in natural units. Ratios get a 1e-9 relative
    tolerance, powers a 1e-15 W absolute floor.
    """
    gamma, eta, e_min = thresholds if thresholds is not None else params.thresholds
    sinr_c, sinr_s, harvested = all_metrics(h, h_big, state, params)
    total_power = state.total_power
    rho = state.rho

    ok_c = bool(np.all(sinr_c >= gamma * (1.0 - REL_TOL)))
    ok_s = bool(np.all(sinr_s >= eta * (1.0 - REL_TOL)))
    ok_e = bool(np.all(harvested >= e_min - max(REL_TOL * e_min, ABS_TOL_W)))
    ok_p = total_power <= params.p_max + max(REL_TOL * params.p_max, ABS_TOL_W)
    ok_rho = bool(np.all((rho > 0.0) & (rho < 1.0)))

    margins = {
        "sinr_c": sinr_c - gamma,
        "sinr_s": sinr_s - eta,
        "harvested": harvested - e_min,
        "power": params.p_max - total_power,
        "rho": np.minimum(rho, 1.0 - rho),
    }
    return ConstraintReport(
        sinr_c=sinr_c, sinr_s=sinr_s, harvested=harvested,
        total_power=total_power,
        feasible=ok_c and ok_s and ok_e and ok_p and ok_rho,
        margins=margins,
    )
