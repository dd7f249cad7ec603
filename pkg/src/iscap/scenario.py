"""Physical/algorithmic parameters and node geometry.

Holds every scalar constant of the system, converts node/BS positions into
the per-node distances and direction cosines the array model needs, and
parses the flat ``key = value`` configuration format.
"""

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError, DegenerateGeometry
from .numerics import SeededRng


def db_to_linear(x: float) -> float:
    """dB -> linear power ratio."""
    return 10.0 ** (x / 10.0)


def linear_to_db(x: float) -> float:
    """Linear power ratio -> dB."""
    return 10.0 * math.log10(x)


def dbm_to_watts(x: float) -> float:
    """dBm -> watts."""
    return 10.0 ** ((x - 30.0) / 10.0)


def watts_to_dbm(x: float) -> float:
    """Watts -> dBm."""
    return 10.0 * math.log10(x) + 30.0


@dataclass(frozen=True)
class SystemParams:
    """All scalar constants of the system and the optimizer.

    Defaults follow the reference simulation setup: 8 transmit / 12 receive
    antennas, 4 nodes, 1 W power budget, -90 dBm antenna noise, -100 dBm
    decoder noise, 10 dB SINR targets, 1 nW harvesting target.
    """

    n_tx: int = 8                 # transmit antennas
    n_rx: int = 12                # receive antennas
    n_nodes: int = 4              # IoT nodes K
    p_max: float = 1.0            # BS power budget [W]
    sigma2_c: float = 1e-12       # antenna noise at each node [W]
    sigma2_s: float = 1e-12       # sensing noise at the BS receiver [W]
    delta2: float = 1e-13         # decoder circuit noise [W]
    gamma: float = 10.0           # communication SINR target (linear)
    eta: float = 10.0             # sensing SINR target (linear)
    e_min: float = 1e-9           # harvested-power target [W]
    rcs: float = 1.0              # radar cross section [m^2]
    kappa: float = 5.0            # Rician factor (linear)
    alpha: float = 2.0            # LoS path-loss exponent
    alpha_nlos: float = 3.2       # NLoS path-loss exponent
    l0: float = 1e-4              # gain at the reference distance (linear)
    d0: float = 1.0               # reference distance [m]
    zeta: float = 1.0             # energy conversion efficiency, in (0, 1]
    tau: float = 1e-8             # outer-loop convergence tolerance [W]
    max_iters: int = 50           # outer-loop iteration cap
    gr_samples: int = 100         # randomization candidates for rank-1 recovery
    chi_ramp_iters: int = 5       # iterations over which thresholds ramp to full

    def __post_init__(self):
        if self.n_tx < 1 or self.n_rx < 1 or self.n_nodes < 1:
            raise ValueError("antenna and node counts must be >= 1")
        if self.p_max <= 0:
            raise ValueError("p_max must be positive")
        for name in ("sigma2_c", "sigma2_s", "delta2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.gamma <= 0 or self.eta <= 0 or self.e_min <= 0:
            raise ValueError("gamma, eta and e_min must be positive")
        if not 0 < self.zeta <= 1:
            raise ValueError("zeta must be in (0, 1]")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if self.tau <= 0 or self.max_iters < 1 or self.gr_samples < 1:
            raise ValueError("tau, max_iters and gr_samples must be positive")
        if self.chi_ramp_iters < 1:
            raise ValueError("chi_ramp_iters must be >= 1")

    @property
    def thresholds(self) -> tuple[float, float, float]:
        """(gamma, eta, e_min) triple used by the constraint checks."""
        return (self.gamma, self.eta, self.e_min)


def angles_from_positions(bs, node) -> tuple[float, float, float]:
    """Direction of a node as seen from the BS.

    Returns (sin_theta, cos_phi, beta) with
    sin_theta = (y_bs - y_node) / horizontal distance,
    cos_phi   = (z_bs - z_node) / total distance,
    beta      = sin_theta * cos_phi.

    Raises:
        DegenerateGeometry: node exactly on the BS vertical (azimuth undefined).
    """
    bs = np.asarray(bs, dtype=float)
    node = np.asarray(node, dtype=float)
    diff = bs - node
    horiz = math.hypot(diff[0], diff[1])
    dist = float(np.linalg.norm(diff))
    if horiz == 0.0:
        raise DegenerateGeometry("node has zero horizontal offset from the BS")
    sin_theta = diff[1] / horiz
    cos_phi = diff[2] / dist
    return float(sin_theta), float(cos_phi), float(sin_theta * cos_phi)


@dataclass(frozen=True)
class ScenarioGeometry:
    """BS and node positions with derived per-node distance/direction data."""

    bs_position: np.ndarray        # (3,) [m]
    node_positions: np.ndarray     # (K, 3) [m]
    distances: np.ndarray          # (K,) [m]
    sin_theta: np.ndarray          # (K,)
    cos_phi: np.ndarray            # (K,)
    beta: np.ndarray               # (K,) sin_theta * cos_phi

    @property
    def n_nodes(self) -> int:
        return len(self.node_positions)

    @classmethod
    def from_positions(cls, bs, nodes) -> "ScenarioGeometry":
        bs = np.asarray(bs, dtype=float)
        nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
        dist = np.linalg.norm(nodes - bs, axis=1)
        ang = [angles_from_positions(bs, p) for p in nodes]
        sin_t = np.array([a[0] for a in ang])
        cos_p = np.array([a[1] for a in ang])
        beta = np.array([a[2] for a in ang])
        return cls(bs, nodes, dist, sin_t, cos_p, beta)


def place_nodes_uniform(rng: SeededRng, count: int, half_side: float,
                        bs_height: float) -> ScenarioGeometry:
    """Drop ``count`` nodes uniformly in a square of side 2*half_side at z=0,
    BS at (0, 0, bs_height).

    Nodes landing exactly on the BS vertical (measure zero) are resampled so
    the derived azimuth is always defined.
    """
    if count < 1 or half_side <= 0:
        raise ValueError("count must be >= 1 and half_side positive")
    g = rng.generator()
    positions = np.zeros((count, 3))
    for k in range(count):
        while True:
            xy = g.uniform(-half_side, half_side, size=2)
            if xy[0] != 0.0 or xy[1] != 0.0:
                positions[k, :2] = xy
                break
    return ScenarioGeometry.from_positions([0.0, 0.0, bs_height], positions)


@dataclass(frozen=True)
class SimulationConfig:
    """Resolved configuration: system constants plus scenario/run settings."""

    params: SystemParams = field(default_factory=SystemParams)
    area_half_side_m: float = 25.0
    bs_height_m: float = 10.0
    seed: int = 0
    drops: int = 200
    los_only: bool = False      # set by experiment definitions, not config files

    def with_overrides(self, **overrides) -> "SimulationConfig":
        """Copy with per-experiment overrides; param names fall through to
        SystemParams fields."""
        param_names = {f.name for f in fields(SystemParams)}
        top = {k: v for k, v in overrides.items() if k not in param_names}
        inner = {k: v for k, v in overrides.items() if k in param_names}
        cfg = replace(self, **top) if top else self
        if inner:
            cfg = replace(cfg, params=replace(self.params, **inner))
        return cfg


_CONFIG_EXTRA_KEYS = {"area_half_side_m": float, "bs_height_m": float,
                      "seed": int, "drops": int}
_INT_PARAM_KEYS = {"n_tx", "n_rx", "n_nodes", "max_iters", "gr_samples",
                   "chi_ramp_iters"}


def _parse_number(text: str, line: int):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"value {text!r} is not a number", line) from None


def parse_config(text: str) -> SimulationConfig:
    """Parse the flat ``key = value`` configuration format.

    One pair per line, ``#`` starts a comment. Keys mirror the SystemParams
    field names plus area_half_side_m / bs_height_m / seed / drops. Any float
    key may instead be given with a ``_db`` or ``_dbm`` suffix and is
    converted on load.

    Raises:
        ConfigError: unknown key, bad value, or duplicate assignment, with
            the offending line number.
    """
    param_names = {f.name for f in fields(SystemParams)}
    values: dict = {}
    assigned: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if not key or not val:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)

        base, conv = key, None
        if key.endswith("_dbm"):
            base, conv = key[:-4], dbm_to_watts
        elif key.endswith("_db"):
            base, conv = key[:-3], db_to_linear
        if base not in param_names and base not in _CONFIG_EXTRA_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if conv is not None and (base in _INT_PARAM_KEYS or base in ("seed", "drops")):
            raise ConfigError(f"key {key!r} cannot take a dB value", lineno)
        if base in assigned:
            raise ConfigError(f"{base!r} already set on line {assigned[base]}", lineno)
        assigned[base] = lineno

        number = _parse_number(val, lineno)
        if conv is not None:
            number = conv(float(number))
        if base in _INT_PARAM_KEYS or base in ("seed", "drops"):
            if not float(number).is_integer():
                raise ConfigError(f"{base!r} must be an integer", lineno)
            number = int(number)
        else:
            number = float(number)
        values[base] = number

    extra = {k: values.pop(k) for k in list(values) if k in _CONFIG_EXTRA_KEYS}
    try:
        params = SystemParams(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return SimulationConfig(params=params, **extra)


def load_config(path) -> SimulationConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
