"""Scenario configuration and seeded channel synthesis.

Channels follow a distance-based path-loss law ``PL0 * (dist / d0) ** -kappa``
with ``PL0 = -30 dB`` at ``d0 = 1 m``. Links touching the STAR-RIS are Rician
with a uniform-linear-array LoS component; direct links are Rayleigh. The
transmitter-to-target direct path is blocked and never generated.

Every link draws from its own RNG substream keyed by ``(seed, link)``, so
changing one dimension (say the number of jammer antennas) leaves the
realizations of unrelated links untouched.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

PL0_DB = -30.0
D0 = 1.0

NODES = ("tx", "jammer", "ris", "users", "target", "isac_rx", "detector")

# Fixed substream indices; never renumber or stored seeds stop reproducing.
_STREAMS = {
    "users": 0,
    "H": 1,
    "J": 2,
    "F_c": 3,
    "G_b": 4,
    "G_j": 5,
    "f_r": 6,
    "f_t": 7,
    "f_m": 8,
    "h_rd": 9,
}


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def path_loss(dist, exponent, pl0_db=PL0_DB, d0=D0):
    """Linear power gain ``PL0 * (dist / d0) ** -exponent``."""
    dist = np.asarray(dist, dtype=float)
    return 10.0 ** (pl0_db / 10.0) * (dist / d0) ** (-exponent)


def _default_geometry():
    return {
        "tx": (0.0, 0.0),
        "ris": (50.0, 10.0),
        "users": (60.0, 0.0),
        "jammer": (40.0, -20.0),
        "target": (70.0, 20.0),
        "isac_rx": (75.0, 15.0),
        "detector": (90.0, 20.0),
    }


def _default_exponents():
    return {"direct": 3.5, "ris": 2.2, "los": 2.0}


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to synthesize one channel realization.

    Powers and noise variances are linear watts. ``g_th`` and ``gamma_min``
    are linear. ``w1`` and ``w2`` weight the joint objective; the decomposed
    solvers never read them, they are kept so configs round-trip.
    """

    n_tx: int = 16
    n_jam: int = 4
    n_users: int = 4
    n_ris: int = 48
    p_c: float = float(db_to_linear(6.0))
    p_s: float = float(db_to_linear(8.0))
    p_j: float = float(dbm_to_watts(30.0))
    p_d: float = float(dbm_to_watts(30.0))
    sigma_n_sq: float = float(dbm_to_watts(-120.0))
    sigma_d_sq: float = float(dbm_to_watts(-63.0))
    zeta_sq: float = 1.0
    g_th: float = 1e-8
    gamma_min: float = float(db_to_linear(-40.0))
    w1: float = 1.0
    w2: float = 1.0
    beta_t: float = 0.5
    beta_r: float = 0.5
    geometry: dict = field(default_factory=_default_geometry)
    user_radius: float = 10.0
    path_loss_exponents: dict = field(default_factory=_default_exponents)
    rician_k: float = float(db_to_linear(3.0))
    seed: int = 0
    p12_uses_pc: bool = False
    clip_penalty: bool = False

    def __post_init__(self):
        for name in ("n_tx", "n_jam", "n_users", "n_ris"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        for name in ("p_c", "p_s", "p_j", "p_d", "sigma_n_sq", "sigma_d_sq"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive power, got {v!r}")
        if not (self.zeta_sq >= 0 and np.isfinite(self.zeta_sq)):
            raise ConfigError("zeta_sq must be non-negative")
        if self.g_th < 0:
            raise ConfigError("g_th must be non-negative")
        if not self.gamma_min > 0:
            raise ConfigError("gamma_min must be positive")
        for name in ("beta_t", "beta_r"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v!r}")
        if self.beta_t + self.beta_r > 1.0 + 1e-12:
            raise ConfigError("beta_t + beta_r must not exceed 1 (passive energy splitting)")
        if self.rician_k < 0:
            raise ConfigError("rician_k must be non-negative")
        if self.user_radius < 0:
            raise ConfigError("user_radius must be non-negative")
        missing = [n for n in NODES if n not in self.geometry]
        if missing:
            raise ConfigError(f"geometry is missing nodes: {', '.join(missing)}")
        for name, xy in self.geometry.items():
            if len(xy) != 2 or not all(np.isfinite(c) for c in xy):
                raise ConfigError(f"geometry[{name!r}] must be two finite coordinates")
        for cls in ("direct", "ris", "los"):
            if cls not in self.path_loss_exponents:
                raise ConfigError(f"path_loss_exponents is missing link class {cls!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")

    @property
    def amp_t(self):
        return math.sqrt(self.beta_t)

    @property
    def amp_r(self):
        return math.sqrt(self.beta_r)


def with_detector_distance(cfg, distance):
    """Move the detector to ``distance`` meters from the target.

    The detector stays on the current target-to-detector axis.
    """
    if distance <= 0:
        raise ConfigError("detector distance must be positive")
    tx, ty = cfg.geometry["target"]
    dx, dy = cfg.geometry["detector"]
    vx, vy = dx - tx, dy - ty
    norm = math.hypot(vx, vy)
    if norm == 0.0:
        vx, vy, norm = 1.0, 0.0, 1.0
    geom = dict(cfg.geometry)
    geom["detector"] = (tx + distance * vx / norm, ty + distance * vy / norm)
    return replace(cfg, geometry=geom)


@dataclass(frozen=True)
class LosGeometry:
    """Path gain (amplitude) and angles, in radians, of a LoS link."""

    alpha: float
    beta: float
    phi: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError("LoS path gain must be non-negative")
        for a in (self.beta, self.phi):
            if not -math.pi <= a <= math.pi:
                raise ConfigError("LoS angles must lie in [-pi, pi]")


def los_channel(g):
    """Scalar LoS channel ``alpha * exp(j*pi*(cos(beta) + sin(beta)) * sin(phi))``."""
    phase = math.pi * (math.cos(g.beta) * math.sin(g.phi) + math.sin(g.beta) * math.sin(g.phi))
    return g.alpha * complex(math.cos(phase), math.sin(phase))


@dataclass(frozen=True, eq=False)
class ChannelSet:
    H: np.ndarray  # K x N
    J: np.ndarray  # K x N_j
    F_c: np.ndarray  # K x L
    G_b: np.ndarray  # L x N
    G_j: np.ndarray  # L x N_j
    f_r: np.ndarray  # L
    f_t: np.ndarray  # L
    f_m: np.ndarray  # L
    h_rd: complex
    los_d: LosGeometry
    los_r: LosGeometry

    @property
    def dims(self):
        """``(K, N, N_j, L)``."""
        K, N = self.H.shape
        return K, N, self.J.shape[1], self.G_b.shape[0]

    def equals(self, other):
        arrays = ("H", "J", "F_c", "G_b", "G_j", "f_r", "f_t", "f_m")
        return (
            all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays)
            and self.h_rd == other.h_rd
            and self.los_d == other.los_d
            and self.los_r == other.los_r
        )


def _steer(n, angle):
    # half-wavelength ULA along the x axis
    return np.exp(1j * np.pi * np.arange(n) * np.cos(angle))


def _angle(src, dst):
    return math.atan2(dst[1] - src[1], dst[0] - src[0])


def _distance(a, b, what):
    d = math.hypot(b[0] - a[0], b[1] - a[1])
    if d == 0.0:
        raise ConfigError(f"degenerate geometry: zero distance on link {what}")
    return d


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def draw_link(rng, shape, dist, exponent, rician_k=0.0, los=None):
    """One link's coefficients: ``sqrt(PL) * (LoS mix + CN(0, 1) scatter)``.

    ``los`` is a unit-modulus array of ``shape``; with ``rician_k = 0`` or no
    LoS term the link is Rayleigh.
    """
    scatter = _cn(rng, shape)
    if los is None or rician_k == 0.0:
        small = scatter
    else:
        small = math.sqrt(rician_k / (rician_k + 1.0)) * los + math.sqrt(1.0 / (rician_k + 1.0)) * scatter
    return math.sqrt(path_loss(dist, exponent)) * small


def _stream(seed, name):
    return np.random.default_rng(np.random.SeedSequence([int(seed), _STREAMS[name]]))


def user_positions(cfg):
    rng = _stream(cfg.seed, "users")
    cx, cy = cfg.geometry["users"]
    r = cfg.user_radius * np.sqrt(rng.uniform(size=cfg.n_users))
    t = rng.uniform(0.0, 2.0 * np.pi, size=cfg.n_users)
    return np.column_stack([cx + r * np.cos(t), cy + r * np.sin(t)])


def _los_geometry(node, target, exponent):
    dist = _distance(node, target, "LoS to target")
    alpha = math.sqrt(float(path_loss(dist, exponent)))
    # planar geometry: zero elevation, azimuth of the target seen from the node
    return LosGeometry(alpha=alpha, beta=0.0, phi=_angle(node, target))


def generate_channels(cfg):
    """Synthesize a :class:`ChannelSet` deterministically from ``cfg.seed``."""
    K, N, Nj, L = cfg.n_users, cfg.n_tx, cfg.n_jam, cfg.n_ris
    g = cfg.geometry
    ex = cfg.path_loss_exponents
    kr = cfg.rician_k
    tx, jam, ris = g["tx"], g["jammer"], g["ris"]
    users = user_positions(cfg)

    d_tx_u = np.array([_distance(tx, u, "tx-user") for u in users])
    d_jam_u = np.array([_distance(jam, u, "jammer-user") for u in users])
    d_ris_u = np.array([_distance(ris, u, "ris-user") for u in users])

    rng = _stream(cfg.seed, "H")
    H = np.sqrt(path_loss(d_tx_u, ex["direct"]))[:, None] * _cn(rng, (K, N))
    rng = _stream(cfg.seed, "J")
    J = np.sqrt(path_loss(d_jam_u, ex["direct"]))[:, None] * _cn(rng, (K, Nj))

    rng = _stream(cfg.seed, "F_c")
    los_fc = np.stack([_steer(L, _angle(ris, u)) for u in users])
    F_c = np.empty((K, L), dtype=complex)
    for k in range(K):
        F_c[k] = draw_link(rng, (L,), d_ris_u[k], ex["ris"], kr, los_fc[k])

    def cascade(name, src, n_src):
        dist = _distance(src, ris, f"{name}")
        los = np.outer(_steer(L, _angle(ris, src)), _steer(n_src, _angle(src, ris)).conj())
        return draw_link(_stream(cfg.seed, name), (L, n_src), dist, ex["ris"], kr, los)

    G_b = cascade("G_b", tx, N)
    G_j = cascade("G_j", jam, Nj)

    def ris_row(name, dst):
        dist = _distance(ris, dst, name)
        return draw_link(_stream(cfg.seed, name), (L,), dist, ex["ris"], kr, _steer(L, _angle(ris, dst)))

    f_r = ris_row("f_r", g["isac_rx"])
    f_t = ris_row("f_t", g["target"])
    f_m = ris_row("f_m", g["detector"])

    rng = _stream(cfg.seed, "h_rd")
    d_rd = _distance(g["isac_rx"], g["detector"], "isac_rx-detector")
    h_rd = complex(math.sqrt(float(path_loss(d_rd, ex["direct"]))) * _cn(rng, ()))

    los_d = _los_geometry(g["detector"], g["target"], ex["los"])
    los_r = _los_geometry(g["isac_rx"], g["target"], ex["los"])
    return ChannelSet(H, J, F_c, G_b, G_j, f_r, f_t, f_m, h_rd, los_d, los_r)


# --- config files -----------------------------------------------------------

_POWER_FIELDS = {"p_c", "p_s", "p_j", "p_d", "sigma_n_sq", "sigma_d_sq"}
_RATIO_FIELDS = {"zeta_sq", "g_th", "gamma_min", "rician_k", "w1", "w2", "beta_t", "beta_r", "user_radius"}
_INT_FIELDS = {"n_tx", "n_jam", "n_users", "n_ris", "seed"}
_BOOL_FIELDS = {"p12_uses_pc", "clip_penalty"}

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_power(text):
    """Parse ``'6 dBW'``, ``'30dBm'``, ``'4 W'`` or a bare number (watts)."""
    m = re.fullmatch(rf"\s*({_NUM})\s*(dBW|dBm|W)?\s*", text)
    if not m:
        raise ConfigError(f"cannot parse power {text!r}")
    value, unit = float(m.group(1)), m.group(2)
    if unit == "dBW":
        return float(db_to_linear(value))
    if unit == "dBm":
        return float(dbm_to_watts(value))
    return value


def parse_ratio(text):
    """Parse a dimensionless value; a ``dB`` suffix converts to linear."""
    m = re.fullmatch(rf"\s*({_NUM})\s*(dB)?\s*", text)
    if not m:
        raise ConfigError(f"cannot parse value {text!r}")
    value = float(m.group(1))
    return float(db_to_linear(value)) if m.group(2) else value


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot parse boolean {text!r}")


def parse_config(text, base=None):
    """Build a :class:`ScenarioConfig` from ``key = value`` lines.

    Map-valued fields use dotted keys: ``geometry.target = 70, 20`` and
    ``path_loss_exponents.direct = 3.5``. Unspecified fields keep the values
    of ``base`` (defaults if omitted).
    """
    base = base or ScenarioConfig()
    known = {f.name for f in fields(ScenarioConfig)}
    updates = {}
    geom = dict(base.geometry)
    expo = dict(base.path_loss_exponents)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key.startswith("geometry."):
                parts = [p for p in re.split(r"[,\s]+", value.strip("() ")) if p]
                if len(parts) != 2:
                    raise ConfigError(f"expected two coordinates, got {value!r}")
                geom[key.split(".", 1)[1]] = (float(parts[0]), float(parts[1]))
            elif key.startswith("path_loss_exponents."):
                expo[key.split(".", 1)[1]] = float(value)
            elif key in _POWER_FIELDS:
                updates[key] = parse_power(value)
            elif key in _RATIO_FIELDS:
                updates[key] = parse_ratio(value)
            elif key in _INT_FIELDS:
                updates[key] = int(value, 0)
            elif key in _BOOL_FIELDS:
                updates[key] = _parse_bool(value)
            elif key in known:
                raise ConfigError(f"{key} must be given with a dotted sub-key")
            else:
                raise ConfigError(f"unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise ConfigError(f"line {lineno}: {exc}") from None
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
    return replace(base, geometry=geom, path_loss_exponents=expo, **updates)


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
