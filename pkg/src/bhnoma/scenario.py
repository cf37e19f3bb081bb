"""Scenario configuration, user population and link-budget geometry.

The scenario file is flat ``key = value`` text. Keys mirror the field names of
:class:`ScenarioConfig`; powers are given in dBW, antenna gains in dBi, the
inter-beam attenuation in dB, frequencies in Hz, rates in bit/s, distances in
metres and angles in degrees. Pairs are written as ``a, b``. ``#`` starts a
comment.
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import streams
from .errors import ParseError, ValidationError

SPEED_OF_LIGHT = 299_792_458.0
EARTH_RADIUS = 6_371e3

REUSE_MODES = ("one_color", "two_color", "four_color")
REUSE_ALIASES = {"1c": "one_color", "2c": "two_color", "4c": "four_color"}


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ScenarioConfig:
    """Static description of one beam-hopping downlink scenario.

    All power-like fields are linear (W, or a plain ratio for gains).
    Defaults reproduce the 48-beam reference system; the
    subcarrier counts and optimizer caps are not given there and use
    documented package defaults.
    """

    carrier_frequency: float = 11.7e9
    bandwidth_per_carrier: float = 200e6
    total_subcarriers: int = 4
    subcarriers_per_beam: int = 4
    max_carriers_per_user: int = 2
    users_per_beam: int = 8
    beam_count: int = 48
    max_active_beams: int = 8
    window_slots: int = 32
    satellite_altitude: float = 1000e3
    satellite_lon_lat: tuple = (101.0, 0.0)
    coverage_lon_range: tuple = (85.0, 115.0)
    coverage_lat_range: tuple = (-15.0, 15.0)
    tx_power: float = float(db_to_linear(5.0))
    noise_power: float = float(db_to_linear(-145.0))
    tx_gain: float = float(db_to_linear(49.6))
    rx_gain: float = float(db_to_linear(42.1))
    channel_error_variance: float = 0.0
    demand_range: tuple = (200e6, 1.4e9)
    min_rate: float = 5e6
    reuse_mode: str = "one_color"
    slot_overlap_fraction: float = 0.2
    beam_radius: float | None = None
    interbeam_attenuation: float = float(db_to_linear(-10.0))
    max_outer_iterations: int = 50
    max_dinkelbach_iterations: int = 50
    max_timeslot_iterations: int = 50
    master_seed: int = 1

    def __post_init__(self):
        object.__setattr__(self, "reuse_mode", REUSE_ALIASES.get(self.reuse_mode, self.reuse_mode))
        for name in ("satellite_lon_lat", "coverage_lon_range", "coverage_lat_range", "demand_range"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        self._validate()

    # -- invariants -------------------------------------------------------
    def _validate(self):
        B, B0, T = self.beam_count, self.max_active_beams, self.window_slots
        N, K, Q, M = (self.total_subcarriers, self.subcarriers_per_beam,
                      self.max_carriers_per_user, self.users_per_beam)
        checks = [
            (B >= 1, "B >= 1"),
            (1 <= B0 <= B, "B0 <= B"),
            (T >= 1, "T >= 1"),
            (1 <= K <= N, "1 <= K <= N"),
            (1 <= Q <= K, "1 <= Q <= K"),
            (M >= 1, "M >= 1"),
            (K == 1 or M > K, "M > K when K > 1"),
            (self.carrier_frequency > 0, "carrier_frequency > 0"),
            (self.bandwidth_per_carrier > 0, "W > 0"),
            (self.tx_power > 0, "Ps > 0"),
            (self.noise_power > 0, "sigma^2 > 0"),
            (self.tx_gain > 0, "Gt > 0"),
            (self.rx_gain > 0, "Gr > 0"),
            (self.satellite_altitude > 0, "satellite_altitude > 0"),
            (self.channel_error_variance >= 0, "omega* >= 0"),
            (0.0 <= self.slot_overlap_fraction <= 1.0, "0 <= kappa <= 1"),
            (0.0 <= self.demand_range[0] <= self.demand_range[1], "D_min <= D_max"),
            (self.min_rate >= 0, "R_min >= 0"),
            (self.reuse_mode in REUSE_MODES, "reuse_mode in {one_color, two_color, four_color}"),
            (self.beam_radius is None or self.beam_radius > 0, "beam_radius > 0"),
            (0 < self.interbeam_attenuation, "interbeam attenuation > 0"),
            (min(self.max_outer_iterations, self.max_dinkelbach_iterations,
                 self.max_timeslot_iterations) >= 1, "iteration caps >= 1"),
            (self.coverage_lon_range[0] < self.coverage_lon_range[1], "coverage lon range ordered"),
            (self.coverage_lat_range[0] < self.coverage_lat_range[1], "coverage lat range ordered"),
        ]
        for ok, name in checks:
            if not ok:
                raise ValidationError(name)

    # -- derived quantities ----------------------------------------------
    @property
    def mode(self) -> str:
        return "PD" if self.subcarriers_per_beam == 1 else "CD"

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def user_count(self) -> int:
        return self.beam_count * self.users_per_beam

    @cached_property
    def beam_centers(self) -> np.ndarray:
        return hexagonal_beam_centers(self)

    @property
    def effective_beam_radius(self) -> float:
        if self.beam_radius is not None:
            return self.beam_radius
        return _packing_radius(self)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            if f.init:
                v = getattr(self, f.name)
                out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def digest(self) -> str:
        """Short stable hash of the configuration, embedded in outputs."""
        text = repr(sorted(self.to_dict().items()))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# scenario file

# key -> (field name, converter)
def _pair(text):
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    if len(parts) != 2:
        raise ValueError("expected two comma-separated numbers")
    return tuple(float(p) for p in parts)


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError("expected an integer")
    return int(v)


_KEYS = {
    "carrier_frequency": ("carrier_frequency", float),
    "bandwidth_per_carrier": ("bandwidth_per_carrier", float),
    "total_subcarriers": ("total_subcarriers", _int),
    "subcarriers_per_beam": ("subcarriers_per_beam", _int),
    "max_carriers_per_user": ("max_carriers_per_user", _int),
    "users_per_beam": ("users_per_beam", _int),
    "beam_count": ("beam_count", _int),
    "max_active_beams": ("max_active_beams", _int),
    "window_slots": ("window_slots", _int),
    "satellite_altitude": ("satellite_altitude", float),
    "satellite_lon_lat": ("satellite_lon_lat", _pair),
    "coverage_lon_range": ("coverage_lon_range", _pair),
    "coverage_lat_range": ("coverage_lat_range", _pair),
    "tx_power": ("tx_power", lambda t: float(db_to_linear(float(t)))),
    "noise_power": ("noise_power", lambda t: float(db_to_linear(float(t)))),
    "tx_gain": ("tx_gain", lambda t: float(db_to_linear(float(t)))),
    "rx_gain": ("rx_gain", lambda t: float(db_to_linear(float(t)))),
    "channel_error_variance": ("channel_error_variance", float),
    "demand_range": ("demand_range", _pair),
    "min_rate": ("min_rate", float),
    "reuse_mode": ("reuse_mode", str.strip),
    "slot_overlap_fraction": ("slot_overlap_fraction", float),
    "beam_radius": ("beam_radius", float),
    "interbeam_attenuation_db": ("interbeam_attenuation", lambda t: float(db_to_linear(float(t)))),
    "max_outer_iterations": ("max_outer_iterations", _int),
    "max_dinkelbach_iterations": ("max_dinkelbach_iterations", _int),
    "max_timeslot_iterations": ("max_timeslot_iterations", _int),
    "master_seed": ("master_seed", _int),
}

# short spellings accepted on input
_KEYS["n1"] = _KEYS["max_outer_iterations"]
_KEYS["n2"] = _KEYS["max_dinkelbach_iterations"]
_KEYS["n3"] = _KEYS["max_timeslot_iterations"]


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{source}:{lineno}: expected 'key = value'")
        key, _, value = (s.strip() for s in line.partition("="))
        if key not in _KEYS:
            raise ParseError(f"{source}:{lineno}: unknown key {key!r}")
        name, conv = _KEYS[key]
        try:
            values[name] = conv(value)
        except ValueError as exc:
            raise ParseError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return ScenarioConfig(**values)


def load_scenario(path) -> ScenarioConfig:
    """Read and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_scenario(text, source=str(path))


def dump_scenario(cfg: ScenarioConfig) -> str:
    """Inverse of :func:`parse_scenario` (up to float formatting)."""
    lines = []
    for key, (name, _) in _KEYS.items():
        if key in ("n1", "n2", "n3"):
            continue
        v = getattr(cfg, name)
        if v is None:
            continue
        if key in ("tx_power", "noise_power", "tx_gain", "rx_gain", "interbeam_attenuation_db"):
            v = float(linear_to_db(v))
        if isinstance(v, tuple):
            v = ", ".join(repr(x) for x in v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


def default_scenario_path() -> Path:
    return Path(__file__).with_name("data") / "reference48.scn"


# ---------------------------------------------------------------------------
# geometry

def central_angle(lon1, lat1, lon2, lat2):
    """Great-circle angle in radians (haversine form), broadcasting."""
    lon1, lat1, lon2, lat2 = map(np.radians, (lon1, lat1, lon2, lat2))
    s = (np.sin((lat2 - lat1) / 2) ** 2
         + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2)
    return 2 * np.arcsin(np.sqrt(np.clip(s, 0.0, 1.0)))


def slant_range(lon, lat, cfg: ScenarioConfig):
    """Satellite-to-ground distance in metres on a spherical Earth."""
    slon, slat = cfg.satellite_lon_lat
    c = central_angle(slon, slat, lon, lat)
    r, rs = EARTH_RADIUS, EARTH_RADIUS + cfg.satellite_altitude
    d2 = r * r + rs * rs - 2 * r * rs * np.cos(c)
    # d >= altitude holds analytically; clamp the rounding at nadir
    return np.maximum(np.sqrt(d2), cfg.satellite_altitude)


def _grid_shape(cfg):
    width = cfg.coverage_lon_range[1] - cfg.coverage_lon_range[0]
    height = cfg.coverage_lat_range[1] - cfg.coverage_lat_range[0]
    cols = max(1, math.ceil(math.sqrt(cfg.beam_count * width / height)))
    rows = math.ceil(cfg.beam_count / cols)
    return rows, cols, width / cols, height / rows


def hexagonal_beam_centers(cfg: ScenarioConfig) -> np.ndarray:
    """Beam centers as a ``(B, 2)`` array of (lon, lat) in degrees.

    Rows are filled bottom-up, alternate rows shifted by half a column in
    opposite directions, and the first ``B`` cells in row-major order kept.
    """
    rows, cols, dx, dy = _grid_shape(cfg)
    lon0, lat0 = cfg.coverage_lon_range[0], cfg.coverage_lat_range[0]
    centers = []
    for r in range(rows):
        shift = 0.25 if r % 2 == 0 else -0.25
        for c in range(cols):
            centers.append((lon0 + (c + 0.5 + shift) * dx, lat0 + (r + 0.5) * dy))
    return np.array(centers[: cfg.beam_count])


def _packing_radius(cfg):
    _, _, dx, dy = _grid_shape(cfg)
    return EARTH_RADIUS * math.radians(0.5 * math.hypot(dx, dy))


def nearest_beam(lon, lat, centers) -> np.ndarray:
    """Index of the closest center; ties go to the lowest index."""
    d = central_angle(np.asarray(lon)[..., None], np.asarray(lat)[..., None],
                      centers[:, 0], centers[:, 1])
    return np.argmin(d, axis=-1)


# ---------------------------------------------------------------------------
# users

@dataclass(frozen=True)
class UserTerminal:
    user_id: int
    beam_id: int
    lon: float
    lat: float
    slant_distance: float
    demand: float
    role: str | None = None  # "beam_center" / "beam_edge" once ordered


def generate_users(cfg: ScenarioConfig, seed: int) -> list[UserTerminal]:
    """Draw ``B * M`` users, exactly ``M`` per beam.

    Candidate positions are uniform over the coverage rectangle; each one is
    kept by its nearest beam until that beam holds ``M`` users. The result is
    therefore uniform within every beam cell and respects nearest-center
    membership. User ids are ``beam * M + slot_in_beam``.
    """
    B, M = cfg.beam_count, cfg.users_per_beam
    centers = cfg.beam_centers
    rng = streams.substream(seed, streams.USERS)
    (lo0, lo1), (la0, la1) = cfg.coverage_lon_range, cfg.coverage_lat_range
    fill = np.zeros(B, dtype=int)
    pos = np.empty((B, M, 2))
    while fill.min() < M:
        cand = np.column_stack([rng.uniform(lo0, lo1, 4096), rng.uniform(la0, la1, 4096)])
        owner = nearest_beam(cand[:, 0], cand[:, 1], centers)
        for (lon, lat), b in zip(cand, owner):
            if fill[b] < M:
                pos[b, fill[b]] = lon, lat
                fill[b] += 1
    pos = pos.reshape(B * M, 2)
    demands = streams.substream(seed, streams.DEMANDS).uniform(
        cfg.demand_range[0], cfg.demand_range[1], B * M)
    dist = slant_range(pos[:, 0], pos[:, 1], cfg)
    return [
        UserTerminal(user_id=i, beam_id=i // M, lon=float(pos[i, 0]), lat=float(pos[i, 1]),
                     slant_distance=float(dist[i]), demand=float(demands[i]))
        for i in range(B * M)
    ]


def with_demands(users: list[UserTerminal], demands) -> list[UserTerminal]:
    return [dataclasses.replace(u, demand=float(d)) for u, d in zip(users, demands)]
