"""Uplink physical layer: channels, MMSE receive beamforming, SINR, rates.

Channels are Rayleigh-faded complex vectors with log-distance path loss
(pluggable behind `generate_channels`).  Spectrum is orthogonal between
adjacent RUs, so interference is intra-RU only and every computation here
involves a single RU's users at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import Topology

DEFAULT_NUM_ANTENNAS = 10
DEFAULT_TX_POWER_DBM = 35.0
DEFAULT_NOISE_DENSITY_DBM_PER_HZ = -174.0
DEFAULT_PATH_LOSS_EXPONENT = 4.0


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class ChannelSet:
    """Per-user uplink channel to the serving RU.

    `h[k]` is the length-M complex channel of user k to RU `user_to_ru[k]`;
    `noise_power_w[i]` is the receiver noise power at RU i (density x band).
    """

    h: np.ndarray
    user_to_ru: np.ndarray
    tx_power_w: float
    noise_power_w: np.ndarray
    num_antennas: int

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.complex128)
        if h.ndim != 2 or h.shape[1] != self.num_antennas:
            raise ValueError(f"h must have shape (num_users, {self.num_antennas}), got {h.shape}")
        user_to_ru = np.asarray(self.user_to_ru, dtype=np.int64)
        if user_to_ru.shape != (h.shape[0],):
            raise ValueError("user_to_ru must have one entry per channel row")
        noise = np.atleast_1d(np.asarray(self.noise_power_w, dtype=np.float64))
        if np.any(noise <= 0):
            raise ValueError("noise_power_w must be strictly positive")
        if not self.tx_power_w > 0:
            raise ValueError("tx_power_w must be strictly positive")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "user_to_ru", user_to_ru)
        object.__setattr__(self, "noise_power_w", noise)

    @property
    def num_users(self) -> int:
        return int(self.h.shape[0])

    def users_of_ru(self, ru: int) -> np.ndarray:
        return np.flatnonzero(self.user_to_ru == ru)

    def noise_at(self, ru: int) -> float:
        if self.noise_power_w.size == 1:
            return float(self.noise_power_w[0])
        return float(self.noise_power_w[ru])


@dataclass(frozen=True)
class Beamformer:
    """Receive vectors for a set of users; row r of `u` belongs to `users[r]`."""

    users: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        users = np.asarray(self.users, dtype=np.int64)
        u = np.asarray(self.u, dtype=np.complex128)
        if u.ndim != 2 or u.shape[0] != users.size:
            raise ValueError("u must have one row per user index")
        if not np.all(np.isfinite(u)):
            raise ValueError("beamformer entries must be finite")
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "u", u)

    def vector_for(self, user: int) -> np.ndarray:
        rows = np.flatnonzero(self.users == user)
        if rows.size == 0:
            raise ValueError(f"beamformer does not cover user {user}")
        return self.u[int(rows[0])]


def path_loss(distance_m, exponent: float = DEFAULT_PATH_LOSS_EXPONENT, ref_distance_m: float = 1.0):
    """Log-distance power attenuation, 0 dB at the reference distance."""
    d = np.maximum(np.asarray(distance_m, dtype=np.float64), ref_distance_m)
    return (d / ref_distance_m) ** (-exponent)


def generate_channels(
    topology: Topology,
    ru_positions_m,
    user_positions_m,
    seed: int,
    num_antennas: int = DEFAULT_NUM_ANTENNAS,
    tx_power_dbm: float = DEFAULT_TX_POWER_DBM,
    noise_density_dbm_per_hz: float = DEFAULT_NOISE_DENSITY_DBM_PER_HZ,
    path_loss_exponent: float = DEFAULT_PATH_LOSS_EXPONENT,
    ref_distance_m: float = 1.0,
) -> ChannelSet:
    """Draw each user's serving-RU channel: sqrt(path loss) times a vector of
    independent zero-mean unit-variance complex normal entries.  Deterministic
    per seed."""
    ru_pos = np.asarray(ru_positions_m, dtype=np.float64)
    user_pos = np.asarray(user_positions_m, dtype=np.float64)
    n_user = topology.num_users
    rng = np.random.default_rng(seed)

    dists = np.linalg.norm(user_pos - ru_pos[topology.user_to_ru], axis=1)
    gain = path_loss(dists, exponent=path_loss_exponent, ref_distance_m=ref_distance_m)
    parts = rng.standard_normal((n_user, num_antennas, 2))
    fading = (parts[..., 0] + 1j * parts[..., 1]) / math.sqrt(2.0)
    h = np.sqrt(gain)[:, None] * fading

    noise_density_w = dbm_to_watt(noise_density_dbm_per_hz)
    return ChannelSet(
        h=h,
        user_to_ru=topology.user_to_ru,
        tx_power_w=dbm_to_watt(tx_power_dbm),
        noise_power_w=noise_density_w * topology.uplink_bandwidth_hz,
        num_antennas=num_antennas,
    )


def mmse_beamformer(channels: ChannelSet, ru: int) -> Beamformer:
    """Minimum-MSE receive vectors for every user of one RU:
    u_k = (sigma^2 I + p_t sum_l h_l h_l^H)^{-1} h_k over that RU's users.

    The received-signal covariance carries the transmit power; without it the
    solve maximizes SINR only for unit transmit power.
    """
    users = channels.users_of_ru(ru)
    if users.size == 0:
        raise ValueError(f"RU {ru} serves no users")
    H = channels.h[users]
    m = channels.num_antennas
    cov = channels.noise_at(ru) * np.eye(m, dtype=np.complex128) + channels.tx_power_w * (H.T @ H.conj())
    u = np.linalg.solve(cov, H.T).T
    return Beamformer(users=users, u=u)


def mmse_beamformers(channels: ChannelSet) -> Beamformer:
    """MMSE vectors for all users, ordered by user index."""
    u = np.zeros((channels.num_users, channels.num_antennas), dtype=np.complex128)
    for ru in np.unique(channels.user_to_ru):
        bf = mmse_beamformer(channels, int(ru))
        u[bf.users] = bf.u
    return Beamformer(users=np.arange(channels.num_users), u=u)


def sinr(channels: ChannelSet, beamformer: Beamformer, user: int) -> float:
    """Post-combining SINR of one user against its RU's co-scheduled users."""
    u = beamformer.vector_for(user)
    if not np.any(u):
        raise ValueError(f"beamformer for user {user} is zero")
    ru = int(channels.user_to_ru[user])
    p = channels.tx_power_w
    signal = p * abs(np.vdot(u, channels.h[user])) ** 2
    others = [l for l in channels.users_of_ru(ru) if l != user]
    interference = sum(p * abs(np.vdot(u, channels.h[l])) ** 2 for l in others)
    noise = float(np.vdot(u, u).real) * channels.noise_at(ru)
    return float(signal / (interference + noise))


def uplink_rate(bandwidth_hz: float, sinr_value: float) -> float:
    """Achievable uplink rate in bits/s."""
    if sinr_value < 0:
        raise ValueError("SINR must be non-negative")
    return float(bandwidth_hz * np.log2(1.0 + sinr_value))


def access_delay(data_bits: float, rate_bps: float) -> float:
    """Radio transmission time; a zero rate marks the user infeasible (inf)."""
    if data_bits == 0:
        return 0.0
    if rate_bps <= 0:
        return math.inf
    return float(data_bits) / float(rate_bps)


def uplink_rates(topology: Topology, channels: ChannelSet) -> np.ndarray:
    """Per-user achievable rate under MMSE combining, in user index order."""
    if not np.array_equal(topology.user_to_ru, channels.user_to_ru):
        raise ValueError("topology and channels disagree on user-to-RU assignment")
    rates = np.zeros(channels.num_users)
    for ru in np.unique(channels.user_to_ru):
        bf = mmse_beamformer(channels, int(ru))
        band = topology.uplink_bandwidth_hz[int(ru)]
        for k in bf.users:
            rates[k] = uplink_rate(band, sinr(channels, bf, int(k)))
    return rates
