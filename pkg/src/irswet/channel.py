"""System geometry, fading channels, and the cascaded quantities the optimizers consume.

Link budget: path loss PL(d) = c0 (d/d0)^(-alpha) per link, ET antenna gain on
ET-IRS and ET-ER, ER antenna gain on IRS-ER and ET-ER, IRS element gain 1.
Small-scale fading is Rician on the two IRS links and Rayleigh on the direct
link. The LoS component of a Rician link is the plane-wave ramp of the far
endpoint as seen from the IRS (elements along the x axis, half-wavelength
spacing), so distinct ER positions produce distinct ramps.

Conventions that the rest of the package relies on:
  - q[k]     = h_r[k] * conj(g), so q_k^H theta is the reflected amplitude
  - q_bar[k] = [q[k], h_d[k]], so vdot(q_bar[k], theta_bar) with
               theta_bar = [theta, 1] equals q_k^H theta + h_d_k^H
  - q_lift[k] = outer(q_bar[k], conj(q_bar[k])), Hermitian PSD rank one
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemConfig",
    "ChannelRealization",
    "db_to_linear",
    "dbm_to_watts",
    "path_loss",
    "sample_channels",
    "received_rf_power",
    "aligned_amplitude",
]


def db_to_linear(db):
    """Power ratio for a dB value: 10^(dB/10)."""
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def dbm_to_watts(dbm):
    """Watts for a dBm value: 10^((dBm - 30)/10)."""
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Scenario constants: geometry, link budget, harvest budget, solver knobs.

    All values are linear and SI (watts, joules, seconds, meters). dB and dBm
    exist only at the configuration-file boundary.
    """

    n_elements: int
    n_ers: int
    et_position: tuple = (0.0, 0.0, 0.0)
    irs_position: tuple = (30.0, 0.0, 5.0)
    er_circle_center: tuple = (30.0, 0.0, 0.0)
    er_circle_radius: float = 5.0
    pathloss_ref: float = 1e-3            # c0, linear gain at ref_distance
    ref_distance: float = 1.0             # d0, meters
    exp_et_irs: float = 2.2
    exp_irs_er: float = 2.2
    exp_et_er: float = 3.6
    rician_factor: float = 10.0 ** 0.3    # 3 dB
    et_gain: float = 10.0                 # 10 dBi
    er_gain: float = 10.0 ** 0.3          # 3 dBi
    total_energy: float = 10.0            # E_tot, joules
    max_power: float = 10.0 ** 1.6        # 46 dBm
    horizon: float = 1.0                  # T, seconds
    fairness_weights: tuple = None        # alpha_k; default 1/K each
    sca_tol: float = 1e-3
    rank_threshold: float = 0.02

    def __post_init__(self):
        if int(self.n_elements) < 1 or int(self.n_ers) < 1:
            raise ValueError("n_elements and n_ers must be positive integers")
        object.__setattr__(self, "n_elements", int(self.n_elements))
        object.__setattr__(self, "n_ers", int(self.n_ers))
        for name in ("et_position", "irs_position", "er_circle_center"):
            p = tuple(float(v) for v in getattr(self, name))
            if len(p) != 3:
                raise ValueError(f"{name} must be a 3D point")
            object.__setattr__(self, name, p)
        for name in ("er_circle_radius", "pathloss_ref", "ref_distance",
                     "exp_et_irs", "exp_irs_er", "exp_et_er", "rician_factor",
                     "et_gain", "er_gain", "total_energy", "max_power",
                     "horizon", "sca_tol"):
            v = float(getattr(self, name))
            if not (v > 0) or not math.isfinite(v):
                raise ValueError(f"{name} must be strictly positive, got {v}")
            object.__setattr__(self, name, v)
        if not (0.0 < float(self.rank_threshold) < 1.0):
            raise ValueError("rank_threshold must lie in (0, 1)")
        object.__setattr__(self, "rank_threshold", float(self.rank_threshold))
        w = self.fairness_weights
        if w is None:
            w = (1.0 / self.n_ers,) * self.n_ers
        w = tuple(float(x) for x in w)
        if len(w) != self.n_ers:
            raise ValueError("fairness_weights must have one entry per ER")
        if any(x < 0 for x in w):
            raise ValueError("fairness_weights must be nonnegative")
        if abs(sum(w) - 1.0) > 1e-12:
            raise ValueError(f"fairness_weights must sum to 1, got {sum(w)}")
        object.__setattr__(self, "fairness_weights", w)

    @property
    def weights(self):
        """fairness_weights as an ndarray."""
        return np.asarray(self.fairness_weights, dtype=float)


@dataclass(frozen=True)
class ChannelRealization:
    """One coherence block: raw channels plus the derived cascaded forms.

    Arrays are read-only after construction; every optimizer treats this as
    shared immutable state.
    """

    h_d: np.ndarray        # (K,) complex, ET-ER direct
    g: np.ndarray          # (N,) complex, ET-IRS
    h_r: np.ndarray        # (K, N) complex, IRS-ER
    q: np.ndarray          # (K, N) cascaded, q[k] = h_r[k] * conj(g)
    q_bar: np.ndarray      # (K, N+1), q[k] with h_d[k] appended
    q_lift: np.ndarray     # (K, N+1, N+1) rank-one Hermitian outer products
    er_positions: np.ndarray  # (K, 3) meters, for metadata and debugging

    @property
    def n_ers(self):
        return self.h_d.shape[0]

    @property
    def n_elements(self):
        return self.g.shape[0]


def path_loss(c0, d0, alpha, d):
    """Linear power gain c0 (d/d0)^(-alpha) at distance d."""
    return c0 * (np.asarray(d, dtype=float) / d0) ** (-alpha)


def _los_ramp(n, far_point, irs_position):
    # plane-wave phase ramp across the x-aligned element line; the direction
    # cosine is the x component of the unit vector from the IRS to the far node
    d = np.asarray(far_point, dtype=float) - np.asarray(irs_position, dtype=float)
    cos = d[0] / np.linalg.norm(d)
    return np.exp(1j * np.pi * cos * np.arange(n))


def sample_channels(config: SystemConfig, seed) -> ChannelRealization:
    """Draw one channel realization. Identical seed gives bit-identical output.

    The draw order is part of the determinism contract: ER positions
    (radii then angles), then the direct channels, then the ET-IRS fades,
    then the IRS-ER fades.
    """
    rng = np.random.Generator(np.random.Philox(int(seed)))
    n, k = config.n_elements, config.n_ers
    et = np.asarray(config.et_position)
    irs = np.asarray(config.irs_position)
    center = np.asarray(config.er_circle_center)

    # uniform over the disk: r = R sqrt(u)
    radii = config.er_circle_radius * np.sqrt(rng.random(k))
    angles = 2.0 * np.pi * rng.random(k)
    er_pos = np.empty((k, 3))
    er_pos[:, 0] = center[0] + radii * np.cos(angles)
    er_pos[:, 1] = center[1] + radii * np.sin(angles)
    er_pos[:, 2] = 0.0  # ERs sit on the ground plane

    d_et_er = np.linalg.norm(er_pos - et, axis=1)
    d_irs_er = np.linalg.norm(er_pos - irs, axis=1)
    d_et_irs = float(np.linalg.norm(irs - et))

    def cn(shape):
        # unit-variance circularly symmetric complex Gaussian
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)

    kappa = config.rician_factor
    w_los = np.sqrt(kappa / (1.0 + kappa))
    w_nlos = np.sqrt(1.0 / (1.0 + kappa))

    pl_d = path_loss(config.pathloss_ref, config.ref_distance, config.exp_et_er, d_et_er)
    h_d = np.sqrt(pl_d * config.et_gain * config.er_gain) * cn(k)

    pl_g = path_loss(config.pathloss_ref, config.ref_distance, config.exp_et_irs, d_et_irs)
    g = np.sqrt(pl_g * config.et_gain) * (w_los * _los_ramp(n, et, irs) + w_nlos * cn(n))

    pl_r = path_loss(config.pathloss_ref, config.ref_distance, config.exp_irs_er, d_irs_er)
    los_r = np.stack([_los_ramp(n, er_pos[i], irs) for i in range(k)])
    h_r = np.sqrt(pl_r * config.er_gain)[:, None] * (w_los * los_r + w_nlos * cn((k, n)))

    q = h_r * np.conj(g)[None, :]
    q_bar = np.concatenate([q, h_d[:, None]], axis=1)
    q_lift = q_bar[:, :, None] * np.conj(q_bar)[:, None, :]

    out = ChannelRealization(h_d=h_d, g=g, h_r=h_r, q=q, q_bar=q_bar,
                             q_lift=q_lift, er_positions=er_pos)
    for arr in (out.h_d, out.g, out.h_r, out.q, out.q_bar, out.q_lift, out.er_positions):
        arr.flags.writeable = False
    return out


def received_rf_power(ch: ChannelRealization, k, theta, p_t):
    """RF power at ER k in watts: p_t |q_k^H theta + h_d_k^H|^2."""
    theta = np.asarray(theta, dtype=complex)
    if theta.shape != (ch.n_elements,):
        raise ValueError(f"theta must have shape ({ch.n_elements},)")
    if np.max(np.abs(np.abs(theta) - 1.0)) > 1e-9:
        raise ValueError("theta entries must have unit modulus (tolerance 1e-9)")
    if p_t < 0:
        raise ValueError("transmit power must be nonnegative")
    amp = np.vdot(ch.q[k], theta) + np.conj(ch.h_d[k])
    return float(p_t) * float(np.abs(amp)) ** 2


def aligned_amplitude(ch: ChannelRealization, k):
    """|h_d_k| + sum_n |q_k_n|, the phase-aligned amplitude ceiling for ER k."""
    return float(np.abs(ch.h_d[k]) + np.sum(np.abs(ch.q[k])))
