"""Effective channels and closed-form performance metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .scenario import los_channel

UNIT_MODULUS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class StarRisState:
    """Transmission/reflection phase vectors plus energy-splitting amplitudes."""

    psi_t: np.ndarray
    psi_r: np.ndarray
    amp_t: float
    amp_r: float

    def __post_init__(self):
        for name in ("psi_t", "psi_r"):
            psi = np.asarray(getattr(self, name))
            if psi.ndim != 1:
                raise DimensionError(f"{name} must be a vector")
            if psi.size and np.max(np.abs(np.abs(psi) - 1.0)) > UNIT_MODULUS_TOL:
                raise ValueError(f"{name} entries must have unit modulus")
        if self.psi_t.shape != self.psi_r.shape:
            raise DimensionError("psi_t and psi_r must have the same length")

    @classmethod
    def from_config(cls, psi_t, psi_r, cfg):
        return cls(np.asarray(psi_t, complex), np.asarray(psi_r, complex), cfg.amp_t, cfg.amp_r)


def random_phases(rng, n):
    return np.exp(2j * np.pi * rng.uniform(size=n))


@dataclass(frozen=True, eq=False)
class EffectiveChannels:
    H_eff: np.ndarray
    J_eff: np.ndarray
    h_rt: np.ndarray
    h_rj: np.ndarray
    h_s: np.ndarray
    i_eff: np.ndarray


@dataclass(frozen=True)
class MetricReport:
    sum_rate: float
    gamma_sd: float
    gamma_sr: float
    p_det_malicious: float
    p_det_isac: float
    comm_gain: float
    jam_gain: float


def _check_len(ch, psi):
    L = ch.G_b.shape[0]
    if psi.shape != (L,):
        raise DimensionError(f"phase vector has length {psi.shape}, channels expect {L}")


def effective_comm_channels(ch, ris):
    """``(H + a_r F_c diag(psi_r) G_b, J + a_r F_c diag(psi_r) G_j)``."""
    _check_len(ch, ris.psi_r)
    if ch.F_c.shape[1] != ch.G_b.shape[0] or ch.G_j.shape[0] != ch.G_b.shape[0]:
        raise DimensionError("F_c, G_b and G_j disagree on the number of RIS elements")
    F = ris.amp_r * ch.F_c * ris.psi_r[None, :]
    return ch.H + F @ ch.G_b, ch.J + F @ ch.G_j


def effective_sense_channels(ch, ris):
    """Sensing-side channels through the transmission subspace.

    Returns ``(h_rt, h_rj, h_s, i_eff)`` as 1-D arrays.
    """
    _check_len(ch, ris.psi_t)
    w = ris.amp_t * ris.psi_t
    h_rt = (ch.f_r * w) @ ch.G_b
    h_rj = (ch.f_r * w) @ ch.G_j
    h_s = (ch.f_t * w) @ ch.G_b
    i_eff = (ch.f_m * w) @ ch.G_b
    return h_rt, h_rj, h_s, i_eff


def effective_channels(ch, ris):
    H_eff, J_eff = effective_comm_channels(ch, ris)
    return EffectiveChannels(H_eff, J_eff, *effective_sense_channels(ch, ris))


def _logdet_hpd(A):
    # Cholesky doubles as the positive-definiteness check
    try:
        c = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise ValueError("interference-plus-noise covariance is not positive definite") from None
    return 2.0 * np.sum(np.log(np.abs(np.diag(c))))


def sum_rate(H_eff, J_eff, p_c, p_j, sigma_n_sq):
    """Achievable sum rate in bits/s/Hz under jamming.

    Evaluated as ``log2 det(S + p_c H H^H) - log2 det(S)`` with
    ``S = sigma_n^2 I + p_j J J^H``, both through Cholesky factors.
    """
    if not sigma_n_sq > 0:
        raise ValueError("sigma_n_sq must be positive")
    H_eff = np.atleast_2d(H_eff)
    J_eff = np.atleast_2d(J_eff)
    K = H_eff.shape[0]
    if J_eff.shape[0] != K:
        raise DimensionError("H_eff and J_eff must have the same number of rows")
    S = sigma_n_sq * np.eye(K) + p_j * (J_eff @ J_eff.conj().T)
    T = S + p_c * (H_eff @ H_eff.conj().T)
    # both forms are scaled by 1/sigma^2 first so the factorization sees O(1) entries
    rate = (_logdet_hpd(T / sigma_n_sq) - _logdet_hpd(S / sigma_n_sq)) / math.log(2.0)
    return max(float(rate), 0.0)


def sum_rate_direct(H_eff, J_eff, p_c, p_j, sigma_n_sq):
    """Textbook ``log2 det(I + p_c H H^H S^-1)``; kept for cross-checks only."""
    H_eff = np.atleast_2d(H_eff)
    J_eff = np.atleast_2d(J_eff)
    K = H_eff.shape[0]
    S = sigma_n_sq * np.eye(K) + p_j * (J_eff @ J_eff.conj().T)
    M = np.eye(K) + p_c * (H_eff @ H_eff.conj().T) @ np.linalg.inv(S)
    sign, logdet = np.linalg.slogdet(M)
    return float(logdet / math.log(2.0))


@dataclass(frozen=True)
class SensingPowers:
    zeta_sq: float
    p_d: float
    p_s: float
    p_c: float
    p_j: float
    sigma_d_sq: float

    @classmethod
    def from_config(cls, cfg):
        return cls(cfg.zeta_sq, cfg.p_d, cfg.p_s, cfg.p_c, cfg.p_j, cfg.sigma_d_sq)


def _sq(v):
    v = np.asarray(v)
    return float(np.real(np.vdot(v, v)))


def sinr_malicious(ch, eff, powers):
    """Target-echo SINR at the malicious detector."""
    d2 = abs(los_channel(ch.los_d)) ** 2
    num = powers.zeta_sq * powers.p_d * d2 * d2 + powers.zeta_sq * powers.p_s * d2 * _sq(eff.h_s)
    den = powers.sigma_d_sq + powers.p_c * _sq(eff.i_eff)
    return num / den


def sinr_isac(ch, eff, powers):
    """Target-echo SINR at the ISAC receiver (``|r|^2`` for the scalar LoS gain)."""
    d2 = abs(los_channel(ch.los_d)) ** 2
    r2 = abs(los_channel(ch.los_r)) ** 2
    num = powers.p_s * powers.zeta_sq * r2 * _sq(eff.h_s) + powers.zeta_sq * powers.p_d * d2 * r2
    den = powers.sigma_d_sq + powers.p_d * abs(ch.h_rd) ** 2 + powers.p_j * _sq(eff.h_rj)
    return num / den


def detection_probability(gamma):
    """Detection probability ``(1 + gamma) ** (-1 / gamma)``.

    Evaluated as ``exp(-log1p(gamma) / gamma)``; ``gamma = 0`` returns the
    limit ``1/e``. Accepts scalars or arrays.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0) or np.any(np.isnan(g)):
        raise ValueError("SINR must be non-negative")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(g > 0, np.log1p(g) / np.where(g > 0, g, 1.0), 1.0)
    # log1p(g)/g = 1 - g/2 + g^2/3 - ...; the series is exact to rounding below 1e-8
    small = g < 1e-8
    ratio = np.where(small, 1.0 - g / 2.0 + g * g / 3.0, ratio)
    out = np.exp(-ratio)
    return float(out) if out.ndim == 0 else out


def evaluate_metrics(ch, ris, cfg):
    eff = effective_channels(ch, ris)
    powers = SensingPowers.from_config(cfg)
    g_sd = sinr_malicious(ch, eff, powers)
    g_sr = sinr_isac(ch, eff, powers)
    return MetricReport(
        sum_rate=sum_rate(eff.H_eff, eff.J_eff, cfg.p_c, cfg.p_j, cfg.sigma_n_sq),
        gamma_sd=g_sd,
        gamma_sr=g_sr,
        p_det_malicious=detection_probability(g_sd),
        p_det_isac=detection_probability(g_sr),
        comm_gain=_sq(eff.H_eff),
        jam_gain=_sq(eff.J_eff),
    )
