"""Channel models: real-valued Gaussian MAC and block-fading MIMO uplink.

Energy conventions (documented, not canonical):
  SISO  Eb/N0 = d^2 * L / (2 * B)   unit-norm columns, real noise variance 1
  MIMO  Eb/N0 = L * n * P / (B * N0)  columns on the sphere of radius sqrt(n*P)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SisoChannelConfig:
    """Scalar-channel parameters: y = sum_j d * x_j + z with z ~ N(0, noise_std^2)."""

    d: float
    B: int
    L: int
    noise_seed: int = 0
    noise_std: float = 1.0

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("amplitude d must be nonnegative")
        if self.B < 1 or self.L < 1:
            raise ValueError("B and L must be at least 1")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")

    @property
    def ebn0_db(self) -> float:
        return 10.0 * np.log10(self.d ** 2 * self.L / (2.0 * self.B))


@dataclass(frozen=True)
class MimoChannelConfig:
    """Block-fading uplink: per-block Y = sum_j a_{i_j} h_j^T + Z."""

    M: int
    n: int
    N0: float
    P: float
    fading_seed: int = 0
    noise_seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.n < 1:
            raise ValueError("M and n must be at least 1")
        if self.N0 <= 0:
            raise ValueError("noise power N0 must be positive")
        if self.P <= 0:
            raise ValueError("symbol power P must be positive")


def ebn0_to_amplitude(ebn0_db: float, B: int, L: int) -> float:
    """Transmit amplitude d for the scalar channel at the given Eb/N0 (dB)."""
    if B < 1 or L < 1:
        raise ValueError("B and L must be at least 1")
    ebn0 = 10.0 ** (ebn0_db / 10.0)
    return float(np.sqrt(2.0 * B * ebn0 / L))


def amplitude_to_ebn0(d: float, B: int, L: int) -> float:
    return float(10.0 * np.log10(d ** 2 * L / (2.0 * B)))


def ebn0_to_power(ebn0_db: float, B: int, L: int, n: int, N0: float) -> float:
    """Per-symbol power P for the MIMO channel at the given Eb/N0 (dB)."""
    if B < 1 or L < 1 or n < 1:
        raise ValueError("B, L, n must be at least 1")
    if N0 <= 0:
        raise ValueError("N0 must be positive")
    ebn0 = 10.0 ** (ebn0_db / 10.0)
    return float(ebn0 * B * N0 / (L * n))


def power_to_ebn0(P: float, B: int, L: int, n: int, N0: float) -> float:
    return float(10.0 * np.log10(L * n * P / (B * N0)))


def gmac_transmit(user_signals: np.ndarray, cfg: SisoChannelConfig,
                  stream: int = 0) -> np.ndarray:
    """Superimpose K per-user signals (rows) and add real Gaussian noise.

    ``stream`` picks an independent noise substream so successive slots of
    one trial do not share noise.
    """
    user_signals = np.asarray(user_signals, dtype=np.float64)
    if user_signals.ndim == 1:
        user_signals = user_signals[None, :]
    if user_signals.ndim != 2:
        raise ValueError("user_signals must be (K, n)")
    n = user_signals.shape[1]
    rng = np.random.default_rng((cfg.noise_seed, stream))
    z = rng.standard_normal(n) * cfg.noise_std
    return cfg.d * user_signals.sum(axis=0) + z


def mimo_block_transmit(column_indices: np.ndarray, A: np.ndarray,
                        cfg: MimoChannelConfig, block: int = 0) -> np.ndarray:
    """One coherence block: Y = sum_j a_{i_j} h_j^T + Z, shape (n, M).

    Fading vectors h_j are circularly-symmetric complex normal CN(0, I_M),
    drawn fresh per block; Z entries are CN(0, N0). ``block`` keys the
    per-block fading and noise substreams.
    """
    A = np.asarray(A)
    column_indices = np.asarray(column_indices, dtype=np.int64)
    n = A.shape[0]
    K = column_indices.shape[0]
    if column_indices.size and (column_indices.min() < 0 or
                                column_indices.max() >= A.shape[1]):
        raise ValueError("column index out of range")
    frng = np.random.default_rng((cfg.fading_seed, block))
    nrng = np.random.default_rng((cfg.noise_seed, block))
    H = (frng.standard_normal((K, cfg.M)) + 1j * frng.standard_normal((K, cfg.M)))
    H *= np.sqrt(0.5)
    Z = (nrng.standard_normal((n, cfg.M)) + 1j * nrng.standard_normal((n, cfg.M)))
    Z *= np.sqrt(cfg.N0 / 2.0)
    Y = Z
    if K:
        Y = A[:, column_indices].astype(np.complex128) @ H + Z
    return Y
