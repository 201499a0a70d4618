"""Molecular on-off keying channel with Poisson reception and ISI.

A transmitter releases molecules for bit 1 and stays silent for bit 0.  The
receiver counts molecules in each symbol slot; the count is Poisson with mean

    lam = c0 * s_i + sum_{j=1..L} c0 * rho^j * s_{i-j} + lam0 * T

where rho^j models molecules left over from earlier slots and lam0 is the
rate of counted background molecules.  Demodulation compares the count to a
threshold: decide 1 iff r >= ceil(tau), i.e. strictly above tau for
fractional tau, while a count exactly at an integer threshold reads as 1.
The error rate only depends on ceil(tau), so optimal thresholds are searched
over integers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special


@dataclass
class MolecularConfig:
    snr_db: float = 10.0
    n_isi_taps: int = 2
    rho: float = 0.3
    noise_rate: float = 1.0
    symbol_period: float = 1.0
    peak_count: float | None = None
    tap_counts: tuple | None = None

    @property
    def noise_count(self) -> float:
        return self.noise_rate * self.symbol_period

    @property
    def c0(self) -> float:
        """Mean received count for the current bit.  Set explicitly through
        ``peak_count`` or implied by snr = c0 / (noise_rate * symbol_period)."""
        if self.tap_counts is not None:
            return float(self.tap_counts[0])
        if self.peak_count is not None:
            return self.peak_count
        return self.noise_count * 10.0 ** (self.snr_db / 10.0)

    def taps(self) -> np.ndarray:
        """Expected counts per slot [C_0, ..., C_L]; explicit list or a
        geometric diffusion tail C_0 * rho^j."""
        if self.tap_counts is not None:
            taps = np.asarray(self.tap_counts, dtype=np.float64)
            if np.any(taps < 0.0) or np.any(np.diff(taps) > 0.0):
                raise ValueError("tap counts must be nonnegative and non-increasing")
            return taps
        return self.c0 * self.rho ** np.arange(self.n_isi_taps + 1)

    @property
    def memory(self) -> int:
        return len(self.taps()) - 1


def poisson_tail(n, lam):
    """P(X >= n) for X ~ Poisson(lam); 1 for n <= 0."""
    n = np.asarray(n)
    lam = np.asarray(lam, dtype=np.float64)
    out = np.where(n > 0, special.gammainc(np.maximum(n, 1), lam), 1.0)
    return out if out.ndim else float(out)


def error_probability(cfg: MolecularConfig, tau) -> np.ndarray | float:
    """Bit error probability of the threshold detector, exact ISI average.

    Equiprobable i.i.d. bits; the 2^L interference patterns are enumerated.
    Accepts scalar or array tau; tau must be >= 0.
    """
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(tau < 0.0):
        raise ValueError("threshold must be nonnegative")
    n_err = np.ceil(tau)  # false alarm when r >= n_err
    taps = cfg.taps()
    L = cfg.memory
    patterns = np.array(np.meshgrid(*([[0, 1]] * L), indexing="ij")).reshape(L, -1).T \
        if L > 0 else np.zeros((1, 0))
    isi = patterns @ taps[1:] if L > 0 else np.zeros(1)
    lam0 = isi + cfg.noise_count            # per pattern, bit 0
    lam1 = lam0 + taps[0]                   # per pattern, bit 1
    fa = poisson_tail(n_err[..., None], lam0)
    miss = 1.0 - poisson_tail(n_err[..., None], lam1)
    pe = 0.5 * np.mean(fa + miss, axis=-1)
    return pe if pe.ndim else float(pe)


def optimal_threshold(cfg: MolecularConfig, max_tau: int | None = None):
    """Smallest integer threshold minimizing the analytic error probability."""
    if max_tau is None:
        mean_peak = float(np.sum(cfg.taps()) + cfg.noise_count)
        max_tau = int(np.ceil(mean_peak + 10.0 * np.sqrt(mean_peak) + 10.0))
    taus = np.arange(0, max_tau + 1)
    pes = error_probability(cfg, taus)
    i = int(np.argmin(pes))  # argmin takes the first hit, so ties go small
    return int(taus[i]), float(pes[i])


def transmit(cfg: MolecularConfig, bits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Received counts for a bit sequence (earlier bits outside the window are 0)."""
    bits = np.asarray(bits)
    taps = cfg.taps()
    lam = np.convolve(bits.astype(np.float64), taps)[: len(bits)] + cfg.noise_count
    return rng.poisson(lam)


def demodulate(counts, tau) -> np.ndarray:
    return (np.asarray(counts) >= np.ceil(tau)).astype(np.int64)


def simulate_ber(cfg: MolecularConfig, tau: float, n_bits: int, rng: np.random.Generator):
    """Monte Carlo bit error rate of the threshold detector.

    Returns (ber, stderr) where stderr is the binomial standard error.
    """
    bits = rng.integers(0, 2, size=n_bits)
    counts = transmit(cfg, bits, rng)
    decided = demodulate(counts, tau)
    errors = int(np.sum(decided != bits))
    ber = errors / n_bits
    stderr = float(np.sqrt(max(ber * (1.0 - ber), 1.0 / n_bits) / n_bits))
    return ber, stderr


def detection_dataset(cfg: MolecularConfig, n_bits: int, rng: np.random.Generator):
    """Supervised pairs (received count, transmitted bit) from one long frame."""
    bits = rng.integers(0, 2, size=n_bits)
    counts = transmit(cfg, bits, rng)
    return counts.astype(np.float64)[:, None], bits.astype(np.float64)[:, None]


def implied_threshold(predict, max_count: int) -> float:
    """Threshold equivalent to a soft detector on integer counts.

    ``predict`` maps an (n, 1) array of counts to (n, 1) scores in [0, 1].
    Returns the smallest integer count classified as 1, which reproduces the
    detector through `count >= tau` on {0, ..., max_count}; if the detector
    never fires, returns max_count + 1.
    """
    counts = np.arange(0, max_count + 1, dtype=np.float64)[:, None]
    scores = np.asarray(predict(counts)).ravel()
    fired = np.nonzero(scores > 0.5)[0]
    if len(fired) == 0:
        return float(max_count + 1)
    return float(counts[fired[0], 0])
