"""Recording -> complex tensor: referencing, trial slicing, tapered DFT.

The pipeline order is: common average reference on the full recording,
non-overlapping trial slicing, per-trial linear detrend (which also zeroes
the mean), then a Hann-tapered DFT per trial and channel keeping the
configured frequency bins. One spectral frame is produced per trial.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .tensor import ComplexTensor

__all__ = [
    "TensorizeConfig",
    "slice_trials",
    "common_average_reference",
    "detrend_baseline",
    "hann_window",
    "windowed_spectrum",
    "stft_tensorize",
    "tensorize",
]


@dataclass(frozen=True)
class TensorizeConfig:
    trial_len_s: float = 1.0
    freq_lo_hz: float = 1.0
    freq_hi_hz: float = 40.0
    freq_step_hz: float = 1.0

    def __post_init__(self):
        if self.trial_len_s <= 0:
            raise InvalidInputError(f"trial_len_s must be positive, got {self.trial_len_s}")
        if not 0 < self.freq_lo_hz <= self.freq_hi_hz:
            raise InvalidInputError(
                f"bad frequency range [{self.freq_lo_hz}, {self.freq_hi_hz}]"
            )
        if self.freq_step_hz <= 0:
            raise InvalidInputError(f"freq_step_hz must be positive, got {self.freq_step_hz}")

    def frequencies(self):
        n = int(round((self.freq_hi_hz - self.freq_lo_hz) / self.freq_step_hz)) + 1
        return self.freq_lo_hz + self.freq_step_hz * np.arange(n)


def slice_trials(X, fs, trial_len_s=1.0):
    """Cut an (m, T) recording into K non-overlapping trials of L samples.

    K = floor(T / L); the trailing remainder is discarded. Returns an
    (m, K, L) array.
    """
    X = np.asarray(X)
    if X.ndim != 2:
        raise InvalidInputError(f"expected (channels, samples), got ndim={X.ndim}")
    L_f = trial_len_s * fs
    L = int(round(L_f))
    if abs(L_f - L) > 1e-9 or L < 1:
        raise InvalidInputError(f"trial_len_s * fs must be a positive integer, got {L_f}")
    m, T = X.shape
    K = T // L
    if K < 1:
        raise InvalidInputError(f"recording of {T} samples is shorter than one trial ({L})")
    return X[:, : K * L].reshape(m, K, L).copy()


def common_average_reference(X):
    """Subtract the instantaneous channel mean from every channel."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 2:
        raise InvalidInputError("common average reference needs at least 2 channels")
    return X - X.mean(axis=0, keepdims=True)


def detrend_baseline(trial):
    """Remove the per-channel least-squares line (slope and mean).

    Accepts (m, L) or (m, K, L); the fit runs over the last axis.
    """
    trial = np.asarray(trial, dtype=float)
    L = trial.shape[-1]
    if L < 2:
        raise InvalidInputError("need at least 2 samples per trial to detrend")
    t = np.arange(L) - (L - 1) / 2.0
    denom = float(t @ t)
    slope = (trial @ t) / denom
    return trial - trial.mean(axis=-1, keepdims=True) - slope[..., None] * t


def hann_window(L):
    """Periodic Hann window normalized to unit RMS gain."""
    w = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(L) / L)
    return w / np.sqrt(np.mean(w**2))


def windowed_spectrum(trials, window=None):
    """Full-bin DFT of Hann-windowed trials; shape (..., L) -> (..., L).

    Exposed separately so energy bookkeeping (Parseval) can be checked
    before bin truncation.
    """
    trials = np.asarray(trials, dtype=float)
    L = trials.shape[-1]
    w = hann_window(L) if window is None else window
    return np.fft.fft(trials * w, axis=-1)


def stft_tensorize(trials, fs, cfg=None):
    """Hann-tapered DFT per trial and channel, keeping the configured bins.

    ``trials`` is (m, K, L). Bin ``n`` of the output holds the complex DFT
    coefficient at ``cfg.frequencies()[n]`` Hz; each requested frequency
    must land exactly on a DFT bin (f * L / fs integral).
    """
    cfg = cfg or TensorizeConfig()
    trials = np.asarray(trials, dtype=float)
    if trials.ndim != 3:
        raise InvalidInputError(f"expected (m, K, L) trials, got ndim={trials.ndim}")
    L = trials.shape[-1]
    freqs = cfg.frequencies()
    if freqs[-1] > fs / 2.0:
        raise InvalidInputError(f"highest bin {freqs[-1]} Hz exceeds Nyquist {fs / 2} Hz")
    idx_f = freqs * L / fs
    idx = np.rint(idx_f).astype(int)
    if np.max(np.abs(idx_f - idx)) > 1e-9:
        raise InvalidInputError(
            f"frequencies {cfg.freq_lo_hz}:{cfg.freq_step_hz}:{cfg.freq_hi_hz} Hz do not "
            f"fall on DFT bins for L={L}, fs={fs}"
        )
    spec = windowed_spectrum(trials)[:, :, idx]  # (m, K, F)
    return ComplexTensor(spec.transpose(0, 2, 1), freqs=freqs)


def tensorize(X, fs, cfg=None):
    """Full pipeline: CAR -> slice -> detrend -> tapered DFT."""
    cfg = cfg or TensorizeConfig()
    ref = common_average_reference(X)
    trials = slice_trials(ref, fs, cfg.trial_len_s)
    trials = detrend_baseline(trials)
    return stft_tensorize(trials, fs, cfg)
