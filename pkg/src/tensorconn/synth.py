"""Synthetic multichannel recordings with known coupling ground truth.

A scene mixes (optionally) one pair of coupled narrowband AR sources and a
large number of pink-noise background sources through unit-norm lead fields
onto electrodes on the upper unit hemisphere, then adds white sensor noise.
The coupled-to-background power ratio is enforced exactly in sensor space.

Every random choice is driven by seeds stored on the scene, so a scene
object (plus its head model) regenerates its recording byte-for-byte.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError, InvalidInputError

__all__ = [
    "ArSource",
    "CoupledPair",
    "HeadModel",
    "SourceScene",
    "GroundTruth",
    "ar_psd",
    "design_ar_source",
    "make_coupled_pair",
    "simulate_coupled_pair",
    "pink_noise",
    "build_head_model",
    "make_scene",
    "render_scene",
    "octant_index",
    "octant_signs",
]

_BURN_IN = 1000
_SAMPLE_LIMIT = 1e6


def _rng_of(rng):
    """Accept either a seed or a Generator."""
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _ar_roots(coeffs):
    """Roots of z^k - h1 z^(k-1) - ... - hk for recursion coefficients h."""
    return np.roots(np.concatenate([[1.0], -np.asarray(coeffs, dtype=float)]))


def ar_psd(coeffs, freqs_hz, fs):
    """Analytic power spectral density of a unit-innovation AR recursion.

    ``s(t) = sum_tau coeffs[tau-1] * s(t - tau) + w(t)`` has
    ``S(f) = 1 / |1 - sum_tau coeffs[tau-1] exp(-2i pi f tau / fs)|^2``.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    w = 2.0 * np.pi * np.asarray(freqs_hz, dtype=float) / fs
    taus = np.arange(1, coeffs.size + 1)
    a = 1.0 - np.exp(-1j * np.outer(w, taus)) @ coeffs.astype(complex)
    return 1.0 / np.abs(a) ** 2


@dataclass(frozen=True)
class ArSource:
    """Univariate AR recursion with a narrowband resonance.

    ``coeffs[tau-1]`` multiplies ``s(t - tau)``; stability (all roots of the
    AR polynomial strictly inside the unit circle) is checked on creation.
    """

    order: int
    coeffs: np.ndarray
    center_freq: float
    pole_radius: float

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", coeffs)
        if self.order != coeffs.size:
            raise InvalidInputError(f"order {self.order} != len(coeffs) {coeffs.size}")
        if not 0.0 < self.pole_radius < 1.0:
            raise InvalidInputError(f"pole_radius must be in (0,1), got {self.pole_radius}")
        radius = np.abs(_ar_roots(coeffs)).max()
        if radius >= 1.0:
            raise InvalidInputError(f"unstable AR model (spectral radius {radius:.6f})")


def _companion_radius(blocks):
    """Spectral radius of the companion matrix of a 2-D VAR(k)."""
    blocks = np.asarray(blocks, dtype=float)
    k = blocks.shape[0]
    comp = np.zeros((2 * k, 2 * k))
    comp[:2, :] = blocks.transpose(1, 0, 2).reshape(2, 2 * k)
    comp[2:, :-2] = np.eye(2 * (k - 1))
    return float(np.abs(np.linalg.eigvals(comp)).max())


@dataclass(frozen=True)
class CoupledPair:
    """Two AR sources plus the cross-coefficients linking their pasts.

    ``cross_ij[tau-1]`` feeds source j's past into source i, ``cross_ji``
    the reverse. Both all-zero is allowed (a decoupled pair); joint
    stability of the bivariate recursion is required either way.
    """

    source_i: ArSource
    source_j: ArSource
    cross_ij: np.ndarray
    cross_ji: np.ndarray

    def __post_init__(self):
        if self.source_i.order != self.source_j.order:
            raise InvalidInputError("sources must share one AR order")
        for name in ("cross_ij", "cross_ji"):
            v = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, v)
            if v.size != self.source_i.order:
                raise InvalidInputError(f"{name} must have {self.source_i.order} taps")
        radius = _companion_radius(self.blocks())
        if radius >= 1.0:
            raise InvalidInputError(f"jointly unstable pair (spectral radius {radius:.6f})")

    def blocks(self):
        """Per-lag 2x2 coefficient matrices, shape (order, 2, 2)."""
        k = self.source_i.order
        b = np.empty((k, 2, 2))
        b[:, 0, 0] = self.source_i.coeffs
        b[:, 0, 1] = self.cross_ij
        b[:, 1, 0] = self.cross_ji
        b[:, 1, 1] = self.source_j.coeffs
        return b

    @property
    def is_coupled(self):
        return bool(np.any(self.cross_ij) or np.any(self.cross_ji))


def design_ar_source(band, fs, order, rng):
    """Place poles so the analytic PSD peaks inside ``band`` (Hz).

    A conjugate pole pair sits at the band center with radius drawn in
    [0.9, 0.98]; remaining poles get radius <= 0.5 and random angles.
    Draws are rejected (up to 1000 times) if the realized spectral peak
    falls outside the band.
    """
    rng = _rng_of(rng)
    lo, hi = float(band[0]), float(band[1])
    if order < 2:
        raise InvalidInputError(f"order must be >= 2, got {order}")
    if not 0.0 < lo < hi < fs / 2.0:
        raise InvalidInputError(f"band {band} must lie inside (0, {fs / 2})")
    center = 0.5 * (lo + hi)
    grid = np.linspace(0.0, fs / 2.0, 4096)
    for _ in range(1000):
        radius = rng.uniform(0.90, 0.98)
        poles = [radius * np.exp(2j * np.pi * center / fs)]
        poles.append(np.conj(poles[0]))
        remaining = order - 2
        while remaining >= 2:
            r = rng.uniform(0.0, 0.5)
            ang = rng.uniform(0.0, np.pi)
            poles.extend([r * np.exp(1j * ang), r * np.exp(-1j * ang)])
            remaining -= 2
        if remaining == 1:
            poles.append(complex(rng.uniform(-0.5, 0.5)))
        coeffs = -np.poly(poles)[1:].real
        peak = grid[np.argmax(ar_psd(coeffs, grid, fs))]
        if lo <= peak <= hi:
            return ArSource(order=order, coeffs=coeffs, center_freq=center, pole_radius=radius)
    raise GenerationError(f"no stable in-band AR model found for band={band}, order={order}")


def make_coupled_pair(band, fs, order, rng, cross_std=0.5, coupled=True):
    """Design two in-band sources and (optionally) unidirectional coupling.

    Cross-coefficients are drawn i.i.d. normal with ``cross_std`` and halved
    until the bivariate recursion is jointly stable with margin.
    """
    rng = _rng_of(rng)
    src_i = design_ar_source(band, fs, order, rng)
    src_j = design_ar_source(band, fs, order, rng)
    zeros = np.zeros(order)
    if not coupled:
        return CoupledPair(src_i, src_j, zeros, zeros)
    cross = rng.normal(0.0, cross_std, size=order)
    for _ in range(60):
        blocks = np.empty((order, 2, 2))
        blocks[:, 0, 0] = src_i.coeffs
        blocks[:, 0, 1] = cross
        blocks[:, 1, 0] = 0.0
        blocks[:, 1, 1] = src_j.coeffs
        if np.any(cross) and _companion_radius(blocks) < 0.999:
            return CoupledPair(src_i, src_j, cross, zeros)
        cross = cross * 0.5
    raise GenerationError("could not stabilize coupled pair")


def _simulate_var2(blocks, T, rng, burn_in=_BURN_IN):
    """Run a bivariate AR recursion; returns (T, 2) after burn-in discard."""
    blocks = np.asarray(blocks, dtype=float)
    k = blocks.shape[0]
    n = T + burn_in
    # stacked coefficients: s(t) = C @ [s(t-1); s(t-2); ...] + w(t)
    C = blocks.transpose(1, 0, 2).reshape(2, 2 * k)
    w = rng.standard_normal((n, 2))
    s = np.zeros((n + k, 2))
    for t in range(n):
        hist = s[t : t + k][::-1].ravel()
        out = C @ hist + w[t]
        if abs(out[0]) > _SAMPLE_LIMIT or abs(out[1]) > _SAMPLE_LIMIT:
            raise GenerationError(f"AR simulation diverged at sample {t}")
        s[t + k] = out
    return s[k + burn_in :]


def simulate_coupled_pair(pair, T, fs, rng):
    """Realize the pair's bivariate recursion with unit Gaussian innovations.

    A 1000-sample burn-in is generated and discarded. Returns two length-T
    real series (source i, source j).
    """
    rng = _rng_of(rng)
    if T < 10 * pair.source_i.order:
        raise InvalidInputError(f"T={T} too short for order {pair.source_i.order}")
    out = _simulate_var2(pair.blocks(), int(T), rng)
    return out[:, 0].copy(), out[:, 1].copy()


def pink_noise(T, rng):
    """1/f noise by FFT amplitude shaping, standardized to mean 0, var 1."""
    rng = _rng_of(rng)
    T = int(T)
    if T < 64:
        raise InvalidInputError(f"T must be >= 64, got {T}")
    n = T // 2 + 1
    spec = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    amp = np.zeros(n)
    amp[1:] = np.arange(1, n, dtype=float) ** -0.5
    y = np.fft.irfft(spec * amp, n=T)
    y -= y.mean()
    return y / y.std()


def octant_index(pos):
    """Octant of a 3-D point as an integer 0..7 (bits: x>0, y>0, z>0)."""
    x, y, z = pos
    return 4 * int(x > 0) + 2 * int(y > 0) + int(z > 0)


def octant_signs(idx):
    """Sign-pattern string for an octant index, e.g. 7 -> '+++'."""
    return "".join("+" if (idx >> b) & 1 else "-" for b in (2, 1, 0))


@dataclass(frozen=True)
class HeadModel:
    """Electrodes on the upper unit hemisphere plus candidate lead fields.

    Each lead field is a unit-norm Gaussian blob over the electrodes,
    tagged with the 3-D position it was generated from and that position's
    octant.
    """

    electrode_positions: np.ndarray  # (m, 3)
    lead_fields: np.ndarray  # (m, n_leadfields), unit-norm columns
    source_positions: np.ndarray  # (n_leadfields, 3)
    octants: np.ndarray  # (n_leadfields,) int

    @property
    def n_channels(self):
        return self.electrode_positions.shape[0]

    @property
    def n_leadfields(self):
        return self.lead_fields.shape[1]

    def nearest_electrode(self, pos):
        """Index of the electrode closest to a 3-D position."""
        d = np.linalg.norm(self.electrode_positions - np.asarray(pos), axis=1)
        return int(np.argmin(d))


def build_head_model(m, n_leadfields, rng):
    """Fibonacci-lattice electrodes and Gaussian-blob lead fields.

    Source positions are uniform in the unit ball, blob widths uniform in
    [0.3, 0.6]; every lead-field column is normalized to unit Euclidean
    norm and labeled with its source octant.
    """
    rng = _rng_of(rng)
    if m < 16:
        raise InvalidInputError(f"need at least 16 channels, got {m}")
    if n_leadfields < 8:
        raise InvalidInputError(f"need at least 8 lead fields, got {n_leadfields}")
    i = np.arange(m)
    z = (i + 0.5) / m
    golden = np.pi * (3.0 - np.sqrt(5.0))
    rho = np.sqrt(1.0 - z**2)
    electrodes = np.column_stack([rho * np.cos(golden * i), rho * np.sin(golden * i), z])

    dirs = rng.standard_normal((n_leadfields, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = rng.uniform(0.0, 1.0, size=n_leadfields) ** (1.0 / 3.0)
    sources = dirs * radii[:, None]
    sigmas = rng.uniform(0.3, 0.6, size=n_leadfields)

    d2 = ((electrodes[:, None, :] - sources[None, :, :]) ** 2).sum(axis=2)
    fields = np.exp(-d2 / (2.0 * sigmas[None, :] ** 2))
    fields /= np.linalg.norm(fields, axis=0, keepdims=True)
    octs = np.fromiter((octant_index(p) for p in sources), dtype=np.int64, count=n_leadfields)
    return HeadModel(electrodes, fields, sources, octs)


@dataclass(frozen=True)
class GroundTruth:
    """What a rendered scene actually contained."""

    has_coupling: bool
    leadfield_indices: tuple | None
    source_positions: np.ndarray | None  # (2, 3)
    octants: tuple | None


@dataclass(frozen=True)
class SourceScene:
    """Full description of one synthetic dataset.

    ``noise_sources`` pairs a lead-field index with the pink-noise seed of
    that background source. ``pr`` is the sensor-space power ratio of the
    coupled sources and must be None exactly when there is no coupling.
    """

    coupled: CoupledPair | None
    coupled_leadfields: tuple | None
    noise_sources: tuple  # of (leadfield_index, seed)
    pr: float | None
    sensor_noise_frac: float
    has_coupling: bool
    seed: int
    innovation_seed: int = 0
    sensor_seed: int = 0

    def __post_init__(self):
        if self.has_coupling != (self.coupled is not None):
            raise InvalidInputError("has_coupling must match presence of a coupled pair")
        if self.has_coupling != (self.coupled_leadfields is not None):
            raise InvalidInputError("coupled pair needs its two lead-field indices")
        if self.has_coupling != (self.pr is not None):
            raise InvalidInputError("pr must be given exactly when the scene is coupled")
        if self.pr is not None and not 0.0 < self.pr < 1.0:
            raise InvalidInputError(f"pr must be in (0,1), got {self.pr}")
        if not 0.0 <= self.sensor_noise_frac < 1.0:
            raise InvalidInputError(f"sensor_noise_frac out of range: {self.sensor_noise_frac}")
        if self.coupled is not None and not self.coupled.is_coupled:
            raise InvalidInputError("coupled scene requires nonzero cross-coefficients")

    def truth(self, head):
        if not self.has_coupling:
            return GroundTruth(False, None, None, None)
        i, j = self.coupled_leadfields
        return GroundTruth(
            True,
            (i, j),
            head.source_positions[[i, j]],
            (int(head.octants[i]), int(head.octants[j])),
        )


# Coupled sources are placed at distinct cortical-like locations: upper-half
# (z > 0) lead fields whose source positions are at least this far apart.
_MIN_PAIR_DISTANCE = 0.7


def make_scene(
    head,
    seed,
    pr=None,
    has_coupling=True,
    n_noise_sources=500,
    band=(8.0, 12.0),
    fs=100.0,
    ar_order=5,
    sensor_noise_frac=0.1,
    cross_std=0.5,
):
    """Draw a fully specified scene from one seed.

    Coupled scenes pick two upper-half lead fields with well-separated
    source positions; background sources are drawn from the whole
    catalogue without replacement (with replacement if the catalogue is
    smaller than ``n_noise_sources``).
    """
    rng = np.random.default_rng(seed)
    coupled = None
    lf_pair = None
    if has_coupling:
        if pr is None:
            raise InvalidInputError("coupled scenes need a power ratio")
        coupled = make_coupled_pair(band, fs, ar_order, rng, cross_std=cross_std)
        upper = np.flatnonzero(head.source_positions[:, 2] > 0.0)
        if upper.size < 2:
            raise GenerationError("head model has no upper-half lead fields")
        for _ in range(1000):
            i, j = rng.choice(upper, size=2, replace=False)
            gap = np.linalg.norm(head.source_positions[i] - head.source_positions[j])
            if gap >= _MIN_PAIR_DISTANCE:
                lf_pair = (int(i), int(j))
                break
        else:
            raise GenerationError("could not find separated coupled source positions")
    elif pr is not None:
        raise InvalidInputError("pr requested for a scene without coupling")

    replace = n_noise_sources > head.n_leadfields
    noise_idx = rng.choice(head.n_leadfields, size=n_noise_sources, replace=replace)
    noise_seeds = rng.integers(0, 2**63, size=n_noise_sources)
    noise = tuple((int(a), int(b)) for a, b in zip(noise_idx, noise_seeds))
    innovation_seed, sensor_seed = (int(v) for v in rng.integers(0, 2**63, size=2))
    return SourceScene(
        coupled=coupled,
        coupled_leadfields=lf_pair,
        noise_sources=noise,
        pr=pr,
        sensor_noise_frac=sensor_noise_frac,
        has_coupling=has_coupling,
        seed=int(seed),
        innovation_seed=innovation_seed,
        sensor_seed=sensor_seed,
    )


def render_scene(scene, head, duration_s, fs):
    """Mix the scene onto the electrodes.

    Returns ``(X, truth)`` with X of shape (m, T). The coupled sources are
    individually standardized to unit variance, then scaled by one common
    gain so their sensor-space power fraction equals ``scene.pr`` exactly;
    white sensor noise carries ``sensor_noise_frac`` of the mixed signal
    power.
    """
    if scene.pr is not None and not scene.has_coupling:
        raise InvalidInputError("pr requested for a scene without coupling")
    m = head.n_channels
    T = int(round(duration_s * fs))

    noise_mix = np.zeros((m, T))
    if scene.noise_sources:
        idx = np.array([i for i, _ in scene.noise_sources])
        S_n = np.empty((len(scene.noise_sources), T))
        for row, (_, nseed) in enumerate(scene.noise_sources):
            S_n[row] = pink_noise(T, np.random.default_rng(nseed))
        noise_mix = head.lead_fields[:, idx] @ S_n

    signal = noise_mix
    if scene.has_coupling:
        si, sj = simulate_coupled_pair(
            scene.coupled, T, fs, np.random.default_rng(scene.innovation_seed)
        )
        S_c = np.vstack([si / si.std(), sj / sj.std()])
        A_c = head.lead_fields[:, list(scene.coupled_leadfields)]
        coupled_mix = A_c @ S_c
        p_c = float(np.sum(coupled_mix**2))
        p_n = float(np.sum(noise_mix**2))
        if p_c <= 0.0:
            raise GenerationError("coupled sources rendered with zero power")
        gain = np.sqrt(scene.pr / (1.0 - scene.pr) * p_n / p_c)
        signal = gain * coupled_mix + noise_mix

    E = np.random.default_rng(scene.sensor_seed).standard_normal((m, T))
    p_sig = float(np.sum(signal**2))
    p_e = float(np.sum(E**2))
    if scene.sensor_noise_frac > 0.0 and p_e > 0.0:
        E *= np.sqrt(scene.sensor_noise_frac * p_sig / p_e)
        X = signal + E
    else:
        X = signal.copy()
    return X, scene.truth(head)
