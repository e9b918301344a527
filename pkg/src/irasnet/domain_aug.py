"""Augmented source domain: clutter-statistics perturbation via a two-component
Gaussian mixture and histogram matching, followed by additive Gaussian noise."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.mixture import GaussianMixture

from .sar_scene import SarChip

N_BINS = 256
_EDGES = np.linspace(0.0, 1.0, N_BINS + 1)


@dataclass(frozen=True)
class AugParams:
    n_m_range: tuple[float, float] = (1.0, 1.4)
    n_sigma_range: tuple[float, float] = (0.7, 1.3)
    sigma_g: float = 0.05
    augment_factor: int = 10
    target_jitter: bool = True
    seed: int = 0

    def __post_init__(self):
        for lo, hi in (self.n_m_range, self.n_sigma_range):
            if lo > hi or lo <= 0:
                raise ValueError("multiplier ranges must be positive with lo <= hi")
        if self.sigma_g < 0:
            raise ValueError("sigma_g must be nonnegative")
        if self.augment_factor < 1:
            raise ValueError("augment_factor must be >= 1")


def histogram_match(values: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Monotone map of ``values`` onto the 256-bin histogram of ``reference``.

    Each value's empirical rank is located in the reference CDF and placed
    linearly inside the (nonempty) bin where the CDF crosses it, so a value
    matched against its own histogram moves by less than one bin width.
    """
    hist, _ = np.histogram(np.clip(reference, 0.0, 1.0), bins=_EDGES)
    cdf_ref = np.concatenate([[0.0], np.cumsum(hist) / max(hist.sum(), 1)])
    srt = np.sort(values)
    rank = np.searchsorted(srt, values, side="right") / values.size
    k = np.clip(np.searchsorted(cdf_ref, rank, side="left") - 1, 0, N_BINS - 1)
    lo, hi = cdf_ref[k], cdf_ref[k + 1]
    frac = np.where(hi > lo, (rank - lo) / np.where(hi > lo, hi - lo, 1.0), 1.0)
    return _EDGES[k] + frac * (_EDGES[k + 1] - _EDGES[k])


def _fit_clutter_component(x: np.ndarray, seed: int):
    if np.unique(x).size < 3:
        return None
    gmm = GaussianMixture(n_components=2, random_state=seed % (2**32), max_iter=200)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        gmm.fit(x.reshape(-1, 1))
    means = gmm.means_.ravel()
    stds = np.sqrt(gmm.covariances_.ravel())
    if not np.all(np.isfinite(means)) or np.any(stds <= 1e-6):
        return None
    k = int(np.argmin(means))  # darker component is clutter
    return gmm, k, means[k], stds[k]


def perturb_clutter_stats(chip: SarChip, n_m: float, n_sigma: float, seed: int,
                          target_jitter: bool = True) -> SarChip:
    """Shift the clutter population's mean by ``n_m`` and spread by ``n_sigma``.

    Each amplitude value is moved toward the perturbed clutter statistics in
    proportion to its posterior clutter responsibility; the image is then
    histogram-matched to the resulting distribution, so the mapping is
    monotone. Target pixels optionally get a +-1 bin jitter afterwards.
    """
    if n_m <= 0 or n_sigma <= 0:
        raise ValueError("n_m and n_sigma must be positive")
    rng = np.random.default_rng(int(seed) & 0xFFFF_FFFF_FFFF_FFFF)
    x = chip.amplitude.ravel().astype(float)
    flags = dict(chip.flags)

    fit = _fit_clutter_component(x, int(seed))
    if fit is None:
        mu, sd = x.mean(), x.std()
        out = np.clip(mu * n_m + (x - mu) * n_sigma, 0.0, 1.0)
        flags["gmm_fallback"] = True
    else:
        gmm, k, mu, sd = fit
        resp = gmm.predict_proba(x.reshape(-1, 1))[:, k]
        moved = mu * n_m + (x - mu) * n_sigma
        reference = np.clip(x + resp * (moved - x), 0.0, 1.0)
        out = histogram_match(x, reference)

    out = out.reshape(chip.amplitude.shape)
    if target_jitter and chip.m_t is not None:
        step = rng.integers(-1, 2, size=int(chip.m_t.sum())) / (N_BINS - 1)
        out[chip.m_t] = out[chip.m_t] + step
    out = np.clip(out, 0.0, 1.0)
    return chip.replace(amplitude=out, flags=flags)


def add_gaussian_noise(amplitude: np.ndarray, sigma_g: float, seed: int) -> np.ndarray:
    if sigma_g < 0:
        raise ValueError("sigma_g must be nonnegative")
    amplitude = np.asarray(amplitude, dtype=float)
    if sigma_g == 0:
        return amplitude.copy()
    rng = np.random.default_rng(int(seed) & 0xFFFF_FFFF_FFFF_FFFF)
    return np.clip(amplitude + rng.normal(0.0, sigma_g, amplitude.shape), 0.0, 1.0)


def augment_chip(chip: SarChip, params: AugParams, seed: int) -> SarChip:
    rng = np.random.default_rng(int(seed) & 0xFFFF_FFFF_FFFF_FFFF)
    n_m = rng.uniform(*params.n_m_range)
    n_sigma = rng.uniform(*params.n_sigma_range)
    s_perturb, s_noise = rng.integers(0, 2**63, size=2)
    out = perturb_clutter_stats(chip, n_m, n_sigma, int(s_perturb), params.target_jitter)
    amp = add_gaussian_noise(out.amplitude, params.sigma_g, int(s_noise))
    flags = dict(out.flags, n_m=float(n_m), n_sigma=float(n_sigma))
    return out.replace(amplitude=amp, domain="Aug", flags=flags,
                       m_t=None if chip.m_t is None else chip.m_t.copy(),
                       m_s=None if chip.m_s is None else chip.m_s.copy())


def build_source_domains(syn_corpus: list[SarChip],
                         params: AugParams = AugParams()) -> dict[str, list[SarChip]]:
    """``{"Syn": D_Syn, "Aug": D_Aug}`` with ``augment_factor`` copies per chip."""
    if not syn_corpus:
        raise ValueError("empty synthetic corpus")
    root = np.random.SeedSequence(params.seed)
    seeds = root.generate_state(len(syn_corpus) * params.augment_factor, dtype=np.uint64)
    syn = [c.replace(domain="Syn") for c in syn_corpus]
    aug = [augment_chip(c, params, int(seeds[i * params.augment_factor + j]))
           for i, c in enumerate(syn)
           for j in range(params.augment_factor)]
    return {"Syn": syn, "Aug": aug}
