"""Shared oracles and data builders for the test suite.

The oracles here are deliberately independent of the library's own search
logic: the transfer-matrix resonance solver knows nothing about the
closed-form characteristic, and the grid-scan root finder uses analytic pole
locations instead of the library's magnitude screening.
"""

from __future__ import annotations

import numpy as np

from speechscale import (
    BandPartition,
    FormantSet,
    SpeakerRecord,
    TubeConfig,
    build_piecewise,
    characteristic,
    mel_eval,
)


def tube_poles(config: TubeConfig, f_max: float) -> list[float]:
    """Analytic pole frequencies of the two-tube characteristic below f_max."""
    back, front = config.sections
    c = config.speed_of_sound
    poles = []
    n = 1
    while n * c / (2.0 * back.length) <= f_max:
        poles.append(n * c / (2.0 * back.length))
        n += 1
    n = 0
    while (2 * n + 1) * c / (4.0 * front.length) <= f_max:
        poles.append((2 * n + 1) * c / (4.0 * front.length))
        n += 1
    return sorted(poles)


def grid_scan_roots(config: TubeConfig, count: int, f_max: float, step: float = 0.1):
    """Dense-grid sign-change scan with analytic pole exclusion and own bisection."""
    poles = tube_poles(config, f_max + 1.0)
    grid = np.arange(step, f_max + 0.5 * step, step)
    vals = characteristic(config, grid)
    signs = np.sign(vals)
    roots: list[float] = []
    for i in np.flatnonzero(signs[:-1] * signs[1:] < 0):
        lo, hi = float(grid[i]), float(grid[i + 1])
        if any(lo <= p <= hi for p in poles):
            continue
        flo = characteristic(config, lo)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            fmid = characteristic(config, mid)
            if (fmid < 0.0) == (flo < 0.0):
                lo, flo = mid, fmid
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
        if len(roots) == count:
            break
    return roots


def transfer_matrix_resonances(config: TubeConfig, f_max: float, step: float = 0.25):
    """Physics oracle: eigenfrequencies via chain-matrix propagation.

    Starts from the open lip end (p=0, U=1) and propagates section by section
    back to the glottis; resonance is where the glottis volume velocity
    crosses zero. Completely independent of the closed-form characteristic.
    """

    def u_glottis(f: float) -> float:
        k = 2.0 * np.pi * f / config.speed_of_sound
        p, u = 0.0 + 0.0j, 1.0 + 0.0j
        for section in reversed(config.sections):
            kl = k * section.length
            m = np.array(
                [
                    [np.cos(kl), 1j * np.sin(kl) / section.area],
                    [1j * section.area * np.sin(kl), np.cos(kl)],
                ]
            )
            p, u = m @ np.array([p, u])
        # one of the components is identically zero (parity of the chain);
        # the sum keeps the signed nonzero one
        return float(u.real + u.imag)

    grid = np.arange(step, f_max, step)
    vals = np.array([u_glottis(f) for f in grid])
    signs = np.sign(vals)
    roots = []
    for i in np.flatnonzero(signs[:-1] * signs[1:] < 0):
        lo, hi = float(grid[i]), float(grid[i + 1])
        flo = u_glottis(lo)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            fmid = u_glottis(mid)
            if (fmid < 0.0) == (flo < 0.0):
                lo, flo = mid, fmid
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    return roots


def injected_beta_records(
    betas=(1.2, 1.0, 0.8),
    means=(500.0, 1500.0, 2500.0),
    c_values=None,
    n_speakers: int = 20,
    noise_sigma: float = 0.0,
    seed: int = 0,
    vowel: str = "aa",
):
    """Records with log-formants ln(m_k) + beta_k * c_A (+ optional noise).

    The default speaker factors stay within +-0.2 nepers so every formant
    remains inside its own per-index frequency band.
    """
    betas = np.asarray(betas, dtype=float)
    means = np.asarray(means, dtype=float)
    if c_values is None:
        c_values = np.linspace(-0.2, 0.2, n_speakers)
    rng = np.random.default_rng(seed)
    records = []
    for i, c in enumerate(np.asarray(c_values, dtype=float)):
        logf = np.log(means) + betas * c
        if noise_sigma:
            logf = logf + rng.normal(0.0, noise_sigma, means.size)
        sid = f"s{i:02d}"
        token = FormantSet(sid, vowel, tuple(np.exp(logf)))
        records.append(SpeakerRecord(sid, None, (token,)))
    return records


def kappa_scaled_records(
    base=(500.0, 1500.0, 2500.0),
    kappas=(0.85, 0.9, 1.0, 1.1, 1.2),
    vowel: str = "aa",
):
    """Records whose formants are exact multiples of a base set (uniform scaling)."""
    base = np.asarray(base, dtype=float)
    records = []
    for i, kappa in enumerate(kappas):
        sid = f"s{i:02d}"
        token = FormantSet(sid, vowel, tuple(base * kappa))
        records.append(SpeakerRecord(sid, None, (token,)))
    return records


def mel_chord_warp(params, f_lo: float = 100.0, f_hi: float = 4000.0, n_bands: int = 40):
    """Piecewise-log warp whose segments are chords of the corner-frequency curve."""
    bounds = np.geomspace(f_lo, f_hi, n_bands + 1)
    eta = mel_eval(params, bounds)
    slopes = np.diff(eta) / np.diff(np.log(bounds))
    return build_piecewise(1.0 / slopes, BandPartition(tuple(bounds)))
