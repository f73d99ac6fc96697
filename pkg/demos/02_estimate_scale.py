"""Estimating the warping scale from multi-speaker formant data.

The model: within frequency band l, speaker A's spectrum is the reference
spectrum with frequencies scaled by gamma_A**beta_l. Taking logs makes the
speakers-by-bands shift matrix an outer product beta_l * c_A, so the band
exponents fall out of a rank-1 least-squares factorization. The reciprocal
exponents then give a continuous piecewise-log warp: the estimated scale.

Here the corpus is synthetic with known exponents, so we can check the
estimator recovers them exactly, and keeps doing well under measurement
noise.
"""

import numpy as np

from speechscale import FormantSet, SpeakerRecord, estimate_scale

TRUE_BETAS = np.array([1.2, 1.0, 0.8])   # mean 1 by construction
GRAND_MEANS = np.array([500.0, 1500.0, 2500.0])


def make_corpus(noise_sigma=0.0, n_speakers=20, seed=0):
    rng = np.random.default_rng(seed)
    factors = np.linspace(-0.2, 0.2, n_speakers)
    records = []
    for i, c in enumerate(factors):
        logf = np.log(GRAND_MEANS) + TRUE_BETAS * c
        logf += rng.normal(0.0, noise_sigma, 3)
        sid = f"s{i:02d}"
        token = FormantSet(sid, "aa", tuple(np.exp(logf)))
        records.append(SpeakerRecord(sid, None, (token,)))
    return records


print("true band exponents:", TRUE_BETAS)

est = estimate_scale(make_corpus())
print("\nnoiseless corpus, 20 speakers:")
for label, beta in zip(est.partition.band_labels(), est.betas):
    print(f"  band {label:>24}: beta = {beta:.9f}")
print(f"  residual rms: {est.residual_rms:.3e} nepers")
print(f"  max exponent error: {np.max(np.abs(est.betas - TRUE_BETAS)):.2e}")

noisy = estimate_scale(make_corpus(noise_sigma=0.01))
print("\nwith 0.01 neper log-frequency noise:")
for label, beta in zip(noisy.partition.band_labels(), noisy.betas):
    print(f"  band {label:>24}: beta = {beta:.4f}")
print(f"  residual rms: {noisy.residual_rms:.4f} nepers")
print(f"  max exponent error: {np.max(np.abs(noisy.betas - TRUE_BETAS)):.4f}")

print("\nestimated scale, sampled (noiseless estimate):")
grid = np.geomspace(est.partition.f_min, est.partition.f_max, 9)
for f, nu in zip(grid, est.warp(grid)):
    print(f"  {f:8.1f} Hz -> {nu:.4f}")
print("\nSlopes flatten toward high frequency (beta drops below 1), i.e. the")
print("scale compresses high frequencies more than a plain log axis would.")
