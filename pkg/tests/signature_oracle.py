"""Scripted re-identification of disturbance classes from their defining
signatures: harmonic ratios, polarity/unipolarity, growth, step structure,
and high-frequency content. Used only as a test oracle."""

import numpy as np


def _harmonic_amp(x, spc, h, start_cycle=2, cycles=3):
    n = cycles * spc
    seg = x[start_cycle * spc: start_cycle * spc + n]
    coef = np.fft.rfft(seg)
    return 2.0 * np.abs(coef[h * cycles]) / n


def classify_by_signature(wave) -> str:
    """Name the disturbance class from waveform morphology alone."""
    spc = wave.spec.samples_per_cycle
    post = wave.samples[wave.inception_index:]
    dominant = int(np.argmax(np.abs(post[: 5 * spc]).max(axis=0)))
    x = post[:, dominant]

    peaks = [np.abs(x[c * spc:(c + 1) * spc]).max() for c in range(5)]
    peak_all = max(peaks)
    step_ratio = np.abs(np.diff(x[: 4 * spc])).max() / (peak_all + 1e-12)
    body = x[spc: 5 * spc]
    unipolar = abs(body.mean()) / (np.abs(body).mean() + 1e-12)
    growth = peaks[4] / (peaks[0] + 1e-12)

    first_cycle = np.abs(np.fft.rfft(x[:spc])) ** 2
    freqs = np.fft.rfftfreq(spc, d=wave.spec.dt)
    hf_early = first_cycle[freqs >= 250].sum() / (first_cycle[1:].sum() + 1e-12)

    h1 = _harmonic_amp(x, spc, 1)
    h3 = _harmonic_amp(x, spc, 3)
    h5 = _harmonic_amp(x, spc, 5)

    if hf_early > 0.4 and peaks[4] < 0.5 * peaks[0]:
        return "CapacitorSwitching"           # decaying >=300 Hz ring
    if step_ratio > 0.35 and peak_all > 1.0:
        return "ExternalFaultCTSat"           # clipper collapse steps
    if unipolar > 0.45:
        # saturation current: growing offset vs decaying offset
        return "SympatheticInrush" if growth > 1.1 else "MagnetizingInrush"
    if h5 / (h1 + 1e-12) > 0.3 and h3 / (h1 + 1e-12) < 0.12:
        return "NonlinearLoadSwitching"       # 6-pulse set, no 3rd harmonic
    if h3 / (h1 + 1e-12) > 0.15:
        return "Ferroresonance"               # sustained odd harmonics
    if peak_all < 0.3:
        # bare energization without an offset: still a magnetizing signature
        return "SympatheticInrush" if growth > 1.1 else "MagnetizingInrush"
    return "ExternalFaultCTSat"
