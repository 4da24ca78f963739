"""Feature ops against independent brute-force oracles, plus task vectors."""

import numpy as np
import pytest

from diffsentry.errors import (
    IndexOutOfRange,
    SingularDesign,
    TooShort,
    WrongWindowLength,
)
from diffsentry.features import (
    Task,
    agg_linear_trend,
    ar_coefficients,
    change_quantile,
    dft_coefficient,
    extract,
    feature_matrix,
    schema_hash,
    task_specs,
    task_window_len,
    welch_density,
    write_feature_csv,
)
from diffsentry.sampling import SamplingSpec

SPEC = SamplingSpec()


# -- brute-force oracles (kept deliberately plain and loop-based) -----------------

def oracle_change_quantile(x, ql, qh):
    x = np.asarray(x, dtype=float)
    lo, hi = np.quantile(x, ql), np.quantile(x, qh)
    diffs = []
    for t in range(len(x) - 1):
        if lo <= x[t] <= hi and lo <= x[t + 1] <= hi:
            diffs.append(abs(x[t + 1] - x[t]))
    return sum(diffs) / len(diffs) if diffs else 0.0


def oracle_dft(x, k):
    x = np.asarray(x, dtype=float)
    n = len(x)
    total = 0j
    for t in range(n):
        total += x[t] * np.exp(-2j * np.pi * k * t / n)
    return total


def oracle_trend(x, w, statistic, aggregator):
    x = np.asarray(x, dtype=float)
    stats = []
    for i in range(len(x) // w):
        seg = x[i * w:(i + 1) * w]
        t = np.arange(w)
        tm, ym = t.mean(), seg.mean()
        sxx = ((t - tm) ** 2).sum()
        slope = ((t - tm) * (seg - ym)).sum() / sxx
        intercept = ym - slope * tm
        if w == 2:
            stderr = 0.0
        else:
            resid = seg - (intercept + slope * t)
            stderr = np.sqrt((resid ** 2).sum() / (w - 2) / sxx)
        stats.append({"slope": slope, "intercept": intercept, "stderr": stderr}[statistic])
    agg = {"mean": np.mean, "min": np.min, "max": np.max, "var": np.var}[aggregator]
    return float(agg(stats))


def oracle_welch(x, bin_index, seg_len):
    x = np.asarray(x, dtype=float)
    window = np.array([0.5 - 0.5 * np.cos(2 * np.pi * j / seg_len)
                       for j in range(seg_len)])
    periodograms = []
    start = 0
    while start + seg_len <= len(x):
        seg = x[start: start + seg_len] * window
        spectrum = [abs(oracle_dft(seg, k)) ** 2 for k in range(seg_len // 2 + 1)]
        periodograms.append(spectrum)
        start += seg_len // 2
    avg = np.mean(periodograms, axis=0) / (window ** 2).sum()
    avg[1: seg_len // 2] *= 2.0
    return float(avg[bin_index])


def oracle_ar(x, order):
    x = np.asarray(x, dtype=float)
    rows = len(x) - order
    design = np.ones((rows, order + 1))
    for lag in range(1, order + 1):
        design[:, lag] = x[order - lag: len(x) - lag]
    sol, *_ = np.linalg.lstsq(design, x[order:], rcond=None)
    return sol


# -- change quantile -----------------------------------------------------------------

def test_change_quantile_constant_is_zero():
    assert change_quantile(np.full(20, 3.3), 0.1, 0.9) == 0.0


def test_change_quantile_alternating():
    assert change_quantile([0, 1, 0, 1], 0.0, 1.0) == 1.0


def test_change_quantile_band_example():
    x = [0, 5, 1, 2, 1, 5]
    got = change_quantile(x, 0.0, 0.5)
    assert got == pytest.approx(oracle_change_quantile(x, 0.0, 0.5), rel=1e-12)


def test_change_quantile_randomized_against_oracle():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(2, 512))
        x = rng.normal(scale=rng.uniform(0.1, 10), size=n)
        ql = float(rng.uniform(0, 0.8))
        qh = float(rng.uniform(ql + 0.05, 1.0))
        got = change_quantile(x, ql, qh)
        want = oracle_change_quantile(x, ql, qh)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-12)


def test_change_quantile_shift_invariant():
    rng = np.random.default_rng(5)
    x = rng.normal(size=200)
    a = change_quantile(x, 0.2, 0.8)
    b = change_quantile(x + 123.456, 0.2, 0.8)
    assert b == pytest.approx(a, rel=1e-9)


def test_change_quantile_validation():
    with pytest.raises(TooShort):
        change_quantile([1.0], 0.0, 1.0)
    with pytest.raises(ValueError):
        change_quantile([1.0, 2.0], 0.8, 0.2)


# -- DFT coefficient -----------------------------------------------------------------

def test_dft_dc_and_orthogonality():
    assert dft_coefficient([1, 1, 1, 1], 0, "abs") == pytest.approx(4.0)
    assert dft_coefficient([1, 1, 1, 1], 1, "abs") == pytest.approx(0.0, abs=1e-12)


def test_dft_pure_tone():
    n = 32
    x = np.cos(2 * np.pi * 3 * np.arange(n) / n)
    assert dft_coefficient(x, 3, "abs") == pytest.approx(16.0, rel=1e-12)


def test_dft_randomized_against_direct_oracle():
    rng = np.random.default_rng(17)
    for _ in range(100):
        n = int(rng.integers(4, 512))
        x = rng.normal(size=n)
        k = int(rng.integers(0, n // 2 + 1))
        want = oracle_dft(x, k)
        for part, val in (("abs", abs(want)), ("real", want.real), ("imag", want.imag)):
            assert dft_coefficient(x, k, part) == pytest.approx(
                val, rel=1e-9, abs=1e-9
            )


def test_dft_index_validation():
    with pytest.raises(IndexOutOfRange):
        dft_coefficient([1, 2, 3, 4], 3, "abs")


# -- aggregated linear trend ------------------------------------------------------------

def test_trend_exact_line():
    assert agg_linear_trend([0, 1, 2, 3, 4], 5, "slope", "mean") == pytest.approx(1.0)
    assert agg_linear_trend([0, 1, 2, 3, 4], 5, "stderr", "mean") == 0.0


def test_trend_up_down_cancels():
    x = [0, 1, 2, 3, 4, 4, 3, 2, 1, 0]
    assert agg_linear_trend(x, 5, "slope", "mean") == pytest.approx(0.0, abs=1e-12)


def test_trend_randomized_against_oracle():
    rng = np.random.default_rng(23)
    for _ in range(100):
        n = int(rng.integers(4, 512))
        w = int(rng.integers(2, max(3, n // 2 + 1)))
        x = rng.normal(size=n)
        statistic = rng.choice(["slope", "intercept", "stderr"])
        aggregator = rng.choice(["mean", "min", "max", "var"])
        got = agg_linear_trend(x, w, statistic, aggregator)
        want = oracle_trend(x, w, statistic, aggregator)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-9)


def test_trend_slope_scales_with_amplitude():
    rng = np.random.default_rng(29)
    x = rng.normal(size=100)
    a = agg_linear_trend(x, 10, "slope", "mean")
    b = agg_linear_trend(4.0 * x, 10, "slope", "mean")
    assert b == pytest.approx(4.0 * a, rel=1e-9, abs=1e-12)


# -- Welch density -----------------------------------------------------------------------

def test_welch_zero_signal():
    for b in (0, 1, 7, 32):
        assert welch_density(np.zeros(256), b, 64) == 0.0


def test_welch_constant_concentrates_at_dc():
    # a Hann window leaks a DC signal into bin 1 (one quarter amplitude by
    # construction); every bin from 2 up must be numerically zero
    vals = [welch_density(np.full(256, 5.0), b, 64) for b in range(33)]
    assert vals[0] > 0
    for b in range(2, 33):
        assert vals[0] > 1e6 * vals[b]
    assert vals[1] == pytest.approx(vals[0] / 2.0, rel=1e-9)


def test_welch_peak_bin_location():
    for m in (3, 7, 15):
        x = np.sin(2 * np.pi * m * np.arange(320) / 64)
        vals = [welch_density(x, b, 64) for b in range(33)]
        assert int(np.argmax(vals)) == m


def test_welch_randomized_against_oracle():
    rng = np.random.default_rng(31)
    for _ in range(40):
        seg = int(rng.choice([16, 32, 64]))
        n = int(rng.integers(seg, 512))
        x = rng.normal(size=n)
        b = int(rng.integers(0, seg // 2 + 1))
        assert welch_density(x, b, seg) == pytest.approx(
            oracle_welch(x, b, seg), rel=1e-9, abs=1e-12
        )


def test_welch_validation():
    with pytest.raises(TooShort):
        welch_density(np.zeros(32), 0, 64)
    with pytest.raises(ValueError):
        welch_density(np.zeros(256), 0, 48)
    with pytest.raises(IndexOutOfRange):
        welch_density(np.zeros(256), 33, 64)


# -- autoregressive coefficients ------------------------------------------------------------

def test_ar_exact_first_order():
    x = np.array([0.8 ** t for t in range(30)])
    phi = ar_coefficients(x, 1)
    assert phi[0] == pytest.approx(0.0, abs=1e-9)
    assert phi[1] == pytest.approx(0.8, rel=1e-9)


def test_ar_constant_is_singular():
    with pytest.raises(SingularDesign) as err:
        ar_coefficients(np.ones(40), 2)
    assert len(err.value.colliding_lags) >= 1


def test_ar_recovers_known_process():
    rng = np.random.default_rng(37)
    n = 4000
    x = np.zeros(n)
    for t in range(2, n):
        x[t] = 0.6 * x[t - 1] - 0.3 * x[t - 2] + rng.normal(scale=1e-3)
    x[:2] = rng.normal(size=2)
    phi = ar_coefficients(x[100:], 2)
    assert phi[1] == pytest.approx(0.6, abs=1e-2)
    assert phi[2] == pytest.approx(-0.3, abs=1e-2)


def test_ar_randomized_against_lstsq_oracle():
    rng = np.random.default_rng(41)
    for _ in range(100):
        order = int(rng.integers(1, 6))
        n = int(rng.integers(2 * (order + 1) + 5, 512))
        x = rng.normal(size=n)
        got = ar_coefficients(x, order)
        want = oracle_ar(x, order)
        assert np.allclose(got, want, rtol=1e-9, atol=1e-9)


def test_ar_too_short():
    with pytest.raises(TooShort):
        ar_coefficients(np.arange(5.0), 2)


# -- task vectors ---------------------------------------------------------------------------

@pytest.mark.parametrize("task,length", [
    (Task.DETECT_FAULT, 18),
    (Task.LOCATE_UNIT, 18),
    (Task.IDENTIFY_SERIES, 21),
    (Task.IDENTIFY_EXCITING, 21),
    (Task.IDENTIFY_PT, 21),
    (Task.IDENTIFY_DISTURBANCE, 15),
])
def test_vector_lengths(task, length):
    n = task_window_len(task, SPEC)
    window = np.random.default_rng(1).normal(size=(n, 3))
    vec = extract(window, task, SPEC)
    assert vec.values.shape == (length,)
    assert len(vec.spec_list) == length
    # identical per-phase structure: a third of the specs per phase
    per_phase = length // 3
    phases = [ph for ph, _ in vec.spec_list]
    assert phases == ["a"] * per_phase + ["b"] * per_phase + ["c"] * per_phase


def test_per_task_family_counts_are_frozen():
    counts = {
        Task.DETECT_FAULT: (2, 1, 1, 1, 1),
        Task.LOCATE_UNIT: (2, 2, 2, 0, 0),
        Task.IDENTIFY_SERIES: (3, 1, 2, 1, 0),
        Task.IDENTIFY_EXCITING: (3, 2, 2, 0, 0),
        Task.IDENTIFY_PT: (3, 2, 2, 0, 0),
        Task.IDENTIFY_DISTURBANCE: (2, 1, 1, 0, 1),
    }
    families = ["change_quantile", "dft_coefficient", "agg_linear_trend",
                "welch_density", "ar_coefficients"]
    for task, expected in counts.items():
        specs = task_specs(task)
        got = tuple(sum(1 for s in specs if s.family == fam) for fam in families)
        assert got == expected


def test_zero_window_fallbacks():
    n = task_window_len(Task.DETECT_FAULT, SPEC)
    vec = extract(np.zeros((n, 3)), Task.DETECT_FAULT, SPEC)
    assert vec.ar_fallback
    assert np.all(np.isfinite(vec.values))
    assert np.all(vec.values == 0.0)


def test_extract_is_pure():
    n = task_window_len(Task.IDENTIFY_DISTURBANCE, SPEC)
    window = np.random.default_rng(3).normal(size=(n, 3))
    a = extract(window, Task.IDENTIFY_DISTURBANCE, SPEC)
    b = extract(window.copy(), Task.IDENTIFY_DISTURBANCE, SPEC)
    assert np.array_equal(a.values, b.values)


def test_wrong_window_length_rejected():
    with pytest.raises(WrongWindowLength):
        extract(np.zeros((100, 3)), Task.DETECT_FAULT, SPEC)
    with pytest.raises(WrongWindowLength):
        extract(np.zeros((250, 2)), Task.DETECT_FAULT, SPEC)


def test_schema_hash_distinguishes_tasks():
    hashes = {schema_hash(t) for t in Task}
    assert len(hashes) == len(list(Task))


def test_feature_names_carry_phase_and_family():
    n = task_window_len(Task.DETECT_FAULT, SPEC)
    vec = extract(np.random.default_rng(0).normal(size=(n, 3)), Task.DETECT_FAULT)
    names = vec.names()
    assert names[0].startswith("a_change_quantile_")
    assert names[-1].startswith("c_ar_coefficients_")
    assert len(set(names)) == len(names)


def test_feature_csv_and_sidecar(tmp_path):
    n = task_window_len(Task.DETECT_FAULT, SPEC)
    rng = np.random.default_rng(9)
    windows = [rng.normal(size=(n, 3)) for _ in range(4)]
    matrix, _ = feature_matrix(windows, Task.DETECT_FAULT, SPEC)
    path = tmp_path / "features.csv"
    write_feature_csv(path, matrix, Task.DETECT_FAULT)
    lines = path.read_text().splitlines()
    assert len(lines) == 5
    assert lines[0].count(",") == 17
    import json
    sidecar = json.loads((tmp_path / "features.csv.schema.json").read_text())
    assert sidecar["task"] == "DetectFault"
    assert sidecar["schema_hash"] == schema_hash(Task.DETECT_FAULT)
