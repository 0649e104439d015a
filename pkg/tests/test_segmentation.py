import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecgtda import InvalidInputError, Signal
from ecgtda.segmentation import slice_windows, standardize_length
from ecgtda.synthetic import synthetic_record
from ecgtda.wfdb import AnnotatedRecord


def make_record(beat_indices, symbols=None, n=None):
    n = n or (beat_indices[-1] + 100)
    symbols = symbols or ["N"] * len(beat_indices)
    rng = np.random.default_rng(0)
    return AnnotatedRecord(
        "p0", Signal(rng.standard_normal(n), 200.0),
        tuple(zip(beat_indices, symbols)), 200.0,
    )


class TestStandardizeLength:
    def test_linear_ramp(self):
        assert np.allclose(standardize_length([0.0, 1.0], 5), [0, 0.25, 0.5, 0.75, 1])

    def test_identity_when_already_w(self):
        x = np.arange(7.0)
        assert np.array_equal(standardize_length(x, 7), x)

    def test_endpoints_preserved(self):
        rng = np.random.default_rng(1)
        raw = rng.standard_normal(137)
        out = standardize_length(raw, 400)
        assert out[0] == raw[0] and out[-1] == raw[-1]

    def test_downsampled_ramp_stays_linear(self):
        out = standardize_length(np.arange(100.0), 10)
        assert np.allclose(np.diff(out), np.diff(out)[0])

    def test_too_short(self):
        with pytest.raises(InvalidInputError):
            standardize_length([1.0], 5)


class TestSliceWindows:
    def test_spec_example(self):
        record = make_record([100, 300, 500, 700, 900])
        windows = slice_windows(record, k=3, w=400)
        assert len(windows) == 1
        assert windows[0].raw_span == (200, 800)
        assert windows[0].center_beat_index == 2
        assert windows[0].label == "N"

    def test_k1_example(self):
        record = make_record([100, 300, 500], ["N", "V", "N"])
        windows = slice_windows(record, k=1, w=400)
        assert len(windows) == 1
        assert windows[0].raw_span == (200, 400)
        assert windows[0].label == "V"

    def test_all_windows_have_w_samples(self):
        record = make_record(list(range(100, 2100, 150)))
        for window in slice_windows(record, k=3, w=400):
            assert window.samples.size == 400

    def test_too_few_beats_is_empty(self):
        record = make_record([100, 300, 500])
        assert slice_windows(record, k=3) == []

    def test_invalid_args(self):
        record = make_record([100, 300, 500, 700, 900])
        with pytest.raises(InvalidInputError):
            slice_windows(record, k=0)
        with pytest.raises(InvalidInputError):
            slice_windows(record, w=4)

    @given(st.integers(1, 5), st.integers(6, 20))
    @settings(max_examples=40, deadline=None)
    def test_central_label_rule(self, k, n_beats):
        symbols = [chr(ord("A") + i % 26) for i in range(n_beats)]
        beats = [100 + 200 * i for i in range(n_beats)]
        record = make_record(beats, symbols)
        for j, window in enumerate(slice_windows(record, k=k, w=64)):
            group_start = 1 + j
            assert window.center_beat_index - group_start == k // 2
            assert window.label == symbols[group_start + k // 2]

    def test_stride_and_overlap(self):
        record = make_record(list(range(100, 3100, 200)))
        windows = slice_windows(record, k=3, w=64)
        for a, b in zip(windows, windows[1:]):
            # consecutive stride-1 windows share k-1 beats
            assert b.center_beat_index - a.center_beat_index == 1
            assert a.raw_span[1] > b.raw_span[0]

    def test_span_tracks_rhythm(self):
        slow = synthetic_record("slow", ["N"] * 12, rr_s=1.1, seed=3)
        fast = synthetic_record("fast", ["N"] * 12, rr_s=0.5, seed=3)
        slow_spans = [w.raw_span[1] - w.raw_span[0] for w in slice_windows(slow, w=64)]
        fast_spans = [w.raw_span[1] - w.raw_span[0] for w in slice_windows(fast, w=64)]
        assert min(slow_spans) > max(fast_spans)
        # output length constant regardless
        assert {w.samples.size for w in slice_windows(slow, w=64)} == {64}

    def test_center_position_points_at_r_peak(self):
        record = synthetic_record("p", ["N"] * 10, seed=1, noise=0.0, drift_amp=0.0)
        for window in slice_windows(record, k=3, w=400):
            peak = int(round(window.center_position * 400))
            lo, hi = max(peak - 6, 0), min(peak + 7, 400)
            local = window.samples[lo:hi]
            assert local.max() >= 0.9 * window.samples.max()
