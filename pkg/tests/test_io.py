import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sskcw import io
from sskcw.montecarlo import CheckResult, SummaryStats, TrialRecord
from sskcw.spectral import Spectrum

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
maybe_nan = st.one_of(finite, st.just(math.nan))


@st.composite
def records(draw):
    n = draw(st.integers(1, 6))
    out = []
    for i in range(n):
        r = TrialRecord(index=i, seed=draw(st.integers(0, 2 ** 64 - 1)))
        r.lambda1, r.lambda2, r.chi = draw(finite), draw(finite), draw(maybe_nan)
        r.F_exact, r.F_transitional, r.F_sd = draw(maybe_nan), draw(maybe_nan), draw(maybe_nan)
        r.partial_ls = {"g": draw(finite), "x": draw(finite)}
        r.full_ls = {"x2": draw(finite)}
        r.rigidity_violation, r.excluded, r.trace_ok = draw(st.booleans()), draw(st.booleans()), draw(st.booleans())
        r.error = draw(st.sampled_from(["", "ConvergenceError: no, really", 'ValueError: "quoted", comma']))
        out.append(r)
    return out


def same(a, b):
    return a == b or (isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b))


@given(records())
def test_trials_roundtrip(tmp_path_factory, recs):
    path = tmp_path_factory.mktemp("t") / "trials.csv"
    io.write_trials(path, recs, {"N": 10})
    back = io.read_trials(path)
    assert len(back) == len(recs)
    for a, b in zip(recs, back):
        for k, v in a.__dict__.items():
            w = getattr(b, k)
            if isinstance(v, dict):
                assert v.keys() == w.keys() and all(same(v[t], w[t]) for t in v)
            else:
                assert same(v, w), k


@given(st.lists(finite, min_size=1, max_size=20), st.one_of(st.none(), st.integers(0, 2 ** 63)))
def test_spectrum_roundtrip(tmp_path_factory, vals, seed):
    s = Spectrum(np.sort(np.array(vals))[::-1], 2.5, seed)
    path = tmp_path_factory.mktemp("s") / "spectrum.csv"
    io.write_spectrum(path, s)
    back = io.read_spectrum(path)
    assert np.array_equal(back.values, s.values) and back.J == 2.5 and back.seed == seed


@given(st.integers(0, 8), st.integers(0, 1000))
def test_matrix_roundtrip(tmp_path_factory, N, seed):
    M = np.random.default_rng(seed).standard_normal((N, N))
    path = tmp_path_factory.mktemp("m") / "m.bin"
    io.write_matrix(path, M)
    assert np.array_equal(io.read_matrix(path), M)
    assert path.stat().st_size == 8 + 8 * N * N


def test_matrix_errors(tmp_path):
    p = tmp_path / "m.bin"
    p.write_bytes(b"\x01")
    with pytest.raises(io.FormatError):
        io.read_matrix(p)
    io.write_matrix(p, np.eye(3))
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(io.FormatError):
        io.read_matrix(p)
    with pytest.raises(ValueError):
        io.write_matrix(p, np.ones((2, 3)))


def test_summary_roundtrip(tmp_path):
    st_ = SummaryStats(["chi"], 10, {"chi": 0.1}, {"chi": 1.0}, {"chi": 0.3}, [[1.0]],
                       ks={"chi": {"D": 0.1, "p": math.nan}}, excluded=2, excluded_seeds=[4, 5],
                       failed_seeds=[9], checks=[CheckResult("mean_z", 0.2, 0.0, "|z| <= 4", True, False)])
    io.write_summary(tmp_path / "s.json", st_)
    back = io.read_summary(tmp_path / "s.json")
    assert back.checks == st_.checks and back.mean == st_.mean and back.failed_seeds == [9]
    assert math.isnan(back.ks["chi"]["p"])


@given(st.lists(st.dictionaries(st.sampled_from(["N", "F_exact", "F_sd", "note"]),
                                st.one_of(finite, st.integers(), st.text(max_size=5)), max_size=4), max_size=5))
def test_breakdown_rows_roundtrip(rows):
    assert io.parse_breakdown_rows(io.breakdown_rows_json(rows)) == rows


def test_numpy_values_serialize():
    text = io.dumps({"a": np.float64(1.5), "b": np.arange(3), "c": np.bool_(True)}, "x")
    assert io.loads(text, "x") == {"a": 1.5, "b": [0, 1, 2], "c": True}


def test_bad_headers_and_versions(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("# sskcw-spectrum v1 N=1 J=2.0 seed=none\nk,lambda\n1,0.5\n")
    with pytest.raises(io.FormatError, match="sskcw-trials"):
        io.read_trials(p)
    p.write_text("# sskcw-spectrum v9 N=1 J=2.0\nk,lambda\n1,0.5\n")
    with pytest.raises(io.FormatError, match="version"):
        io.read_spectrum(p)
    p.write_text("# sskcw-spectrum v1 N=2 J=2.0\nk,lambda\n1,0.5\n")
    with pytest.raises(io.FormatError, match="N=2"):
        io.read_spectrum(p)
    p.write_text("# sskcw-spectrum v1 N\nk,lambda\n")
    with pytest.raises(io.FormatError, match="malformed"):
        io.read_spectrum(p)
    with pytest.raises(io.FormatError):
        io.loads('{"schema": "sskcw-summary", "version": 2}', "summary")
    with pytest.raises(io.FormatError):
        io.loads('{"schema": "other", "version": 1}', "summary")
    with pytest.raises(io.FormatError):
        io.parse_breakdown_rows('{"schema": "sskcw-breakdown", "version": 3}\n')


def test_trials_bad_field_count(tmp_path):
    r = TrialRecord(index=0, seed=1)
    p = tmp_path / "t.csv"
    io.write_trials(p, [r])
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:2] + [lines[2] + ",extra"]) + "\n")
    with pytest.raises(io.FormatError, match="line 3"):
        io.read_trials(p)
