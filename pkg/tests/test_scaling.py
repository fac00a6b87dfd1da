import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from restrict_lab.errors import InvalidInputError, RecordIOError, RecordParseError
from restrict_lab.scaling import (COLUMNS, ExperimentRecord, Settings, export_json,
                                  fit_exponent, load, load_json, persist, run_scan,
                                  strip_timestamps)

GRID = [64, 128, 256, 512, 1024, 2048, 4096]


def _records(values, quantity="opnorm", k=3):
    return [ExperimentRecord(quantity, N, k, None, v, Settings()) for N, v in values]


def test_run_scan_empty():
    assert run_scan("opnorm", []) == []


def test_run_scan_opnorm_increasing():
    recs = run_scan("opnorm", [64, 128], timestamps=False)
    assert [r.N for r in recs] == [64, 128]
    assert all(r.ok for r in recs)
    assert recs[1].value > recs[0].value


def test_run_scan_deterministic():
    a = run_scan("opnorm", [32, 48], Settings(seed=5), timestamps=False)
    b = run_scan("opnorm", [32, 48], Settings(seed=5), timestamps=False)
    assert [r.value for r in a] == [r.value for r in b]


def test_run_scan_validation():
    with pytest.raises(InvalidInputError):
        run_scan("opnorm", [128, 64])
    with pytest.raises(InvalidInputError):
        run_scan("no_such_quantity", [64])


def test_run_scan_records_errors_and_continues():
    def compute(N, k, p, s):
        if N == 128:
            raise InvalidInputError("boom")
        return float(N)

    recs = run_scan("custom", [64, 128, 256], compute=compute, timestamps=False)
    assert [r.ok for r in recs] == [True, False, True]
    assert "boom" in recs[1].error and math.isnan(recs[1].value)


def test_fit_exact_power():
    res = fit_exponent([(N, 7 * N ** 0.25) for N in GRID[:5]])
    assert res.alpha == pytest.approx(0.25, abs=1e-10)
    assert res.amplitude == pytest.approx(7, rel=1e-10)
    assert res.residual <= 1e-10


def test_fit_power_log_synthetic():
    res = fit_exponent([(N, N ** (1 / 12) * math.log(N)) for N in GRID], "power_log")
    assert abs(res.alpha - 1 / 12) <= 0.005
    assert res.log_power == 1.0


def test_fit_free_log_power():
    res = fit_exponent([(N, 2 * N ** 0.1 * math.log(N) ** 2) for N in GRID], "power_log",
                       log_power=None)
    assert res.alpha == pytest.approx(0.1, abs=1e-8)
    assert res.log_power == pytest.approx(2.0, abs=1e-8)


def test_fit_errors():
    with pytest.raises(InvalidInputError):
        fit_exponent([(64, 1.0), (128, 2.0)])
    with pytest.raises(InvalidInputError):
        fit_exponent([(64, 1.0), (128, 2.0), (256, 3.0)], "power_log")
    with pytest.raises(InvalidInputError):
        fit_exponent([(64, 1.0), (128, 0.0), (256, 3.0)])
    with pytest.raises(InvalidInputError):
        fit_exponent([(64, 1.0), (128, 2.0), (256, 3.0)], "cubic")


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.5, 2.0), min_size=5, max_size=5), st.floats(1e-3, 1e3),
       st.sampled_from(["pure_power", "power_log"]))
def test_fit_scale_equivariant(noise, scale, model):
    pts = [(N, N ** 0.2 * z) for N, z in zip(GRID, noise)]
    a = fit_exponent(pts, model)
    b = fit_exponent([(N, scale * v) for N, v in pts], model)
    assert abs(a.alpha - b.alpha) <= 1e-12
    assert b.amplitude == pytest.approx(scale * a.amplitude, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.permutations(list(range(6))), st.sampled_from(["pure_power", "power_log"]))
def test_fit_reorder_invariant(perm, model):
    rng = np.random.default_rng(1)
    pts = [(N, N ** 0.3 * rng.uniform(0.8, 1.2)) for N in GRID[:6]]
    a = fit_exponent(pts, model)
    b = fit_exponent([pts[i] for i in perm], model)
    assert a.alpha == b.alpha and a.residual == b.residual


def test_fit_rejects_error_records():
    recs = _records([(64, 1.0), (128, 2.0), (256, 3.0)])
    recs[1] = ExperimentRecord("opnorm", 128, 3, None, float("nan"), Settings(), "", "bad")
    with pytest.raises(InvalidInputError):
        fit_exponent(recs)


def test_persist_load_round_trip(tmp_path):
    path = tmp_path / "r.csv"
    recs = [ExperimentRecord("opnorm", 64, 3, None, 2.4149499852297276,
                             Settings(0.05, 0.9, 16.0, 1e-10, 3), "2026-01-01T00:00:00+00:00"),
            ExperimentRecord("lower_bound_ratio", 128, 3, 2.0, 1 / 3, Settings()),
            ExperimentRecord("opnorm", 128, 4, None, 0.1 + 0.2, Settings())]
    persist(recs, path)
    assert sorted(load(path), key=repr) == sorted(recs, key=repr)
    assert open(path, encoding="utf-8").readline().strip() == ",".join(COLUMNS)


def test_persist_appends(tmp_path):
    path = tmp_path / "r.csv"
    persist(_records([(64, 1.0)]), path)
    persist(_records([(128, 2.0)]), path)
    assert [r.N for r in load(path)] == [64, 128]


@settings(max_examples=50, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False, min_value=-1e300, max_value=1e300))
def test_round_trip_preserves_value_bits(tmp_path_factory, v):
    path = tmp_path_factory.mktemp("p") / "r.csv"
    persist(_records([(64, v)]), path)
    assert load(path)[0].value == v


def test_error_records_round_trip(tmp_path):
    path = tmp_path / "r.csv"
    recs = run_scan("custom", [64, 128], compute=lambda N, k, p, s: 1 / (N - 128),
                    timestamps=False)
    persist(recs, path)
    back = load(path)
    assert back[1].error and not back[0].error
    with pytest.raises(RecordIOError):
        other = tmp_path / "plain.csv"
        persist(_records([(64, 1.0)]), other)
        persist(recs, other)


def test_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    assert load(path) == []


def test_missing_file_names_path(tmp_path):
    with pytest.raises(RecordIOError) as info:
        load(tmp_path / "missing.csv")
    assert "missing.csv" in str(info.value)


def test_corrupted_row_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    persist(_records([(64, 1.0), (128, 2.0)]), path)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write("opnorm,256,3,,not_a_number,0.1,0.5,8.0,1e-09,0,\n")
    with pytest.raises(RecordParseError) as info:
        load(path)
    assert info.value.line == 4 and "line 4" in str(info.value)


def test_json_export_round_trip(tmp_path):
    recs = _records([(64, 1.5), (128, 2.5)])
    path = tmp_path / "r.json"
    export_json(recs, path)
    data = json.loads(path.read_text())
    assert set(COLUMNS) <= set(data[0])
    assert load_json(path) == recs


def test_strip_timestamps():
    recs = run_scan("custom", [64], compute=lambda *a: 1.0)
    assert recs[0].timestamp and strip_timestamps(recs)[0].timestamp == ""


def test_fingerprint_is_stable():
    assert Settings().fingerprint() == Settings().fingerprint()
    assert Settings(seed=1).fingerprint() != Settings().fingerprint()
