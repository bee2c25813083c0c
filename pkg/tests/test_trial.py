import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laserbench.config import PatchSpec, TrialConfig, default_config
from laserbench.errors import TrialError
from laserbench.operator_sim import OperatorModel, RngSeed
from laserbench.trial import (
    CSV_COLUMNS,
    TrialResult,
    TTestResult,
    export_report,
    paired_t_test,
    run_trial,
)

# small fast layout reused by most trial-level tests
FAST = TrialConfig(
    n_subjects=5,
    patches=(PatchSpec("forehead", 30.0, 30.0),),
    pixel_size=0.3,
    master_seed=RngSeed(42),
)


@pytest.fixture(scope="module")
def fast_result():
    return run_trial(FAST)


@pytest.fixture(scope="module")
def default_result():
    return run_trial(replace(default_config(), pixel_size=0.25))


# ---------------------------------------------------------------------------
# paired_t_test


def test_t_test_golden_hand_computed():
    res = paired_t_test([1, 2, 3, 4], [2, 2, 4, 5])
    assert res.t == -3.0
    assert res.df == 3
    assert res.p == pytest.approx(0.0577, abs=0.0005)
    assert res.mean_diff == pytest.approx(-0.75)
    assert not res.degenerate


def test_t_test_equal_samples():
    res = paired_t_test([3.0, 1.0, 4.0], [3.0, 1.0, 4.0])
    assert res.t == 0.0
    assert res.p == 1.0
    assert res.degenerate


def test_t_test_constant_nonzero_difference():
    res = paired_t_test([5.0, 6.0], [4.0, 5.0])
    assert res.degenerate
    assert res.t == math.inf
    assert res.p == 0.0
    assert res.mean_diff == 1.0
    neg = paired_t_test([4.0, 5.0], [5.0, 6.0])
    assert neg.t == -math.inf


def test_t_test_input_validation():
    with pytest.raises(ValueError):
        paired_t_test([1.0], [2.0])
    with pytest.raises(ValueError):
        paired_t_test([1.0, 2.0], [1.0, 2.0, 3.0])


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-50, 50), min_size=3, max_size=12),
    st.floats(-100, 100),
)
def test_t_test_shift_invariance(a, shift):
    rng = np.random.default_rng(len(a))
    b = list(rng.normal(0, 5, len(a)))
    base = paired_t_test(a, b)
    moved = paired_t_test([x + shift for x in a], [x + shift for x in b])
    assert moved.t == pytest.approx(base.t, rel=1e-9, abs=1e-9)
    assert moved.df == base.df
    assert moved.p == pytest.approx(base.p, rel=1e-9, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_t_test_antisymmetry(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(0, 3, 8)
    b = rng.normal(1, 3, 8)
    fwd = paired_t_test(a, b)
    rev = paired_t_test(b, a)
    assert rev.t == pytest.approx(-fwd.t, rel=1e-12)
    assert rev.mean_diff == pytest.approx(-fwd.mean_diff, rel=1e-12)
    assert rev.p == fwd.p


def test_t_test_json_round_trip():
    res = paired_t_test([1, 2, 3, 4], [2, 2, 4, 5])
    assert TTestResult.from_json(res.to_json()) == res


# ---------------------------------------------------------------------------
# run_trial structure


def test_row_count_and_order(fast_result):
    # n_subjects x 2 sides x patches, subject-major
    assert len(fast_result.rows) == 5 * 2 * 1
    subjects = [r.subject for r in fast_result.rows]
    assert subjects == sorted(subjects)
    sides = {r.side for r in fast_result.rows}
    assert sides == {"right", "left"}


def test_default_layout_row_count(default_result):
    assert len(default_result.rows) == 17 * 2 * 2
    sites = {r.site for r in default_result.rows}
    assert sites == {"forehead", "cheek"}


def test_all_tests_present(fast_result):
    assert set(fast_result.tests) == {"coverage_pct", "shots", "duration"}
    for res in fast_result.tests.values():
        assert res.df == 4


def test_aggregates_recomputable_from_rows(default_result):
    for side in ("right", "left"):
        for metric in ("coverage_pct", "shots", "duration"):
            vals = default_result.subject_metrics(side, metric)
            agg = default_result.aggregate(side, metric)
            assert agg.mean == pytest.approx(float(vals.mean()), rel=1e-12, abs=1e-12)
            assert agg.sd == pytest.approx(float(vals.std(ddof=1)), rel=1e-12, abs=1e-12)
            assert agg.sem == pytest.approx(agg.sd / math.sqrt(agg.n), rel=1e-12)
            assert agg.n == 17


def test_rerun_is_bit_identical(fast_result):
    again = run_trial(FAST)
    assert again.to_json() == fast_result.to_json()


def test_master_seed_changes_outcome(fast_result):
    other = run_trial(replace(FAST, master_seed=RngSeed(43)))
    assert other.to_json() != fast_result.to_json()


def test_prebuilt_regions_hook_matches(fast_result):
    shared = FAST.build_regions()
    assert run_trial(FAST, regions=shared).to_json() == fast_result.to_json()
    with pytest.raises(ValueError):
        run_trial(FAST, regions=[])


def test_zero_noise_both_sides_tie():
    quiet = OperatorModel(rate_mean=2.0)
    cfg = replace(FAST, robot_model=quiet, human_model=quiet)
    res = run_trial(cfg)
    cov = res.tests["coverage_pct"]
    assert cov.t == 0.0
    assert cov.p == 1.0
    r = res.aggregate("right", "coverage_pct")
    l = res.aggregate("left", "coverage_pct")
    assert r.mean == l.mean
    assert r.sd == 0.0


def test_sides_use_their_own_models(fast_result):
    # robot default is much quieter than human default
    assert (
        fast_result.aggregate("right", "coverage_pct").mean
        > fast_result.aggregate("left", "coverage_pct").mean
    )


def test_shots_tie_under_defaults(default_result):
    shots = default_result.tests["shots"]
    assert shots.degenerate
    assert shots.p == 1.0
    assert default_result.aggregate("right", "shots").mean == 211.0
    assert default_result.aggregate("left", "shots").mean == 211.0


def test_unplannable_patch_excludes_all_subjects():
    # selection too small for any footprint: every subject fails, trial aborts
    cfg = replace(FAST, patches=(PatchSpec("forehead", 4.0, 4.0),))
    with pytest.raises(TrialError, match="0 of 5"):
        with pytest.warns():  # empty-lattice warnings fire along the way
            run_trial(cfg)


def test_unweighted_pooling_differs(default_result):
    cfg = replace(default_config(), pixel_size=0.25, pooling="unweighted")
    res = run_trial(cfg)
    # forehead (small U) counts equally under unweighted pooling
    assert res.aggregate("right", "coverage_pct").mean != pytest.approx(
        default_result.aggregate("right", "coverage_pct").mean, abs=1e-9
    )
    # shots and duration are sums either way
    assert res.aggregate("right", "shots").mean == default_result.aggregate(
        "right", "shots"
    ).mean


def test_pooled_coverage_matches_manual(default_result):
    # recompute one subject's U-weighted pooling by hand from its rows
    rows = [r for r in default_result.rows if r.subject == 0 and r.side == "right"]
    phi = sum(r.report.phi_union for r in rows)
    u = sum(r.report.U for r in rows)
    vals = default_result.subject_metrics("right", "coverage_pct")
    assert vals[0] == pytest.approx(100.0 * phi / u, rel=1e-12)


# ---------------------------------------------------------------------------
# export_report


def test_csv_export_shape_and_columns(tmp_path, default_result):
    path = tmp_path / "trial.csv"
    export_report(default_result, "csv", path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + 68


def test_csv_export_deterministic_bytes(tmp_path, fast_result):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    export_report(fast_result, "csv", p1)
    export_report(run_trial(FAST), "csv", p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_json_export_round_trips_losslessly(tmp_path, fast_result):
    path = tmp_path / "trial.json"
    export_report(fast_result, "json", path)
    doc = json.loads(path.read_text())
    restored = TrialResult.from_json(doc)
    assert restored == fast_result
    # aggregates recomputed from restored rows match bit for bit
    for side in ("right", "left"):
        vals = restored.subject_metrics(side, "coverage_pct")
        agg = restored.aggregate(side, "coverage_pct")
        assert float(vals.mean()) == agg.mean


def test_export_rejects_empty_and_bad_format(tmp_path, fast_result):
    empty = TrialResult(
        rows=(),
        aggregates=(),
        tests={},
        pooling="u_weighted",
        pixel_size=0.1,
        valid_subjects=(),
    )
    with pytest.raises(TrialError, match="nothing to export"):
        export_report(empty, "csv", tmp_path / "x.csv")
    with pytest.raises(ValueError, match="csv or json"):
        export_report(fast_result, "xml", tmp_path / "x.xml")
