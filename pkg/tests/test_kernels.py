import math

import numpy as np
import pytest

from tadapt import kernels as K
from tadapt.config import ConfigError, MetricConfig
from tadapt.matrix import AccuracyMatrix


def _row_matrix(first_row, oracle=1.0):
    """Matrix whose row 0 is ``first_row`` and whose other diagonals equal ``oracle``."""
    n = len(first_row)
    cells = {(0, h): v for h, v in enumerate(first_row) if v is not None}
    cells.update({(h, h): oracle for h in range(1, n)})
    return AccuracyMatrix.from_cells([str(i) for i in range(n)], cells)


@pytest.fixture
def cusum_fixture():
    return AccuracyMatrix.from_cells("abcd", {(0, 0): 0.8, (0, 1): 0.78, (0, 2): 0.70, (0, 3): 0.60})


# -- TTR ---------------------------------------------------------------------


def test_ttr_diagonal_is_one():
    m = AccuracyMatrix.from_cells("ab", {(0, 0): 0.5, (1, 1): 0.37})
    g = K.compute_ttr(m)
    assert g.get(0, 0) == 1.0
    assert g.get(1, 1) == 1.0


def test_ttr_clipped_when_model_beats_oracle():
    m = AccuracyMatrix.from_cells("ab", {(0, 0): 0.9, (0, 1): 0.95, (1, 1): 0.90})
    assert K.compute_ttr(m).get(0, 1) == 1.0
    raw = K.compute_ttr(m, MetricConfig(clip_ttr=False)).get(0, 1)
    assert raw == 0.95 / 0.90


def test_ttr_plain_ratio():
    m = AccuracyMatrix.from_cells("ab", {(0, 0): 0.4, (0, 1): 0.27, (1, 1): 0.30})
    assert K.compute_ttr(m).get(0, 1) == pytest.approx(0.9, abs=1e-15)
    assert K.compute_ttr(m).get(0, 1) == 0.27 / 0.30


def test_ttr_undefined_oracle_is_not_zero():
    m = AccuracyMatrix.from_cells("abc", {(0, 0): 0.5, (0, 1): 0.4, (0, 2): 0.3, (2, 2): 0.0})
    g = K.compute_ttr(m)
    assert g.get(0, 1) is None
    assert g.get(0, 2) is None
    assert g.undefined_oracle[0, 1] and g.undefined_oracle[0, 2]
    assert not g.undefined_oracle[1, 0]


# -- Stability horizon -------------------------------------------------------


def test_sh_contiguous_stops_at_first_crossing():
    g = K.compute_ttr(_row_matrix([1.0, 0.9, 0.7, 0.55, 0.8]))
    assert K.stability_horizon(g, 0, MetricConfig()) == (2, False)


def test_sh_literal_max_allows_recovery():
    g = K.compute_ttr(_row_matrix([1.0, 0.9, 0.7, 0.55, 0.8]))
    value, _ = K.stability_horizon(g, 0, MetricConfig(sh_mode="literal-max"))
    assert value == 4


def test_sh_never_crossing_is_truncated_at_H():
    g = K.compute_ttr(_row_matrix([1.0] * 10))
    assert K.stability_horizon(g, 0, MetricConfig(max_horizon=6)) == (6, True)
    assert K.stability_horizon(g, 0, MetricConfig(max_horizon=6, sh_mode="literal-max")) == (6, True)


def test_sh_skips_absent_cells():
    g = K.compute_ttr(_row_matrix([1.0, 0.9, None, 0.5, 0.9]))
    assert K.stability_horizon(g, 0) == (1, False)
    g = K.compute_ttr(_row_matrix([1.0, 0.9, None, 0.7]))
    assert K.stability_horizon(g, 0) == (3, True)


def test_sh_requires_defined_diagonal():
    m = AccuracyMatrix.from_cells("ab", {(0, 1): 0.5, (1, 1): 0.5})
    with pytest.raises(K.PreconditionError, match="oracle"):
        K.stability_horizon(K.compute_ttr(m), 0)


# -- Drift statistic / horizon -----------------------------------------------


def test_drift_statistic_hand_trace(cusum_fixture):
    cfg = MetricConfig(epsilon=0.05, lambda_=0.15)
    S = K.drift_statistic(cusum_fixture, 0, cfg)
    assert S == pytest.approx([0.0, 0.05, 0.20], abs=1e-12)
    assert K.drift_horizon(cusum_fixture, 0, cfg) == (3, False)


def test_drift_constant_row_never_triggers():
    m = AccuracyMatrix([str(i) for i in range(8)], np.full((8, 8), 0.7))
    for eps in (0.0, 0.02, 0.3):
        assert K.drift_statistic(m, 0, MetricConfig(epsilon=eps)) == [0.0] * 6
    assert K.drift_horizon(m, 0, MetricConfig(max_horizon=6)) == (7, True)


def test_drift_eps_zero_is_prefix_sum():
    row = [0.9, 0.85, 0.95, 0.7, 0.9]
    m = _row_matrix(row)
    devs = [abs(v - row[0]) for v in row[1:]]
    expected = list(np.cumsum(devs))
    assert K.drift_statistic(m, 0, MetricConfig(epsilon=0.0)) == pytest.approx(expected, abs=1e-15)


def test_drift_absent_cell_carries_over():
    m = _row_matrix([0.8, 0.6, None, 0.6])
    S = K.drift_statistic(m, 0, MetricConfig(epsilon=0.0))
    assert S[1] == S[0]
    assert len(S) == 3


def test_drift_requires_diagonal():
    m = AccuracyMatrix.from_cells("ab", {(0, 1): 0.5})
    with pytest.raises(K.PreconditionError):
        K.drift_statistic(m, 0)
    with pytest.raises(K.PreconditionError):
        K.drift_horizon(m, 0)


def test_drift_threshold_is_strict():
    # S_1 == lambda exactly must not trigger
    m = _row_matrix([0.5, 0.25])
    assert K.drift_horizon(m, 0, MetricConfig(epsilon=0.0, lambda_=0.25)) == (7, True)


# -- TAS ---------------------------------------------------------------------


def test_tas_reference_arithmetic():
    m = AccuracyMatrix.from_cells("abc", {(0, 0): 0.95, (0, 1): 0.8, (0, 2): 0.7, (1, 1): 0.9, (2, 2): 0.8})
    ood, ident, tas = K.temporal_adaptation_score(m, 0, MetricConfig(tas_window=2))
    assert ood == pytest.approx(0.75, abs=1e-15)
    assert ident == pytest.approx(0.85, abs=1e-15)
    assert tas == pytest.approx(0.75 / 0.85, abs=1e-15)
    assert tas == pytest.approx(0.88235, abs=5e-6)


def test_tas_perfect_transfer_is_one():
    n = 6
    diag = np.linspace(0.9, 0.5, n)
    values = np.tile(diag, (n, 1))
    m = AccuracyMatrix([str(i) for i in range(n)], values)
    for t in range(n - 1):
        assert K.temporal_adaptation_score(m, t, MetricConfig(tas_window=3))[2] == 1.0


def test_tas_clipped_when_ood_beats_oracle():
    m = AccuracyMatrix.from_cells("abc", {(0, 0): 0.9, (0, 1): 0.8, (0, 2): 0.7, (1, 1): 0.6, (2, 2): 0.5})
    ood, ident, tas = K.temporal_adaptation_score(m, 0, MetricConfig(tas_window=2))
    assert ood > ident
    assert tas == 1.0
    _, _, raw = K.temporal_adaptation_score(m, 0, MetricConfig(tas_window=2, clip_ttr=False))
    assert raw == ood / ident


def test_tas_pairs_offsets():
    # k=1 has OOD but no oracle; k=2 has both; only k=2 enters either average
    m = AccuracyMatrix.from_cells("abc", {(0, 0): 0.9, (0, 1): 0.1, (0, 2): 0.6, (2, 2): 0.8})
    ood, ident, tas = K.temporal_adaptation_score(m, 0, MetricConfig(tas_window=2))
    assert (ood, ident) == (0.6, 0.8)
    assert tas == 0.6 / 0.8


def test_tas_window_truncated_at_axis_end():
    m = AccuracyMatrix.from_cells("ab", {(0, 0): 0.9, (0, 1): 0.45, (1, 1): 0.9})
    assert K.temporal_adaptation_score(m, 0, MetricConfig(tas_window=6)) == (0.45, 0.9, 0.5)


def test_tas_errors():
    m = AccuracyMatrix.from_cells("abc", {(0, 0): 0.9, (0, 1): 0.5, (1, 1): 0.0, (2, 2): 0.4})
    with pytest.raises(K.PreconditionError, match="zero"):
        K.temporal_adaptation_score(m, 0, MetricConfig(tas_window=1))
    with pytest.raises(K.PreconditionError, match="no offset"):
        K.temporal_adaptation_score(m, 2)


def test_tas_per_term_mode():
    m = AccuracyMatrix.from_cells("abc", {(0, 0): 0.9, (0, 1): 0.8, (0, 2): 0.4, (1, 1): 0.6, (2, 2): 0.8})
    _, _, tas = K.temporal_adaptation_score(m, 0, MetricConfig(tas_window=2, tas_mode="per-term"))
    assert tas == (1.0 + 0.4 / 0.8) / 2


# -- evaluate_model ----------------------------------------------------------


def test_evaluate_model_lists_skipped_train_times():
    cells = {(0, 0): 0.9, (0, 1): 0.8, (0, 2): 0.7, (1, 2): 0.5, (2, 2): 0.8}
    m = AccuracyMatrix.from_cells("abc", cells, "toy")
    report = K.evaluate_model(m)
    assert report.labels == ["a"]
    reasons = dict(report.skipped)
    assert set(reasons) == {"b", "c"}
    assert "A(t,t) absent" in reasons["b"]
    assert "no paired future cell" in reasons["c"]


def test_evaluate_model_single_row_aggregates():
    m = AccuracyMatrix.from_cells("ab", {(0, 0): 0.9, (0, 1): 0.45, (1, 1): 0.9})
    report = K.evaluate_model(m)
    assert len(report.records) == 1
    r = report.records[0]
    assert report.tas_mean == r.tas == 0.5
    assert report.sh_mean == r.sh
    assert report.dh_mean == r.dh
    assert report.id_avg == 0.9
    assert report.ood_avg == report.ood_min == 0.45


def test_evaluate_model_no_evaluable_train_time():
    m = AccuracyMatrix.from_cells("ab", {(0, 0): 0.9, (1, 1): 0.9})
    with pytest.raises(K.NotEvaluableError):
        K.evaluate_model(m)


def test_batch_results_match_single_row_calls():
    rng = np.random.default_rng(5)
    values = rng.uniform(0.2, 1.0, (12, 12))
    values[rng.random((12, 12)) < 0.2] = np.nan
    np.fill_diagonal(values, rng.uniform(0.5, 1.0, 12))
    m = AccuracyMatrix([str(i) for i in range(12)], values)
    cfg = MetricConfig(max_horizon=4, tas_window=3)
    g = K.compute_ttr(m, cfg)
    sh = K.stability_horizons(g, cfg)
    dh = K.drift_horizons(m, cfg)
    tas = K.adaptation_scores(m, cfg)
    for t in range(12):
        assert (sh.per_train_time[t], sh.truncated[t]) == K.stability_horizon(g, t, cfg)
        assert (dh.per_train_time[t], dh.truncated[t]) == K.drift_horizon(m, t, cfg)
        if t in tas.per_train_time:
            assert tas.per_train_time[t] == K.temporal_adaptation_score(m, t, cfg)
    assert sh.mean == math.fsum(sh.per_train_time.values()) / 12
    assert tas.min_tas == min(v[2] for v in tas.per_train_time.values())


@pytest.mark.parametrize(
    "kwargs",
    [
        {"delta": 1.5},
        {"delta": -0.1},
        {"epsilon": -0.01},
        {"lambda_": 0.0},
        {"max_horizon": 0},
        {"tas_window": 0},
        {"max_horizon": 2.5},
        {"sh_mode": "first"},
        {"tas_mode": "mean"},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        MetricConfig(**kwargs)


def test_config_dict_roundtrip():
    cfg = MetricConfig(delta=0.9, lambda_=0.2, sh_mode="literal-max")
    d = cfg.to_dict()
    assert d["lambda"] == 0.2
    assert MetricConfig.from_dict(d) == cfg
    with pytest.raises(ConfigError, match="unknown"):
        MetricConfig.from_dict({"gamma": 1})
