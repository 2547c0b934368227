import logging
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from luxfuse.detection import Detection, DetectionLogRow, write_detection_log
from luxfuse.evaluation import (
    COLOR_LABELS,
    Trial,
    TrialManifestRow,
    TrialStats,
    aggregate_by_color,
    aggregate_by_fusion_category,
    delta_report,
    heatmap_rows,
    load_trials,
    model_stats,
    quintile_tiers,
    read_trial_manifest,
    round_half_away,
    sem,
    std,
    trial_mean,
    write_trial_manifest,
)
from luxfuse.illumination import IlluminationCategory

FULL = IlluminationCategory.FULL_LIGHT
DIM = IlluminationCategory.DIM_LIGHT
NO = IlluminationCategory.NO_LIGHT


def trial(trial_id="t", model="m", category=DIM, color="white", confidences=(0.9,)):
    return Trial(
        trial_id=trial_id,
        model_id=model,
        category=category,
        color_label=color,
        confidences=tuple(confidences),
        held_out=color in ("teal", "yellow"),
    )


class TestTrialMean:
    def test_arithmetic_mean(self):
        assert trial_mean(trial(confidences=[0.9, 0.95, 1.0])) == pytest.approx(0.95)

    def test_singleton(self):
        assert trial_mean(trial(confidences=[0.42])) == 0.42

    def test_thousand_identical_frames_exact(self):
        t = trial(confidences=[0.9283] * 1000)
        assert trial_mean(t) == pytest.approx(0.9283, abs=1e-12)

    def test_empty_trial_rejected(self):
        with pytest.raises(ValueError, match="no detected frames"):
            trial_mean(trial(confidences=[]))

    def test_permutation_invariant(self, rng):
        values = [float(v) for v in rng.uniform(0, 1, size=20)]
        shuffled = list(values)
        rng.shuffle(shuffled)
        assert trial_mean(trial(confidences=values)) == pytest.approx(
            trial_mean(trial(confidences=shuffled)), abs=1e-12
        )

    def test_held_out_flag_consistency_enforced(self):
        with pytest.raises(ValueError, match="held_out"):
            Trial("t", "m", DIM, "teal", (0.9,), held_out=False)
        with pytest.raises(ValueError, match="held_out"):
            Trial("t", "m", DIM, "white", (0.9,), held_out=True)


class TestSem:
    def test_zero_std(self):
        assert sem(0.0, 5) == 0.0

    def test_back_derived_dim_sem(self):
        # std recovered from the reported +/-0.0200 at six trials
        sigma = 0.0200 * math.sqrt(6)
        assert sem(sigma, 6) == pytest.approx(0.0200, abs=5e-5)

    def test_exact_arithmetic(self):
        assert sem(1.0, 4) == 0.5

    def test_n_zero_rejected(self):
        with pytest.raises(ValueError, match="n >= 1"):
            sem(0.1, 0)

    @given(sigma=st.floats(0.0, 10.0), n=st.integers(1, 1000))
    def test_sem_times_sqrt_n_recovers_std(self, sigma, n):
        assert abs(sem(sigma, n) * math.sqrt(n) - sigma) < 1e-12

    def test_trial_stats_invariants(self):
        stats = TrialStats.from_values([0.9, 0.92, 0.94, 0.96, 0.9, 0.88])
        assert stats.n == 6
        assert abs(stats.sem * math.sqrt(6) - stats.std) < 1e-12
        assert min([0.9, 0.92, 0.94, 0.96, 0.9, 0.88]) <= stats.mean <= 0.96


class TestRounding:
    @pytest.mark.parametrize(
        "value, expected",
        [(70.975, 70.98), (70.984, 70.98), (70.985, 70.99), (-1.005, -1.01), (2.0, 2.0)],
    )
    def test_round_half_away(self, value, expected):
        assert round_half_away(value, 2) == expected


class TestAggregateByColor:
    def test_uniform_white_trials_report_exact_percent(self):
        trials = [
            trial(trial_id=f"t{i}", model=f"m{i}", color="white", confidences=[0.7098])
            for i in range(5)
        ]
        rows = aggregate_by_color(trials)
        assert rows[0].color == "white"
        assert rows[0].percent == 70.98

    def test_singleton_color(self):
        rows = aggregate_by_color([trial(color="orange", confidences=[0.64, 0.66])])
        assert len(rows) == 1
        assert rows[0].mean == pytest.approx(0.65)

    def test_identical_means_fall_back_to_label_order(self):
        trials = [
            trial(trial_id=f"t-{c}", color=c, confidences=[0.5]) for c in COLOR_LABELS
        ]
        rows = aggregate_by_color(trials)
        assert [r.color for r in rows] == sorted(COLOR_LABELS)

    def test_held_out_colors_included_by_default(self):
        trials = [
            trial(trial_id="t1", color="white", confidences=[0.8]),
            trial(trial_id="t2", color="teal", confidences=[0.7]),
            trial(trial_id="t3", color="yellow", confidences=[0.6]),
        ]
        rows = aggregate_by_color(trials)
        assert {r.color for r in rows} == {"white", "teal", "yellow"}

    def test_missing_color_warns(self, caplog):
        with caplog.at_level(logging.WARNING):
            aggregate_by_color([trial(color="white")])
        assert any("teal" in rec.message for rec in caplog.records)

    def test_unweighted_mean_of_trial_means(self):
        # A long mediocre trial must not outweigh a short good one.
        trials = [
            trial(trial_id="t1", model="a", color="blue", confidences=[0.9]),
            trial(trial_id="t2", model="b", color="blue", confidences=[0.5] * 100),
        ]
        rows = aggregate_by_color(trials)
        assert rows[0].mean == pytest.approx(0.7)


class TestAggregateByFusionCategory:
    def test_zero_variance_cell(self):
        trials = [
            trial(trial_id=f"t{i}", model="m90", color=c, confidences=[0.9203])
            for i, c in enumerate(COLOR_LABELS)
        ]
        cells = aggregate_by_fusion_category(trials, {"m90": 90})
        cell = cells[(90, DIM)]
        assert cell.mean == pytest.approx(0.9203, abs=1e-12)
        assert cell.std == 0.0
        assert cell.sem == 0.0
        assert cell.n_trials == 6

    def test_no_light_sem_reproduced(self):
        # Six trial means engineered to a population std of 0.0950.
        base = [0.62, 0.66, 0.70, 0.72, 0.76, 0.80]
        mean = sum(base) / 6
        current = std(base)
        target = 0.0950
        values = [mean + (v - mean) * target / current for v in base]
        trials = [
            trial(trial_id=f"t{i}", model="m40", category=NO, color=c, confidences=[values[i]])
            for i, c in enumerate(COLOR_LABELS)
        ]
        cells = aggregate_by_fusion_category(trials, {"m40": 40})
        assert cells[(40, NO)].sem == pytest.approx(0.0388, abs=1e-4)

    def test_singleton_cell(self):
        cells = aggregate_by_fusion_category([trial(confidences=[0.77])], {"m": 50})
        cell = cells[(50, DIM)]
        assert cell.mean == 0.77 and cell.std == 0.0 and cell.n_trials == 1

    def test_undetected_trials_counted_in_coverage_only(self):
        trials = [
            trial(trial_id="t1", confidences=[0.8]),
            trial(trial_id="t2", color="black", confidences=[]),
        ]
        cells = aggregate_by_fusion_category(trials, {"m": 50})
        cell = cells[(50, DIM)]
        assert cell.n_trials == 1 and cell.n_total == 2
        assert cell.mean == 0.8

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError, match="no detected trials"):
            aggregate_by_fusion_category([trial(confidences=[])], {"m": 50})


class TestDeltaReport:
    def test_dim_90_vs_80(self):
        d = delta_report(0.9203, 0.9000)
        assert d.absolute == pytest.approx(0.0203, abs=0.005)
        assert d.relative_pct == pytest.approx(2.26, abs=0.05)

    def test_dim_90_vs_70(self):
        d = delta_report(0.9203, 0.8543)
        assert d.absolute == pytest.approx(0.0660, abs=0.005)
        assert d.relative_pct == pytest.approx(7.73, abs=0.05)

    def test_self_comparison(self):
        d = delta_report(0.5, 0.5)
        assert d.absolute == 0.0 and d.relative_pct == 0.0

    def test_zero_reference_has_undefined_relative(self):
        d = delta_report(0.5, 0.0)
        assert d.absolute == 0.5 and d.relative_pct is None

    @given(a=st.floats(0.0, 1.0), b=st.floats(0.01, 1.0))
    def test_antisymmetric_absolute(self, a, b):
        assert delta_report(a, b).absolute == -delta_report(b, a).absolute


class TestQuintiles:
    def test_uniform_values_share_a_tier(self):
        assert quintile_tiers([0.5] * 12) == [1] * 12

    def test_25_distinct_values_split_exactly(self):
        values = [i / 25 for i in range(25)]
        tiers = quintile_tiers(values)
        assert [tiers.count(q) for q in (1, 2, 3, 4, 5)] == [5, 5, 5, 5, 5]
        assert tiers == sorted(tiers)

    def test_higher_value_never_lower_tier(self, rng):
        values = [float(v) for v in rng.uniform(0, 1, size=30)]
        tiers = dict(zip(values, quintile_tiers(values)))
        ordered = sorted(values)
        for a, b in zip(ordered, ordered[1:]):
            assert tiers[a] <= tiers[b]

    def test_empty(self):
        assert quintile_tiers([]) == []


class TestHeatmap:
    def test_rows_cover_grid_with_per_panel_quintiles(self):
        trials = [
            trial(trial_id=f"d-{c}", model="m90", color=c, confidences=[0.9 + i * 0.001])
            for i, c in enumerate(COLOR_LABELS)
        ] + [
            trial(trial_id=f"n-{c}", model="m40", category=NO, color=c, confidences=[0.7 - i * 0.01])
            for i, c in enumerate(COLOR_LABELS)
        ]
        rows = heatmap_rows(trials, {"m90": 90, "m40": 40})
        assert len(rows) == 12
        for row in rows:
            assert 1 <= row.quintile <= 5
        dim_rows = [r for r in rows if r.category is DIM]
        assert {r.color for r in dim_rows} == set(COLOR_LABELS)

    def test_missing_cell_omitted_with_warning(self, caplog):
        trials = [
            trial(trial_id="t1", confidences=[0.9]),
            trial(trial_id="t2", color="black", confidences=[]),
        ]
        with caplog.at_level(logging.WARNING):
            rows = heatmap_rows(trials, {"m": 50})
        assert len(rows) == 1
        assert any("t2" in rec.message for rec in caplog.records)


class TestManifestAndLogs:
    def test_manifest_round_trip(self, tmp_path):
        rows = [
            TrialManifestRow("t1", "m90", DIM, "white", False),
            TrialManifestRow("t2", "m90", DIM, "teal", True),
        ]
        path = tmp_path / "manifest.csv"
        write_trial_manifest(rows, path)
        assert read_trial_manifest(path) == rows

    def test_load_trials_joins_logs(self, tmp_path):
        logs = tmp_path / "logs"
        logs.mkdir()
        rows = [
            DetectionLogRow("f0", 0, "m90", Detection(0, 0.9, (0.5, 0.5, 0.1, 0.1))),
            DetectionLogRow("f1", 100, "m90", None),
            DetectionLogRow(
                "f2", 200, "m90", Detection(0, 0.1, (0.5, 0.5, 0.1, 0.1)),
                excluded=True, exclusion_rule="confidence_floor",
            ),
            DetectionLogRow("f3", 300, "m90", Detection(0, 0.8, (0.5, 0.5, 0.1, 0.1))),
        ]
        write_detection_log(rows, logs / "t1.csv")
        write_trial_manifest([TrialManifestRow("t1", "m90", DIM, "white", False)],
                             tmp_path / "manifest.csv")
        trials = load_trials(logs, tmp_path / "manifest.csv")
        assert len(trials) == 1
        # Excluded and empty frames do not contribute confidences.
        assert trials[0].confidences == (0.9, 0.8)

    def test_missing_log_is_an_error(self, tmp_path):
        (tmp_path / "logs").mkdir()
        write_trial_manifest([TrialManifestRow("t1", "m", DIM, "white", False)],
                             tmp_path / "manifest.csv")
        with pytest.raises(FileNotFoundError, match="t1"):
            load_trials(tmp_path / "logs", tmp_path / "manifest.csv")


class TestBruteForceEquivalence:
    """Statistics must match straight-line recomputation on small instances."""

    @given(
        data=st.lists(
            st.lists(st.integers(0, 1000).map(lambda v: v / 1000.0), min_size=1, max_size=10),
            min_size=1,
            max_size=5,
        )
    )
    @settings(max_examples=120)
    def test_against_straight_line_oracle(self, data):
        trials = [
            trial(trial_id=f"t{i}", model="m", color="white", confidences=values)
            for i, values in enumerate(data)
        ]
        # trial means
        for t, values in zip(trials, data):
            expected = sum(values) / len(values)
            assert abs(trial_mean(t) - expected) < 1e-12
        # per-model mean/std across trial means
        stats = model_stats(trials)
        means = [sum(v) / len(v) for v in data]
        grand = sum(means) / len(means)
        variance = sum((m - grand) ** 2 for m in means) / len(means)
        assert abs(stats["m"][0] - grand) < 1e-12
        assert abs(stats["m"][1] - math.sqrt(variance)) < 1e-12
        # cell aggregation agrees too
        cells = aggregate_by_fusion_category(trials, {"m": 50})
        cell = cells[(50, DIM)]
        assert abs(cell.mean - grand) < 1e-12
        assert abs(cell.sem - math.sqrt(variance) / math.sqrt(len(means))) < 1e-12
