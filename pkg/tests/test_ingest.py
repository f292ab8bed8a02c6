import json
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from maintseg.core import EventRecord
from maintseg.ingest import (
    CodeGroupingConfig,
    ConfigurationError,
    FailureMark,
    FeatureRecipe,
    LogFormat,
    ParseQualityError,
    build_cycles,
    build_features,
    dataset_stats,
    default_grouping,
    load_cycle,
    load_cycles,
    parse_event_log,
    remove_infected,
    resample,
    save_cycle,
)

from conftest import make_cycle

UTC = timezone.utc
T0 = datetime(2019, 3, 1, tzinfo=UTC)


def rec(hours, code="6000", atm="atm1", lc=0):
    return EventRecord(atm, lc, T0 + timedelta(hours=hours), code)


class TestParseEventLog:
    def test_direct_field_mapping(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text("timestamp,atm_id,lifecycle_id,event_code\n"
                        "2019-03-01T10:00:00Z,atm42,3,6001\n")
        result = parse_event_log(path)
        assert result.malformed_count == 0
        (r,) = result.records
        assert r.atm_id == "atm42"
        assert r.lifecycle_id == 3
        assert r.event_code == "6001"
        assert r.timestamp == datetime(2019, 3, 1, 10, tzinfo=UTC)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text("timestamp,atm_id,lifecycle_id,event_code\n")
        result = parse_event_log(path)
        assert result.records == [] and result.malformed_count == 0

    def test_one_bad_row_of_100(self, tmp_path):
        rows = ["timestamp,atm_id,lifecycle_id,event_code"]
        rows += [(T0 + timedelta(minutes=k)).strftime("%Y-%m-%dT%H:%M:%SZ")
                 + ",atm1,0,6000" for k in range(99)]
        rows.insert(50, "not-a-timestamp,atm1,0,6000")
        path = tmp_path / "log.csv"
        path.write_text("\n".join(rows) + "\n")
        result = parse_event_log(path)
        assert len(result.records) == 99
        assert result.malformed_count == 1

    def test_parse_quality_gate(self, tmp_path):
        rows = ["timestamp,atm_id,lifecycle_id,event_code"]
        rows += ["2019-03-01T10:00:00Z,atm1,0,6000"] * 8
        rows += ["garbage,,x,"] * 2  # 2 of 10 malformed
        path = tmp_path / "log.csv"
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(ParseQualityError):
            parse_event_log(path)

    def test_unreadable_source(self, tmp_path):
        with pytest.raises(OSError):
            parse_event_log(tmp_path / "missing.csv")

    def test_records_sorted(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text("timestamp,atm_id,lifecycle_id,event_code\n"
                        "2019-03-02T00:00:00Z,b,0,6000\n"
                        "2019-03-01T00:00:00Z,a,1,6000\n"
                        "2019-03-01T00:00:00Z,a,0,6001\n")
        result = parse_event_log(path)
        keys = [(r.atm_id, r.lifecycle_id) for r in result.records]
        assert keys == [("a", 0), ("a", 1), ("b", 0)]

    def test_headerless_index_mapping(self, tmp_path):
        path = tmp_path / "log.tsv"
        path.write_text("2019-03-01T10:00:00Z\tatmX\t2\t6002\n")
        fmt = LogFormat(delimiter="\t", timestamp=0, atm_id=1, lifecycle_id=2,
                        event_code=3, has_header=False)
        (r,) = parse_event_log(path, fmt).records
        assert (r.atm_id, r.lifecycle_id, r.event_code) == ("atmX", 2, "6002")


class TestRemoveInfected:
    def test_zero_interval_is_identity(self):
        records = [rec(0), rec(5)]
        assert remove_infected(records, [FailureMark("atm1", T0)], 0.0) == records

    def test_day_membership(self):
        failure = FailureMark("atm1", T0 + timedelta(days=10))
        records = [rec(24 * 10.5), rec(24 * 11.5)]
        kept = remove_infected(records, [failure], 1.0)
        assert kept == [records[1]]

    def test_overlapping_intervals_union(self):
        failures = [FailureMark("atm1", T0 + timedelta(days=10)),
                    FailureMark("atm1", T0 + timedelta(days=10, hours=12))]
        records = [rec(24 * 10.2), rec(24 * 11.2), rec(24 * 11.8)]
        kept = remove_infected(records, failures, 1.0)
        assert kept == [records[2]]

    def test_other_machines_untouched(self):
        failure = FailureMark("atm1", T0)
        other = rec(1, atm="atm2")
        assert remove_infected([rec(1), other], [failure], 1.0) == [other]

    def test_idempotent(self):
        failures = [FailureMark("atm1", T0 + timedelta(days=2))]
        records = [rec(h) for h in range(0, 120, 7)]
        once = remove_infected(records, failures, 1.0)
        assert remove_infected(once, failures, 1.0) == once


class TestResample:
    def test_three_events_one_bucket(self):
        records = [rec(1, "6001"), rec(2, "6001"), rec(3, "6001")]
        counts = resample(records, 24.0, ["6000", "6001"])
        assert counts.shape == (1, 2)
        assert counts[0, 1] == 3

    def test_gap_day_is_explicit_zero_row(self):
        records = [rec(0), rec(50)]
        counts = resample(records, 24.0, ["6000"])
        assert counts.shape == (3, 1)
        assert counts[1, 0] == 0

    def test_hand_computed_fixture(self):
        # 10 events over ~58 hours -> 3 daily buckets
        events = [(0, "6000"), (5, "6001"), (23.98, "6000"),
                  (24, "6000"), (36, "6001"),
                  (49, "6000"), (50, "6001"), (51, "6001"), (52, "6000"), (58, "6000")]
        records = [rec(h, c) for h, c in events]
        counts = resample(records, 24.0, ["6000", "6001"])
        np.testing.assert_array_equal(counts, [[2, 1], [1, 1], [3, 2]])

    def test_conserves_events(self, rng):
        hours = rng.uniform(0, 24 * 30, size=200)
        codes = rng.choice(["6000", "6001", "6002"], size=200)
        records = [rec(float(h), c) for h, c in zip(hours, codes)]
        counts = resample(records, 24.0, ["6000", "6001", "6002"])
        assert counts.sum() == 200

    def test_mixed_cycles_rejected(self):
        with pytest.raises(ValueError):
            resample([rec(0), rec(1, lc=1)], 24.0, ["6000"])

    def test_unknown_code_rejected(self):
        with pytest.raises(ValueError):
            resample([rec(0, "9999")], 24.0, ["6000"])


class TestBuildFeatures:
    def grouping(self):
        return CodeGroupingConfig(
            codes={"6000": ("distribution", "OK"), "6001": ("distribution", "Error"),
                   "6002": ("distribution", "Warning")},
            features=(FeatureRecipe("ko", ("distribution",), ("Error",)),),
        )

    def test_plain_ratio(self):
        counts = np.array([[8, 4, 0]])  # 8 OK, 4 Error
        cycle = build_features(counts, ["6000", "6001", "6002"], self.grouping())
        assert cycle.samples[0, 0] == pytest.approx(0.5)

    def test_denominator_clamped_at_one(self):
        counts = np.array([[0, 3, 0]])
        cycle = build_features(counts, ["6000", "6001", "6002"], self.grouping())
        assert cycle.samples[0, 0] == pytest.approx(3.0)

    def test_all_zero_bucket(self):
        counts = np.zeros((1, 3), dtype=int)
        cycle = build_features(counts, ["6000", "6001", "6002"], self.grouping())
        assert cycle.samples[0, 0] == 0.0

    def test_missing_column_is_config_error(self):
        with pytest.raises(ConfigurationError):
            build_features(np.zeros((1, 1)), ["6000"], self.grouping())

    def test_scale_free_in_counts(self):
        counts = np.array([[8, 4, 2]])
        doubled = counts * 2
        universe = ["6000", "6001", "6002"]
        a = build_features(counts, universe, self.grouping()).samples
        b = build_features(doubled, universe, self.grouping()).samples
        np.testing.assert_allclose(a, b)

    def test_nonnegative_everywhere(self, rng):
        counts = rng.integers(0, 20, size=(30, 3))
        cycle = build_features(counts, ["6000", "6001", "6002"], self.grouping())
        assert np.all(cycle.samples >= 0)


class TestGroupingConfig:
    def test_default_grouping_shape(self):
        g = default_grouping()
        assert len(g.codes) == 15
        assert len(g.features) == 4
        assert g.codes["6000"] == ("distribution", "OK")
        assert g.codes["6001"] == ("distribution", "Error")
        assert g.codes["6002"] == ("distribution", "Warning")
        assert len(g.codes_in_group("withdrawal")) == 2
        # five storage boxes, OK + Error each
        k7 = [c for c, (grp, _) in g.codes.items() if grp.startswith("k7_")]
        assert len(k7) == 10

    def test_json_round_trip(self):
        g = default_grouping()
        assert CodeGroupingConfig.from_json(g.to_json()) == g

    def test_unknown_group_rejected(self):
        with pytest.raises(ConfigurationError):
            CodeGroupingConfig(
                codes={"6000": ("distribution", "OK")},
                features=(FeatureRecipe("x", ("nosuch",), ("Error",)),))

    def test_unknown_severity_rejected(self):
        with pytest.raises(ConfigurationError):
            CodeGroupingConfig(codes={"6000": ("distribution", "CRITICAL")}, features=())

    def test_recipe_without_matching_codes_rejected(self):
        with pytest.raises(ConfigurationError):
            CodeGroupingConfig(
                codes={"6000": ("distribution", "OK")},
                features=(FeatureRecipe("x", ("distribution",), ("Error",)),))


class TestDatasetStats:
    def test_single_30_day_cycle(self):
        cycle = make_cycle(np.zeros(30))
        stats = dataset_stats([cycle])
        assert stats.total_cycles == 1 and stats.total_atms == 1
        (g,) = stats.groups
        assert g.cycles_per_atm == 1 and g.median_days == pytest.approx(30.0)

    def test_two_groups(self):
        cycles = [make_cycle(np.zeros(10), atm_id="a", cycle_index=0)]
        cycles += [make_cycle(np.zeros(n), atm_id="b", cycle_index=i)
                   for i, n in enumerate((20, 30, 40))]
        stats = dataset_stats(cycles)
        assert stats.total_cycles == 4 and stats.total_atms == 2
        by_count = {g.cycles_per_atm: g for g in stats.groups}
        assert by_count[1].n_cycles == 1 and by_count[1].n_atms == 1
        assert by_count[3].n_cycles == 3 and by_count[3].n_atms == 1
        assert by_count[3].min_days == 20 and by_count[3].max_days == 40
        assert by_count[3].median_days == 30

    def test_withdrawal_means(self):
        cycles = [make_cycle(np.zeros(10), atm_id="a")]
        stats = dataset_stats(cycles, {("a", 0): 123.0})
        assert stats.groups[0].mean_daily_withdrawals == pytest.approx(123.0)


class TestCycleFiles:
    def test_round_trip(self, tmp_path):
        samples = np.array([[0.5, 1.25], [0.0, 3.0], [2.0, 0.1]])
        cycle = make_cycle(samples, atm_id="atm-We/ird", cycle_index=7, period=12.0)
        path = save_cycle(cycle, tmp_path)
        assert path.exists() and path.with_suffix(".json").exists()
        loaded = load_cycle(path)
        assert loaded.atm_id == "atm-We/ird"
        assert loaded.cycle_index == 7
        assert loaded.period == 12.0
        assert loaded.feature_names == cycle.feature_names
        np.testing.assert_array_equal(loaded.samples, samples)

    def test_sidecar_schema(self, tmp_path):
        path = save_cycle(make_cycle(np.zeros(3)), tmp_path)
        sidecar = json.loads(path.with_suffix(".json").read_text())
        assert set(sidecar) == {"atm_id", "cycle_index", "start_time",
                                "period_hours", "ended_in_failure"}

    def test_load_cycles_sorted(self, tmp_path):
        for atm, idx in (("b", 0), ("a", 1), ("a", 0)):
            save_cycle(make_cycle(np.zeros(2), atm_id=atm, cycle_index=idx), tmp_path)
        cycles = load_cycles(tmp_path)
        assert [c.key for c in cycles] == [("a", 0), ("a", 1), ("b", 0)]

    def test_empty_dir_rejected(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_cycles(tmp_path)


class TestBuildCycles:
    def test_pipeline_on_fixture_log(self):
        grouping = default_grouping()
        records = []
        # atm1 cycle 0: 5 days of one OK per day plus an error burst at the end
        for day in range(5):
            records.append(rec(24 * day, "6000"))
        records.append(rec(24 * 4 + 6, "6001"))
        # atm1 cycle 1 starts 12 hours after cycle 0's failure: first two events
        # fall inside the infected interval of the derived failure mark
        records.append(rec(24 * 4 + 18, "6000", lc=1))
        records.append(rec(24 * 5, "6000", lc=1))
        records.append(rec(24 * 7, "6000", lc=1))
        result = build_cycles(records, grouping, ii_days=1.0)
        assert [c.key for c in result.cycles] == [("atm1", 0), ("atm1", 1)]
        assert result.n_removed_infected == 2
        cycle0 = result.cycles[0]
        assert cycle0.n == 5
        assert cycle0.samples[4, 0] == pytest.approx(1.0)  # 1 error / 1 OK that day
        assert np.all(cycle0.samples[:4, 0] == 0.0)

    def test_infected_removal_can_disable(self):
        grouping = default_grouping()
        records = [rec(0, "6000"), rec(24, "6001"),
                   rec(25, "6000", lc=1), rec(49, "6000", lc=1)]
        with_ii = build_cycles(records, grouping, ii_days=1.0)
        without_ii = build_cycles(records, grouping, ii_days=0.0)
        assert with_ii.n_removed_infected == 1  # h25 sits inside [24, 48]
        assert without_ii.n_removed_infected == 0

    def test_irrelevant_codes_dropped_but_counted(self):
        grouping = default_grouping()
        records = [rec(0, "6000"), rec(1, "9999"), rec(30, "6001")]
        result = build_cycles(records, grouping, ii_days=0.0)
        assert result.n_codes_seen == 3
        (cycle,) = result.cycles
        assert cycle.n == 2
