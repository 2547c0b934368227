import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from luxfuse.illumination import (
    IlluminationCategory,
    LuxReading,
    SwitchState,
    categorize,
    load_lux_trace,
    replay_switches,
    step,
    write_lux_trace,
)

FULL = IlluminationCategory.FULL_LIGHT
DIM = IlluminationCategory.DIM_LIGHT
NO = IlluminationCategory.NO_LIGHT

LUX = st.floats(min_value=0.0, max_value=1e6, allow_nan=False)


class TestCategorize:
    @pytest.mark.parametrize(
        "lux, expected",
        [
            (1500.0, FULL),
            (1000.01, FULL),
            (1000.0, DIM),
            (10.0, DIM),
            (9.99, NO),
            (0.0, NO),
        ],
    )
    def test_boundaries(self, lux, expected):
        assert categorize(lux) is expected

    def test_negative_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            categorize(-1.0)

    @given(lux=LUX)
    def test_total_and_partitioning(self, lux):
        category = categorize(lux)
        memberships = [lux > 1000.0, 10.0 <= lux <= 1000.0, lux < 10.0]
        assert memberships.count(True) == 1
        assert [FULL, DIM, NO][memberships.index(True)] is category


class TestStep:
    def test_first_reading_initializes_with_event(self):
        state, event = step(SwitchState(), LuxReading(500.0, 10))
        assert state.current is DIM
        assert event is not None and event.old is None and event.new is DIM
        assert event.timestamp_ms == 10
        assert state.last_switch_ms == 10

    def test_crossing_emits_event(self):
        state = SwitchState(current=DIM)
        state, event = step(state, LuxReading(1200.0, 5))
        assert event is not None and (event.old, event.new) == (DIM, FULL)
        assert state.current is FULL

    def test_same_category_no_event(self):
        state = SwitchState(current=DIM)
        new_state, event = step(state, LuxReading(500.0, 5))
        assert event is None and new_state is state

    def test_hysteresis_holds_until_margin_cleared(self):
        state = SwitchState(current=DIM, hysteresis_margin=10.0)
        state, event = step(state, LuxReading(1005.0, 1))
        assert event is None and state.current is DIM
        state, event = step(state, LuxReading(1011.0, 2))
        assert event is not None and (event.old, event.new) == (DIM, FULL)

    def test_zero_margin_matches_pointwise_categorize(self):
        state = SwitchState(current=FULL)
        state, event = step(state, LuxReading(1000.0, 0))
        assert event is not None and state.current is DIM
        state, event = step(state, LuxReading(10.0, 1))
        assert event is None and state.current is DIM
        state, event = step(state, LuxReading(9.99, 2))
        assert event is not None and state.current is NO
        state, event = step(state, LuxReading(10.0, 3))
        assert event is not None and state.current is DIM

    def test_hysteresis_down_from_no_light(self):
        state = SwitchState(current=NO, hysteresis_margin=5.0)
        _, event = step(state, LuxReading(14.0, 0))
        assert event is None
        _, event = step(state, LuxReading(15.0, 1))
        assert event is not None and event.new is DIM

    def test_negative_margin_rejected(self):
        with pytest.raises(ValueError):
            SwitchState(hysteresis_margin=-1.0)


class TestReplayProperties:
    @given(values=st.lists(st.floats(min_value=10.0, max_value=1000.0), min_size=1, max_size=50))
    def test_single_category_sequence_only_initializes(self, values):
        readings = [LuxReading(v, i) for i, v in enumerate(values)]
        events = replay_switches(readings)
        assert len(events) == 1 and events[0].old is None

    @given(values=st.lists(LUX, min_size=1, max_size=60))
    @settings(max_examples=200)
    def test_zero_margin_event_count_matches_pointwise_changes(self, values):
        readings = [LuxReading(v, i) for i, v in enumerate(values)]
        events = replay_switches(readings)
        categories = [categorize(v) for v in values]
        changes = sum(1 for a, b in zip(categories, categories[1:]) if a is not b)
        assert len(events) == changes + 1

    @given(values=st.lists(LUX, min_size=1, max_size=60), margin=st.floats(0.0, 50.0))
    @settings(max_examples=200)
    def test_events_alternate_categories(self, values, margin):
        readings = [LuxReading(v, i) for i, v in enumerate(values)]
        events = replay_switches(readings, hysteresis_margin=margin)
        assert all(e.old is not e.new for e in events)
        for prev, cur in zip(events, events[1:]):
            assert prev.new is cur.old


def test_lux_trace_csv_round_trip(tmp_path):
    readings = [LuxReading(2000.0, 0), LuxReading(500.5, 100), LuxReading(5.0, 200)]
    path = tmp_path / "trace.csv"
    write_lux_trace(readings, path)
    assert load_lux_trace(path) == readings


def test_lux_trace_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time,value\n0,100\n")
    with pytest.raises(ValueError, match="timestamp_ms"):
        load_lux_trace(path)
