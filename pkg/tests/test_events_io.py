import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evlife.events_io import (EdgeImage, Event, EventFormatError, EventStream, PgmError, SensorGeometry,
                              load_events, parse_event_text, read_pgm, read_pgm_gray, save_events,
                              write_event_text, write_pgm)

G = SensorGeometry(128, 128)


def test_parse_single_line():
    s = parse_event_text("0.5 3 4 1\n", G)
    assert len(s) == 1
    assert s[0] == Event(0.5, 3, 4, True)


def test_parse_empty():
    assert len(parse_event_text("", G)) == 0


def test_parse_decreasing_timestamp():
    with pytest.raises(EventFormatError, match="decreasing timestamp at index 1"):
        parse_event_text("0.2 1 1 0\n0.1 1 1 0\n", G)


def test_parse_equal_timestamps_allowed():
    s = parse_event_text("0.1 1 1 0\n0.1 2 1 0\n", G)
    assert len(s) == 2


def test_parse_comments_and_blank_lines():
    s = parse_event_text("# header\n\n0.1 1 1 0\n   \n# x\n0.2 1 2 1\n", G)
    assert [e.t for e in s] == [0.1, 0.2]


@pytest.mark.parametrize("line", ["0.1 1 1", "0.1 1 1 2", "abc 1 1 0", "0.1 1.5 1 0", "0.1 1 1 0 9"])
def test_parse_malformed_reports_line(line):
    with pytest.raises(EventFormatError, match="line 2"):
        parse_event_text("0.0 0 0 0\n" + line + "\n", G)


def test_parse_out_of_bounds():
    with pytest.raises(EventFormatError, match="out of bounds"):
        parse_event_text("0.1 128 0 1\n", G)


def test_parse_negative_time():
    with pytest.raises(EventFormatError):
        parse_event_text("-0.1 1 1 1\n", G)


def test_write_single():
    s = EventStream.from_events(G, [Event(0.5, 3, 4, True)])
    assert write_event_text(s) == "0.5 3 4 1\n"


def test_write_empty():
    assert write_event_text(EventStream.empty(G)) == ""


events_strategy = st.lists(
    st.tuples(st.floats(0, 1e6, allow_nan=False, allow_infinity=False),
              st.integers(0, 15), st.integers(0, 9), st.booleans()),
    max_size=50,
)


@given(events_strategy)
def test_text_round_trip(raw):
    g = SensorGeometry(16, 10)
    raw = sorted(raw, key=lambda r: r[0])
    s = EventStream.from_events(g, [Event(*r) for r in raw])
    assert parse_event_text(write_event_text(s), g) == s


@settings(max_examples=200)
@given(st.binary(max_size=200))
def test_fuzz_parse_never_yields_invalid(data):
    g = SensorGeometry(8, 8)
    try:
        s = parse_event_text(data.decode("latin-1"), g)
    except EventFormatError:
        return
    assert np.all(np.diff(s.t) >= 0)
    assert np.all(np.isfinite(s.t)) and np.all(s.t >= 0)
    assert np.all(g.contains(s.x, s.y))


def test_stream_is_immutable():
    s = EventStream.from_events(G, [Event(0.5, 3, 4, True)])
    with pytest.raises(AttributeError):
        s.t = None
    with pytest.raises(ValueError):
        s.t[0] = 1.0


def test_file_round_trip(tmp_path):
    s = EventStream.from_events(G, [Event(0.1, 1, 2, False), Event(0.30000000000000004, 5, 6, True)])
    path = tmp_path / "ev.txt"
    save_events(path, s)
    assert load_events(path, G) == s


def test_geometry_parse():
    assert SensorGeometry.parse("128x64") == SensorGeometry(128, 64)
    with pytest.raises(ValueError):
        SensorGeometry.parse("128")
    with pytest.raises(ValueError):
        SensorGeometry(0, 5)


def test_edge_image_shape_checked():
    with pytest.raises(ValueError):
        EdgeImage(SensorGeometry(3, 2), np.zeros((3, 2), dtype=bool))


# ---------------------------------------------------------------- PGM

def test_pgm_p2_threshold():
    img = read_pgm(b"P2 2 1 255 255 0")
    assert img.mask.tolist() == [[True, False]]
    assert img.geometry == SensorGeometry(2, 1)


def test_pgm_threshold_at_127():
    img = read_pgm(b"P2\n3 1\n255\n127 128 0\n")
    assert img.mask.tolist() == [[False, True, False]]


def test_pgm_p5_and_comments():
    data = b"P5\n# comment\n2 2\n255\n" + bytes([0, 200, 255, 10])
    assert read_pgm(data).mask.tolist() == [[False, True], [True, False]]


def test_pgm_unsupported_maxval():
    with pytest.raises(PgmError, match="unsupported maxval"):
        read_pgm(b"P5\n1 1\n65535\n\x00\x00")


def test_pgm_unsupported_magic():
    with pytest.raises(PgmError):
        read_pgm(b"P6\n1 1\n255\n\x00\x00\x00")


def test_pgm_truncated():
    with pytest.raises(PgmError):
        read_pgm(b"P5\n2 2\n255\n\x00\x00")
    with pytest.raises(PgmError):
        read_pgm(b"P2 2 2 255 0 0 0")


def test_pgm_value_above_maxval():
    with pytest.raises(PgmError):
        read_pgm(b"P2 1 1 100 200")


def test_pgm_write_format():
    img = EdgeImage(SensorGeometry(2, 1), np.array([[True, False]]))
    data = write_pgm(img)
    assert data.startswith(b"P5\n2 1\n255\n")
    assert data.endswith(bytes([255, 0]))
    gray, maxval = read_pgm_gray(data)
    assert maxval == 255


@given(st.integers(1, 12), st.integers(1, 12), st.data())
def test_pgm_round_trip(w, h, data):
    bits = data.draw(st.lists(st.booleans(), min_size=w * h, max_size=w * h))
    img = EdgeImage(SensorGeometry(w, h), np.array(bits).reshape(h, w))
    assert read_pgm(write_pgm(img)) == img
