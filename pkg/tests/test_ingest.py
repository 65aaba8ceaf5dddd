from datetime import datetime

import numpy as np
import pytest

from segflow.ingest import (GeoPost, ValidationError,
                            assign_points_to_neighborhoods,
                            filter_active_customers, infer_home,
                            load_geometry, load_neighborhoods, load_purchases)

from conftest import make_table, purchase


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadNeighborhoods:
    def test_well_formed(self, tmp_path):
        path = write(tmp_path, "n.csv",
                     "neighborhood_id,lat,lon,population,ses\n"
                     "N2,40.0,-3.0,500,20\nN1,40.1,-3.1,600,30\nN3,40.2,-3.2,700,10\n")
        table = load_neighborhoods(path)
        assert table.n == 3
        assert table.ids == ["N1", "N2", "N3"]  # canonical sorted order
        assert table.population[table.index["N2"]] == 500

    def test_duplicate_id_names_offender(self, tmp_path):
        path = write(tmp_path, "n.csv",
                     "neighborhood_id,lat,lon,population,ses\n"
                     "N1,40.0,-3.0,500,20\nN1,40.1,-3.1,600,30\n")
        with pytest.raises(ValidationError, match="N1"):
            load_neighborhoods(path)

    def test_empty_file(self, tmp_path):
        path = write(tmp_path, "n.csv", "neighborhood_id,lat,lon,population,ses\n")
        with pytest.raises(ValidationError, match="no neighborhoods"):
            load_neighborhoods(path)

    def test_missing_field_reports_line(self, tmp_path):
        path = write(tmp_path, "n.csv",
                     "neighborhood_id,lat,lon,population,ses\n"
                     "N1,40.0,-3.0,500,20\nN2,40.1,-3.1,,30\n")
        with pytest.raises(ValidationError, match="line 3"):
            load_neighborhoods(path)

    def test_missing_column(self, tmp_path):
        path = write(tmp_path, "n.csv", "neighborhood_id,lat,lon,population\nN1,40,-3,5\n")
        with pytest.raises(ValidationError, match="ses"):
            load_neighborhoods(path)

    def test_coordinate_range(self, tmp_path):
        path = write(tmp_path, "n.csv",
                     "neighborhood_id,lat,lon,population,ses\nN1,95.0,-3.0,500,20\n")
        with pytest.raises(ValidationError, match="range"):
            load_neighborhoods(path)

    def test_reingest_byte_identical(self, tmp_path):
        path = write(tmp_path, "n.csv",
                     "neighborhood_id,lat,lon,population,ses\n"
                     "N2,40.123456789,-3.0,500,20.5\nN1,40.1,-3.1,600,30.25\n")
        t1 = load_neighborhoods(path)
        out1 = tmp_path / "norm1.csv"
        t1.write_csv(out1)
        t2 = load_neighborhoods(out1)
        out2 = tmp_path / "norm2.csv"
        t2.write_csv(out2)
        assert out1.read_bytes() == out2.read_bytes()


class TestLoadPurchases:
    def test_optional_columns(self, tmp_path):
        path = write(tmp_path, "p.csv",
                     "customer_id,store_id,timestamp,amount\n"
                     "C1,S1,2013-05-01T10:00:00,12.5\n")
        events = load_purchases(path)
        assert events[0].customer_home is None
        assert events[0].amount == 12.5

    def test_negative_amount(self, tmp_path):
        path = write(tmp_path, "p.csv",
                     "customer_id,store_id,timestamp,amount\n"
                     "C1,S1,2013-05-01T10:00:00,-1\n")
        with pytest.raises(ValidationError, match="negative amount"):
            load_purchases(path)

    def test_bad_timestamp_reports_line(self, tmp_path):
        path = write(tmp_path, "p.csv",
                     "customer_id,store_id,timestamp,amount\n"
                     "C1,S1,notatime,1\n")
        with pytest.raises(ValidationError, match="line 2"):
            load_purchases(path)


class TestFilterActiveCustomers:
    def test_nine_events_dropped(self):
        events = [purchase("C1", f"S{i}", "N00", "N01") for i in range(9)]
        assert filter_active_customers(events, 10) == []

    def test_ten_events_retained(self):
        events = [purchase("C1", f"S{i}", "N00", "N01") for i in range(10)]
        assert len(filter_active_customers(events, 10)) == 10

    def test_mixed_log_counted_by_hand(self):
        # 12 events for C1 plus 3 for C2: only C1's 12 survive at min_tx=10
        events = ([purchase("C1", f"S{i}", "N00", "N01") for i in range(12)]
                  + [purchase("C2", f"S{i}", "N01", "N00") for i in range(3)])
        kept = filter_active_customers(events, 10)
        assert len(kept) == 12
        assert {e.customer_id for e in kept} == {"C1"}

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        events = [purchase(f"C{rng.integers(6)}", f"S{i}", "N00", "N01")
                  for i in range(100)]
        once = filter_active_customers(events, 10)
        twice = filter_active_customers(once, 10)
        assert twice == once

    def test_min_tx_validated(self):
        with pytest.raises(ValueError):
            filter_active_customers([], 0)


def square(x0, y0, size=1.0):
    return np.array([[x0, y0], [x0 + size, y0], [x0 + size, y0 + size],
                     [x0, y0 + size], [x0, y0]])


def post(user, lon, lat, ts="2013-05-01T22:00:00"):
    return GeoPost(user_id=user, lat=lat, lon=lon,
                   timestamp=datetime.fromisoformat(ts))


class TestAssignPoints:
    geometry = {"A": [square(0.0, 0.0)], "B": [square(1.0, 0.0)]}

    def test_strictly_inside(self):
        localized, dropped = assign_points_to_neighborhoods(
            [post("u1", 0.5, 0.5)], self.geometry)
        assert localized == [("u1", "A", datetime.fromisoformat("2013-05-01T22:00:00"))]
        assert dropped == 0

    def test_outside_all_dropped(self):
        localized, dropped = assign_points_to_neighborhoods(
            [post("u1", 5.0, 5.0), post("u2", 0.2, 0.2)], self.geometry)
        assert dropped == 1
        assert len(localized) == 1

    def test_shared_border_goes_to_smaller_id(self):
        # the two unit squares share the x = 1 edge
        geometry = {"B": [square(1.0, 0.0)], "A": [square(0.0, 0.0)]}
        localized, dropped = assign_points_to_neighborhoods(
            [post("u1", 1.0, 0.5)], geometry)
        assert localized[0][1] == "A"
        assert dropped == 0

    def test_corner_point(self):
        localized, _ = assign_points_to_neighborhoods(
            [post("u1", 1.0, 1.0)], self.geometry)
        assert localized[0][1] == "A"

    def test_malformed_polygon(self, tmp_path):
        bad = tmp_path / "geom.json"
        bad.write_text('{"A": [[[0,0],[1,0],[0,0]]]}')
        with pytest.raises(ValidationError, match="A"):
            load_geometry(bad)

    def test_unclosed_ring(self, tmp_path):
        bad = tmp_path / "geom.json"
        bad.write_text('{"Z": [[[0,0],[1,0],[1,1],[0,1]]]}')
        with pytest.raises(ValidationError, match="not closed"):
            load_geometry(bad)


def localized(user, nid, hour):
    return (user, nid, datetime(2013, 5, 1, hour, 0, 0))


class TestInferHome:
    def test_majority_night_neighborhood(self):
        posts = [localized("u1", "A", 22)] * 5 + [localized("u1", "B", 23)] * 2
        homes, unassigned = infer_home(posts)
        assert homes == {"u1": "A"}
        assert unassigned == []

    def test_tie_broken_by_total_count(self):
        posts = ([localized("u1", "A", 21)] * 3 + [localized("u1", "B", 22)] * 3
                 + [localized("u1", "B", 12)] * 7 + [localized("u1", "A", 13)] * 1)
        # night tie 3-3; totals: B has 10, A has 4
        homes, _ = infer_home(posts)
        assert homes == {"u1": "B"}

    def test_full_tie_breaks_lexicographically(self):
        posts = [localized("u1", "B", 22), localized("u1", "A", 23)]
        homes, _ = infer_home(posts)
        assert homes == {"u1": "A"}

    def test_daytime_only_unassigned(self):
        posts = [localized("u1", "A", 12)] * 4
        homes, unassigned = infer_home(posts)
        assert homes == {}
        assert unassigned == ["u1"]

    def test_window_half_open(self):
        # 06:00 is day, 05:59 counts as night, 20:00 counts as night
        homes, unassigned = infer_home([("u1", "A", datetime(2013, 5, 1, 6, 0))])
        assert unassigned == ["u1"]
        homes, _ = infer_home([("u2", "A", datetime(2013, 5, 1, 5, 59)),
                               ("u2", "A", datetime(2013, 5, 1, 20, 0))])
        assert homes == {"u2": "A"}

    def test_non_wrapping_window(self):
        homes, _ = infer_home([("u1", "A", datetime(2013, 5, 1, 10, 0))],
                              night_start=9, night_end=11)
        assert homes == {"u1": "A"}


def test_home_assignment_referential_integrity(table4):
    geometry = {"N00": [square(0.0, 0.0)], "N01": [square(1.0, 0.0)]}
    posts = [post("u1", 0.4, 0.6), post("u1", 1.5, 0.5), post("u2", 1.2, 0.8)]
    loc, _ = assign_points_to_neighborhoods(posts, geometry)
    homes, _ = infer_home(loc)
    assert set(homes.values()) <= set(table4.ids)
