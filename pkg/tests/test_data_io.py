"""Dataset parsing, splitting, and artifact round trips."""

import io
import logging

import numpy as np
import pytest

import blockmf as bm
from blockmf.data_io import TRACE_HEADER, read_trace, write_trace


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestLoad:
    def test_ml100k_line(self, tmp_path):
        path = write(tmp_path, "u.data", "196\t242\t3\t881250949\n186\t302\t1\t891717742\n")
        d = bm.load(path, "ml-100k")
        assert d.n == 196 and d.m == 302
        assert (d.rows[0], d.cols[0], d.values[0]) == (195, 241, 3.0)
        assert (d.rows[1], d.cols[1], d.values[1]) == (185, 301, 1.0)

    def test_ml1m_separator(self, tmp_path):
        path = write(tmp_path, "ratings.dat", "1::1193::5::978300760\n2::661::3::978302109\n")
        d = bm.load(path, "ml-1m")
        assert (d.rows[0], d.cols[0], d.values[0]) == (0, 1192, 5.0)
        assert len(d) == 2

    def test_ml20m_skips_header(self, tmp_path):
        path = write(
            tmp_path, "ratings.csv",
            "userId,movieId,rating,timestamp\n1,296,5.0,1147880044\n1,306,3.5,1147868817\n",
        )
        d = bm.load(path, "ml-20m")
        assert len(d) == 2
        assert (d.rows[0], d.cols[0], d.values[0]) == (0, 295, 5.0)

    def test_jester_missing_marker(self, tmp_path):
        path = write(tmp_path, "jester.csv", "99,8.5,-9.66\n1.25,99,99\n")
        d = bm.load(path, "jester")
        assert d.n == 2 and d.m == 3
        got = set(zip(d.rows.tolist(), d.cols.tolist(), d.values.tolist()))
        assert got == {(0, 1, 8.5), (0, 2, -9.66), (1, 0, 1.25)}

    def test_csv_zero_based_with_shape(self, tmp_path):
        path = write(tmp_path, "d.csv", "# shape: 5 7\n0,2,4.5\n2,3,1.0\n")
        d = bm.load(path, "csv")
        assert (d.n, d.m) == (5, 7)
        assert (d.rows[0], d.cols[0], d.values[0]) == (0, 2, 4.5)

    def test_csv_defaults_to_max_index(self, tmp_path):
        path = write(tmp_path, "d.csv", "0,2,4.5\n2,3,1.0\n")
        d = bm.load(path, "csv")
        assert (d.n, d.m) == (3, 4)

    def test_blank_lines_and_comments_skipped(self, tmp_path):
        path = write(tmp_path, "d.csv", "# a comment\n\n0,0,1.0\n\n")
        assert len(bm.load(path, "csv")) == 1

    def test_unknown_format(self, tmp_path):
        path = write(tmp_path, "d.csv", "0,0,1.0\n")
        with pytest.raises(bm.DataError, match="unknown format"):
            bm.load(path, "netflix")

    def test_too_few_fields_names_line(self, tmp_path):
        path = write(tmp_path, "d.csv", "0,0,1.0\n1,2\n")
        with pytest.raises(bm.DataError, match=r"d\.csv:2: expected at least 3 fields"):
            bm.load(path, "csv")

    def test_non_numeric_field_names_line(self, tmp_path):
        path = write(tmp_path, "u.data", "196\t242\tthree\t881250949\n")
        with pytest.raises(bm.DataError, match=r"u\.data:1"):
            bm.load(path, "ml-100k")

    def test_empty_file(self, tmp_path):
        path = write(tmp_path, "d.csv", "")
        with pytest.raises(bm.DataError, match="empty"):
            bm.load(path, "csv")

    def test_out_of_scale_values_kept_with_warning(self, tmp_path, caplog):
        path = write(tmp_path, "u.data", "1\t1\t9\t0\n1\t2\t3\t0\n")
        with caplog.at_level(logging.WARNING, logger="blockmf.data_io"):
            d = bm.load(path, "ml-100k")
        assert 9.0 in d.values
        assert "outside the usual" in caplog.text

    def test_duplicate_entries_rejected(self, tmp_path):
        path = write(tmp_path, "d.csv", "0,0,1.0\n0,0,2.0\n")
        with pytest.raises(bm.DataError, match="duplicate"):
            bm.load(path, "csv")


class TestSaveDataset:
    def test_round_trip_preserves_trailing_empty_dims(self, tmp_path):
        d = bm.RatingsDataset.from_triples(5, 7, [(0, 2, 4.5), (2, 3, -1.25)])
        buf = io.StringIO()
        bm.save_dataset(d, buf)
        path = write(tmp_path, "d.csv", buf.getvalue())
        back = bm.load(path, "csv")
        assert (back.n, back.m) == (5, 7)
        assert np.array_equal(back.rows, d.rows)
        assert np.array_equal(back.cols, d.cols)
        assert np.array_equal(back.values, d.values)

    def test_shape_comment_first_line(self):
        d = bm.RatingsDataset.from_triples(2, 2, [(0, 0, 1.0)])
        buf = io.StringIO()
        bm.save_dataset(d, buf)
        assert buf.getvalue().splitlines()[0] == "# shape: 2 2"


class TestGenSynthetic:
    def test_deterministic(self):
        spec = bm.SyntheticSpec(8, 6, 1, 30, seed=3)
        a, b = bm.gen_synthetic(spec), bm.gen_synthetic(spec)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.rows, b.rows)

    def test_full_density_covers_every_cell_row_major(self):
        d = bm.gen_synthetic(bm.SyntheticSpec(3, 4, 0, 9, seed=0))
        assert len(d) == 12
        assert np.array_equal(d.rows, np.repeat(np.arange(3), 4))
        assert np.array_equal(d.cols, np.tile(np.arange(4), 3))

    def test_values_within_bounds_inclusive(self):
        d = bm.gen_synthetic(bm.SyntheticSpec(20, 20, 1, 5, seed=1))
        assert d.values.min() >= 1.0 and d.values.max() <= 5.0
        assert set(np.unique(d.values)) == {1.0, 2.0, 3.0, 4.0, 5.0}

    def test_density_subsamples_without_replacement(self):
        d = bm.gen_synthetic(bm.SyntheticSpec(10, 10, 1, 9, seed=2, density=0.3))
        assert len(d) == 30
        flat = d.rows * 10 + d.cols
        assert len(np.unique(flat)) == 30
        assert np.array_equal(flat, np.sort(flat))
        assert d.density_hint == pytest.approx(0.3)

    def test_rejects_bad_spec(self):
        with pytest.raises(ValueError, match="density"):
            bm.SyntheticSpec(4, 4, 1, 9, seed=0, density=0.0)
        with pytest.raises(ValueError, match="low"):
            bm.SyntheticSpec(4, 4, 9, 1, seed=0)
        with pytest.raises(ValueError, match="dimensions"):
            bm.SyntheticSpec(0, 4, 1, 9, seed=0)


class TestSplit:
    def test_disjoint_union(self, dense32):
        train, test = bm.split(dense32, 0.2, seed=5)
        def keys(d):
            return set(zip(d.rows.tolist(), d.cols.tolist(), d.values.tolist()))
        assert len(test) == round(len(dense32) * 0.2)
        assert len(train) + len(test) == len(dense32)
        assert keys(train) | keys(test) == keys(dense32)
        assert not keys(train) & keys(test)

    def test_keeps_global_dimensions(self, dense32):
        train, test = bm.split(dense32, 0.5, seed=0)
        assert (train.n, train.m) == (test.n, test.m) == (32, 32)

    def test_deterministic(self, dense32):
        a = bm.split(dense32, 0.2, seed=5)
        b = bm.split(dense32, 0.2, seed=5)
        assert np.array_equal(a[1].rows, b[1].rows)
        assert not np.array_equal(
            a[1].rows, bm.split(dense32, 0.2, seed=6)[1].rows
        )

    def test_rejects_degenerate_fraction(self, dense32):
        for bad in (0.0, 1.0, -0.1):
            with pytest.raises(ValueError, match="test_fraction"):
                bm.split(dense32, bad, seed=0)


class TestModelPersistence:
    def test_round_trip_bit_exact(self, tmp_path):
        model = bm.init_factors(7, 5, 3, seed=11)
        # exercise repr round-tripping on non-terminating binary fractions
        model.u[0, 0] = 0.1 + 0.2
        path = tmp_path / "model.txt"
        with open(path, "w") as f:
            bm.save_model(model, f)
        back = bm.load_model(str(path))
        assert np.array_equal(back.u, model.u)
        assert np.array_equal(back.v, model.v)

    def test_header_shape(self, tmp_path):
        model = bm.init_factors(4, 6, 2, seed=0)
        path = tmp_path / "model.txt"
        with open(path, "w") as f:
            bm.save_model(model, f)
        assert path.read_text().splitlines()[0] == "4 6 2"

    def test_malformed_header(self, tmp_path):
        path = write(tmp_path, "model.txt", "4 6\n")
        with pytest.raises(bm.DataError, match="header"):
            bm.load_model(path)

    def test_non_integer_header(self, tmp_path):
        path = write(tmp_path, "model.txt", "4 six 2\n")
        with pytest.raises(bm.DataError, match="header"):
            bm.load_model(path)

    def test_missing_rows(self, tmp_path):
        path = write(tmp_path, "model.txt", "2 2 1\n0.5\n0.5\n0.5\n")
        with pytest.raises(bm.DataError, match="expected 4 factor rows"):
            bm.load_model(path)

    def test_ragged_row(self, tmp_path):
        path = write(tmp_path, "model.txt", "1 1 2\n0.5 0.5\n0.5\n")
        with pytest.raises(bm.DataError, match="expected 2"):
            bm.load_model(path)


class TestTracePersistence:
    def trace(self):
        t = bm.ConvergenceTrace()
        t.append(bm.TraceStep(1, 3.5, 3.75, 0.011, 1))
        t.append(bm.TraceStep(2, 0.1 + 0.2, None, 0.012, 4))
        return t

    def test_round_trip(self, tmp_path):
        buf = io.StringIO()
        write_trace(self.trace(), buf, {"alpha": 0.0001, "variant": "bgmf"})
        path = write(tmp_path, "trace.csv", buf.getvalue())
        config, back = read_trace(path)
        assert config == {"alpha": "0.0001", "variant": "bgmf"}
        assert len(back) == 2
        assert back.steps[0].test_rmse == 3.75
        assert back.steps[1].test_rmse is None
        assert back.steps[1].train_rmse == 0.1 + 0.2  # repr round-trips exactly
        assert back.steps[1].inner_iters == 4

    def test_header_and_empty_test_field(self):
        buf = io.StringIO()
        write_trace(self.trace(), buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == TRACE_HEADER
        assert lines[2].split(",")[2] == ""

    def test_wrong_field_count(self, tmp_path):
        path = write(tmp_path, "trace.csv", TRACE_HEADER + "\n1,2.0,,0.1\n")
        with pytest.raises(bm.DataError, match="expected 5 fields"):
            read_trace(path)

    def test_non_numeric_field_names_line(self, tmp_path):
        path = write(tmp_path, "trace.csv", TRACE_HEADER + "\n1,fast,,0.1,1\n")
        with pytest.raises(bm.DataError, match=r"trace\.csv:2"):
            read_trace(path)
