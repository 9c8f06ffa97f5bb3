import numpy as np
import pytest

from sptucker.coo import (
    CooFormatError,
    SparseTensorCoo,
    generate_synthetic,
    load_coo,
    split,
    write_coo,
)
from sptucker.trainer import rmse


def write_text(path, text):
    path.write_text(text)
    return path


class TestLoadCoo:
    def test_two_line_file_base1(self, tmp_path):
        p = write_text(tmp_path / "t.tns", "1 1 1 5.0\n2 1 1 3.0\n")
        t = load_coo(p, index_base=1)
        assert t.order == 3
        assert t.dims == (2, 1, 1)
        assert list(t.entries()) == [((0, 0, 0), 5.0), ((1, 0, 0), 3.0)]

    def test_inconsistent_token_count(self, tmp_path):
        p = write_text(tmp_path / "t.tns", "1 1 1 5.0\n1 1 5.0\n")
        with pytest.raises(CooFormatError, match="line 2"):
            load_coo(p)

    def test_empty_file(self, tmp_path):
        p = write_text(tmp_path / "t.tns", "")
        with pytest.raises(CooFormatError, match="no entries"):
            load_coo(p)

    def test_comment_and_dims_header(self, tmp_path):
        p = write_text(tmp_path / "t.tns", "# dims: 5 6 7\n# a comment\n1 1 1 2.5\n")
        t = load_coo(p)
        assert t.dims == (5, 6, 7)

    def test_index_below_base(self, tmp_path):
        p = write_text(tmp_path / "t.tns", "0 1 1 5.0\n")
        with pytest.raises(CooFormatError, match="below base"):
            load_coo(p, index_base=1)

    def test_base0_read(self, tmp_path):
        p = write_text(tmp_path / "t.tns", "0 0 1 5.0\n")
        t = load_coo(p, index_base=0)
        assert list(t.entries()) == [((0, 0, 1), 5.0)]

    def test_non_finite_value(self, tmp_path):
        p = write_text(tmp_path / "t.tns", "1 1 1 nan\n")
        with pytest.raises(CooFormatError, match="non-finite"):
            load_coo(p)

    def test_dims_header_smaller_than_data_rejected(self, tmp_path):
        p = write_text(tmp_path / "t.tns", "# dims: 2 2 2\n3 1 1 5.0\n")
        with pytest.raises(ValueError, match="out of bounds"):
            load_coo(p)

    def test_unparseable_token(self, tmp_path):
        p = write_text(tmp_path / "t.tns", "1 x 1 5.0\n")
        with pytest.raises(CooFormatError, match="line 1"):
            load_coo(p)


class TestWriteCoo:
    def test_round_trip_two_entries(self, tmp_path):
        t = SparseTensorCoo((2, 1, 1), [[0, 0, 0], [1, 0, 0]], [5.0, 3.0])
        p = tmp_path / "t.tns"
        write_coo(t, p)
        back = load_coo(p)
        assert back.same_entries(t)

    def test_refuses_empty(self, tmp_path):
        t = SparseTensorCoo((2, 2), np.empty((0, 2), dtype=np.int64), np.empty(0))
        with pytest.raises(ValueError, match="no entries"):
            write_coo(t, tmp_path / "t.tns")

    def test_round_trip_random_tensors_exact(self, tmp_path):
        # property: load_coo . write_coo is the identity, values bit-exact
        rng = np.random.default_rng(0)
        for trial in range(20):
            order = int(rng.integers(2, 5))
            dims = tuple(int(rng.integers(1, 6)) for _ in range(order))
            nnz = int(rng.integers(1, 12))
            idx = np.stack([rng.integers(0, d, nnz) for d in dims], axis=1)
            vals = rng.standard_normal(nnz) * 10.0 ** rng.integers(-8, 8)
            t = SparseTensorCoo(dims, idx, vals)
            p = tmp_path / f"t{trial}.tns"
            write_coo(t, p)
            assert load_coo(p).same_entries(t)

    def test_base0_write_then_base1_read_errors(self, tmp_path):
        t = SparseTensorCoo((2, 2), [[0, 0], [1, 1]], [1.0, 2.0])
        p = tmp_path / "t.tns"
        write_coo(t, p, index_base=0)
        with pytest.raises(CooFormatError, match="below base"):
            load_coo(p, index_base=1)


class TestGenerateSynthetic:
    def test_noiseless_model_is_exact(self):
        t, truth = generate_synthetic((6, 7, 8), 40, (2, 2, 2), 2, 0.0, seed=3)
        assert rmse(truth, t) <= 1e-12

    def test_same_seed_bitwise_identical(self):
        a, _ = generate_synthetic((6, 7, 8), 40, (2, 2, 2), 2, 0.1, seed=5)
        b, _ = generate_synthetic((6, 7, 8), 40, (2, 2, 2), 2, 0.1, seed=5)
        assert a.same_entries(b)

    def test_indices_distinct_and_in_bounds(self):
        t, _ = generate_synthetic((50, 60, 70), 10000, (4, 4, 4), 4, 0.0, seed=7)
        assert t.nnz == 10000
        seen = {tuple(row) for row in t.indices.tolist()}
        assert len(seen) == 10000
        assert t.indices.min() >= 0
        assert (t.indices < np.array([50, 60, 70])).all()

    def test_nnz_exceeding_dense_size_rejected(self):
        with pytest.raises(ValueError, match="exceeds dense size"):
            generate_synthetic((2, 2), 5, (2, 2), 2)

    def test_huge_grid_uses_distinct_sampling(self):
        t, _ = generate_synthetic((10**5, 10**5, 10**5), 500, (2, 2, 2), 2, 0.0, seed=1)
        seen = {tuple(row) for row in t.indices.tolist()}
        assert len(seen) == 500


class TestSplit:
    def test_cardinality(self):
        t, _ = generate_synthetic((5, 5, 5), 10, (2, 2, 2), 2, 0.0, seed=1)
        ds = split(t, 0.2, seed=0)
        assert ds.test.nnz == 2 and ds.train.nnz == 8

    def test_fraction_zero_identity(self):
        t, _ = generate_synthetic((5, 5, 5), 10, (2, 2, 2), 2, 0.0, seed=1)
        ds = split(t, 0.0, seed=0)
        assert ds.test.nnz == 0
        assert ds.train.same_entries(t)

    def test_same_seed_same_split(self):
        t, _ = generate_synthetic((5, 5, 5), 20, (2, 2, 2), 2, 0.0, seed=1)
        a = split(t, 0.3, seed=9)
        b = split(t, 0.3, seed=9)
        assert a.train.same_entries(b.train) and a.test.same_entries(b.test)

    def test_partition_property(self):
        # property: |train| + |test| == |entries| and no positional overlap
        rng = np.random.default_rng(2)
        for _ in range(10):
            nnz = int(rng.integers(2, 40))
            t, _ = generate_synthetic((6, 6, 6), nnz, (2, 2, 2), 2, 0.0,
                                      seed=int(rng.integers(1000)))
            frac = float(rng.uniform(0, 0.5))
            ds = split(t, frac, seed=int(rng.integers(1000)))
            assert ds.train.nnz + ds.test.nnz == t.nnz
            merged = set(map(tuple, ds.train.indices.tolist())) | set(
                map(tuple, ds.test.indices.tolist())
            )
            assert merged == set(map(tuple, t.indices.tolist()))

    def test_empty_train_rejected(self):
        t, _ = generate_synthetic((5, 5), 2, (2, 2), 2, 0.0, seed=1)
        with pytest.raises(ValueError, match="empty train"):
            split(t, 0.9, seed=0)
