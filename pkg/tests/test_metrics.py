"""RMSE, mergeable accumulators, holdout evaluation."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

import blockmf as bm


class TestRmse:
    def test_hand_computed(self):
        model = bm.FactorModel(np.array([[1.0], [2.0]]), np.array([[1.0], [2.0]]))
        d = bm.RatingsDataset.from_triples(2, 2, [(0, 0, 4.0), (1, 1, 8.0)])
        # errors 3 and 4, so sqrt((9 + 16) / 2)
        assert bm.rmse(model, d) == pytest.approx(3.5355339059327378, rel=1e-15)

    def test_perfect_model_scores_zero(self):
        model = bm.FactorModel(np.array([[2.0]]), np.array([[3.0]]))
        d = bm.RatingsDataset.from_triples(1, 1, [(0, 0, 6.0)])
        assert bm.rmse(model, d) == 0.0

    def test_empty_dataset_rejected(self):
        model = bm.init_factors(2, 2, 1, seed=0)
        with pytest.raises(bm.DataError, match="empty"):
            bm.rmse(model, bm.RatingsDataset.from_triples(2, 2, []))

    def test_shape_mismatch_rejected(self):
        model = bm.init_factors(3, 3, 1, seed=0)
        d = bm.RatingsDataset.from_triples(2, 2, [(0, 0, 1.0)])
        with pytest.raises(bm.DataError, match="3x3"):
            bm.rmse(model, d)


class TestAccumulator:
    def test_merge_adds_componentwise(self):
        a = bm.RmseAccumulator(9.0, 1)
        b = bm.RmseAccumulator(16.0, 1)
        assert bm.merge(a, b) == bm.RmseAccumulator(25.0, 2)
        assert bm.finalize(bm.merge(a, b)) == pytest.approx(np.sqrt(12.5))

    def test_finalize_empty_is_zero(self):
        assert bm.finalize(bm.RmseAccumulator()) == 0.0

    def test_negative_fields_rejected(self):
        with pytest.raises(ValueError):
            bm.RmseAccumulator(-1.0, 0)

    @given(
        st.lists(
            st.tuples(st.floats(0, 1e12), st.integers(0, 10**6)),
            min_size=1,
            max_size=12,
        )
    )
    def test_merge_order_free(self, parts):
        accs = [bm.RmseAccumulator(s, c) for s, c in parts]
        forward = accs[0]
        for a in accs[1:]:
            forward = bm.merge(forward, a)
        backward = accs[-1]
        for a in reversed(accs[:-1]):
            backward = bm.merge(a, backward)
        assert forward.count == backward.count
        assert forward.sse == pytest.approx(backward.sse, rel=1e-9)


class TestBlockwiseConsistency:
    def test_merged_blocks_equal_whole_matrix(self):
        """Per-block SSE merged in any grid equals the global RMSE."""
        rng = np.random.default_rng(99)
        for _ in range(50):
            n = int(rng.integers(2, 40))
            m = int(rng.integers(2, 40))
            count = int(rng.integers(1, n * m + 1))
            cells = rng.choice(n * m, size=count, replace=False)
            d = bm.RatingsDataset(
                n, m, cells // m, cells % m, rng.uniform(1, 5, count)
            )
            model = bm.init_factors(n, m, int(rng.integers(1, 6)), seed=int(rng.integers(100)))
            blocked = bm.partition(d, int(rng.integers(1, n + 1)), int(rng.integers(1, m + 1)))
            acc = bm.RmseAccumulator()
            for block in blocked:
                if len(block) == 0:
                    continue
                pred = np.einsum(
                    "ij,ij->i",
                    model.u[block.row_start : block.row_stop][block.rows],
                    model.v[block.col_start : block.col_stop][block.cols],
                )
                err = block.values - pred
                acc = bm.merge(acc, bm.RmseAccumulator(float(err @ err), len(block)))
            assert bm.finalize(acc) == pytest.approx(bm.rmse(model, d), rel=1e-9)


class TestHoldout:
    def test_cold_entries_fall_back_to_train_mean(self):
        train = bm.RatingsDataset.from_triples(3, 3, [(0, 0, 2.0), (1, 1, 4.0)])
        # row 2 and col 2 never occur in train
        test = bm.RatingsDataset.from_triples(3, 3, [(2, 2, 3.0)])
        ev = bm.HoldoutEvaluator(train, test)
        assert ev.cold_entries == 1
        assert ev.fallback == 3.0
        model = bm.init_factors(3, 3, 2, seed=0)
        assert ev.rmse(model) == 0.0  # fallback hits the value exactly

    def test_warm_entries_use_the_model(self):
        train = bm.RatingsDataset.from_triples(2, 2, [(0, 0, 1.0), (1, 1, 1.0)])
        test = bm.RatingsDataset.from_triples(2, 2, [(0, 1, 2.0)])
        model = bm.FactorModel(np.ones((2, 1)), np.ones((2, 1)))
        ev = bm.HoldoutEvaluator(train, test)
        assert ev.cold_entries == 0
        assert ev.rmse(model) == 1.0

    def test_one_shot_helper_agrees(self, dense32):
        train, test = bm.split(dense32, 0.25, seed=3)
        model = bm.init_factors(32, 32, 4, seed=1)
        assert bm.test_rmse(model, train, test) == bm.HoldoutEvaluator(train, test).rmse(model)

    def test_empty_test_rejected(self, dense32):
        with pytest.raises(bm.DataError, match="non-empty"):
            bm.HoldoutEvaluator(dense32, bm.RatingsDataset.from_triples(32, 32, []))

    def test_dimension_mismatch_rejected(self, dense32):
        other = bm.RatingsDataset.from_triples(8, 8, [(0, 0, 1.0)])
        with pytest.raises(ValueError, match="share global dimensions"):
            bm.HoldoutEvaluator(dense32, other)
