import numpy as np
import pytest

from sptucker.coo import generate_synthetic, split
from sptucker.estimator import TuckerSGD, check_index_array, check_values


def xy(noise=0.0, seed=3, nnz=300):
    t, _ = generate_synthetic((10, 11, 12), nnz, (2, 2, 2), 2, noise, seed=seed)
    return t.indices, t.values


class TestValidation:
    def test_index_array_shape(self):
        with pytest.raises(ValueError, match="2-D"):
            check_index_array(np.zeros(4))

    def test_float_indices_must_be_integral(self):
        with pytest.raises(ValueError, match="integer"):
            check_index_array(np.array([[0.5, 1.0]]))

    def test_integral_floats_accepted(self):
        out = check_index_array(np.array([[0.0, 2.0]]))
        assert out.dtype == np.int64

    def test_negative_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            check_index_array(np.array([[0, -1]]))

    def test_out_of_range_vs_dims(self):
        with pytest.raises(ValueError, match="out of range"):
            check_index_array(np.array([[0, 5]]), dims=(3, 5))

    def test_values_length_and_finiteness(self):
        with pytest.raises(ValueError, match="values"):
            check_values([1.0, 2.0], 3)
        with pytest.raises(ValueError, match="non-finite"):
            check_values([1.0, np.nan], 2)


class TestParamsProtocol:
    def test_get_set_round_trip(self):
        est = TuckerSGD(j_ranks=3, epochs=7)
        params = est.get_params()
        assert params["j_ranks"] == 3 and params["epochs"] == 7
        est2 = TuckerSGD().set_params(**params)
        assert est2.get_params() == params

    def test_unknown_param_rejected(self):
        with pytest.raises(ValueError, match="unknown parameter"):
            TuckerSGD().set_params(bogus=1)

    def test_clone_style_reconstruction(self):
        est = TuckerSGD(r_core=2, alpha_a=0.005)
        rebuilt = TuckerSGD(**est.get_params())
        assert rebuilt.get_params() == est.get_params()


class TestFitPredict:
    def test_fit_learns_and_predicts(self):
        X, y = xy()
        est = TuckerSGD(j_ranks=2, r_core=2, epochs=30, seed=1)
        est.fit(X, y)
        pred = est.predict(X)
        resid = np.sqrt(np.mean((pred - y) ** 2))
        assert resid < np.std(y) * 0.5
        assert len(est.history_) == 30
        assert est.score(X, y) > 0.7

    def test_predict_before_fit_rejected(self):
        with pytest.raises(RuntimeError, match="not fitted"):
            TuckerSGD().predict(np.zeros((1, 3), dtype=np.int64))

    def test_dims_inferred_from_data(self):
        X, y = xy()
        est = TuckerSGD(j_ranks=2, r_core=2, epochs=1, seed=1).fit(X, y)
        assert est.dims_ == (10, 11, 12)

    def test_explicit_dims_respected(self):
        X, y = xy()
        est = TuckerSGD(j_ranks=2, r_core=2, dims=(20, 20, 20), epochs=1, seed=1)
        est.fit(X, y)
        assert est.dims_ == (20, 20, 20)
        est.predict(np.array([[19, 19, 19]]))

    def test_prediction_at_unseen_index_out_of_range(self):
        X, y = xy()
        est = TuckerSGD(j_ranks=2, r_core=2, epochs=1, seed=1).fit(X, y)
        with pytest.raises(ValueError, match="out of range"):
            est.predict(np.array([[10, 0, 0]]))

    def test_deterministic_per_seed(self):
        X, y = xy()
        a = TuckerSGD(j_ranks=2, r_core=2, epochs=3, seed=9).fit(X, y)
        b = TuckerSGD(j_ranks=2, r_core=2, epochs=3, seed=9).fit(X, y)
        np.testing.assert_array_equal(a.predict(X), b.predict(X))

    def test_generalizes_on_held_out(self):
        t, _ = generate_synthetic((10, 11, 12), 600, (2, 2, 2), 2, 0.05, seed=4)
        ds = split(t, 0.2, seed=4)
        est = TuckerSGD(j_ranks=2, r_core=2, epochs=40, seed=2)
        est.fit(ds.train.indices, ds.train.values)
        assert est.score(ds.test.indices, ds.test.values) > 0.5
