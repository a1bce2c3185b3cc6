import csv
import io
import json
import math

import numpy as np
import pytest

from witnesslab._seeding import child_seed, derive_seeds
from witnesslab.bench import (
    GENERATOR_KINDS,
    GeneratorSpec,
    MethodConfig,
    estimate_power,
    estimate_type1,
    generate,
)


class TestGenerators:
    @pytest.mark.parametrize("kind", GENERATOR_KINDS)
    def test_shapes_and_determinism(self, kind):
        spec = GeneratorSpec(kind, seed=3)
        sp, sq = generate(spec, 40, 30)
        assert sp.n == 40 and sq.n == 30 and sp.d == sq.d == spec.dim
        sp2, sq2 = generate(spec, 40, 30)
        np.testing.assert_array_equal(sp.rows, sp2.rows)
        np.testing.assert_array_equal(sq.rows, sq2.rows)

    def test_blob_null_moments_agree(self):
        sp, sq = generate(GeneratorSpec("blob_null", seed=1), 10_000, 10_000)
        # the nine-mode mixture has per-coordinate variance 1 + 25 * 2/3
        se = math.sqrt(2 * (1 + 25 * 2 / 3) / 10_000)
        assert np.all(np.abs(sp.rows.mean(axis=0) - sq.rows.mean(axis=0)) < 5 * se)
        assert np.all(np.abs(sp.rows.mean(axis=0) - 5.0) < 5 * se)

    def test_blob_alt_correlation_alternates(self):
        _, sq = generate(GeneratorSpec("blob_alt", {"rho": 0.5}, seed=2), 20_000, 20_000)
        X = sq.rows
        cell = np.rint(X / 5.0).astype(int)
        centered = X - cell * 5.0
        parity = (cell.sum(axis=1) % 2 == 0)
        r_even = np.corrcoef(centered[parity].T)[0, 1]
        r_odd = np.corrcoef(centered[~parity].T)[0, 1]
        assert r_even > 0.4 and r_odd < -0.4

    def test_gauss_var_shift_default_is_sd_one_and_a_half(self):
        sp, sq = generate(GeneratorSpec("gauss_var_shift", seed=4), 20_000, 20_000)
        assert np.std(sp.rows) == pytest.approx(1.0, rel=0.03)
        assert np.std(sq.rows) == pytest.approx(1.5, rel=0.03)

    def test_mean_shift_moves_first_coordinate(self):
        sp, sq = generate(GeneratorSpec("mean_shift", {"mu": 2.0}, seed=5), 5000, 5000)
        gap = sq.rows.mean(axis=0) - sp.rows.mean(axis=0)
        assert gap[0] == pytest.approx(2.0, abs=0.1) and abs(gap[1]) < 0.1

    def test_noise_shift_fraction(self):
        sp, sq = generate(GeneratorSpec("noise_shift", {"sigma": "large", "delta": 0.5}, seed=6), 2000, 2000)
        # a half of the Q rows gets noise of variance 100 added
        assert np.var(sq.rows) == pytest.approx(1 + 0.5 * 100, rel=0.1)
        assert np.var(sp.rows) == pytest.approx(1.0, rel=0.1)

    def test_knockout_removes_component(self):
        spec = GeneratorSpec("knockout_shift", {"delta": "large", "separation": 6.0}, seed=7)
        sp, sq = generate(spec, 4000, 4000)
        assert np.mean(sp.rows[:, 0] < 0) == pytest.approx(0.5, abs=0.03)
        assert np.mean(sq.rows[:, 0] < 0) < 0.01

    def test_presets(self):
        assert GeneratorSpec("noise_shift", {"sigma": "small"}).params["sigma"] == 0.1
        assert GeneratorSpec("knockout_shift", {"delta": "large"}).params["delta"] == 1.0

    @pytest.mark.parametrize("kind, params, dim", [
        ("blob_null", {"rho": 1.0}, 0), ("blob_alt", {}, 3), ("gauss_var_shift", {"var_q": 0.0}, 0),
        ("noise_shift", {"delta": 1.5}, 0), ("noise_shift", {"sigma": "huge"}, 0), ("mean_shift", {"nu": 1}, 0),
        ("gauss_var_shift", {}, 2), ("mixture", {}, 0),
    ])
    def test_invalid(self, kind, params, dim):
        with pytest.raises(ValueError):
            GeneratorSpec(kind, params, dim=dim)

    def test_is_null(self):
        assert GeneratorSpec("blob_null").is_null
        assert GeneratorSpec("blob_alt", {"rho": 0.0}).is_null
        assert not GeneratorSpec("blob_alt").is_null
        assert GeneratorSpec("mean_shift", {"mu": 0.0}).is_null
        assert not GeneratorSpec("gauss_var_shift").is_null


class TestHarness:
    def test_report_formula(self):
        rep = estimate_power(GeneratorSpec("mean_shift", {"mu": 0.5}, dim=1), MethodConfig("f_test"), 20, 40, seed=1)
        assert rep.trials == 40 and rep.rejections == sum(rep.rejects)
        assert rep.power == rep.rejections / 40
        assert rep.std_err == pytest.approx(math.sqrt(rep.power * (1 - rep.power) / 40), rel=1e-15)
        assert rep.seeds == derive_seeds(1, 40)

    def test_single_trial(self):
        rep = estimate_power(GeneratorSpec("gauss_var_shift"), MethodConfig("f_test"), 30, 1)
        assert rep.trials == 1 and rep.std_err == 0.0

    def test_trial_seed_plumbing(self):
        from witnesslab.bench import run_method
        gen, test = GeneratorSpec("gauss_var_shift"), MethodConfig("f_test")
        rep = estimate_power(gen, test, 25, 3, seed=8)
        for s, p in zip(rep.seeds, rep.p_values):
            sp, sq = generate(gen.with_seed(child_seed(s, 0)), 25, 25)
            assert run_method(sp, sq, test, child_seed(s, 1)).p_value == p

    def test_outputs(self):
        rep = estimate_power(GeneratorSpec("mean_shift"), MethodConfig("ridge", permutations=49), 30, 4, seed=2)
        doc = json.loads(rep.to_json())
        assert doc["config"]["method"] == "ridge" and doc["config"]["n"] == 30
        rows = list(csv.reader(io.StringIO(rep.to_csv())))
        assert rows[0] == ["seed", "p_value", "reject"] and len(rows) == 5
        assert [float(r[1]) for r in rows[1:]] == rep.p_values

    def test_independent_of_workers(self):
        gen, test = GeneratorSpec("mean_shift"), MethodConfig("ridge", permutations=49)
        a = estimate_power(gen, test, 30, 6, seed=3, workers=1)
        b = estimate_power(gen, test, 30, 6, seed=3, workers=2)
        assert a.p_values == b.p_values

    def test_type1_requires_null(self):
        with pytest.raises(ValueError, match="not a null"):
            estimate_type1(GeneratorSpec("mean_shift"), MethodConfig("f_test"), 20, 5)

    def test_type1_f_test(self):
        rep = estimate_type1(GeneratorSpec("gauss_var_shift", {"var_q": 1.0}), MethodConfig("f_test"), 30, 2000)
        assert abs(rep.power - 0.05) <= 3 * math.sqrt(0.05 * 0.95 / 2000)

    def test_witness_test_on_null_variance_pair(self):
        rep = estimate_type1(GeneratorSpec("gauss_var_shift", {"var_q": 1.0}),
                             MethodConfig("ridge", permutations=199), 40, 1000, seed=5)
        assert 0.03 <= rep.power <= 0.07

    def test_small_alpha_rate(self):
        rep = estimate_type1(GeneratorSpec("mean_shift", {"mu": 0.0}),
                             MethodConfig("ridge", alpha=0.01, permutations=199), 40, 1000, seed=6)
        assert rep.power <= 0.025

    def test_f_test_power_on_variance_shift(self):
        rep = estimate_power(GeneratorSpec("gauss_var_shift"), MethodConfig("f_test"), 50, 1000, seed=4)
        assert 0.78 <= rep.power <= 0.98

    def test_method_validation(self):
        with pytest.raises(ValueError):
            MethodConfig("svm")
        with pytest.raises(ValueError):
            MethodConfig("auto", alpha=2.0)
        with pytest.raises(ValueError):
            estimate_power(GeneratorSpec("mean_shift"), MethodConfig("f_test"), 10, 0)
