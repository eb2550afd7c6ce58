from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from folearn.distributions import LabeledWeighted, UniformTuples, Weighted
from folearn.hypotheses import FormulaHyp, constant_hypothesis
from folearn.learn import ExplicitFormulas, LearnerConfig
from folearn.logic import parse_formula
from folearn.pac import (
    ExperimentConfig,
    ExperimentReport,
    empirical_error,
    exact_generalization_error,
    render_report,
    run_agnostic_experiment,
    run_pac_experiment,
    sample_size_finite,
    sample_size_uniform_convergence,
    sample_size_vc,
    vc_dimension_bruteforce,
    write_report,
)
from folearn.synth import GenSpec, gen_structure, plant_target

mpmath.mp.dps = 50


def _mp_ceil(x) -> int:
    return int(mpmath.ceil(x))


class TestSampleSizes:
    def test_finite_reference_values(self):
        assert sample_size_finite(1000, 0.1, 0.05) == 100
        assert _mp_ceil(mpmath.log(mpmath.mpf(1000) / mpmath.mpf("0.05")) / mpmath.mpf("0.1")) == 100
        assert sample_size_finite(1, 0.5, math.exp(-1)) == 2
        assert sample_size_finite(1, 0.5, 1 - 1e-12) == 1

    def test_vc_reference_values(self):
        assert sample_size_vc(5, 0.1, 0.05, 8) == 640
        exact = 8 * (5 + mpmath.log(1 / mpmath.mpf("0.05"))) / mpmath.mpf("0.1")
        assert _mp_ceil(exact) == 640
        assert sample_size_vc(0, 1, math.exp(-1), 1) == 1

    def test_uniform_convergence_reference_values(self):
        assert sample_size_uniform_convergence(1000, 0.1, 0.05) == 1060
        exact = mpmath.log(2 * mpmath.mpf(1000) / mpmath.mpf("0.05")) / mpmath.mpf("0.1") ** 2
        assert _mp_ceil(exact) == 1060
        assert sample_size_uniform_convergence(1, 0.5, 2 / math.e) == 4

    @pytest.mark.parametrize(
        "fn,args",
        [
            (sample_size_finite, (0, 0.1, 0.1)),
            (sample_size_finite, (10, 0, 0.1)),
            (sample_size_finite, (10, 0.1, 1)),
            (sample_size_vc, (-1, 0.1, 0.1, 8)),
            (sample_size_vc, (1, 0.1, 0.1, 0)),
            (sample_size_uniform_convergence, (10, 1.5, 0.1)),
        ],
    )
    def test_out_of_range(self, fn, args):
        with pytest.raises(ValueError):
            fn(*args)

    @given(st.integers(0, 50), st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(0.5, 20))
    def test_vc_linear_in_c(self, vc, eps, delta, c):
        assert abs(sample_size_vc(vc, eps, delta, 2 * c) - 2 * sample_size_vc(vc, eps, delta, c)) <= 2

    @given(st.integers(1, 10**6), st.floats(0.02, 0.49), st.floats(0.01, 0.99))
    def test_uniform_convergence_quadruples(self, h, eps, delta):
        a = sample_size_uniform_convergence(h, eps, delta)
        b = sample_size_uniform_convergence(h, eps / 2, delta)
        assert abs(b - 4 * a) <= 4

    @given(
        st.integers(1, 10**6),
        st.integers(1, 10**6),
        st.floats(0.01, 0.99),
        st.floats(0.01, 0.99),
        st.floats(0.01, 0.99),
        st.floats(0.01, 0.99),
    )
    def test_monotone(self, h1, h2, e1, e2, d1, d2):
        h_lo, h_hi = sorted((h1, h2))
        e_lo, e_hi = sorted((e1, e2))
        d_lo, d_hi = sorted((d1, d2))
        for fn in (sample_size_finite, sample_size_uniform_convergence):
            assert fn(h_lo, e1, d1) <= fn(h_hi, e1, d1)
            assert fn(h1, e_hi, d1) <= fn(h1, e_lo, d1)
            assert fn(h1, e1, d_hi) <= fn(h1, e1, d_lo)
        vc_lo, vc_hi = h_lo % 100, h_lo % 100 + h_hi % 7
        assert sample_size_vc(vc_lo, e1, d1) <= sample_size_vc(vc_hi, e1, d1)
        assert sample_size_vc(vc_lo, e_hi, d1) <= sample_size_vc(vc_lo, e_lo, d1)
        assert sample_size_vc(vc_lo, e1, d_hi) <= sample_size_vc(vc_lo, e1, d_lo)


class TestGeneralizationError:
    def test_identity_and_complement(self, fig1_oracle):
        red = FormulaHyp(parse_formula("phi(x; ) := R(x)"), (), 0)
        blue = FormulaHyp(parse_formula("phi(x; ) := !R(x)"), (), 0)
        for dist in (UniformTuples(1), Weighted(((("a",), 3), (("d",), 1)))):
            assert exact_generalization_error(fig1_oracle, red, red, dist) == 0
            assert exact_generalization_error(fig1_oracle, blue, red, dist) == 1

    def test_figure1_constant_one(self, fig1_oracle):
        red = FormulaHyp(parse_formula("phi(x; ) := R(x)"), (), 0)
        assert exact_generalization_error(fig1_oracle, constant_hypothesis(True), red, UniformTuples(1)) == Fraction(6, 11)

    def test_support_limit(self, fig1_oracle):
        with pytest.raises(ValueError):
            exact_generalization_error(fig1_oracle, constant_hypothesis(True), constant_hypothesis(False), UniformTuples(3), limit=100)

    def test_empirical_tracks_exact(self):
        s = gen_structure(GenSpec(n=40, d_max=3, seed=8))
        tmpl = parse_formula("phi(x; y) := E(x,y) | R(x)")
        close = 0
        for i in range(100):
            target = plant_target(s, tmpl, seed=i, r_star=1)
            h = plant_target(s, tmpl, seed=1000 + i, r_star=1)
            exact = exact_generalization_error(s, h, target, UniformTuples(1))
            emp = empirical_error(s, h, target, UniformTuples(1), m=10_000, seed=i)
            close += abs(emp - float(exact)) <= 0.03
        assert close >= 95


class TestExperiments:
    def _setup(self):
        s = gen_structure(GenSpec(n=30, d_max=3, seed=2))
        tmpl = parse_formula("phi(x; y) := E(x,y) | R(x)")
        space = ExplicitFormulas.build([tmpl, "phi(x; y) := R(x) & !x = y"], 1)
        target = plant_target(s, tmpl, seed=5, r_star=1)
        return s, space, target, LearnerConfig(k=1, ell=1, r_star=1)

    def test_epsilon_one_always_succeeds(self):
        s, space, target, lcfg = self._setup()
        rep = run_pac_experiment(s, target, UniformTuples(1), space, lcfg, ExperimentConfig(epsilon=1, delta=0.5, trials=5))
        assert rep.success_fraction == 1

    def test_single_trial_shape(self):
        s, space, target, lcfg = self._setup()
        cfg = ExperimentConfig(epsilon=0.2, delta=0.2, trials=1, seed=3)
        rep = run_pac_experiment(s, target, UniformTuples(1), space, lcfg, cfg)
        assert len(rep.trials) == 1
        tr = rep.trials[0]
        assert tr.t_used == sample_size_finite(2 * 30, 0.2, 0.2)
        assert 0 <= tr.generalization_error <= 1 and tr.training_error == 0 and not tr.rejected
        assert tr.learner_queries > 0

    def test_reproducible(self):
        s, space, target, lcfg = self._setup()
        cfg = ExperimentConfig(epsilon=0.2, delta=0.2, trials=3, seed=3, test_mode="empirical", test_samples=500)
        a = run_pac_experiment(s, target, UniformTuples(1), space, lcfg, cfg)
        b = run_pac_experiment(s, target, UniformTuples(1), space, lcfg, cfg)
        assert [(t.generalization_error, t.learner_queries) for t in a.trials] == [
            (t.generalization_error, t.learner_queries) for t in b.trials
        ]

    def test_agnostic_coin_flips(self):
        s, space, _, lcfg = self._setup()
        dist = LabeledWeighted(tuple(((u,), c, 1) for u in s.sorted_universe for c in (0, 1)))
        cfg = ExperimentConfig(epsilon=0.05, delta=0.2, trials=3, sample_size_rule="manual", manual_t=40)
        rep = run_agnostic_experiment(s, dist, space, lcfg, cfg)
        assert rep.reference_error == Fraction(1, 2)
        assert all(tr.regret == 0 for tr in rep.trials)

    def test_agnostic_noise_free_is_pac(self):
        s, space, target, lcfg = self._setup()
        from folearn.synth import noisy_distribution

        dist = noisy_distribution(s, target, 0)
        cfg = ExperimentConfig(epsilon=0.2, delta=0.2, trials=2, sample_size_rule="uniform_convergence")
        rep = run_agnostic_experiment(s, dist, space, lcfg, cfg)
        assert rep.reference_error == 0


class TestVC:
    def test_singletons(self):
        assert vc_dimension_bruteforce([(1, 0, 0), (0, 1, 0), (0, 0, 1)]) == 1

    def test_powerset(self):
        assert vc_dimension_bruteforce([tuple(int(b) for b in f"{i:03b}") for i in range(8)]) == 3

    def test_single_concept(self):
        assert vc_dimension_bruteforce([(1, 0, 1)]) == 0
        assert vc_dimension_bruteforce([]) == 0

    def test_domain_limit(self):
        with pytest.raises(ValueError):
            vc_dimension_bruteforce([(0,) * 21])
        assert vc_dimension_bruteforce([(0,) * 21, (1,) + (0,) * 20], domain_limit=25) == 1

    @settings(max_examples=150, deadline=None)
    @given(st.integers(1, 7).flatmap(lambda n: st.lists(st.tuples(*[st.integers(0, 1)] * n), max_size=40)))
    def test_matches_naive_search(self, concepts):
        from itertools import combinations

        naive = 0
        if concepts:
            n = len(concepts[0])
            for size in range(1, n + 1):
                for pts in combinations(range(n), size):
                    if len({tuple(c[i] for i in pts) for c in concepts}) == 2**size:
                        naive = size
        assert vc_dimension_bruteforce(concepts) == naive


class TestReports:
    def test_empty_report(self, tmp_path):
        rep = ExperimentReport("pac", {"t": 0})
        write_report(rep, tmp_path / "r.json")
        write_report(rep, tmp_path / "r.csv", "csv")
        assert (tmp_path / "r.csv").read_text().strip().count("\n") == 0

    def test_bit_stable(self, tmp_path):
        s = gen_structure(GenSpec(n=20, d_max=3, seed=2))
        tmpl = parse_formula("phi(x; y) := E(x,y)")
        target = plant_target(s, tmpl, seed=1, r_star=1)
        rep = run_pac_experiment(
            s, target, UniformTuples(1), ExplicitFormulas.build([tmpl], 1), LearnerConfig(k=1, ell=1, r_star=1),
            ExperimentConfig(epsilon=0.3, delta=0.3, trials=4),
        )
        for fmt in ("json", "csv"):
            write_report(rep, tmp_path / f"a.{fmt}", fmt)
            write_report(rep, tmp_path / f"b.{fmt}", fmt)
            assert (tmp_path / f"a.{fmt}").read_bytes() == (tmp_path / f"b.{fmt}").read_bytes()
        assert render_report(rep, "csv").count("\n") == 5

    def test_unwritable(self, tmp_path):
        with pytest.raises(OSError):
            write_report(ExperimentReport("pac", {}), tmp_path / "missing" / "r.json")
