import numpy as np
import pytest

from ovbkit.dag import CausalDag
from ovbkit.scm import (
    BernoulliExogenous,
    LinearGaussian,
    ScmError,
    ScmTemplate,
    SweepConfig,
    build_scm,
    confounded_scm,
    direct_effect_scm,
    expected_treatment_estimate,
    parse_sweep_config,
    run_sweep,
    sample,
    team_effort_template,
)

SMALL_CONFIG = """
param.b_e = 0.3
param.b_s = 0.3
param.k_e = 0.1
param.k_s = 0.1
param.o_e = 0.5
param.o_t = 0.5
param.s_e = -0.1
param.s_t = -0.1
grid.t_e = 0.3
grid.z_e = 0.1, 0.5
grid.z_t = 0.1
n = 5, 20
repetitions = 40
seed = 99
outcome = E
predictors = T, B, K, O, S
"""


class TestBuildScm:
    def test_direct_effect_model(self):
        spec = direct_effect_scm()
        assert set(spec.mechanisms) == {"X", "Y"}
        assert spec.order == ("X", "Y")

    def test_team_effort_template_binds(self):
        template = team_effort_template()
        assert len(template.parameters) == 11
        values = dict.fromkeys(template.parameters, 0.1)
        spec = template.bind(values)
        assert set(spec.mechanisms) == {"B", "K", "O", "Z", "S", "T", "E"}
        assert spec.dag.latent == {"Z"}

    def test_bind_rejects_bad_parameter_sets(self):
        template = team_effort_template()
        with pytest.raises(ScmError):
            template.bind({})
        values = dict.fromkeys(template.parameters, 0.1)
        with pytest.raises(ScmError):
            template.bind({**values, "bogus": 1.0})

    def test_mechanism_validation(self):
        dag = CausalDag.from_edges([("X", "Y")])
        with pytest.raises(ScmError):
            build_scm(dag, {"X": LinearGaussian(0, {}, 1)})  # missing Y
        with pytest.raises(ScmError):
            build_scm(dag, {
                "X": LinearGaussian(0, {}, 1),
                "Y": LinearGaussian(0, {}, 1),  # missing parent weight
            })
        with pytest.raises(ScmError):
            build_scm(dag, {
                "X": LinearGaussian(0, {"Y": 1.0}, 1),  # weight for non-parent
                "Y": LinearGaussian(0, {"X": 1.0}, 1),
            })
        with pytest.raises(ScmError):
            build_scm(dag, {
                "X": LinearGaussian(0, {}, 1),
                "Y": BernoulliExogenous(0.5),  # Bernoulli with a parent
            })
        with pytest.raises(ScmError):
            LinearGaussian(0, {}, 0.0)
        with pytest.raises(ScmError):
            BernoulliExogenous(1.5)

    def test_unbound_template_parameter_rejected_by_build(self):
        dag = CausalDag.from_edges([("X", "Y")])
        with pytest.raises(ScmError):
            build_scm(dag, {
                "X": LinearGaussian(0, {}, 1),
                "Y": LinearGaussian(0, {"X": "slope"}, 1),
            })


class TestSampling:
    def test_same_seed_bit_identical(self):
        spec = confounded_scm()
        first = sample(spec, 500, seed=11)
        second = sample(spec, 500, seed=11)
        assert (first.values == second.values).all()
        third = sample(spec, 500, seed=12)
        assert not (first.values == third.values).all()

    def test_standardized_exogenous_moments(self):
        data = sample(direct_effect_scm(), 200_000, seed=21)
        x = data.column("X")
        assert abs(x.mean()) < 0.01
        assert abs(data.column("Y").mean()) < 0.01
        assert abs(x.std(ddof=1) - 1.0) < 0.01

    def test_bernoulli_values_and_effort_model_mean(self):
        template = team_effort_template()
        spec = template.bind({
            "b_e": 0.3, "b_s": 0.3, "k_e": 0.1, "k_s": 0.1,
            "o_e": 0.5, "o_t": 0.5, "s_e": -0.1, "s_t": -0.1,
            "t_e": 0.3, "z_e": 0.1, "z_t": 0.1,
        })
        data = sample(spec, 200_000, seed=31)
        for name in "BKO":
            assert set(np.unique(data.column(name))) <= {0.0, 1.0}
        # law of total expectation: E[T] = o_t * 0.5 + s_t * E[S], E[S] = 0.2
        assert data.column("T").mean() == pytest.approx(0.25 - 0.02, abs=0.02)
        assert data.columns == tuple(spec.order)

    def test_latents_included_in_output(self):
        spec = team_effort_template().bind(
            dict.fromkeys(team_effort_template().parameters, 0.2)
        )
        assert "Z" in sample(spec, 10, seed=1).columns

    def test_bad_requests(self):
        spec = direct_effect_scm()
        with pytest.raises(ScmError):
            sample(spec, 0, seed=1)
        with pytest.raises(ScmError):
            sample(spec, 10, seed=-4)


class TestConfigParsing:
    def test_bundled_table5(self):
        from ovbkit.fixtures import fixture_text

        config = parse_sweep_config(fixture_text("table5.conf"))
        assert config.grid_names == ("t_e", "z_e", "z_t")
        assert [len(v) for v in config.grid.values()] == [3, 6, 6]
        assert config.sample_sizes == (5, 10, 50)
        assert config.repetitions == 200
        assert config.outcome == "E"
        assert config.predictors == ("T", "B", "K", "O", "S")
        assert len(config.grid_points()) == 108

    def test_small_config(self):
        config = parse_sweep_config(SMALL_CONFIG)
        assert config.grid == {"t_e": (0.3,), "z_e": (0.1, 0.5), "z_t": (0.1,)}
        assert config.fixed["s_t"] == -0.1
        assert config.seed == 99

    @pytest.mark.parametrize(
        "mutation",
        [
            ("n = 5, 20", "bogus_key = 1"),           # unknown key
            ("grid.t_e = 0.3", "grid.t_e ="),         # empty list
            ("seed = 99", "seed = soon"),             # bad int
            ("grid.t_e = 0.3", "grid.nope = 0.3"),    # unknown parameter
            ("param.s_t = -0.1", ""),                 # parameter not covered
            ("predictors = T, B, K, O, S", "predictors = T, Z"),  # latent predictor
            ("repetitions = 40", "repetitions = 0"),
            ("grid.z_t = 0.1", "param.z_t = 0.1\ngrid.z_t = 0.1"),  # both
        ],
    )
    def test_invalid_configs(self, mutation):
        old, new = mutation
        with pytest.raises(ScmError):
            parse_sweep_config(SMALL_CONFIG.replace(old, new))

    def test_duplicate_key(self):
        with pytest.raises(ScmError):
            parse_sweep_config(SMALL_CONFIG + "\nseed = 1")


class TestSweep:
    def test_deterministic_and_thread_invariant(self):
        config = parse_sweep_config(SMALL_CONFIG)
        first = run_sweep(config, threads=1)
        second = run_sweep(config, threads=1)
        threaded = run_sweep(config, threads=4)
        assert first.to_csv() == second.to_csv()
        assert first.to_csv() == threaded.to_csv()

    def test_cell_independent_of_later_grid_points(self):
        base = parse_sweep_config(SMALL_CONFIG)
        wider = parse_sweep_config(SMALL_CONFIG.replace("grid.z_t = 0.1", "grid.z_t = 0.1, 0.5"))
        lhs = run_sweep(base).cells[0]
        rhs = run_sweep(wider).cells[0]
        assert lhs.params == rhs.params and lhs.n == rhs.n
        assert lhs.mean == rhs.mean
        assert lhs.hpdi50 == rhs.hpdi50 and lhs.hpdi95 == rhs.hpdi95

    def test_interval_structure(self):
        result = run_sweep(parse_sweep_config(SMALL_CONFIG))
        assert len(result.cells) == 4
        for cell in result.cells:
            assert cell.hpdi95.contains(cell.hpdi50)
            if cell.n >= 10:
                assert cell.hpdi95.contains(cell.mean)
        for cell in result.cells:
            if cell.n == 5:
                partner = result.cell(20, **cell.params)
                assert cell.hpdi95.width > partner.hpdi95.width

    def test_csv_layout(self):
        result = run_sweep(parse_sweep_config(SMALL_CONFIG))
        lines = result.to_csv().splitlines()
        assert lines[0] == "t_e,z_e,z_t,n,mean,l50,u50,l95,u95,failures"
        assert len(lines) == 5
        assert all(line.count(",") == 9 for line in lines)

    def test_all_degenerate_draws_fail_the_cell(self):
        # A constant exogenous flag is always collinear with the intercept,
        # so every repetition exhausts its retries.
        dag = CausalDag.from_edges([("C", "Y"), ("X", "Y")])
        template = ScmTemplate(dag, {
            "C": BernoulliExogenous(1.0),
            "X": LinearGaussian(0.0, {}, 1.0),
            "Y": LinearGaussian(0.0, {"C": 0.5, "X": "t"}, 1.0),
        })
        config = SweepConfig(
            template=template,
            grid={"t": (0.4,)},
            fixed={},
            sample_sizes=(25,),
            repetitions=20,
            outcome="Y",
            predictors=("X", "C"),
            seed=3,
        )
        result = run_sweep(config)
        (cell,) = result.cells
        assert cell.failed
        assert cell.failures == 20
        csv_line = result.to_csv().splitlines()[1]
        assert csv_line == "0.4,25,,,,,,20"

    def test_occasional_failures_are_counted_not_fatal(self):
        # p = 0.89 at n = 7 degenerates often enough that some repetitions
        # exhaust their three retries without sinking the whole cell.
        dag = CausalDag.from_edges([("C", "Y"), ("X", "Y")])
        template = ScmTemplate(dag, {
            "C": BernoulliExogenous(0.89),
            "X": LinearGaussian(0.0, {}, 1.0),
            "Y": LinearGaussian(0.0, {"C": 0.5, "X": "t"}, 1.0),
        })
        config = SweepConfig(
            template=template,
            grid={"t": (0.4,)},
            fixed={},
            sample_sizes=(7,),
            repetitions=400,
            outcome="Y",
            predictors=("X", "C"),
            seed=5,
        )
        (cell,) = run_sweep(config).cells
        assert 0 < cell.failures <= 40
        assert not cell.failed

    def test_config_validation(self):
        template = team_effort_template()
        values = dict.fromkeys(template.parameters, 0.1)
        with pytest.raises(ScmError):
            SweepConfig(template, {}, values, (10,), 5, "E", ("T",), 1)
        fixed = {k: v for k, v in values.items() if k != "t_e"}
        with pytest.raises(ScmError):
            SweepConfig(template, {"t_e": (0.1,)}, fixed, (10,), 5, "E", ("E",), 1)
        with pytest.raises(ScmError):
            SweepConfig(template, {"t_e": (0.1,)}, fixed, (10,), 5, "E", ("T",), -1)


class TestClosedFormOracle:
    def test_no_confounding_returns_main_effect(self):
        assert expected_treatment_estimate(0.3, 0.0, 0.7) == 0.3
        assert expected_treatment_estimate(0.3, 0.7, 0.0) == 0.3

    def test_sweep_means_within_monte_carlo_error_of_oracle(self):
        # |cell mean - closed form| should stay below 4 standard errors of the
        # mean, with the spread recomputed from the per-repetition estimates.
        from ovbkit.scm import _treatment_estimate

        text = SMALL_CONFIG.replace("grid.z_e = 0.1, 0.5", "grid.z_e = -0.5, 0.3") \
                           .replace("grid.z_t = 0.1", "grid.z_t = 0.4") \
                           .replace("n = 5, 20", "n = 50") \
                           .replace("repetitions = 40", "repetitions = 150")
        config = parse_sweep_config(text)
        result = run_sweep(config)
        for gi, point in enumerate(config.grid_points()):
            spec = config.template.bind({**config.fixed, **dict(zip(config.grid_names, point))})
            estimates = [
                _treatment_estimate(
                    spec, 50, config.outcome, config.predictors, (config.seed, gi, 0, ri)
                )
                for ri in range(config.repetitions)
            ]
            spread = float(np.std(estimates, ddof=1))
            cell = result.cells[gi]
            params = dict(zip(config.grid_names, point))
            assert cell.params == params and cell.n == 50
            oracle = expected_treatment_estimate(
                params["t_e"], params["z_e"], params["z_t"]
            )
            assert abs(cell.mean - oracle) <= 4 * spread / np.sqrt(config.repetitions)

    def test_hand_computed_values(self):
        assert expected_treatment_estimate(0.1, 0.3, 0.3) == pytest.approx(0.18256, abs=1e-4)
        assert expected_treatment_estimate(0.5, -0.5, 0.5) == pytest.approx(0.30)

    def test_reference_windows_at_n50(self):
        # Three bias regimes at n=50, 200 repetitions: near-oracle when the
        # confounder is weak, inflated under same-sign confounding, deflated
        # under mixed signs.
        text = SMALL_CONFIG.replace("grid.z_e = 0.1, 0.5", "grid.z_e = 0.1, 0.5") \
                           .replace("grid.z_t = 0.1", "grid.z_t = 0.1, 0.5, -0.5") \
                           .replace("n = 5, 20", "n = 50") \
                           .replace("repetitions = 40", "repetitions = 200") \
                           .replace("seed = 99", "seed = 7")
        result = run_sweep(parse_sweep_config(text))
        assert 0.27 <= result.cell(50, z_e=0.1, z_t=0.1).mean <= 0.35
        assert 0.45 <= result.cell(50, z_e=0.5, z_t=0.5).mean <= 0.55
        assert 0.05 <= result.cell(50, z_e=0.5, z_t=-0.5).mean <= 0.15

    def test_matches_large_sample_sweep(self):
        # Cross-check the closed form against one huge draw.
        config_text = SMALL_CONFIG.replace("grid.z_e = 0.1, 0.5", "grid.z_e = 0.4") \
                                  .replace("grid.z_t = 0.1", "grid.z_t = -0.3") \
                                  .replace("n = 5, 20", "n = 100000") \
                                  .replace("repetitions = 40", "repetitions = 1")
        (cell,) = run_sweep(parse_sweep_config(config_text)).cells
        oracle = expected_treatment_estimate(0.3, 0.4, -0.3)
        assert cell.mean == pytest.approx(oracle, abs=0.01)
