import math

import numpy as np
import pytest

import config
from utils.errors import ConfigError
from utils.free_group import (
    Automorphism,
    abelianization,
    compose,
    cyclic_reduce,
    invert,
    nielsen_library,
    parse_automorphism,
    parse_word,
    power,
)
from utils.matrix_oracle import IntMatrix, matrix_product, spectral_radius
from utils.outer_metric import candidates, dist
from utils.results import AGGREGATE_PATH_ID
from utils.walk_engine import (
    EstimateRecord,
    EstimateSeries,
    ProbMeasure,
    abelianized_increments,
    conjugacy_growth_experiment,
    delta_experiment,
    distance_report,
    drift_experiment,
    first_moment,
    geometric_schedule,
    gromov_decay_experiment,
    matrix_experiments,
    sample_increments,
    sample_path,
    second_moment,
    spectral_experiment,
    stretch_report,
)

LOG_GOLDEN = math.log((1 + math.sqrt(5)) / 2)
FIBONACCI = parse_automorphism("a->ab; b->a | a->b; b->Ba")
TRANSVECTION = parse_automorphism("a->ab; b->b | a->aB; b->b")
F3_FIRST = parse_automorphism("a->b; b->c; c->ab | a->cA; b->a; c->b")
F3_SECOND = parse_automorphism("a->cb; b->a; c->b | a->b; b->c; c->aC")
F3_MEASURE = ProbMeasure.uniform([F3_FIRST, F3_SECOND])
CAT = IntMatrix.from_rows([[2, 1], [1, 1]])


def test_measure_validation():
    with pytest.raises(ConfigError) as excinfo:
        ProbMeasure((FIBONACCI, TRANSVECTION), (0.5, 0.4))
    assert excinfo.value.field == "weight"
    with pytest.raises(ConfigError):
        ProbMeasure((), ())
    with pytest.raises(ConfigError):
        ProbMeasure((FIBONACCI, TRANSVECTION), (1.0, 0.0))
    with pytest.raises(ConfigError):
        ProbMeasure((FIBONACCI, CAT), (0.5, 0.5))
    with pytest.raises(ConfigError):
        ProbMeasure((FIBONACCI, F3_FIRST), (0.5, 0.5))
    with pytest.raises(ConfigError):
        ProbMeasure.point_mass(IntMatrix.from_rows([[2, 0], [0, 1]]))
    assert math.fsum(ProbMeasure.uniform([FIBONACCI] * 3).weights) == pytest.approx(1.0, abs=1e-15)


def test_schedule():
    assert geometric_schedule(10) == [1, 2, 4, 8, 10]
    assert geometric_schedule(8) == [1, 2, 4, 8]
    assert geometric_schedule(1) == [1]


def test_increments_are_deterministic_per_path():
    measure = ProbMeasure.uniform([FIBONACCI, invert(FIBONACCI)])
    first = sample_increments(measure, 42, 7, 500)
    assert np.array_equal(first, sample_increments(measure, 42, 7, 500))
    assert not np.array_equal(first, sample_increments(measure, 42, 8, 500))
    assert not np.array_equal(first, sample_increments(measure, 43, 7, 500))
    assert np.array_equal(first[:100], sample_increments(measure, 42, 7, 100))
    with pytest.raises(ConfigError):
        sample_increments(measure, 2 ** 64, 0, 10)


def test_increment_frequencies_match_weights():
    measure = ProbMeasure.uniform([FIBONACCI, invert(FIBONACCI)])
    n = 10_000
    frequency = float(np.mean(sample_increments(measure, 2024, 0, n) == 0))
    assert abs(frequency - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_point_mass_walk_is_a_power():
    steps = list(sample_path(ProbMeasure.point_mass(FIBONACCI), 0, 0, 6))
    assert [step.n for step in steps] == [1, 2, 3, 4, 5, 6]
    assert steps[-1].product == power(FIBONACCI, 6)
    assert steps[-1].inverse == power(FIBONACCI, -6)


def test_walk_product_multiplies_on_the_right():
    library = nielsen_library(2)
    measure = ProbMeasure.uniform([library["R12"], library["l21"], library["I1"]])
    steps = list(sample_path(measure, 5, 3, 12))
    expected = Automorphism.identity(2)
    for step in steps:
        expected = compose(expected, measure.support[step.increment])
        assert step.product == expected
        assert invert(step.product).check_inverse()


def test_budget_truncates_path():
    steps = list(sample_path(ProbMeasure.point_mass(FIBONACCI), 0, 0, 40, budget=50))
    assert steps[-1].truncated
    assert steps[-1].product is None
    assert all(not step.truncated for step in steps[:-1])


def test_identity_walks_give_zero_series():
    identity = ProbMeasure.point_mass(Automorphism.identity(2))
    for series in (
        drift_experiment(identity, 0, 8, 2),
        conjugacy_growth_experiment(identity, [cyclic_reduce(parse_word("a", 2))], 0, 8, 2),
        spectral_experiment(identity, 0, 8, 2, k_max=2),
        gromov_decay_experiment(identity, 0, 8, 2),
    ):
        assert series.records
        assert all(record.value == pytest.approx(0.0, abs=1e-12) for record in series.records), series.experiment


def test_fibonacci_drift_and_subadditivity():
    series = drift_experiment(ProbMeasure.point_mass(FIBONACCI), 1, 20, 2)
    assert series.values("drift", 20)[0] == pytest.approx(LOG_GOLDEN, abs=0.08)
    assert series.values("drift", 1)[0] == pytest.approx(math.log(2))
    gaps = series.values("subadditivity_gap")
    assert gaps and all(gap >= -1e-9 for gap in gaps)
    assert series.metadata["first_moment"] == repr(math.log(2))


def test_drift_subadditivity_on_random_walk():
    series = drift_experiment(F3_MEASURE, 9, 16, 6)
    assert series.path_ids() == list(range(6))
    assert all(gap >= -1e-9 for gap in series.values("subadditivity_gap"))
    assert {record.n for record in series.records if record.estimator == "subadditivity_gap"} == {2, 4, 8, 16}


def test_moments():
    measure = ProbMeasure.point_mass(TRANSVECTION)
    assert first_moment(measure) == pytest.approx(math.log(2))
    assert second_moment(measure) == pytest.approx(math.log(2) ** 2)


def test_truncated_paths_are_reported():
    series = drift_experiment(ProbMeasure.point_mass(FIBONACCI), 0, 30, 3, budget=50)
    assert series.truncated_paths() == [0, 1, 2]
    truncated = [record for record in series.records if record.status == "truncated"]
    assert len(truncated) == 3
    assert all(math.isnan(record.value) for record in truncated)
    aggregates = {(row.n, row.estimator): row for row in series.summary()}
    assert aggregates[(1, "drift")].effective_paths == 3


def test_worker_count_does_not_change_records():
    single = spectral_experiment(F3_MEASURE, 17, 8, 4, k_max=2, threads=1)
    parallel = spectral_experiment(F3_MEASURE, 17, 8, 4, k_max=2, threads=2)
    assert single.records == parallel.records


def test_fibonacci_conjugacy_growth():
    seeds = [cyclic_reduce(parse_word("a")), cyclic_reduce(parse_word("ab"))]
    series = conjugacy_growth_experiment(ProbMeasure.point_mass(FIBONACCI), seeds, 0, 20, 1)
    assert series.values("conjugacy:a", 20)[0] == pytest.approx(LOG_GOLDEN, abs=0.08)
    assert series.values("conjugacy:ab", 20)[0] == pytest.approx(LOG_GOLDEN, abs=0.08)
    with pytest.raises(ConfigError):
        conjugacy_growth_experiment(ProbMeasure.point_mass(FIBONACCI), [cyclic_reduce(parse_word("1", 2))], 0, 5, 1)


def test_fibonacci_spectral_series_is_constant():
    series = spectral_experiment(ProbMeasure.point_mass(FIBONACCI), 0, 8, 1, k_max=2)
    lower = [record for record in series.records if record.estimator == "lower"]
    assert [record.n for record in lower] == [1, 2, 4, 8]
    assert all(record.value == pytest.approx(LOG_GOLDEN, rel=1e-9) for record in lower)


def test_spectral_sandwich_on_random_walk():
    series = spectral_experiment(F3_MEASURE, 3, 16, 5, k_max=2)
    by_key = {(r.path_id, r.n, r.estimator): r.value for r in series.records}
    for (path_id, n, estimator), value in by_key.items():
        if estimator == "lower":
            assert value <= by_key[(path_id, n, "upper_k1")] + 1e-9
            assert value <= by_key[(path_id, n, "upper")] + 1e-9
        if estimator == "upper_k2":
            assert value <= by_key[(path_id, n, "upper_k1")] + 1e-9


def test_spectral_downgrade_is_recorded():
    series = spectral_experiment(ProbMeasure.point_mass(FIBONACCI), 0, 8, 1, k_max=4, budget=60)
    statuses = {record.status for record in series.records if record.n == 8}
    assert statuses <= {"downgraded", "truncated"}
    assert "downgraded" in {record.status for record in series.records}


def test_gromov_series_has_drift_alongside():
    series = gromov_decay_experiment(F3_MEASURE, 11, 8, 3)
    estimators = {record.estimator for record in series.records}
    assert estimators == {"gromov", "drift"}
    assert all(value >= -1e-9 for value in series.values("gromov"))


def test_delta_experiment():
    series = delta_experiment(F3_MEASURE, 5, 4, 6)
    delta = series.values("delta")
    assert len(delta) == 1 and delta[0] >= 0.0
    assert series.values("sample_points") == [7.0]
    assert len(series.values("highness")) == 6
    assert all(value >= 1.0 for value in series.values("highness"))


def test_matrix_experiments():
    identity = matrix_experiments(ProbMeasure.point_mass(IntMatrix.identity(2)), 0, 10, 2)
    assert all(record.value == 0.0 for record in identity.records)
    hyperbolic = matrix_experiments(ProbMeasure.point_mass(CAT), 0, 12, 1)
    assert all(value == pytest.approx(2 * LOG_GOLDEN, rel=1e-9) for value in hyperbolic.values("rho_lower"))
    assert len(hyperbolic.values("rho_upper")) == 12
    furstenberg = matrix_experiments(ProbMeasure.point_mass(CAT), 0, 12, 1, mode="furstenberg", vector=(0, 1))
    assert {record.estimator for record in furstenberg.records} == {"norm", "vector"}
    with pytest.raises(ConfigError):
        matrix_experiments(ProbMeasure.point_mass(CAT), 0, 5, 1, vector=(0, 0))
    with pytest.raises(ConfigError):
        matrix_experiments(ProbMeasure.point_mass(FIBONACCI), 0, 5, 1)


def test_matrix_bit_budget_truncates():
    series = matrix_experiments(ProbMeasure.point_mass(CAT), 0, 60, 1, bit_budget=12)
    assert series.truncated_paths() == [0]


def test_abelianized_increments_track_inverse_walk():
    library = nielsen_library(2)
    measure = ProbMeasure.uniform([library["R12"], library["L21"], library["r21"], library["P12"]])
    for path_id in range(20):
        indices = sample_increments(measure, 77, path_id, 20)
        steps = list(sample_path(measure, 77, path_id, 20))
        product = matrix_product(abelianized_increments(measure, indices))
        assert product == abelianization(steps[-1].inverse).transpose()
        assert spectral_radius(product).exact <= dist(steps[-1].inverse) + 1e-9


def test_series_keys_are_unique():
    with pytest.raises(ValueError):
        EstimateSeries("drift", [EstimateRecord(0, 1, "drift", 0.0), EstimateRecord(0, 1, "drift", 1.0)])


def test_single_automorphism_reports():
    report = distance_report(TRANSVECTION)
    assert [record.estimator for record in report.records] == ["dist", "sym_dist"]
    assert report.records[1].value == pytest.approx(2 * math.log(2))
    stretch = stretch_report(FIBONACCI, k_max=12)
    values = {record.estimator: record.value for record in stretch.records}
    assert abs(values["upper"] - values["lower"]) < 1e-3
    assert values["converged"] == 1.0


F2_MEASURE = ProbMeasure.uniform([nielsen_library(2)[name] for name in ("R12", "L21", "r21", "P12")])
SL2_MEASURE = ProbMeasure.uniform([IntMatrix.from_rows([[1, 1], [0, 1]]), IntMatrix.from_rows([[1, 0], [1, 1]])])


@pytest.fixture
def no_inverse_checks(monkeypatch):
    monkeypatch.setattr(config, "DEBUG_INVARIANTS", False)


def by_path(series, estimator, n):
    return {record.path_id: record.value for record in series.records
            if record.estimator == estimator and record.n == n and record.status != "truncated"}


def test_delta_experiment_reports_quadruples():
    series = delta_experiment(F3_MEASURE, 5, 4, 6)
    assert series.values("quadruples") == [7.0 ** 4]
    assert {record.path_id for record in series.records if record.estimator == "quadruples"} == {AGGREGATE_PATH_ID}


def test_spectral_series_carries_abelianized_growth():
    series = spectral_experiment(F3_MEASURE, 3, 16, 5, k_max=2)
    upper = {(r.path_id, r.n): r.value for r in series.records if r.estimator == "upper"}
    abelian = {(r.path_id, r.n): r.value for r in series.records if r.estimator == "abelian_guivarch"}
    assert abelian.keys() == upper.keys()
    for key, value in abelian.items():
        assert value <= upper[key] + 1e-9
    assert not series.values("agreement")


def test_fibonacci_spectral_series_agrees_with_abelianization():
    series = spectral_experiment(ProbMeasure.point_mass(FIBONACCI), 0, 8, 1, k_max=2)
    assert all(value == pytest.approx(LOG_GOLDEN, rel=1e-9) for value in series.values("abelian_guivarch"))
    assert series.values("agreement", 8)[0] < 0.01


def test_spectral_path_truncates_on_bit_budget(monkeypatch):
    monkeypatch.setattr(config, "BIT_BUDGET", 4)
    series = spectral_experiment(ProbMeasure.point_mass(FIBONACCI), 0, 16, 1, k_max=2)
    assert series.truncated_paths() == [0]


def test_stretch_report_includes_agreement():
    values = {record.estimator: record.value for record in stretch_report(FIBONACCI, k_max=12).records}
    assert values["agreement"] < 0.01
    assert "agreement" not in {record.estimator for record in stretch_report(F3_FIRST, k_max=3).records}


def test_matrix_experiments_bracket_only_on_schedule_above_dimension_two():
    shear = IntMatrix.from_rows([[1, 1, 0], [0, 1, 1], [0, 0, 1]])
    series = matrix_experiments(ProbMeasure.point_mass(shear), 0, 10, 1)
    assert sorted({record.n for record in series.records if record.estimator == "rho_lower"}) == [1, 2, 4, 8, 10]
    assert len(series.values("norm")) == 10


def test_conjugacy_growth_is_bounded_by_drift():
    seeds = list(candidates(3).loops)
    conjugacy = conjugacy_growth_experiment(F3_MEASURE, seeds, 21, 12, 4)
    drift = drift_experiment(F3_MEASURE, 21, 12, 4)
    for n in range(1, 13):
        distances = by_path(drift, "drift", n)
        for seed in seeds:
            for path_id, value in by_path(conjugacy, f"conjugacy:{seed}", n).items():
                assert value <= distances[path_id] + math.log(len(seed)) / n + 1e-9


def test_drift_means_do_not_grow_along_the_schedule():
    aggregates = {(row.n, row.estimator): row for row in drift_experiment(F3_MEASURE, 31, 16, 16).summary()}
    for m in (1, 2, 4, 8):
        early, late = aggregates[(m, "drift")], aggregates[(2 * m, "drift")]
        width = 0.0 if early.ci_low is None else early.ci_high - early.ci_low
        assert late.mean <= early.mean + 2 * width + 1e-9


@pytest.mark.slow
def test_fibonacci_power_walk_at_thirty_steps(no_inverse_checks):
    measure = ProbMeasure.point_mass(FIBONACCI)
    drift = drift_experiment(measure, 0, 30, 1).values("drift", 30)[0]
    assert drift == pytest.approx(math.log(2178309) / 30)
    assert abs(drift - LOG_GOLDEN) <= 1e-2
    conjugacy = conjugacy_growth_experiment(measure, [cyclic_reduce(parse_word("a", 2))], 0, 30, 1)
    value = conjugacy.values("conjugacy:a", 30)[0]
    assert value == pytest.approx(math.log(1346269) / 30)
    assert abs(value - LOG_GOLDEN) <= 1.1e-2


@pytest.mark.slow
def test_matrix_norm_and_spectral_radius_agree_at_a_thousand_steps():
    guivarch = matrix_experiments(SL2_MEASURE, 20240607, 1000, 200)
    norms, radii = by_path(guivarch, "norm", 1000), by_path(guivarch, "rho_lower", 1000)
    assert len(norms) == 200
    assert np.median([abs(norms[p] - radii[p]) for p in norms]) <= 0.01
    furstenberg = matrix_experiments(SL2_MEASURE, 20240607, 1000, 200, mode="furstenberg", vector=(1, 0))
    norms, vectors = by_path(furstenberg, "norm", 1000), by_path(furstenberg, "vector", 1000)
    assert np.median([abs(norms[p] - vectors[p]) for p in norms]) <= 0.02


@pytest.mark.slow
def test_f3_spectral_bracket_tracks_drift(no_inverse_checks):
    spectral = spectral_experiment(F3_MEASURE, 20240607, 25, 100, k_max=2)
    drift = np.median(list(by_path(drift_experiment(F3_MEASURE, 20240607, 25, 100), "drift", 25).values()))
    upper = np.median(list(by_path(spectral, "upper_k1", 25).values()))
    assert abs(upper - drift) <= 0.1 * drift
    seeds = [cyclic_reduce(parse_word("a", 3))]
    conjugacy = conjugacy_growth_experiment(F3_MEASURE, seeds, 20240607, 25, 100)
    assert abs(np.median(list(by_path(conjugacy, "conjugacy:a", 25).values())) - drift) <= 0.1 * drift
    by_key = {(r.path_id, r.n, r.estimator): r.value for r in spectral.records if r.status != "truncated"}
    for (path_id, n, estimator), value in by_key.items():
        if estimator == "lower":
            assert value <= by_key[(path_id, n, "upper")] + 1e-9


@pytest.mark.slow
def test_f3_gromov_products_decay_against_drift(no_inverse_checks):
    series = gromov_decay_experiment(F3_MEASURE, 20240607, 40, 40)
    assert not series.truncated_paths()
    gromov = np.median(series.values("gromov", 40))
    drift = np.median(series.values("drift", 40))
    assert gromov <= 0.1 * drift


@pytest.mark.slow
def test_abelianized_growth_stays_below_upper_on_f2_walks(no_inverse_checks, caplog):
    series = spectral_experiment(F2_MEASURE, 20240607, 20, 1000, k_max=2)
    upper = {(r.path_id, r.n): r.value for r in series.records if r.estimator == "upper"}
    for record in series.records:
        if record.estimator == "abelian_guivarch":
            assert record.value <= upper[(record.path_id, record.n)] + 1e-9
    agreement = series.values("agreement")
    assert agreement
    disagreements = sum(1 for value in agreement if value > config.AGREEMENT_TOL)
    assert caplog.text.count("disagrees with the abelianization") == disagreements
