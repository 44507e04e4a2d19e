from itertools import product
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from strategies import automorphisms
from utils.errors import SampleError, WordBudgetExceeded
from utils.free_group import (
    Automorphism,
    CyclicWord,
    apply_cyclic,
    compose,
    invert,
    nielsen_library,
    parse_automorphism,
    power,
    signed_permutation,
)
from utils.outer_metric import (
    FiniteMetricSample,
    candidates,
    chain_dist,
    delta_estimate,
    dist,
    four_point_delta,
    gromov_product,
    highness_ratio,
    orbit_distance,
    orbit_sample,
    sym_dist,
    weighted_dist,
)

TOL = 1e-9
TRANSVECTION = parse_automorphism("a->ab; b->b | a->aB; b->b")
FIBONACCI = parse_automorphism("a->ab; b->a | a->b; b->Ba")


def cyclic_words(rank, max_length):
    """Every cyclically reduced word of length 1..max_length, by brute force."""
    letters = [i for i in range(-rank, rank + 1) if i]
    for length in range(1, max_length + 1):
        for raw in product(letters, repeat=length):
            if any(raw[i] == -raw[i + 1] for i in range(length - 1)):
                continue
            if length > 1 and raw[0] == -raw[-1]:
                continue
            yield CyclicWord(raw, rank)


def test_candidate_loops():
    assert [str(loop) for loop in candidates(2).loops] == ["a", "b", "ab", "aB"]
    assert len(candidates(3)) == 9
    with pytest.raises(ValueError):
        candidates(1)


def test_transvection_distance():
    assert dist(TRANSVECTION) == pytest.approx(math.log(2))
    assert sym_dist(TRANSVECTION) == pytest.approx(2 * math.log(2))
    assert dist(invert(TRANSVECTION)) == pytest.approx(math.log(2))


def test_fibonacci_distance():
    assert dist(FIBONACCI) == pytest.approx(math.log(2))
    assert dist(invert(FIBONACCI)) == pytest.approx(math.log(2))


def test_isometries_have_zero_distance():
    assert dist(Automorphism.identity(3)) == 0.0
    assert dist(signed_permutation([1, 2, 0], [-1, 1, -1])) == 0.0
    conjugation = parse_automorphism("a->a; b->abA | a->a; b->Aba")
    assert dist(conjugation) == 0.0


def test_nielsen_moves_have_positive_distance():
    for name, phi in nielsen_library(3).items():
        if name[0] in "IP":
            assert dist(phi) == 0.0, name
        else:
            assert dist(phi) == pytest.approx(math.log(2)), name


def test_orbit_distance_and_gromov_product():
    assert orbit_distance(FIBONACCI, FIBONACCI) == 0.0
    assert orbit_distance(FIBONACCI, Automorphism.identity(2)) == pytest.approx(dist(FIBONACCI))
    assert gromov_product(FIBONACCI, FIBONACCI) == pytest.approx(sym_dist(FIBONACCI))
    assert gromov_product(Automorphism.identity(2), FIBONACCI) == pytest.approx(0.0, abs=TOL)


def test_weighted_distance_with_unit_lengths_matches_dist():
    assert weighted_dist(FIBONACCI, [1.0, 1.0]) == pytest.approx(dist(FIBONACCI))
    with pytest.raises(ValueError):
        weighted_dist(FIBONACCI, [1.0, 0.0])


def test_fibonacci_perron_lengths_give_exact_stretch():
    golden = (1 + math.sqrt(5)) / 2
    assert weighted_dist(FIBONACCI, [golden, 1.0]) == pytest.approx(math.log(golden))


@given(automorphisms(3), automorphisms(3))
def test_triangle_inequality(theta, psi):
    assert dist(compose(theta, psi)) <= dist(theta) + dist(psi) + TOL


@given(automorphisms(3))
def test_sym_dist_is_symmetric(theta):
    assert sym_dist(theta) == pytest.approx(sym_dist(invert(theta)))
    assert dist(theta) >= 0.0


@given(automorphisms(2, max_size=4))
def test_candidates_attain_the_supremum_in_rank_2(theta):
    bound = dist(theta)
    for g in cyclic_words(2, 6):
        assert math.log(len(apply_cyclic(theta, g)) / len(g)) <= bound + TOL


@given(automorphisms(3, max_size=3))
def test_candidates_attain_the_supremum_in_rank_3(theta):
    bound = dist(theta)
    for g in cyclic_words(3, 4):
        assert math.log(len(apply_cyclic(theta, g)) / len(g)) <= bound + TOL


@given(automorphisms(3), automorphisms(3))
def test_gromov_product_is_nonnegative(phi, psi):
    value = gromov_product(phi, psi)
    assert value >= -TOL
    assert value <= min(sym_dist(phi), sym_dist(psi)) + TOL


def test_four_point_delta_of_a_tree_is_zero():
    star = np.array([
        [0, 1, 1, 1, 1],
        [1, 0, 2, 2, 2],
        [1, 2, 0, 2, 2],
        [1, 2, 2, 0, 2],
        [1, 2, 2, 2, 0],
    ], dtype=float)
    sample = FiniteMetricSample(("c", "x", "y", "z", "w"), star)
    assert four_point_delta(sample) == pytest.approx(0.0, abs=1e-12)
    assert four_point_delta(sample, exhaustive_limit=4, subsample=500, seed=3) == pytest.approx(0.0, abs=1e-12)


def test_four_point_delta_of_l1_square():
    square = np.array([
        [0, 1, 2, 1],
        [1, 0, 1, 2],
        [2, 1, 0, 1],
        [1, 2, 1, 0],
    ], dtype=float)
    assert four_point_delta(FiniteMetricSample(("p0", "p1", "p2", "p3"), square)) == pytest.approx(1.0)


def test_finite_metric_sample_validation():
    with pytest.raises(SampleError):
        FiniteMetricSample(("x", "y"), np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(SampleError):
        FiniteMetricSample(("x", "y", "z"), np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]]))
    with pytest.raises(SampleError):
        FiniteMetricSample(("x",), np.array([[1.0]]))
    with pytest.raises(SampleError):
        four_point_delta(FiniteMetricSample(("x", "y"), np.array([[0.0, 1.0], [1.0, 0.0]])))


def test_orbit_sample_is_a_valid_metric(tmp_path):
    library = nielsen_library(2)
    markings = [Automorphism.identity(2), library["R12"], compose(library["R12"], library["l21"]), FIBONACCI]
    sample = orbit_sample(markings, ["y0", "R", "Rl", "fib"])
    assert sample.distances[0, 1] == pytest.approx(sym_dist(library["R12"]))
    assert four_point_delta(sample) >= 0.0
    path = tmp_path / "sample.csv"
    sample.to_csv(str(path))
    assert path.read_text().splitlines()[0] == ",y0,R,Rl,fib"


def test_highness_ratio():
    with pytest.raises(ValueError):
        highness_ratio(FIBONACCI, [])
    assert highness_ratio(FIBONACCI, [FIBONACCI]) == 1.0
    assert highness_ratio(Automorphism.identity(2), [TRANSVECTION]) == pytest.approx(2.0)


@given(automorphisms(3), automorphisms(3), automorphisms(3))
def test_chain_dist_matches_the_composed_automorphism(theta, psi, chi):
    assert chain_dist((theta, psi, chi)) == pytest.approx(dist(compose(compose(theta, psi), chi)))
    assert chain_dist((theta,)) == pytest.approx(dist(theta))


def test_chain_dist_needs_a_factor():
    with pytest.raises(ValueError):
        chain_dist(())


def test_chain_dist_measures_the_outer_image_past_the_budget():
    phi = power(FIBONACCI, 10)
    with pytest.raises(WordBudgetExceeded):
        dist(power(FIBONACCI, 20), budget=300)
    assert chain_dist((phi, phi), budget=300) == pytest.approx(dist(power(FIBONACCI, 20)))


def test_gromov_product_with_the_inverse_stays_within_budget():
    phi = power(FIBONACCI, 8)
    with pytest.raises(WordBudgetExceeded):
        compose(phi, phi, budget=200)
    expected = 0.5 * (sym_dist(phi) + sym_dist(invert(phi)) - sym_dist(power(phi, 2)))
    assert gromov_product(phi, invert(phi), budget=200) == pytest.approx(expected)


@given(automorphisms(3), automorphisms(3), automorphisms(3))
def test_orbit_distance_is_left_invariant(chi, phi, psi):
    moved = orbit_distance(compose(chi, phi), compose(chi, psi))
    assert moved == pytest.approx(orbit_distance(phi, psi))


@given(automorphisms(3), st.lists(automorphisms(3), min_size=1, max_size=4))
def test_highness_ratio_is_at_least_one(theta, others):
    ratio = highness_ratio(theta, others)
    assert ratio >= 1.0
    assert math.isfinite(ratio)


def test_delta_estimate_reports_how_quadruples_were_checked():
    square = np.array([
        [0, 1, 2, 1],
        [1, 0, 1, 2],
        [2, 1, 0, 1],
        [1, 2, 1, 0],
    ], dtype=float)
    sample = FiniteMetricSample(("p0", "p1", "p2", "p3"), square)
    exhaustive = delta_estimate(sample)
    assert exhaustive.exhaustive
    assert exhaustive.quadruples == 4 ** 4
    assert exhaustive.delta == pytest.approx(1.0)
    sampled = delta_estimate(sample, exhaustive_limit=3, subsample=500, seed=7)
    assert not sampled.exhaustive
    assert sampled.quadruples == 500
    assert 0.0 <= sampled.delta <= 1.0 + TOL


@pytest.mark.slow
@settings(max_examples=8)
@given(automorphisms(2, max_size=4))
def test_candidates_attain_the_supremum_up_to_length_8(theta):
    bound = dist(theta)
    for g in cyclic_words(2, 8):
        assert math.log(len(apply_cyclic(theta, g)) / len(g)) <= bound + TOL


@pytest.mark.slow
@settings(max_examples=4)
@given(automorphisms(3, max_size=4))
def test_candidates_attain_the_supremum_up_to_length_6_in_rank_3(theta):
    bound = dist(theta)
    for g in cyclic_words(3, 6):
        assert math.log(len(apply_cyclic(theta, g)) / len(g)) <= bound + TOL
