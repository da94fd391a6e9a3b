import math

import numpy as np
import pytest

from ifmsim.circuits import bell_first_pass, bell_second_pass
from ifmsim.fock import Mode, Species, dual_rail_register, load_dual_rail, new_register
from ifmsim.gates import IfmGateSpec, hadamard_bs, ideal_ifm
from ifmsim.measurement import (
    MeasurementError,
    ShotRecord,
    born_probabilities,
    detect,
    postselect,
    sample_survival,
    shot_rng,
)
from ifmsim.oracle import BELL


def plus_state():
    s = new_register([Mode("a", Species.ELECTRON), Mode("b", Species.ELECTRON)], [1, 0])
    r = 1 / math.sqrt(2)
    s.terms = {(1, 0): r, (0, 1): r}
    return s


def test_point_mass():
    s = new_register([Mode("a", Species.ELECTRON), Mode("b", Species.ELECTRON)], [1, 0])
    d = born_probabilities(s, ["a"])
    assert d.probabilities == {(1,): 1.0}
    assert d.lost == 0.0


def test_distribution_includes_loss():
    s = new_register([Mode("x", Species.POSITRON), Mode("a", Species.ELECTRON), Mode("b", Species.ELECTRON)],
                     [1, 1, 0])
    s.terms = {(1, 1, 0): math.sqrt(0.3), (1, 0, 1): math.sqrt(0.7)}
    ideal_ifm(s, IfmGateSpec("x", "a", "b"))
    d = born_probabilities(s, ["b"])
    assert d.lost == pytest.approx(0.3)
    assert d.total() == pytest.approx(1, abs=1e-12)
    assert d.conditional() == pytest.approx({(1,): 1.0})


def test_electron_reaches_f_for_phi_plus():
    s, (p, m) = dual_rail_register([Species.POSITRON, Species.ELECTRON])
    load_dual_rail(s, [p, m], BELL[(0, 0)].vector)
    paths = bell_first_pass(s, p, m)
    bell_second_pass(s, paths)
    assert born_probabilities(s, [paths.F]).probabilities == pytest.approx({(1,): 1.0})


def test_unknown_mode_errors():
    with pytest.raises(Exception):
        born_probabilities(plus_state(), ["zz"])


def test_postselect_projects_and_renormalizes():
    s, p = postselect(plus_state(), "a", 1)
    assert p == pytest.approx(0.5)
    assert s.terms == pytest.approx({(1, 0): 1.0})


def test_postselect_zero_probability():
    s = new_register([Mode("a", Species.ELECTRON), Mode("b", Species.ELECTRON)], [1, 0])
    with pytest.raises(MeasurementError):
        postselect(s, "a", 0)


def test_postselect_keeps_loss_frozen():
    s = plus_state()
    s.terms = {k: v * math.sqrt(0.5) for k, v in s.terms.items()}
    s.loss_probability = 0.5
    postselect(s, "b", 1)
    assert s.loss_probability == 0.5
    assert s.total_probability() == pytest.approx(1, abs=1e-12)


def test_bell_projection_of_phi_plus():
    """Project Phi+ onto the electron landing on F, then H on the positron paths."""
    s, (p, m) = dual_rail_register([Species.POSITRON, Species.ELECTRON])
    load_dual_rail(s, [p, m], BELL[(0, 0)].vector)
    paths = bell_first_pass(s, p, m)
    bell_second_pass(s, paths)
    postselect(s, paths.F, 1)
    hadamard_bs(s, paths.A, paths.B)
    assert born_probabilities(s, [paths.A]).probabilities == pytest.approx({(1,): 1.0})


def test_detect_frequencies_within_three_sigma():
    n = 4000
    ones = sum(detect(plus_state(), "a", shot_rng(11, k))[0] for k in range(n))
    sigma = math.sqrt(n * 0.25)
    assert abs(ones - n / 2) < 3 * sigma


def test_detect_records_outcome_and_collapses():
    rec = ShotRecord(seed=3)
    bit, s = detect(plus_state(), "a", shot_rng(3), rec)
    assert rec.outcomes == [("a", bit)]
    assert len(s.terms) == 1


def test_seed_replay_is_bit_identical():
    a = [detect(plus_state(), "a", shot_rng(42, k))[0] for k in range(200)]
    b = [detect(plus_state(), "a", shot_rng(42, k))[0] for k in range(200)]
    c = [detect(plus_state(), "a", shot_rng(43, k))[0] for k in range(200)]
    assert a == b
    assert a != c


def test_shot_streams_independent():
    x = shot_rng(5, 0).random(4)
    y = shot_rng(5, 1).random(4)
    assert not np.allclose(x, y)


def test_detect_on_fully_lost_state():
    s = plus_state()
    s.terms = {}
    s.loss_probability = 1.0
    with pytest.raises(MeasurementError):
        detect(s, "a", shot_rng(0))


def test_sample_survival():
    assert sample_survival(0.2, 0.2, shot_rng(0))
    assert not sample_survival(0.0, 1.0, shot_rng(0))
    rate = np.mean([sample_survival(0.0, 0.75, shot_rng(9, k)) for k in range(4000)])
    assert rate == pytest.approx(0.25, abs=0.03)
