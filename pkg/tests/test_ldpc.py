import os
import subprocess
import sys
from importlib import resources

import numpy as np
import pytest

from swhmm.errors import ConstructionError, DimensionError, FormatError
from swhmm.ldpc import (
    DegreeDistribution,
    ParityCheckMatrix,
    build_code,
    decode_syndrome,
    degree_profile,
    girth,
    has_four_cycle,
    load_ensemble,
    rank_gf2,
    realized_rate,
    shipped_ensembles,
    syndrome,
    syndrome_columns,
)
from swhmm.ldpc import bp

from oracles import coset_map, dense_rank_gf2, random_small_code


@pytest.fixture(scope="module")
def code2000():
    return build_code(DegreeDistribution.regular(3, 6), 2000, seed=7)


# --- degree distributions ---------------------------------------------------


def test_regular_design_rate():
    assert DegreeDistribution.regular(3, 6).design_rate == pytest.approx(0.5)
    assert DegreeDistribution.regular(3, 4).design_rate == pytest.approx(0.25)


def test_degree_distribution_validation():
    with pytest.raises(ConstructionError):
        DegreeDistribution(((3, 0.5),), ((6, 1.0),))
    with pytest.raises(ConstructionError):
        DegreeDistribution(((3, 1.0),), ((1, 1.0),))
    with pytest.raises(ConstructionError):
        DegreeDistribution(((6, 1.0),), ((3, 1.0),))


@pytest.mark.parametrize("rate", [0.2, 0.31, 0.5, 0.7])
def test_concentrated_hits_rate(rate):
    dd = DegreeDistribution.concentrated(((2, 0.3), (3, 0.3), (8, 0.4)), rate)
    assert dd.design_rate == pytest.approx(rate, abs=1e-12)
    degs = [d for d, _ in dd.check_edges]
    assert max(degs) - min(degs) <= 1


def test_node_fractions_sum_to_one():
    dd = load_ensemble("irr2-3-8")
    assert sum(dd.variable_node_fractions().values()) == pytest.approx(1.0)
    assert sum(dd.check_node_fractions().values()) == pytest.approx(1.0)


def test_dict_round_trip():
    dd = load_ensemble("desk-r069")
    assert DegreeDistribution.from_dict(dd.to_dict()) == dd


def test_shipped_ensembles_load_and_are_labelled():
    ids = shipped_ensembles()
    assert {"reg36", "irr2-3-8", "irr2-3-12", "desk-r069", "desk-r062", "desk-r045"} <= set(ids)
    for i in ids:
        dd = load_ensemble(i)
        assert dd.name == i
        assert dd.note.startswith("Repo-supplied")


def test_unknown_ensemble():
    with pytest.raises(FormatError):
        load_ensemble("no-such-ensemble")


# --- construction -------------------------------------------------------------


def test_degree_profile_counts():
    dd = load_ensemble("irr2-3-8")
    var, chk = degree_profile(dd, 2000)
    assert var.size == 2000
    assert var.sum() == chk.sum()
    frac = dd.variable_node_fractions()
    for d, f in frac.items():
        assert abs(np.count_nonzero(var == d) - f * 2000) <= 1


def test_built_code_follows_profile(code2000):
    assert np.all(code2000.variable_degrees() == 3)
    assert np.all(code2000.check_degrees() == 6)
    assert code2000.m == 1000


def test_irregular_build_follows_profile():
    dd = load_ensemble("desk-r062")
    var, chk = degree_profile(dd, 2000)
    code = build_code(dd, 2000, seed=3)
    assert np.array_equal(code.variable_degrees(), var)
    assert np.array_equal(np.sort(code.check_degrees()), np.sort(chk))


def test_build_is_seeded(code2000):
    dd = DegreeDistribution.regular(3, 6)
    assert build_code(dd, 2000, seed=7) == code2000
    assert build_code(dd, 2000, seed=8) != code2000


def test_no_short_cycles_at_2000(code2000):
    assert not has_four_cycle(code2000)
    assert girth(code2000, limit=8) >= 6


def test_tiny_code_degrees():
    # with 12 bits and 6 checks a (3,6) graph cannot avoid four-cycles;
    # only the degree profile is guaranteed
    code = build_code(DegreeDistribution.regular(3, 6), 12, seed=0)
    assert np.all(code.variable_degrees() == 3)
    assert np.all(code.check_degrees() == 6)


def test_unrealizable_profile():
    with pytest.raises(ConstructionError):
        build_code(DegreeDistribution.regular(3, 6), 1, seed=0)


def test_construction_backends_agree():
    script = ("from swhmm.ldpc import *;"
              "print(build_code(load_ensemble('irr2-3-8'), 300, seed=5).git_hash())")
    out = {}
    for flag in ("1", "0"):
        env = dict(os.environ, SWHMM_NUMBA=flag)
        out[flag] = subprocess.run([sys.executable, "-c", script], env=env, check=True,
                                   capture_output=True, text=True).stdout.strip()
    assert out["1"] == out["0"]


# --- matrix container --------------------------------------------------------------


def test_rejects_malformed_rows():
    with pytest.raises(ConstructionError):
        ParityCheckMatrix(3, [[0, 1], []])
    with pytest.raises(ConstructionError):
        ParityCheckMatrix(3, [[0, 0, 1], [2]])
    with pytest.raises(ConstructionError):
        ParityCheckMatrix(3, [[0, 3]])
    with pytest.raises(ConstructionError):
        ParityCheckMatrix(3, [[0, 1]])


def test_dense_round_trip():
    rng = np.random.default_rng(0)
    code = random_small_code(rng, 5, 9)
    assert ParityCheckMatrix.from_dense(code.to_dense()) == code


def test_syndrome_matches_dense(code2000):
    rng = np.random.default_rng(1)
    H = code2000.to_dense().astype(np.int64)
    Y = rng.integers(0, 2, (2000, 4)).astype(np.uint8)
    cols = syndrome_columns(code2000, Y)
    for j in range(4):
        expect = H @ Y[:, j] % 2
        assert syndrome(code2000, Y[:, j]) == expect
        assert np.array_equal(cols[:, j], expect)


def test_syndrome_is_linear(code2000):
    rng = np.random.default_rng(2)
    a, b = rng.integers(0, 2, (2, 2000)).astype(np.uint8)
    sa, sb, sab = (syndrome(code2000, v).bits for v in (a, b, a ^ b))
    assert np.array_equal(sa ^ sb, sab)


def test_syndrome_dimension_check(code2000):
    with pytest.raises(DimensionError):
        syndrome(code2000, np.zeros(1999, np.uint8))


@pytest.mark.parametrize("seed", range(20))
def test_rank_matches_dense_elimination(seed):
    rng = np.random.default_rng(seed)
    code = random_small_code(rng, int(rng.integers(3, 12)), int(rng.integers(6, 20)), 0.3)
    assert rank_gf2(code) == dense_rank_gf2(code.to_dense())


def test_rank_of_built_code(code2000):
    assert rank_gf2(code2000) == dense_rank_gf2(code2000.to_dense())
    assert realized_rate(code2000) >= 0.5


@pytest.mark.slow
def test_rank_at_full_length():
    code = build_code(DegreeDistribution.regular(3, 6), 100_000, seed=1)
    assert not has_four_cycle(code)
    assert 0.5 <= realized_rate(code) < 0.5001


def test_girth_of_known_graph():
    # a 6-cycle: bits 0,1,2 and checks joining (0,1), (1,2), (2,0)
    assert girth(ParityCheckMatrix(3, [[0, 1], [1, 2], [0, 2]])) == 6
    assert girth(ParityCheckMatrix(2, [[0, 1], [0, 1]])) == 4
    assert girth(ParityCheckMatrix(2, [[0, 1]])) == 0


# --- alist ------------------------------------------------------------------------


def test_alist_round_trip(code2000, tmp_path):
    path = tmp_path / "c.alist"
    code2000.save_alist(path)
    assert ParityCheckMatrix.load_alist(path) == code2000


def test_alist_known_text():
    code = ParityCheckMatrix(4, [[0, 1, 2], [1, 3]])
    text = "4 2\n2 3\n1 2 1 1\n3 2\n1\n1 2\n1\n2\n1 2 3\n2 4\n"
    assert code.to_alist() == text
    assert ParityCheckMatrix.from_alist(text) == code


def test_alist_zero_padding():
    padded = "4 2\n2 3\n1 2 1 1\n3 2\n1 0\n1 2\n1 0\n2 0\n1 2 3\n2 4 0\n"
    assert ParityCheckMatrix.from_alist(padded) == ParityCheckMatrix(4, [[0, 1, 2], [1, 3]])


@pytest.mark.parametrize("text", ["", "4 2\n2 3\n1 2", "4 2\n2 3\n1 2 1 1\n3 2\n1\n2\n1\n2\n1 2 3\n2 4\n",
                                  "x y\n"])
def test_alist_malformed(text):
    with pytest.raises(FormatError):
        ParityCheckMatrix.from_alist(text)


def test_shipped_data_is_package_data():
    root = resources.files("swhmm") / "data" / "ensembles"
    assert (root / "reg36.json").is_file()


# --- belief propagation ---------------------------------------------------------------


def test_noiseless_round_trip(code2000):
    rng = np.random.default_rng(3)
    for _ in range(1000):
        y = rng.integers(0, 2, 2000).astype(np.uint8)
        llr = np.where(y == 1, 20.0, -20.0)
        res = decode_syndrome(code2000, llr, syndrome(code2000, y))
        assert res.converged and res.iterations == 0
        assert np.array_equal(res.estimate, y)


def test_converged_implies_syndrome(code2000):
    rng = np.random.default_rng(4)
    for p in (0.02, 0.06, 0.09, 0.12):
        for _ in range(5):
            e = (rng.random(2000) < p).astype(np.uint8)
            s = syndrome(code2000, e)
            res = decode_syndrome(code2000, np.full(2000, np.log(p / (1 - p))), s)
            if res.converged:
                assert syndrome(code2000, res.estimate) == s.bits


def test_decodes_light_noise(code2000):
    rng = np.random.default_rng(5)
    e = (rng.random(2000) < 0.03).astype(np.uint8)
    res = decode_syndrome(code2000, np.full(2000, np.log(0.03 / 0.97)), syndrome(code2000, e))
    assert res.converged and np.array_equal(res.estimate, e)


def test_coset_shift(code2000):
    rng = np.random.default_rng(6)
    e = (rng.random(2000) < 0.05).astype(np.uint8)
    v = rng.integers(0, 2, 2000).astype(np.uint8)
    llr = np.log(0.05 / 0.95) * (1 + rng.random(2000))
    base = decode_syndrome(code2000, llr, syndrome(code2000, e))
    shifted = decode_syndrome(code2000, np.where(v == 1, -llr, llr), syndrome(code2000, e ^ v))
    assert base.converged == shifted.converged
    assert base.iterations == shifted.iterations
    assert np.array_equal(base.estimate ^ v, shifted.estimate)


def test_small_codes_match_coset_map():
    rng = np.random.default_rng(7)
    agree = converged = 0
    for _ in range(200):
        code = random_small_code(rng)
        p = rng.uniform(0.02, 0.3, code.n)
        e = (rng.random(code.n) < p).astype(np.uint8)
        llr = np.log(p / (1 - p))
        s = syndrome(code, e).bits
        res = decode_syndrome(code, llr, s)
        if res.converged:
            converged += 1
            assert np.array_equal(code.to_dense() @ res.estimate % 2, s)
            agree += np.array_equal(res.estimate, coset_map(code, llr, s))
    assert converged > 50
    assert agree >= 0.9 * converged


def test_min_sum_decodes_light_noise(code2000):
    rng = np.random.default_rng(8)
    e = (rng.random(2000) < 0.02).astype(np.uint8)
    res = decode_syndrome(code2000, np.full(2000, np.log(0.02 / 0.98)), syndrome(code2000, e),
                          min_sum=True)
    assert res.converged and np.array_equal(res.estimate, e)


@pytest.mark.parametrize("min_sum", [False, True])
def test_bp_backends_agree(code2000, min_sum):
    rng = np.random.default_rng(9)
    e = (rng.random(2000) < 0.07).astype(np.uint8)
    llr = np.log(0.07 / 0.93) * rng.uniform(0.5, 1.5, 2000)
    args = (code2000.check_ptr, code2000.check_bits, code2000.var_ptr, code2000.var_edges,
            -llr, syndrome(code2000, e).bits, 60, min_sum)
    h1, ok1, it1 = bp._bp_numba(*args)
    h2, ok2, it2 = bp._bp_numpy(*args)
    assert ok1 == ok2 and it1 == it2
    assert np.array_equal(np.asarray(h1), np.asarray(h2))


def test_decode_input_checks(code2000):
    with pytest.raises(DimensionError):
        decode_syndrome(code2000, np.zeros(5), np.zeros(1000, np.uint8))
    with pytest.raises(DimensionError):
        decode_syndrome(code2000, np.zeros(2000), np.zeros(999, np.uint8))
    with pytest.raises(ValueError):
        decode_syndrome(code2000, np.zeros(2000), np.zeros(1000, np.uint8), max_iters=0)


def test_failure_is_reported(code2000):
    rng = np.random.default_rng(10)
    e = (rng.random(2000) < 0.2).astype(np.uint8)
    res = decode_syndrome(code2000, np.full(2000, np.log(0.2 / 0.8)), syndrome(code2000, e),
                          max_iters=20)
    assert not res.converged and res.iterations == 20


def test_realized_rate_small_cases():
    H = np.array([[1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0],
                  [0, 1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0],
                  [0, 0, 1, 1, 0, 0, 0, 0, 1, 0, 0, 0],
                  [0, 0, 0, 1, 1, 0, 0, 0, 0, 1, 0, 0],
                  [0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 1, 0],
                  [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1]])
    assert realized_rate(ParityCheckMatrix.from_dense(H)) == pytest.approx(0.5)
    dup = H.copy()
    dup[5] = dup[4]
    dup[5, 11] = 0
    dup[4, 11] = 0
    dup[0, 11] = 1  # keep bit 11 covered
    assert dense_rank_gf2(dup) == 5
    assert realized_rate(ParityCheckMatrix.from_dense(dup)) == pytest.approx(7 / 12)


def test_realized_rate_near_design(code2000):
    assert 0.499 <= realized_rate(code2000) <= 0.501
