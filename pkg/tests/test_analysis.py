import numpy as np
import pytest

from swhmm import analysis, hmm
from swhmm.analysis import LlrDensity
from swhmm.errors import FormatError
from swhmm.ldpc import DegreeDistribution


@pytest.fixture(scope="module")
def m1_density():
    return analysis.estimate_llr_density(hmm.preset("M1"), 4, 100_000, seed=3)


def test_grid_has_zero_centre():
    edges = analysis.llr_grid()
    centres = 0.5 * (edges[1:] + edges[:-1])
    assert centres.size == analysis.DEFAULT_BINS
    assert centres[centres.size // 2] == 0.0
    assert centres[0] == pytest.approx(-30.0) and centres[-1] == pytest.approx(30.0)
    with pytest.raises(ValueError):
        analysis.llr_grid(4096)


def test_bsc_capacity():
    for p in (0.01, 0.11, 0.3):
        d = analysis.bsc_density(p)
        assert d.is_symmetric()
        # atoms land on the nearest bin centre; the bin is 0.015 wide
        assert analysis.channel_capacity(d) == pytest.approx(1 - hmm.binary_entropy(p), abs=2e-3)


def test_memoryless_model_gives_bsc():
    p = 0.1
    d = analysis.estimate_llr_density(hmm.single_state(1 - p), 3, 50_000, seed=0)
    s = analysis.symmetrize(d)
    b = analysis.bsc_density(p)
    np.testing.assert_allclose(s.mass_given_e1, b.mass_given_e1, atol=0.01)


def test_symmetrize_idempotent(m1_density):
    s = analysis.symmetrize(m1_density)
    assert s.is_symmetric()
    s2 = analysis.symmetrize(s)
    np.testing.assert_allclose(s2.mass_given_e0, s.mass_given_e0, atol=1e-15)
    np.testing.assert_allclose(s2.mass_given_e1, s.mass_given_e1, atol=1e-15)


def test_capacity_relabel_invariance(m1_density):
    d = m1_density
    flipped = LlrDensity(d.bin_edges, d.mass_given_e1[::-1].copy(), d.mass_given_e0[::-1].copy(),
                         1 - d.prior_one)
    assert analysis.channel_capacity(flipped) == pytest.approx(analysis.channel_capacity(d),
                                                                abs=1e-12)


def test_capacity_preserved_by_symmetrize(m1_density):
    s = analysis.symmetrize(m1_density)
    assert analysis.channel_capacity(s) == pytest.approx(analysis.channel_capacity(m1_density),
                                                         abs=1e-9)


def test_capacity_tracks_conditional_entropy(m1_density):
    h = hmm.conditional_entropy(hmm.preset("M1"), 4)
    assert analysis.channel_capacity(m1_density) == pytest.approx(1 - h, abs=0.01)
    assert analysis.mutual_information(m1_density) == pytest.approx(1 - h, abs=0.01)


@pytest.mark.parametrize("name", ["M1", "M2", "M3"])
def test_density_estimate_converges(name):
    p = hmm.preset(name)
    c1 = analysis.channel_capacity(analysis.estimate_llr_density(p, 4, 100_000, seed=1))
    c2 = analysis.channel_capacity(analysis.estimate_llr_density(p, 4, 200_000, seed=2))
    assert abs(c1 - c2) < 0.003


def test_csv_round_trip(m1_density, tmp_path):
    path = tmp_path / "d.csv"
    m1_density.save_csv(path)
    back = LlrDensity.load_csv(path)
    np.testing.assert_allclose(back.mass_given_e0, m1_density.mass_given_e0, atol=1e-15)
    np.testing.assert_allclose(back.centers, m1_density.centers, atol=1e-9)
    assert back.prior_one == pytest.approx(m1_density.prior_one)
    assert path.read_text().splitlines()[1] == "bin_center,mass_given_e0,mass_given_e1"


def test_csv_malformed():
    with pytest.raises(FormatError):
        LlrDensity.from_csv("a,b\n1,2\n")


def test_density_validation():
    edges = analysis.llr_grid(5)
    with pytest.raises(ValueError):
        LlrDensity(edges, np.ones(5) / 5, np.ones(4) / 4)
    with pytest.raises(ValueError):
        LlrDensity(edges, np.ones(5), np.ones(5) / 5)


def test_blur_keeps_symmetry(m1_density):
    s = analysis.symmetrize(m1_density)
    b = analysis.blur(s, 20)
    assert b.is_symmetric(1e-12)
    assert analysis.channel_capacity(b) < analysis.channel_capacity(s)


def test_de_error_probability_nonincreasing():
    res = analysis.de_run(DegreeDistribution.regular(3, 6), analysis.bsc_density(0.07))
    assert res.converged
    assert all(b <= a * (1 + 1e-9) for a, b in zip(res.history, res.history[1:]))


def test_de_below_and_above_threshold():
    dd = DegreeDistribution.regular(3, 6)
    assert analysis.de_run(dd, analysis.bsc_density(0.08)).converged
    assert not analysis.de_run(dd, analysis.bsc_density(0.09)).converged


def test_de_rejects_asymmetric(m1_density):
    with pytest.raises(ValueError):
        analysis.de_threshold(DegreeDistribution.regular(3, 6), m1_density)


def test_blur_never_raises_achievable_rate():
    dd = DegreeDistribution.regular(3, 6)
    base = analysis.bsc_density(0.05)
    r0 = analysis.de_threshold(dd, base, resolution=5e-3)
    r1 = analysis.de_threshold(dd, analysis.blur(base, 60), resolution=5e-3)
    assert r0.converged and r1.converged
    assert r1.achievable_rate >= r0.achievable_rate - 5e-3


def test_threshold_csv_row():
    res = analysis.ThresholdResult(0.5469793, True, 100, 1e-6, 0.4530207)
    text = analysis.threshold_csv_row("M1", 4, "irr2-3-8", res, 1e-5)
    assert text == ("model,M,ensemble,achievable_rate,target_ber\n"
                    "M1,4,irr2-3-8,0.546979,1.000e-05\n")


def test_symmetrize_two_atoms():
    edges = analysis.llr_grid(41, 10.0)
    centres = 0.5 * (edges[1:] + edges[:-1])
    a, b = 20 + 6, 20 - 4  # bins of +3.0 and -2.0
    m1 = np.zeros(41)
    m1[a] = 1.0
    m0 = np.zeros(41)
    m0[b] = 1.0
    s = analysis.symmetrize(LlrDensity(edges, m0, m1))
    assert s.mass_given_e1[a] == pytest.approx(0.5)
    assert s.mass_given_e1[40 - b] == pytest.approx(0.5)
    assert centres[40 - b] == pytest.approx(2.0)


def test_symmetrize_keeps_m3_capacity():
    d = analysis.estimate_llr_density(hmm.preset("M3"), 4, 100_000, seed=2)
    before = analysis.channel_capacity(d)
    after = analysis.channel_capacity(analysis.symmetrize(d))
    assert abs(before - after) < 0.005


def test_de_perfect_density():
    edges = analysis.llr_grid()
    m0 = np.zeros(edges.size - 1)
    m0[0] = 1.0
    perfect = LlrDensity(edges, m0, m0[::-1].copy())
    res = analysis.de_run(DegreeDistribution.regular(3, 6), perfect)
    assert res.converged and res.iterations <= 2
    assert res.residual_error < 1e-12
