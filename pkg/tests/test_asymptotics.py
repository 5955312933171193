"""Scaling-limit layer: closed-form evaluators against independent
oracles, and structural checks of the desk-scale experiments."""

import math

import numpy as np
import pytest

from dynvertex.asymptotics import (
    AsymptoticShape,
    GammaLaw,
    experiment,
    gamma_moment,
    heat_profile,
    heat_profile_gaussian,
    lln_shapes,
)
from dynvertex.errors import OutOfDomain

Q = 0.25


class TestHeatProfile:
    @pytest.mark.parametrize("r,J", [(1.0, 1), (2.0, 3)])
    def test_origin_value(self, r, J):
        assert heat_profile(0.0, r, J) == pytest.approx(
            math.sqrt(r * J / (2 * math.pi)), abs=1e-8)

    @pytest.mark.parametrize("s,r,J", [
        (-0.7, 1.3, 1), (0.4, 0.6, 2), (-1.2, 2.0, 3), (0.9, 3.7, 2),
    ])
    def test_matches_gaussian_smoothing(self, s, r, J):
        # Independent oracle: convolve the wedge initial data with the
        # heat kernel of variance rJ/(J+1)^2.
        assert heat_profile(s, r, J) == pytest.approx(
            heat_profile_gaussian(s, r, J), abs=1e-10)

    def test_small_time_wedge(self):
        assert heat_profile(-0.3, 1e-4, 1) == pytest.approx(0.6, abs=1e-3)
        assert heat_profile(0.3, 1e-4, 1) == pytest.approx(0.0, abs=1e-3)

    def test_far_right_decay(self):
        assert abs(heat_profile(5.0, 1.0, 1)) < 1e-4

    def test_positive_time_required(self):
        with pytest.raises(ValueError):
            heat_profile(0.0, 0.0, 1)

    @pytest.mark.parametrize("s,r,J", [(0.3, 1.0, 1), (-0.5, 0.8, 2)])
    def test_pde_residual(self, s, r, J):
        h = 1e-3
        dr = (heat_profile(s, r + h, J) - heat_profile(s, r - h, J)) / (2 * h)
        dss = (heat_profile(s + h, r, J) - 2 * heat_profile(s, r, J)
               + heat_profile(s - h, r, J)) / h ** 2
        assert abs(2 * (J + 1) ** 2 * dr - J * dss) < 1e-4


class TestGammaLaw:
    def test_moment_values(self):
        law = GammaLaw(a=3.0, b=2.0)
        assert gamma_moment(law, 0) == 1.0
        assert gamma_moment(law, 1) == pytest.approx(1.5)
        assert gamma_moment(law, 2) == pytest.approx(3.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            GammaLaw(a=0.0, b=1.0)
        with pytest.raises(ValueError):
            gamma_moment(GammaLaw(1.0, 1.0), -1)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_sampler_consistent(self, m):
        law = GammaLaw(a=3.0, b=1.7)
        rng = np.random.default_rng(np.random.SeedSequence(12))
        draws = law.sample(200000, rng) ** m
        stderr = draws.std(ddof=1) / math.sqrt(draws.size)
        assert abs(draws.mean() - gamma_moment(law, m)) < 4 * stderr


class TestLlnShapes:
    def test_density_edges(self):
        p = 1.0 / (1.0 + Q)
        eps = 1e-12
        assert lln_shapes(Q, "m", p - eps) == pytest.approx(0.0, abs=1e-6)
        assert lln_shapes(Q, "m", 1 - p + eps) == pytest.approx(
            (1 - Q) / (1 + Q), abs=1e-6)

    def test_slope_edges(self):
        half = 0.5 * (1 - Q) / (1 + Q)
        eps = 1e-12
        assert lln_shapes(Q, "M", half - eps) == pytest.approx(
            2 * half, abs=1e-5)
        assert lln_shapes(Q, "M", -half + eps) == pytest.approx(
            2 * half, abs=1e-5)

    def test_f_positive_inside(self):
        for eta in (0.35, 0.5, 0.72):
            assert lln_shapes(Q, "f", eta) > 0
        for s in (-0.2, 0.0, 0.25):
            assert lln_shapes(Q, "F", s) > 0

    def test_out_of_domain(self):
        with pytest.raises(OutOfDomain):
            lln_shapes(Q, "m", 0.9)
        with pytest.raises(OutOfDomain):
            lln_shapes(Q, "M", 0.5)
        with pytest.raises(OutOfDomain):
            lln_shapes(1.5, "m", 0.5)
        with pytest.raises(ValueError):
            lln_shapes(Q, "bogus", 0.5)

    def test_shape_bundle(self):
        shape = AsymptoticShape(J=1, q=Q, gamma=3.0)
        assert shape.m(0.5) == lln_shapes(Q, "m", 0.5)
        assert shape.F(0.1) == lln_shapes(Q, "F", 0.1)
        assert shape.heat(0.0, 1.0) == pytest.approx(
            math.sqrt(1 / (2 * math.pi)), abs=1e-10)
        law = shape.gamma_law(2.0)
        assert law.a == 3.0
        assert law.b == pytest.approx(math.sqrt(math.pi))


class TestExperiments:
    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            experiment("bogus")

    def test_heat_lln_small(self):
        rep = experiment("heat_lln", {"T": 400, "samples": 4000}, seed=1)
        assert rep["kind"] == "heat_lln"
        assert rep["n_samples"] == 4000
        # loose finite-size gate at this tiny horizon
        assert rep["rel_error"] < 0.25
        assert rep["ci95"][0] < rep["mc_mean"] < rep["ci95"][1]

    def test_heat_lln_deterministic(self):
        a = experiment("heat_lln", {"T": 64, "samples": 500}, seed=9)
        b = experiment("heat_lln", {"T": 64, "samples": 500}, seed=9)
        assert a == b

    def test_dynamic_gamma_small(self):
        rep = experiment("dynamic_gamma",
                         {"T": 800, "samples": 2000, "gamma": 3.0}, seed=2)
        assert set(rep["moments"]) == {1, 2}
        for d in rep["moments"].values():
            assert d["mc_stderr"] > 0
            # slow quartic-scale convergence: only a coarse gate here
            assert d["rel_error"] < 0.8

    def test_kpz_exponent_structure(self):
        rep = experiment("kpz_exponent",
                         {"T_list": (100, 200, 400), "samples": 800},
                         seed=3)
        stds = [p["std"] for p in rep["points"]]
        assert all(b > a for a, b in zip(stds, stds[1:]))
        assert 0.1 < rep["fitted_exponent"] < 0.6

    def test_f_collapse_structure(self):
        rep = experiment("f_collapse",
                         {"T": 400, "samples": 800}, seed=4)
        assert len(rep["rows"]) == 3
        for row in rep["rows"]:
            assert row["normalized_std"] > 0
            assert abs(row["lln_mean"] - row["lln_target"]) < 0.05
        assert rep["pairwise_spread"] < 0.5

    def test_corner_quartic_small(self):
        rep = experiment("corner_quartic",
                         {"T": 800, "samples": 1500, "m_list": (1,),
                          "chi_samples": 50000}, seed=5)
        chk = rep["gamma_sampler_check"][1]
        assert chk["sigmas"] < 4
        m1 = rep["corner_moments"][1]
        assert m1["corner_target"] == pytest.approx(4 * m1["target"])
        assert m1["rel_error"] < 0.8
