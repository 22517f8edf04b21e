import numpy as np
import pytest

from fbst import (
    Decision,
    GridModel,
    check_logical_properties,
    coordinate_zero_hypothesis,
    complement,
    evalue,
    gfbst_decide,
    modal_table,
    region_estimator_decide,
)
from fbst.gfbst import ACCEPT, AGNOSTIC, CONDITIONS, REJECT, InconsistentEvidenceError


class TestDecide:
    def test_reject(self):
        d = gfbst_decide(0.01, 1.0, 0.05)
        assert d.rejected and d.value == REJECT

    def test_accept(self):
        d = gfbst_decide(1.0, 0.01, 0.05)
        assert d.accepted and d.value == ACCEPT

    def test_agnostic(self):
        d = gfbst_decide(0.3, 1.0, 0.05)
        assert d.agnostic and d.value == AGNOSTIC

    def test_boundary_is_agnostic(self):
        assert gfbst_decide(0.05, 1.0, 0.05).agnostic
        assert gfbst_decide(1.0, 0.05, 0.05).agnostic

    def test_inconsistent_pair(self):
        with pytest.raises(InconsistentEvidenceError):
            gfbst_decide(0.01, 0.02, 0.05)

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            gfbst_decide(0.5, 1.0, 0.0)
        with pytest.raises(ValueError):
            gfbst_decide(0.5, 1.0, 1.0)

    def test_single_switch_in_threshold(self):
        # as c grows a decision moves away from agnostic exactly once
        for ev_h, ev_hbar in ((0.3, 1.0), (1.0, 0.2), (0.9, 1.0)):
            vals = [gfbst_decide(ev_h, ev_hbar, c).value for c in np.linspace(0.01, 0.99, 99)]
            switches = sum(a != b for a, b in zip(vals, vals[1:]))
            assert switches <= 1
            assert AGNOSTIC in vals

    def test_sharp_hypothesis_never_accepted(self, reg2_model, reg2_sample):
        # the complement of a sharp set carries the global surprise mode,
        # so its e-value is 1 and acceptance is impossible at any threshold
        H = coordinate_zero_hypothesis(2, 4)
        rep_h = evalue(reg2_model, H, reg2_sample)
        rep_c = evalue(reg2_model, complement(H), reg2_sample)
        assert rep_c.ev == 1.0
        for c in (0.01, 0.05, 0.5, 0.99):
            assert not gfbst_decide(rep_h.ev, rep_c.ev, c).accepted


class TestRegionEstimator:
    def test_contained(self):
        S = np.array([True, True, False, False])
        H = np.array([True, True, True, False])
        assert region_estimator_decide(S, H).accepted

    def test_disjoint(self):
        S = np.array([True, False, False, False])
        H = np.array([False, True, True, False])
        assert region_estimator_decide(S, H).rejected

    def test_overlap(self):
        S = np.array([True, True, False, False])
        H = np.array([False, True, True, False])
        assert region_estimator_decide(S, H).agnostic

    def test_empty_region_rejected(self):
        with pytest.raises(ValueError):
            region_estimator_decide(np.zeros(3, bool), np.ones(3, bool))

    def test_characterizes_gfbst_on_grid(self):
        # the GFBST is the region-estimator test of the surprise upper cut
        rng = np.random.default_rng(3)
        grid = GridModel.random(12, rng)
        c = 0.05
        # level: largest surprise whose closed lower cut has mass < c
        flat_s = grid.surprise.ravel()
        order = np.argsort(flat_s)
        cum = np.cumsum(grid.masses.ravel()[order])
        below = cum < c
        level = flat_s[order][below][-1] if below.any() else -np.inf
        S = grid.upper_cut(level)
        for _ in range(200):
            mask = rng.random(grid.masses.shape) < rng.uniform(0.05, 0.95)
            if not mask.any() or mask.all():
                continue
            direct = grid.decide(mask, c).value
            via_region = region_estimator_decide(S, mask).value
            assert direct == via_region


class TestModalTable:
    def test_accept_row(self):
        rec = modal_table(gfbst_decide(1.0, 0.01, 0.05))
        assert rec["necessity"] and rec["possibility"] and rec["non_contingency"]
        assert not rec["impossibility"] and not rec["contingency"]

    def test_reject_row(self):
        rec = modal_table(gfbst_decide(0.01, 1.0, 0.05))
        assert rec["impossibility"] and rec["non_necessity"] and rec["non_contingency"]
        assert not rec["necessity"] and not rec["possibility"]

    def test_agnostic_row(self):
        rec = modal_table(gfbst_decide(0.5, 1.0, 0.05))
        assert rec["contingency"] and rec["possibility"] and rec["non_necessity"]
        assert not rec["necessity"] and not rec["impossibility"]

    def test_exactly_three_operators_hold(self):
        for pair in ((1.0, 0.01), (0.01, 1.0), (0.5, 1.0)):
            rec = modal_table(gfbst_decide(*pair, 0.05))
            assert sum(rec.values()) == 3


class TestGridModel:
    def test_mass_normalization(self):
        g = GridModel(np.ones((3, 3)), np.arange(9.0).reshape(3, 3))
        assert g.masses.sum() == pytest.approx(1.0)

    def test_evalue_full_grid_is_one(self):
        rng = np.random.default_rng(0)
        g = GridModel.random(5, rng)
        assert g.evalue(np.ones((5, 5), bool)) == pytest.approx(1.0)

    def test_evalue_of_top_cell_is_one(self):
        rng = np.random.default_rng(1)
        g = GridModel.random(5, rng)
        mask = g.surprise == g.surprise.max()
        assert g.evalue(mask) == pytest.approx(1.0)

    def test_evalue_of_bottom_cell(self):
        rng = np.random.default_rng(2)
        g = GridModel.random(5, rng)
        mask = g.surprise == g.surprise.min()
        assert g.evalue(mask) == pytest.approx(g.masses[mask].sum())

    def test_evalue_monotone_in_mask(self):
        rng = np.random.default_rng(3)
        g = GridModel.random(8, rng)
        small = rng.random((8, 8)) < 0.2
        big = small | (rng.random((8, 8)) < 0.3)
        assert g.evalue(big) >= g.evalue(small)

    def test_complement_max_is_one(self):
        rng = np.random.default_rng(4)
        g = GridModel.random(8, rng)
        for _ in range(50):
            mask = rng.random((8, 8)) < rng.uniform(0.1, 0.9)
            if not mask.any() or mask.all():
                continue
            assert max(g.evalue(mask), g.evalue(~mask)) == pytest.approx(1.0, abs=1e-12)

    def test_unknown_rule(self):
        rng = np.random.default_rng(5)
        g = GridModel.random(4, rng)
        with pytest.raises(ValueError):
            g.decide(np.ones((4, 4), bool), 0.05, rule="coin-flip")


class TestLogicalHarness:
    def test_gfbst_satisfies_all_conditions(self):
        rng = np.random.default_rng(0)
        grid = GridModel.random(20, rng)
        report = check_logical_properties(grid, trials=200, c=0.05, seed=1)
        assert report["total_violations"] == 0
        assert set(report["counts"]) == set(CONDITIONS)

    def test_negative_control_is_caught(self):
        rng = np.random.default_rng(0)
        grid = GridModel.random(20, rng)
        report = check_logical_properties(
            grid, trials=200, c=0.05, seed=1, rule="broken-negative-control"
        )
        assert report["total_violations"] >= 1
        assert report["witnesses"]

    def test_report_is_reproducible(self):
        rng = np.random.default_rng(7)
        grid = GridModel.random(10, rng)
        a = check_logical_properties(grid, trials=50, seed=3)
        b = check_logical_properties(grid, trials=50, seed=3)
        assert a["counts"] == b["counts"]
