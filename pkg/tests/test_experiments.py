"""Scenario tables: schemas, reproducibility, and the figure-level claims."""

import numpy as np
import pytest

from martsafe.bounds import freedman_kernel, issf_worst_case, stochastic_issf_bound
from martsafe.experiments import (
    SCALAR_DISTRIBUTIONS,
    bound_grid,
    default_epsilon_grid,
    hlip_case,
    issf_compare,
)
from martsafe.properties import property_suite


@pytest.fixture(scope="module")
def grid_table():
    return bound_grid(
        lambda_grid=np.linspace(0.0, 10.0, 21),
        sigma_grid=np.linspace(0.05, 1.0, 20),
    )


@pytest.fixture(scope="module")
def issf_table():
    return issf_compare(
        K_list=(1, 100),
        trials=400,
        epsilon_grid=default_epsilon_grid(n=8),
        seed=21,
    )


@pytest.fixture(scope="module")
def hlip_tables():
    return hlip_case(
        d_max_list=(0.0, 0.06),
        alpha_list=(0.9,),
        trials=60,
        duration=10.0,
        keep_trajectories=3,
        seed=77,
    )


class TestBoundGrid:
    @pytest.fixture
    def table(self, grid_table):
        return grid_table

    def test_schema(self, table):
        assert table.column_names == (
            "lambda", "sigma", "ville", "freedman", "cond1", "cond2", "gap",
        )
        assert len(table.rows) == 21 * 20

    def test_lambda_zero_row(self, table):
        for row in table.rows:
            if row[0] == 0.0:
                assert row[2] == 1.0 and row[3] == 1.0 and row[6] == 0.0

    def test_conditions_imply_dominance(self, table):
        n_hold = 0
        for row in table.rows:
            if row[4] and row[5]:
                n_hold += 1
                assert row[6] >= -1e-12
        assert n_hold > 0

    def test_known_cell_conditions(self):
        t = bound_grid(lambda_grid=[6.0], sigma_grid=[0.2])
        row = t.rows[0]
        assert (row[4], row[5]) == (True, True)


class TestIssfCompare:
    @pytest.fixture
    def table(self, issf_table):
        return issf_table

    def test_schema(self, table):
        assert table.column_names == (
            "K", "epsilon", "distribution", "bound_raw", "bound",
            "bound_vacuous", "issf_indicator", "p_hat", "ci_lo", "ci_hi",
            "n_trials", "n_exits",
        )
        assert len(table.rows) == 3 * 2 * 8

    def test_indicator_matches_floor(self, table):
        cols = table.column_names
        for row in table.rows:
            r = dict(zip(cols, row))
            floor = issf_worst_case(0.99, 1.0, 10.0, r["K"])
            assert r["issf_indicator"] == (0 if -r["epsilon"] < floor else 1)

    def test_bound_column_is_the_closed_form(self, table):
        cols = table.column_names
        for row in table.rows:
            r = dict(zip(cols, row))
            expected = stochastic_issf_bound(
                0.99, r["K"], 10.0, 1.0, 1.0 / 3.0, r["epsilon"]
            )
            assert r["bound_raw"] == expected.raw
            assert r["bound"] == expected.clamped

    def test_dominance(self, table):
        cols = table.column_names
        for row in table.rows:
            r = dict(zip(cols, row))
            assert r["ci_lo"] <= r["bound"] + 1e-12

    def test_zero_bound_means_zero_exits(self, table):
        cols = table.column_names
        for row in table.rows:
            r = dict(zip(cols, row))
            if r["issf_indicator"] == 0:
                assert r["n_exits"] == 0 and r["p_hat"] == 0.0

    def test_containment_audit_clean(self, table):
        assert table.metadata["containment_audited"] > 0
        assert table.metadata["containment_violations"] == 0

    def test_reproducible_bitwise(self):
        kw = dict(K_list=(50,), trials=100, epsilon_grid=[0.0, 5.0], seed=3)
        a = issf_compare(**kw)
        b = issf_compare(**kw)
        assert a.rows == b.rows

    def test_distribution_families_pinned(self):
        mean, var = SCALAR_DISTRIBUTIONS["categorical"].exact_moments()
        assert mean == pytest.approx(0.0, abs=1e-15)
        assert var == pytest.approx(0.2)
        for dist in SCALAR_DISTRIBUTIONS.values():
            assert dist.support_bound() <= 1.0 + 1e-12


class TestHlipCase:
    @pytest.fixture
    def tables(self, hlip_tables):
        return hlip_tables

    def test_schema(self, tables):
        table, traj = tables
        assert table.column_names == (
            "d_max", "alpha", "K", "h0", "delta", "sigma_sq",
            "bound_raw", "bound", "bound_vacuous",
            "p_hat", "ci_lo", "ci_hi",
            "n_trials", "n_exits", "n_controller_failures",
            "first_violation_step",
        )
        assert traj.column_names == ("d_max", "alpha", "trial", "step", "px", "py")
        assert len(table.rows) == 2

    def test_zero_disturbance_zero_exits(self, tables):
        table, _ = tables
        cols = table.column_names
        for row in table.rows:
            r = dict(zip(cols, row))
            if r["d_max"] == 0.0:
                assert r["n_exits"] == 0
                assert r["bound"] == 0.0
                assert r["first_violation_step"] == -1

    def test_bound_uses_walker_recipe(self, tables):
        table, _ = tables
        cols = table.column_names
        for row in table.rows:
            r = dict(zip(cols, row))
            assert r["delta"] == pytest.approx(5.0 / 3.0 * r["d_max"])
            assert r["sigma_sq"] == pytest.approx(r["d_max"] ** 2 / 2.0)
            if r["d_max"] > 0:
                lam = r["alpha"] ** r["K"] * r["h0"] / r["delta"]
                xi = (r["sigma_sq"] * r["K"]) ** 0.5 / r["delta"]
                assert r["bound_raw"] == pytest.approx(freedman_kernel(lam, xi))

    def test_dominance_and_filter_slack(self, tables):
        table, _ = tables
        cols = table.column_names
        for row in table.rows:
            r = dict(zip(cols, row))
            assert r["ci_lo"] <= r["bound"] + 1e-12
        assert table.metadata["worst_filter_slack"] >= -1e-9
        assert table.metadata["containment_violations"] == 0

    def test_trajectories_retained(self, tables):
        _, traj = tables
        assert len(traj.rows) > 0
        trials = {(r[0], r[1], r[2]) for r in traj.rows}
        per_cell = {}
        for d, a, t in trials:
            per_cell.setdefault((d, a), set()).add(t)
        assert all(len(v) <= 3 for v in per_cell.values())

    def test_reproducible_bitwise(self):
        kw = dict(d_max_list=(0.03,), alpha_list=(0.9,), trials=30,
                  duration=5.0, keep_trajectories=2, seed=5)
        (a, at) = hlip_case(**kw)
        (b, bt) = hlip_case(**kw)
        assert a.rows == b.rows and at.rows == bt.rows


class TestPropertySuite:
    def test_all_pass_and_schema(self):
        table = property_suite(seed=0)
        assert table.column_names == (
            "property", "passed", "n_checked", "n_violations",
            "worst_margin", "detail",
        )
        failing = [row[0] for row in table.rows if not row[1]]
        assert failing == []
        assert len(table.rows) >= 20
