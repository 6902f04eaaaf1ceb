import csv
import json

import pytest

from lifecycle_lab.agents import AgentKind, AgentSpec
from lifecycle_lab.analysis.dataset import AnalysisDataset
from lifecycle_lab.analysis.tables import (
    fig4_da_density,
    load_period_rows,
    run_analysis,
    table2_medians,
    table3_effect_sizes,
    table4_regressions,
)
from lifecycle_lab.errors import DataError
from lifecycle_lab.session import Ordering, StudyConfig
from lifecycle_lab.simulate import simulate_study


@pytest.fixture(scope="module")
def two_cohort_dir(tmp_path_factory):
    """BF + SF studies with a mix of agent kinds."""
    root = tmp_path_factory.mktemp("cohorts")
    specs = [AgentSpec(AgentKind.DEBT_AVERSE), AgentSpec(AgentKind.HAND_TO_MOUTH),
             AgentSpec(AgentKind.NOISY_OPTIMAL, noise_sd=20.0, seed=3)]
    for ordering in (Ordering.BORROWING_FIRST, Ordering.SAVING_FIRST):
        cfg = StudyConfig(study_id=f"sim-{ordering.value.lower()}",
                          ordering=ordering, shock_seed=99)
        simulate_study(cfg, specs, 9, out_dir=root / cfg.study_id)
    return root


class TestLoading:
    def test_tree_merge_namespaces_participants(self, two_cohort_dir):
        ds = AnalysisDataset.from_export_tree(two_cohort_dir, country="US")
        assert len(ds.rows) == 2 * 9 * 6
        pids = {r["participant_id"] for r in ds.rows}
        assert any(p.startswith("sim-bf:") for p in pids)
        assert any(p.startswith("sim-sf:") for p in pids)

    def test_single_dir(self, two_cohort_dir):
        ds = AnalysisDataset.from_export_dir(
            two_cohort_dir / "sim-bf" / "exports", country="US")
        assert len(ds.rows) == 9 * 6
        assert all(r["ordering"] is Ordering.BORROWING_FIRST for r in ds.rows)

    def test_missing_dir(self, tmp_path):
        with pytest.raises(DataError):
            AnalysisDataset.from_export_tree(tmp_path)

    def test_duplicate_rows_rejected(self):
        row = dict(participant_id="p", country="US",
                   ordering=Ordering.BORROWING_FIRST, round=1, treatment="b",
                   m1=0.0, m2=0.0, m3=0.0, crt_score=1, crt_known=0, female=0,
                   risk_aversion=5)
        with pytest.raises(DataError, match="duplicate"):
            AnalysisDataset([row, dict(row)])

    def test_inconsistent_covariates_rejected(self):
        r1 = dict(participant_id="p", country="US",
                  ordering=Ordering.BORROWING_FIRST, round=1, treatment="b",
                  m1=0.0, m2=0.0, m3=0.0, crt_score=1, crt_known=0, female=0,
                  risk_aversion=5)
        r2 = dict(r1, round=2, crt_score=3)
        with pytest.raises(DataError, match="covariates vary"):
            AnalysisDataset([r1, r2])


class TestImportMap:
    def make_external(self, tmp_path, n=6):
        src = tmp_path / "external.csv"
        with open(src, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "order", "rnd", "dev1", "dev2", "dev3", "crt", "fem", "risk"])
            for pid in range(1, n + 1):
                order = 1 if pid % 2 else 2
                for rnd in range(1, 7):
                    base = 100.0 * pid + rnd
                    w.writerow([pid, order, rnd, base / 2, base, base / 4,
                                pid % 4, pid % 2, "" if pid == 1 else pid])
        map_file = tmp_path / "map.json"
        map_file.write_text(json.dumps({
            "country": "Germany",
            "csv": "external.csv",
            "columns": {"participant_id": "id", "ordering": "order",
                        "round": "rnd", "m1": "dev1", "m2": "dev2", "m3": "dev3",
                        "crt_score": "crt", "female": "fem",
                        "risk_aversion": "risk"},
            "ordering_values": {"1": "BF", "2": "SF"},
        }))
        return map_file

    def test_import_roundtrip(self, tmp_path):
        map_file = self.make_external(tmp_path)
        ds = AnalysisDataset.from_import_map(map_file)
        assert len(ds.rows) == 36
        assert ds.countries() == ["Germany"]
        assert ds.rows[0]["ordering"] is Ordering.BORROWING_FIRST
        # missing risk_aversion stays missing
        p1 = [r for r in ds.rows if r["participant_id"] == "1"][0]
        assert p1["risk_aversion"] is None

    def test_import_missing_mapping_field(self, tmp_path):
        map_file = tmp_path / "map.json"
        map_file.write_text(json.dumps({"country": "X", "csv": "nope.csv"}))
        with pytest.raises(DataError, match="columns"):
            AnalysisDataset.from_import_map(map_file)

    def test_import_unmapped_ordering_value(self, tmp_path):
        src = tmp_path / "d.csv"
        src.write_text("id,order,rnd,m2\n1,weird,1,5\n")
        map_file = tmp_path / "map.json"
        map_file.write_text(json.dumps({
            "country": "X", "csv": "d.csv",
            "columns": {"participant_id": "id", "ordering": "order",
                        "round": "rnd", "m2": "m2"}}))
        with pytest.raises(DataError, match="ordering"):
            AnalysisDataset.from_import_map(map_file)

    def test_merge_with_local(self, tmp_path, two_cohort_dir):
        local = AnalysisDataset.from_export_tree(two_cohort_dir, country="US")
        external = AnalysisDataset.from_import_map(self.make_external(tmp_path))
        merged = local.merged_with(external)
        assert set(merged.countries()) == {"Germany", "US"}


class TestTables:
    def test_table2_shape_and_debt_averse_asymmetry(self, two_cohort_dir):
        ds = AnalysisDataset.from_export_tree(two_cohort_dir, country="US")
        header, rows = table2_medians(ds)
        assert header[:3] == ["country", "measure", "statistic"]
        assert len(rows) == 9  # 3 measures x (BF, SF, p)
        m2_bf = next(r for r in rows if r[1] == "m2" and r[2] == "median_BF")
        # borrowing rounds (1-3 for BF) deviate more than saving rounds (4-6)
        assert min(m2_bf[3:6]) > max(m2_bf[6:9])

    def test_table3_positive_effect(self, two_cohort_dir):
        ds = AnalysisDataset.from_export_tree(two_cohort_dir, country="US")
        header, rows = table3_effect_sizes(ds)
        m2_rows = [r for r in rows if r[1] == "m2"]
        for r in m2_rows:
            assert r[3] is not None and r[3] > 0  # borrowing deviates more

    def test_table4_runs_on_mixed_cohort(self, two_cohort_dir):
        ds = AnalysisDataset.from_export_tree(two_cohort_dir, country="US")
        header, rows = table4_regressions(ds)
        specs = {r[0] for r in rows}
        assert {"2", "3", "4", "5"} <= specs
        n_rows = [r for r in rows if r[2] == "N"]
        assert all(int(r[3]) > 0 for r in n_rows)

    def test_participants_da_values(self, two_cohort_dir):
        ds = AnalysisDataset.from_export_tree(two_cohort_dir, country="US")
        people = ds.participants()
        assert len(people) == 18
        debt_averse = [p for p in people if "debtaverse" in p["participant_id"]]
        assert all(p["da"] == 1.0 for p in debt_averse)
        assert all(-1.0 <= p["da"] <= 1.0 for p in people)

    def test_run_analysis_writes_everything(self, two_cohort_dir, tmp_path):
        ds = AnalysisDataset.from_export_tree(two_cohort_dir, country="US")
        period_rows = load_period_rows(two_cohort_dir)
        written = run_analysis(ds, tmp_path / "out",
                               period_rows=period_rows)
        names = {p.name for p in written}
        assert {"table1_summary.csv", "table2_median_measures.csv",
                "table3_effect_sizes.csv", "table4_m2_regressions.csv",
                "table5_learning.csv", "table_da_regressions.csv",
                "fig2_consumption.csv", "fig3_median_deviations.csv",
                "fig4_da_density_US.csv"} <= names
        # density curves are two-column files
        first_line = (tmp_path / "out" / "fig4_da_density_US.csv").read_text().splitlines()[0]
        assert first_line == "da,density"

    def test_fig4_density_curve(self, two_cohort_dir):
        ds = AnalysisDataset.from_export_tree(two_cohort_dir, country="US")
        curves, notes = fig4_da_density(ds, grid_points=401)
        assert "US" in curves, notes
        rows = curves["US"]
        ys = [r[1] for r in rows]
        assert all(y >= 0 for y in ys)
        # mass concentrates toward the debt-averse pole in this cohort
        upper = [r[1] for r in rows if r[0] > 0.5]
        lower = [r[1] for r in rows if r[0] < -0.5]
        assert sum(upper) > sum(lower)
        # on a wide grid the same values integrate to 1 (plot grid is clipped)
        from lifecycle_lab.analysis.density import default_grid, kernel_density
        values = [p["da"] for p in ds.participants("US")]
        import numpy as np
        grid = default_grid(values, n_points=2048, pad_bandwidths=8.0)
        assert np.trapezoid(kernel_density(values, grid), grid) == pytest.approx(
            1.0, abs=1e-3)

    def test_empty_dataset_rejected(self, tmp_path):
        with pytest.raises(DataError, match="empty"):
            run_analysis(AnalysisDataset([]), tmp_path)
