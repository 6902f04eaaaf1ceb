"""Emit the analysis tables and figure data as CSV files.

Everything here is a deterministic transformation of an AnalysisDataset (and,
for the consumption figure, the per-period export rows). Layouts follow the
published tables: medians by round with rank-test p-values, effect sizes by
treatment block, clustered regressions of the absolute deviation measure and
of the debt-aversion index, and kernel-density curves of the index.
"""

from __future__ import annotations

import csv
import statistics
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..errors import DataError, DomainError
from ..model import ModelParams, ShockSequence, Treatment, optimal_policy, simulate_path
from ..session import Ordering
from .dataset import AnalysisDataset
from .density import kernel_density
from .measures import learning_deltas
from .regression import ols_clustered
from .stats import cohens_d, descriptive_stats, mann_whitney_u, wilcoxon_signed_rank

MEASURES = ("m1", "m2", "m3")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _rounds(ds: AnalysisDataset) -> list[int]:
    return sorted({r["round"] for r in ds.rows})


def _median(values: Sequence[float]) -> Optional[float]:
    vals = [v for v in values if v is not None]
    return statistics.median(vals) if vals else None


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

def table1_summary(ds: AnalysisDataset):
    header = ["country", "variable", "n", "mean", "sd", "p5", "p95"]
    rows = []
    for country in ds.countries():
        people = ds.participants(country)
        stats = descriptive_stats({
            "crt_score": [p["crt_score"] for p in people],
            "female": [p["female"] for p in people],
            "risk_aversion": [p["risk_aversion"] for p in people],
        })
        for var in ("crt_score", "female", "risk_aversion"):
            s = stats[var]
            rows.append([country, var, s["n"], s["mean"], s["sd"], s["p5"], s["p95"]])
    return header, rows


def table2_medians(ds: AnalysisDataset):
    """Median m1/m2/m3 per round by ordering, with BF-vs-SF rank-test p."""
    rounds = _rounds(ds)
    header = ["country", "measure", "statistic"] + [f"round_{r}" for r in rounds]
    rows = []
    for country in ds.countries():
        for measure in MEASURES:
            per_round: dict[str, list] = {"BF": [], "SF": [], "p": []}
            for rnd in rounds:
                groups = {}
                for ordering, key in ((Ordering.BORROWING_FIRST, "BF"),
                                      (Ordering.SAVING_FIRST, "SF")):
                    vals = ds.values(
                        ds.filtered(country=country, ordering=ordering,
                                    rounds=[rnd]), measure)
                    groups[key] = vals
                    per_round[key].append(_median(vals))
                if groups["BF"] and groups["SF"]:
                    p = mann_whitney_u(groups["BF"], groups["SF"]).p_two_sided
                else:
                    p = None
                per_round["p"].append(p)
            rows.append([country, measure, "median_BF"] + per_round["BF"])
            rows.append([country, measure, "median_SF"] + per_round["SF"])
            rows.append([country, measure, "p_value"] + per_round["p"])
    return header, rows


def _block_means(ds: AnalysisDataset, country: str, measure: str,
                 rounds: Sequence[int]) -> dict[Ordering, list[float]]:
    """Per-participant mean of a measure over a block of rounds."""
    out: dict[Ordering, list[float]] = {o: [] for o in Ordering}
    by_pid: dict[tuple, list[dict]] = {}
    for r in ds.filtered(country=country, rounds=rounds):
        by_pid.setdefault((r["participant_id"], r["ordering"]), []).append(r)
    for (pid, ordering), rows in sorted(by_pid.items()):
        vals = [r[measure] for r in rows if r[measure] is not None]
        if vals:
            out[ordering].append(sum(vals) / len(vals))
    return out


def table3_effect_sizes(ds: AnalysisDataset):
    """Cohen's d of borrowing-block vs saving-block deviations.

    In the first half of the rounds, Borrowing-First participants are the
    borrowing group; in the second half the roles flip. One observation per
    participant (block mean).
    """
    rounds = _rounds(ds)
    half = len(rounds) // 2
    blocks = {"first": rounds[:half], "second": rounds[half:]}
    header = ["country", "measure", "rounds", "cohens_d", "n_borrowing", "n_saving"]
    rows = []
    for country in ds.countries():
        for measure in MEASURES:
            for label, block in blocks.items():
                means = _block_means(ds, country, measure, block)
                if label == "first":
                    borrow = means[Ordering.BORROWING_FIRST]
                    save = means[Ordering.SAVING_FIRST]
                else:
                    borrow = means[Ordering.SAVING_FIRST]
                    save = means[Ordering.BORROWING_FIRST]
                try:
                    d = cohens_d(borrow, save)
                except DomainError:
                    d = None
                rounds_label = f"{block[0]}-{block[-1]}"
                rows.append([country, measure, rounds_label, d,
                             len(borrow), len(save)])
    return header, rows


def table5_learning(ds: AnalysisDataset):
    """Median per-participant learning deltas with Wilcoxon signed-rank p."""
    rounds = _rounds(ds)
    header = (["country", "condition", "delta", "statistic"]
              + [f"round_{r}" for r in rounds[1:]])
    rows = []
    for country in ds.countries():
        for ordering, label in ((Ordering.BORROWING_FIRST, "BF"),
                                (Ordering.SAVING_FIRST, "SF")):
            per_participant: dict[str, dict[int, float]] = {}
            for r in ds.filtered(country=country, ordering=ordering):
                per_participant.setdefault(r["participant_id"], {})[r["round"]] = r["m2"]
            series = [
                [vals[r] for r in rounds]
                for vals in per_participant.values()
                if all(r in vals for r in rounds)
            ]
            if not series:
                continue
            deltas = [learning_deltas(s) for s in series]
            for kind in ("consecutive", "from_first"):
                med_row, p_row = [], []
                for rnd in rounds[1:]:
                    diffs = [d[kind][rnd] for d in deltas]
                    med_row.append(_median(diffs))
                    p_row.append(wilcoxon_signed_rank(diffs).p_two_sided)
                rows.append([country, label, kind, "median"] + med_row)
                rows.append([country, label, kind, "p_value"] + p_row)
    return header, rows


# ---------------------------------------------------------------------------
# regressions
# ---------------------------------------------------------------------------

_TERM_LABELS = {
    "round": "Round",
    "germany": "Germany",
    "crt_score": "CRT score",
    "crt_score_sq": "CRT score^2",
    "crt1": "CRT1",
    "crt2": "CRT2",
    "crt3": "CRT3",
    "female": "Female",
    "risk_aversion": "Risk aversion",
    "saving_first": "Saving First",
    "const": "Constant",
}


def _emit_regression(rows_out, column: str, label: str, data, response: str,
                     covariates: list[str], controls: list[str]):
    try:
        res = ols_clustered(data, response, covariates + controls)
    except DataError as exc:
        rows_out.append([column, label, "error", str(exc), None, None, None])
        return
    for term in ["const"] + covariates:
        rows_out.append([
            column, label, _TERM_LABELS.get(term, term), None,
            res.coef[term], res.se[term], res.p_value[term],
        ])
    rows_out.append([column, label, "controls",
                     ",".join(_TERM_LABELS.get(c, c) for c in controls) or "none",
                     None, None, None])
    rows_out.append([column, label, "N", str(res.n_obs), None, None, None])
    rows_out.append([column, label, "clusters", str(res.n_clusters), None, None, None])
    rows_out.append([column, label, "adj_r2", None, res.r2_adj, None, None])


def _reference_country(ds: AnalysisDataset) -> str:
    countries = ds.countries()
    non_de = [c for c in countries if c.lower() != "germany"]
    return non_de[0] if non_de else countries[0]


def _round_rows(ds: AnalysisDataset) -> list[dict]:
    out = []
    for r in ds.rows:
        row = dict(r)
        row["germany"] = 1 if r["country"].lower() == "germany" else 0
        out.append(row)
    return out


def table4_regressions(ds: AnalysisDataset):
    """Determinants of m2: participant-round rows, SEs clustered by participant."""
    header = ["column", "sample", "term", "note", "coef", "se", "p_value"]
    rows_out: list[list] = []
    data = _round_rows(ds)
    ref = _reference_country(ds)
    us = [r for r in data if r["country"] == ref]

    if len(ds.countries()) >= 2:
        _emit_regression(rows_out, "1", "combined", data, "m2",
                         ["round", "germany"], [])
    _emit_regression(rows_out, "2", ref, us, "m2", ["round", "crt_score"],
                     ["crt_known"])
    _emit_regression(rows_out, "3", ref, us, "m2", ["round", "female"], [])
    _emit_regression(rows_out, "4", ref, us, "m2", ["round", "risk_aversion"], [])
    _emit_regression(rows_out, "5", ref, us, "m2",
                     ["round", "crt_score", "female", "risk_aversion"],
                     ["crt_known"])
    return header, rows_out


def _participant_rows(ds: AnalysisDataset) -> list[dict]:
    out = []
    for p in ds.participants():
        row = dict(p)
        row["germany"] = 1 if p["country"].lower() == "germany" else 0
        cs = p.get("crt_score")
        row["crt_score_sq"] = cs**2 if cs is not None else None
        for k in (1, 2, 3):
            row[f"crt{k}"] = (1 if cs == k else 0) if cs is not None else None
        out.append(row)
    return out


def table_da_regressions(ds: AnalysisDataset):
    """Debt-aversion index on individual characteristics (participant rows)."""
    header = ["column", "sample", "term", "note", "coef", "se", "p_value"]
    rows_out: list[list] = []
    people = _participant_rows(ds)
    ref = _reference_country(ds)
    us = [r for r in people if r["country"] == ref]

    if len(ds.countries()) >= 2:
        _emit_regression(rows_out, "1", "combined", people, "da",
                         ["saving_first", "germany"], [])
    _emit_regression(rows_out, "2", ref, us, "da", ["saving_first", "crt_score"],
                     ["crt_known"])
    _emit_regression(rows_out, "3", ref, us, "da", ["saving_first", "female"], [])
    _emit_regression(rows_out, "4", ref, us, "da",
                     ["saving_first", "risk_aversion"], [])
    _emit_regression(rows_out, "5", ref, us, "da",
                     ["saving_first", "crt_score", "female", "risk_aversion"],
                     ["crt_known"])
    _emit_regression(rows_out, "6", ref, us, "da",
                     ["saving_first", "crt_score", "crt_score_sq", "female",
                      "risk_aversion"], ["crt_known"])
    _emit_regression(rows_out, "7", ref, us, "da",
                     ["saving_first", "crt1", "crt2", "crt3", "female",
                      "risk_aversion"], ["crt_known"])
    return header, rows_out


# ---------------------------------------------------------------------------
# figure data
# ---------------------------------------------------------------------------

def fig2_consumption(period_rows: Sequence[dict], params: ModelParams):
    """Mean/median consumption per period with the optimal path alongside."""
    header = ["ordering", "round", "treatment", "period", "mean_consumption",
              "median_consumption", "optimal_consumption", "mean_income"]
    groups: dict[tuple, dict[str, list[float]]] = {}
    shocks_by_round: dict[tuple, dict[int, float]] = {}
    for r in period_rows:
        key = (r["ordering"], int(r["round"]))
        period = int(r["period"])
        g = groups.setdefault((key, period), {"c": [], "y": []})
        g["c"].append(float(r["consumption"]))
        g["y"].append(float(r["income"]))
        shocks_by_round.setdefault((*key, r["treatment"]), {})[period] = float(r["shock"])

    optimal_path: dict[tuple, tuple[float, ...]] = {}
    treatment_of: dict[tuple, str] = {}
    for (ordering, rnd, treatment), shocks in shocks_by_round.items():
        seq = ShockSequence(
            shocks=tuple(shocks[t] for t in range(1, params.horizon_T + 1)),
            seed=-1)
        tr = Treatment(treatment)
        path = simulate_path(optimal_policy(params.for_treatment(tr)), tr, seq, params)
        optimal_path[(ordering, rnd)] = path.consumption
        treatment_of[(ordering, rnd)] = treatment

    rows = []
    for ((ordering, rnd), period) in sorted(groups):
        g = groups[((ordering, rnd), period)]
        rows.append([
            ordering, rnd, treatment_of[(ordering, rnd)], period,
            float(np.mean(g["c"])), float(np.median(g["c"])),
            optimal_path[(ordering, rnd)][period - 1], float(np.mean(g["y"])),
        ])
    return header, rows


def fig3_deviation_medians(ds: AnalysisDataset):
    rounds = _rounds(ds)
    header = ["country", "measure", "round", "median"]
    rows = []
    for country in ds.countries():
        for measure in MEASURES:
            for rnd in rounds:
                vals = ds.values(ds.filtered(country=country, rounds=[rnd]), measure)
                rows.append([country, measure, rnd, _median(vals)])
    return header, rows


def fig4_da_density(ds: AnalysisDataset, grid_points: int = 201):
    """Kernel density of the debt-aversion index, one two-column curve per
    country, plus the cross-country rank-test comparison."""
    curves: dict[str, list[list]] = {}
    notes: list[str] = []
    grid = np.linspace(-1.25, 1.25, grid_points)
    das: dict[str, list[float]] = {}
    for country in ds.countries():
        values = [p["da"] for p in ds.participants(country)]
        das[country] = values
        if len(values) < 2:
            notes.append(f"{country}: fewer than 2 participants, no density")
            continue
        try:
            dens = kernel_density(values, grid)
        except DomainError as exc:
            notes.append(f"{country}: {exc}")
            continue
        curves[country] = [[float(x), float(d)] for x, d in zip(grid, dens)]
    countries = [c for c in das if len(das[c]) >= 1]
    if len(countries) >= 2:
        p = mann_whitney_u(das[countries[0]], das[countries[1]]).p_two_sided
        notes.append(
            f"mann_whitney_{countries[0]}_vs_{countries[1]}_p = {p:.6f}")
    return curves, notes


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

def run_analysis(ds: AnalysisDataset, out_dir: Path | str,
                 tables: Sequence[str] = ("1", "2", "3", "4", "5", "da"),
                 figs: Sequence[str] = ("2", "3", "4"),
                 period_rows: Optional[Sequence[dict]] = None,
                 params: Optional[ModelParams] = None) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not ds.rows:
        raise DataError("analysis dataset is empty")
    written: list[Path] = []
    tables = [str(t) for t in tables]
    figs = [str(f) for f in figs]

    if "1" in tables:
        written.append(write_csv(out_dir / "table1_summary.csv", *table1_summary(ds)))
    if "2" in tables:
        written.append(write_csv(out_dir / "table2_median_measures.csv",
                                 *table2_medians(ds)))
    if "3" in tables:
        written.append(write_csv(out_dir / "table3_effect_sizes.csv",
                                 *table3_effect_sizes(ds)))
    if "4" in tables:
        written.append(write_csv(out_dir / "table4_m2_regressions.csv",
                                 *table4_regressions(ds)))
    if "5" in tables:
        written.append(write_csv(out_dir / "table5_learning.csv",
                                 *table5_learning(ds)))
    if "da" in tables:
        written.append(write_csv(out_dir / "table_da_regressions.csv",
                                 *table_da_regressions(ds)))

    if "2" in figs:
        if period_rows:
            header, rows = fig2_consumption(period_rows, params or ModelParams())
            written.append(write_csv(out_dir / "fig2_consumption.csv", header, rows))
            written.append(_write_spec(
                out_dir / "fig2_consumption.spec.txt",
                "x: period; y: consumption; series: (ordering, round) x "
                "{mean, median, optimal}; one panel per ordering"))
        else:
            written.append(_write_spec(
                out_dir / "fig2_consumption.spec.txt",
                "skipped: no per-period rows available (periods.csv not found)"))
    if "3" in figs:
        header, rows = fig3_deviation_medians(ds)
        written.append(write_csv(out_dir / "fig3_median_deviations.csv", header, rows))
        written.append(_write_spec(
            out_dir / "fig3_median_deviations.spec.txt",
            "x: round; y: median measure; series: country; one panel per measure"))
    if "4" in figs:
        curves, notes = fig4_da_density(ds)
        files = []
        for country, rows in sorted(curves.items()):
            safe = "".join(ch if ch.isalnum() else "_" for ch in country)
            path = write_csv(out_dir / f"fig4_da_density_{safe}.csv",
                             ["da", "density"], rows)
            written.append(path)
            files.append(path.name)
        written.append(_write_spec(
            out_dir / "fig4_da_density.spec.txt",
            "x: debt-aversion index in [-1,1]; y: kernel density (Gaussian, "
            "Silverman bandwidth); one two-column curve file per country: "
            + (", ".join(files) or "none") + "\n" + "\n".join(notes)))
    return written


def _write_spec(path: Path, text: str) -> Path:
    path.write_text(text + "\n", encoding="utf-8")
    return path


def load_period_rows(root: Path | str) -> list[dict]:
    """All periods.csv rows found under ``root`` (parsed as raw dicts)."""
    root = Path(root)
    paths = ([root / "periods.csv"] if (root / "periods.csv").exists()
             else sorted(root.glob("**/periods.csv")))
    rows: list[dict] = []
    for path in paths:
        with open(path, newline="", encoding="utf-8") as fh:
            rows.extend(csv.DictReader(fh))
    return rows
