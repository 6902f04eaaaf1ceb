"""Study directory layout, flat key-value config files, canonical CSV exports.

A study lives in one directory::

    <study_dir>/study.config     flat key = value configuration
    <study_dir>/logs/<sid>.log   append-only per-session event logs
    <study_dir>/exports/*.csv    canonical datasets (periods, participants,
                                 measures)

Exports are deterministic: fixed column order, participants sorted by id,
floats printed with six decimals, ``\n`` line endings. Re-exporting the same
state is byte-identical.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict
from pathlib import Path

from ..analysis.measures import compute_da, compute_measures
from ..errors import ValidationError
from ..model import ModelParams
from ..session import (
    CrtItem,
    MplRow,
    Ordering,
    PaymentConfig,
    PaymentRule,
    QuestionnaireConfig,
    Session,
    Study,
    StudyConfig,
)

logger = logging.getLogger(__name__)

EXPORT_FILES = ("periods.csv", "participants.csv", "measures.csv")


# ---------------------------------------------------------------------------
# flat config files
# ---------------------------------------------------------------------------

_SCALARS = {
    "study_id": str,
    "ordering": str,
    "rounds_per_treatment": int,
    "shock_seed": int,
    "params.horizon_T": int,
    "params.theta": float,
    "params.utility_scale": float,
    "params.shock_sigma": float,
    "params.income_intercept_y0": float,
    "params.income_slope_s": float,
    "payment.exchange_rate": float,
    "payment.show_up_fee": float,
    "payment.rule": str,
    "questionnaire.mpl_rows": int,
}


def read_study_config(path: Path | str) -> StudyConfig:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file not found: {path}")
    scalars: dict[str, object] = {}
    crt: dict[int, dict[str, str]] = {}
    mpl: dict[int, dict[str, str]] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in _SCALARS:
            try:
                scalars[key] = _SCALARS[key](value)
            except ValueError:
                raise ValidationError(
                    f"{path}:{lineno}: bad value for {key}: {value!r}") from None
        elif key.startswith("questionnaire.crt."):
            _collect_indexed(crt, key, value, "questionnaire.crt.",
                             ("text", "answer"), path, lineno)
        elif key.startswith("questionnaire.mpl."):
            _collect_indexed(mpl, key, value, "questionnaire.mpl.",
                             ("safe", "lottery"), path, lineno)
        else:
            raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")

    try:
        params = ModelParams(
            horizon_T=scalars.get("params.horizon_T", 20),
            theta=scalars.get("params.theta", 0.02),
            utility_scale=scalars.get("params.utility_scale", 250.0),
            shock_sigma=scalars.get("params.shock_sigma", 10.0),
            income_intercept_y0=scalars.get("params.income_intercept_y0", 0.0),
            income_slope_s=scalars.get("params.income_slope_s", 10.0),
        )
        payment = PaymentConfig(
            exchange_rate=scalars.get("payment.exchange_rate", 0.00095),
            show_up_fee=scalars.get("payment.show_up_fee", 5.50),
            rule=PaymentRule(scalars.get("payment.rule", "SumAllRounds")),
        )
        q_kwargs: dict = {"mpl_rows": scalars.get("questionnaire.mpl_rows", 14)}
        if crt:
            q_kwargs["crt_items"] = tuple(
                CrtItem(text=crt[i]["text"], answer=float(crt[i]["answer"]))
                for i in sorted(crt))
        if mpl:
            q_kwargs["mpl_payoffs"] = tuple(
                MplRow(safe=mpl[i]["safe"], lottery=mpl[i]["lottery"])
                for i in sorted(mpl))
        return StudyConfig(
            study_id=str(scalars.get("study_id", "study")),
            ordering=Ordering(scalars.get("ordering", "BF")),
            rounds_per_treatment=scalars.get("rounds_per_treatment", 3),
            params=params,
            shock_seed=scalars.get("shock_seed", 20160901),
            payment=payment,
            questionnaire=QuestionnaireConfig(**q_kwargs),
        )
    except (ValueError, KeyError) as exc:
        raise ValidationError(f"{path}: invalid configuration: {exc}") from None


def _collect_indexed(store, key, value, prefix, fields, path, lineno):
    rest = key[len(prefix):]
    idx_str, _, field = rest.partition(".")
    if not idx_str.isdigit() or field not in fields:
        raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
    store.setdefault(int(idx_str), {})[field] = value


def write_study_config(config: StudyConfig, path: Path | str) -> None:
    p = config.params
    lines = [
        "# lifecycle-lab study configuration",
        f"study_id = {config.study_id}",
        f"ordering = {config.ordering.value}",
        f"rounds_per_treatment = {config.rounds_per_treatment}",
        f"shock_seed = {config.shock_seed}",
        f"params.horizon_T = {p.horizon_T}",
        f"params.theta = {p.theta!r}",
        f"params.utility_scale = {p.utility_scale!r}",
        f"params.shock_sigma = {p.shock_sigma!r}",
        f"params.income_intercept_y0 = {p.income_intercept_y0!r}",
        f"params.income_slope_s = {p.income_slope_s!r}",
        f"payment.exchange_rate = {config.payment.exchange_rate!r}",
        f"payment.show_up_fee = {config.payment.show_up_fee!r}",
        f"payment.rule = {config.payment.rule.value}",
        f"questionnaire.mpl_rows = {config.questionnaire.mpl_rows}",
    ]
    for i, item in enumerate(config.questionnaire.crt_items, 1):
        lines.append(f"questionnaire.crt.{i}.text = {item.text}")
        lines.append(f"questionnaire.crt.{i}.answer = {item.answer!r}")
    for i, row in enumerate(config.questionnaire.mpl_payoffs, 1):
        lines.append(f"questionnaire.mpl.{i}.safe = {row.safe}")
        lines.append(f"questionnaire.mpl.{i}.lottery = {row.lottery}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# canonical exports
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def export_dataset(study: Study, dest: Path | str) -> list[Path]:
    """Write periods.csv, participants.csv and measures.csv for a study.

    Only completed sessions are exported; an empty export is written (headers
    only) with a warning when none are complete.
    """
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    config = study.config
    params = config.params
    sessions = sorted(
        (s for s in study.sessions.values() if s.phase == "complete"),
        key=lambda s: s.participant_id,
    )
    if not sessions:
        logger.warning("export: study %s has no completed sessions; writing "
                       "empty datasets", config.study_id)

    paths = []

    periods_path = dest / "periods.csv"
    with open(periods_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["participant_id", "ordering", "round", "treatment", "period",
                    "income", "shock", "wealth", "consumption", "assets"])
        for s in sessions:
            for rd in s.rounds:
                for rec in rd.records:
                    w.writerow([
                        s.participant_id, s.ordering.value, rd.index,
                        rd.treatment.value, rec.period, _fmt(rec.income),
                        _fmt(rd.shocks.shocks[rec.period - 1]), _fmt(rec.wealth),
                        _fmt(rec.consumption), _fmt(rec.assets),
                    ])
    paths.append(periods_path)

    participants_path = dest / "participants.csv"
    with open(participants_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["participant_id", "ordering", "crt_score", "crt_known",
                    "female", "risk_aversion", "nationality", "field_of_study",
                    "payment"])
        for s in sessions:
            q = s.questionnaire
            w.writerow([
                s.participant_id, s.ordering.value,
                q.crt_score if q else "", _fmt(q.crt_known) if q else "",
                _fmt(q.female) if q else "",
                q.mpl_safe_count if q and q.mpl_safe_count is not None else "",
                q.nationality if q else "", q.field_of_study if q else "",
                _fmt(s.payment_total),
            ])
    paths.append(participants_path)

    measures_path = dest / "measures.csv"
    with open(measures_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["participant_id", "ordering", "round", "treatment",
                    "m1", "m2", "m3", "da"])
        for s in sessions:
            per_round = [
                compute_measures(rd.to_path(), params,
                                 participant_id=s.participant_id,
                                 round_idx=rd.index)
                for rd in s.rounds
            ]
            da = compute_da([m.m2 for m in per_round], s.ordering,
                            participant_id=s.participant_id)
            for m in per_round:
                w.writerow([
                    s.participant_id, s.ordering.value, m.round,
                    m.treatment.value, _fmt(m.m1), _fmt(m.m2), _fmt(m.m3),
                    _fmt(da.da),
                ])
    paths.append(measures_path)

    return paths
