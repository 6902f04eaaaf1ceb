"""Rectangular participant-round dataset feeding the tests and regressions.

Rows carry one participant-round of deviation measures plus participant-level
covariates. Built either from this package's canonical exports or from
external replication data through a column-mapping file.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from ..errors import DataError
from ..session import Ordering
from .measures import compute_da

ROW_COLUMNS = ("participant_id", "country", "ordering", "round", "treatment",
               "m1", "m2", "m3", "crt_score", "crt_known", "female",
               "risk_aversion")

_NUMERIC = {"round": int, "m1": float, "m2": float, "m3": float,
            "crt_score": float, "crt_known": int, "female": int,
            "risk_aversion": float}

DEFAULT_MISSING = ("", "na", "n/a", "nan", ".", "none")


@dataclass
class AnalysisDataset:
    rows: list[dict] = field(default_factory=list)

    def __post_init__(self):
        self._validate()

    def _validate(self) -> None:
        seen = set()
        covariates: dict[str, tuple] = {}
        for row in self.rows:
            key = (row["participant_id"], row["country"], row["round"])
            if key in seen:
                raise DataError(f"duplicate participant-round row {key}")
            seen.add(key)
            cov = tuple(row.get(c) for c in
                        ("ordering", "crt_score", "crt_known", "female",
                         "risk_aversion"))
            pkey = (row["participant_id"], row["country"])
            if pkey in covariates and covariates[pkey] != cov:
                raise DataError(
                    f"covariates vary within participant {pkey}")
            covariates[pkey] = cov

    # -- accessors -----------------------------------------------------------

    def countries(self) -> list[str]:
        return sorted({r["country"] for r in self.rows})

    def filtered(self, country: Optional[str] = None,
                 ordering: Optional[Ordering] = None,
                 rounds: Optional[Iterable[int]] = None) -> list[dict]:
        rounds = set(rounds) if rounds is not None else None
        out = []
        for r in self.rows:
            if country is not None and r["country"] != country:
                continue
            if ordering is not None and r["ordering"] != ordering:
                continue
            if rounds is not None and r["round"] not in rounds:
                continue
            out.append(r)
        return out

    def values(self, rows: Sequence[dict], column: str) -> list[float]:
        return [r[column] for r in rows if r.get(column) is not None]

    def participants(self, country: Optional[str] = None) -> list[dict]:
        """One row per participant: covariates plus the debt-aversion index."""
        by_pid: dict[tuple, list[dict]] = {}
        for r in self.rows:
            if country is not None and r["country"] != country:
                continue
            by_pid.setdefault((r["country"], r["participant_id"]), []).append(r)
        out = []
        for (ctry, pid), rows in sorted(by_pid.items()):
            rows = sorted(rows, key=lambda r: r["round"])
            base = rows[0]
            da = compute_da([r["m2"] for r in rows], base["ordering"],
                            participant_id=pid).da
            out.append({
                "participant_id": pid,
                "country": ctry,
                "ordering": base["ordering"],
                "saving_first": 1 if base["ordering"] is Ordering.SAVING_FIRST else 0,
                "da": da,
                "crt_score": base.get("crt_score"),
                "crt_known": base.get("crt_known"),
                "female": base.get("female"),
                "risk_aversion": base.get("risk_aversion"),
            })
        return out

    # -- constructors ----------------------------------------------------------

    @classmethod
    def from_export_dir(cls, directory: Path | str, country: str = "local",
                        participant_prefix: str = "") -> "AnalysisDataset":
        directory = Path(directory)
        measures = directory / "measures.csv"
        participants = directory / "participants.csv"
        if not measures.exists():
            raise DataError(f"no measures.csv under {directory}")
        covs: dict[str, dict] = {}
        if participants.exists():
            for rec in _read_csv(participants):
                covs[rec["participant_id"]] = {
                    "crt_score": _parse_float(rec.get("crt_score")),
                    "crt_known": _parse_int(rec.get("crt_known")),
                    "female": _parse_int(rec.get("female")),
                    "risk_aversion": _parse_float(rec.get("risk_aversion")),
                }
        rows = []
        for rec in _read_csv(measures):
            pid = rec["participant_id"]
            row = {
                "participant_id": participant_prefix + pid,
                "country": country,
                "ordering": Ordering(rec["ordering"]),
                "round": int(rec["round"]),
                "treatment": rec.get("treatment"),
                "m1": float(rec["m1"]),
                "m2": float(rec["m2"]),
                "m3": float(rec["m3"]),
            }
            row.update(covs.get(pid, {"crt_score": None, "crt_known": None,
                                      "female": None, "risk_aversion": None}))
            rows.append(row)
        return cls(rows)

    @classmethod
    def from_export_tree(cls, root: Path | str,
                         country: str = "local") -> "AnalysisDataset":
        """Merge every study export found under ``root``.

        When several studies are merged, participant ids are namespaced with
        the study directory name so equal ids in different studies stay
        distinct participants (and distinct regression clusters).
        """
        root = Path(root)
        if (root / "measures.csv").exists():
            return cls.from_export_dir(root, country)
        dirs = sorted(p.parent for p in root.glob("**/measures.csv"))
        if not dirs:
            raise DataError(f"no measures.csv found anywhere under {root}")
        rows: list[dict] = []
        for d in dirs:
            label = d.parent.name if d.name == "exports" else d.name
            prefix = f"{label}:" if len(dirs) > 1 else ""
            rows.extend(cls.from_export_dir(d, country, prefix).rows)
        return cls(rows)

    @classmethod
    def from_import_map(cls, map_path: Path | str) -> "AnalysisDataset":
        """Load external replication data through a column-mapping file.

        The mapping file is JSON::

            {
              "country": "Germany",
              "csv": "relative/or/absolute.csv",
              "columns": {"participant_id": "id", "round": "round",
                           "ordering": "treatment_order", "m1": "m1", ...},
              "ordering_values": {"1": "BF", "2": "SF"},
              "missing_values": ["", "NA"]
            }

        ``columns`` maps canonical names to source column names; canonical
        names without a mapping are treated as missing.
        """
        map_path = Path(map_path)
        try:
            spec = json.loads(map_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read import map {map_path}: {exc}") from None
        for required in ("country", "csv", "columns"):
            if required not in spec:
                raise DataError(f"import map missing {required!r}")
        csv_path = Path(spec["csv"])
        if not csv_path.is_absolute():
            csv_path = map_path.parent / csv_path
        if not csv_path.exists():
            raise DataError(f"import map points at missing file {csv_path}")
        columns: dict[str, str] = spec["columns"]
        ordering_values = {str(k): v for k, v in
                           spec.get("ordering_values", {}).items()}
        missing = tuple(str(v).lower() for v in
                        spec.get("missing_values", DEFAULT_MISSING))

        rows = []
        for rec in _read_csv(csv_path):
            row: dict = {"country": spec["country"]}
            for canonical in ("participant_id", "ordering", "round", "treatment",
                              "m1", "m2", "m3", "crt_score", "crt_known",
                              "female", "risk_aversion"):
                source = columns.get(canonical)
                raw = rec.get(source) if source else None
                if raw is None or str(raw).strip().lower() in missing:
                    row[canonical] = None
                    continue
                raw = str(raw).strip()
                if canonical == "ordering":
                    mapped = ordering_values.get(raw, raw)
                    try:
                        row[canonical] = Ordering(mapped)
                    except ValueError:
                        raise DataError(
                            f"unmapped ordering value {raw!r}; add it to "
                            f"ordering_values") from None
                elif canonical in _NUMERIC:
                    try:
                        row[canonical] = _NUMERIC[canonical](float(raw))
                    except ValueError:
                        raise DataError(
                            f"column {source!r}: non-numeric value {raw!r}") from None
                else:
                    row[canonical] = raw
            for key in ("participant_id", "ordering", "round", "m2"):
                if row.get(key) is None:
                    raise DataError(
                        f"import row missing required field {key!r}: {rec}")
            row["participant_id"] = str(row["participant_id"])
            for m in ("m1", "m3"):
                row.setdefault(m, None)
            rows.append(row)
        if not rows:
            raise DataError(f"import produced no rows from {csv_path}")
        return cls(rows)

    def merged_with(self, other: "AnalysisDataset") -> "AnalysisDataset":
        return AnalysisDataset(self.rows + other.rows)


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _parse_float(text) -> Optional[float]:
    if text is None or str(text).strip() == "":
        return None
    value = float(text)
    return None if math.isnan(value) else value


def _parse_int(text) -> Optional[int]:
    value = _parse_float(text)
    return None if value is None else int(round(value))
