"""CSV/JSON readers and writers for the batch pipeline.

All files are UTF-8 with headers; floats are serialized at a configurable
number of significant digits (default 6).  Readers raise ``ValueError``
with the offending row number on malformed input.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

from .bias_study import BiasReport, Scenario
from .effects import AdditiveEffect, StudySummary
from .odds_recovery import CombinedOR, MergedTable, ORRecord
from .pooling import MetaResult

STUDY_FIELDS = ["study_id", "m1", "m2", "m3", "sd1", "sd2", "sd3", "n1", "n2", "n3"]
EFFECT_FIELDS = ["study_id", "method", "beta", "sd_beta", "d", "g", "v_g", "seed", "iterations"]
META_FIELDS = ["k", "g_wm", "v_wm", "tau2", "ci_lo", "ci_hi"]
OR_INPUT_FIELDS = ["study_id", "label", "or", "ci_lo", "ci_hi", "m_top", "m_bottom"]
OR_OUTPUT_FIELDS = ["study_id", "or_combined", "ci_lo", "ci_hi", "pairing", "ab_distance"]
BIAS_FIELDS = [
    "density", "L", "sigma_ws", "m1", "m2", "m3", "n1", "n2", "n3",
    "bias_g_crude", "bias_gwm_crude", "bias_g_sim", "bias_gwm_sim",
    "mc_se_g_crude", "mc_se_gwm_crude", "mc_se_g_sim", "mc_se_gwm_sim",
    "replicates", "inner_iterations", "seed", "truncation", "retries",
]

DEFAULT_PRECISION = 6


def fmt(value: float, precision: int = DEFAULT_PRECISION) -> str:
    return format(float(value), f".{precision}g")


def _check_header(reader: csv.DictReader, required: Sequence[str], path) -> None:
    missing = [f for f in required if f not in (reader.fieldnames or [])]
    if missing:
        raise ValueError(f"{path}: missing required columns {missing} (header row is required)")


def _summary_from_mapping(row, row_no: int, origin) -> StudySummary:
    try:
        return StudySummary(
            study_id=str(row["study_id"]),
            m=(float(row["m1"]), float(row["m2"]), float(row["m3"])),
            sd=(float(row["sd1"]), float(row["sd2"]), float(row["sd3"])),
            n=(int(float(row["n1"])), int(float(row["n2"])), int(float(row["n3"]))),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{origin}, row {row_no}: {exc}") from exc


def read_study_summaries(path) -> list[StudySummary]:
    """Parse study summaries from CSV (or a JSON list with the same fields)."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        records = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(records, list):
            raise ValueError(f"{path}: expected a JSON list of study objects")
        return [_summary_from_mapping(rec, i + 1, path) for i, rec in enumerate(records)]
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        _check_header(reader, STUDY_FIELDS, path)
        return [_summary_from_mapping(row, i + 2, path) for i, row in enumerate(reader)]


def write_effects(
    path,
    effects: Iterable[AdditiveEffect],
    seed: int | None = None,
    iterations: int | None = None,
    precision: int = DEFAULT_PRECISION,
) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(EFFECT_FIELDS)
        for eff in effects:
            is_sim = eff.method == "simulation"
            writer.writerow(
                [
                    eff.study_id,
                    eff.method,
                    fmt(eff.beta, precision),
                    fmt(eff.sd_beta, precision),
                    fmt(eff.d, precision),
                    fmt(eff.g, precision),
                    fmt(eff.v_g, precision),
                    seed if is_sim and seed is not None else "",
                    iterations if is_sim and iterations is not None else "",
                ]
            )


def read_effects(path) -> list[tuple[str, float, float]]:
    """Read (study_id, g, v_g) triples from an effects CSV."""
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        _check_header(reader, ["study_id", "g", "v_g"], path)
        for i, row in enumerate(reader):
            try:
                rows.append((str(row["study_id"]), float(row["g"]), float(row["v_g"])))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}, row {i + 2}: {exc}") from exc
    return rows


def write_meta_result(path, result: MetaResult, precision: int = DEFAULT_PRECISION) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(META_FIELDS)
        writer.writerow(
            [
                result.k,
                fmt(result.g_wm, precision),
                fmt(result.v_wm, precision),
                fmt(result.tau2, precision),
                fmt(result.ci_lo, precision),
                fmt(result.ci_hi, precision),
            ]
        )


def read_or_records(path) -> list[tuple[str, ORRecord, ORRecord]]:
    """Read OR-record pairs, one AB_vs_AA and one BB_vs_AB per study."""
    path = Path(path)
    per_study: dict[str, dict[str, ORRecord]] = {}
    order: list[str] = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        _check_header(reader, OR_INPUT_FIELDS, path)
        for i, row in enumerate(reader):
            try:
                study = str(row["study_id"])
                record = ORRecord(
                    label=row["label"],
                    or_value=float(row["or"]),
                    ci_lo=float(row["ci_lo"]),
                    ci_hi=float(row["ci_hi"]),
                    m_top=int(float(row["m_top"])),
                    m_bottom=int(float(row["m_bottom"])),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}, row {i + 2}: {exc}") from exc
            slot = per_study.setdefault(study, {})
            if record.label in slot:
                raise ValueError(f"{path}, row {i + 2}: duplicate {record.label} record for study {study!r}")
            if study not in order:
                order.append(study)
            slot[record.label] = record
    pairs = []
    for study in order:
        slot = per_study[study]
        missing = {"AB_vs_AA", "BB_vs_AB"} - set(slot)
        if missing:
            raise ValueError(f"{path}: study {study!r} is missing {sorted(missing)} record(s)")
        pairs.append((study, slot["AB_vs_AA"], slot["BB_vs_AB"]))
    return pairs


def write_combined_ors(
    path,
    rows: Iterable[tuple[str, MergedTable, CombinedOR]],
    precision: int = DEFAULT_PRECISION,
) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(OR_OUTPUT_FIELDS)
        for study, merged, combined in rows:
            writer.writerow(
                [
                    study,
                    fmt(combined.or_value, precision),
                    fmt(combined.ci_lo, precision),
                    fmt(combined.ci_hi, precision),
                    merged.pairing,
                    fmt(merged.ab_distance, precision),
                ]
            )


def read_scenario(path, **overrides) -> Scenario:
    """Load a Scenario from a JSON key-value config file.

    The study count is keyed ``L``; ``n_studies`` is accepted as an alias.
    """
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object of scenario settings")
    known = {
        "density", "L", "n_studies", "mean_vec", "sigma_ws", "n_triplet",
        "mc_reps", "inner_iterations", "seed", "truncation",
    }
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"{path}: unknown scenario keys {sorted(unknown)}")
    if "L" in data and "n_studies" in data and data["L"] != data["n_studies"]:
        raise ValueError(f"{path}: conflicting 'L' and 'n_studies' values")
    if "L" in data:
        data["n_studies"] = data.pop("L")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return Scenario(
            density=data["density"],
            n_studies=int(data["n_studies"]),
            mean_vec=tuple(data["mean_vec"]),
            sigma_ws=float(data["sigma_ws"]),
            n_triplet=tuple(data["n_triplet"]),
            mc_reps=int(data.get("mc_reps", Scenario.mc_reps)),
            inner_iterations=int(data.get("inner_iterations", Scenario.inner_iterations)),
            seed=int(data.get("seed", Scenario.seed)),
            truncation=data.get("truncation", "paper"),
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing scenario key {exc}") from exc


def write_bias_reports(path, reports: Iterable[BiasReport], precision: int = DEFAULT_PRECISION) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(BIAS_FIELDS)
        for rep in reports:
            s = rep.scenario
            writer.writerow(
                [s.density, s.n_studies, fmt(s.sigma_ws, precision)]
                + [fmt(v, precision) for v in s.mean_vec]
                + list(s.n_triplet)
                + [
                    fmt(rep.bias_g_crude, precision),
                    fmt(rep.bias_gwm_crude, precision),
                    fmt(rep.bias_g_sim, precision),
                    fmt(rep.bias_gwm_sim, precision),
                    fmt(rep.mc_se_g_crude, precision),
                    fmt(rep.mc_se_gwm_crude, precision),
                    fmt(rep.mc_se_g_sim, precision),
                    fmt(rep.mc_se_gwm_sim, precision),
                    s.mc_reps,
                    s.inner_iterations,
                    s.seed,
                    s.truncation,
                    rep.retries,
                ]
            )
