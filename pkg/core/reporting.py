"""
Отчеты: сборка ReportDocument, текстовая сводка и CSV-кривые для команды profile.
"""

import csv
import logging
from typing import TextIO

import numpy as np

from core.convexity import divided_differences, e_matrix_slacks, invariant_slacks
from core.energy import EnergySpec, to_phi, to_psi
from core.schemas import (
    AnalysisConfig,
    ClaimResult,
    ConvexityReport,
    EnergyDescriptor,
    ReportDocument,
    Verdict,
)
from utils.timing import get_stage_metrics

logger = logging.getLogger(__name__)

CURVES = ("phi", "psi", "h", "slack-dfz", "slack-abeyaratne", "slack-e-matrix", "slack-h")

VERDICT_MARKS = {
    Verdict.HOLDS: "✅ holds",
    Verdict.FAILS: "❌ fails",
    Verdict.INAPPLICABLE: "➖ inapplicable",
}


def describe_energy(energy: EnergySpec, catalog_entry: str | None = None) -> EnergyDescriptor:
    return EnergyDescriptor(
        name=energy.name,
        representation=energy.representation.value,
        claimed_domain=energy.claimed_domain.value,
        expression=energy.expression,
        catalog_entry=catalog_entry,
    )


def analysis_document(report: ConvexityReport, energy: EnergyDescriptor, cfg: AnalysisConfig) -> ReportDocument:
    return ReportDocument(
        command="analyze",
        energy=energy,
        config=cfg,
        analysis=report,
        passed=report.all_hold,
        timing=get_stage_metrics(),
    )


def counterexample_document(claims: list[ClaimResult], cfg: AnalysisConfig) -> ReportDocument:
    return ReportDocument(
        command="counterexample",
        config=cfg,
        claims=claims,
        passed=all(c.verified for c in claims),
        timing=get_stage_metrics(),
    )


def render_report(report: ConvexityReport) -> str:
    """Человекочитаемая сводка анализа."""
    lines = [f"Энергия: {report.energy_name}", f"Область: {report.domain}", f"Seed: {report.seed}", ""]
    width = max(len(r.criterion) for r in report.results)
    for r in report.results:
        slack = "—" if r.min_slack is None else f"{r.min_slack:+.3e}"
        flag = " (граничный случай)" if r.boundary else ""
        lines.append(f"  {r.criterion:<{width}}  {VERDICT_MARKS[r.verdict]:<16} min slack {slack}{flag}")
        for w in r.witnesses[:1]:
            where = w.t_triple if w.kind == "segment" else w.points
            lines.append(f"  {'':<{width}}  свидетель {w.kind}: {where}, нарушение {w.margin:.3e}")
    if report.diagnostics:
        lines.append("")
        lines.extend(f"  [{d.kind}] {d.message}" for d in report.diagnostics)
    lines.append("")
    lines.append("Итог: все критерии выполнены" if report.all_hold else "Итог: есть нарушенные критерии")
    return "\n".join(lines)


def render_claims(claims: list[ClaimResult]) -> str:
    lines = ["Контрпример: изохорная энергия |√(λ1/λ2) − √(λ2/λ1)|", ""]
    for c in claims:
        mark = "✅" if c.verified else "❌"
        lines.append(f"  {mark} {c.claim}: {c.statement}")
        for key, value in c.details.items():
            lines.append(f"       {key} = {value:.6g}")
    return "\n".join(lines)


def write_csv(stream: TextIO, header: list[str], rows: np.ndarray):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) for v in row])


def profile_curve(energy: EnergySpec, curve: str, cfg: AnalysisConfig) -> tuple[list[str], np.ndarray]:
    """
    Таблица значений для одной кривой.

    Args:
        energy: Энергия
        curve: Одна из CURVES
        cfg: Конфигурация (сетки)

    Returns:
        (заголовок, строки)
    """
    if curve not in CURVES:
        raise ValueError(f"Неизвестная кривая '{curve}', доступны: {', '.join(CURVES)}")

    if curve in ("phi", "slack-dfz"):
        gamma = cfg.gamma_grid()
        values = np.asarray(to_phi(energy)(gamma))
        if curve == "phi":
            return ["gamma", "phi"], np.column_stack([gamma, values])
        dd1, scale1, dd2, scale2 = divided_differences(gamma, values)
        return (["gamma", "slack_monotonicity", "slack_convexity"],
                np.column_stack([gamma[1:-1], (dd1 / scale1)[1:], dd2 / scale2]))

    if curve == "psi":
        I = 2.0 + cfg.gamma_grid() ** 2
        return ["I", "psi"], np.column_stack([I, np.asarray(to_psi(energy)(I))])

    if curve == "slack-abeyaratne":
        data = invariant_slacks(to_psi(energy), cfg)
        return (["I", "psi_prime", "psi_second", "slack"],
                np.column_stack([data.I, data.psi_d1, data.psi_d2, data.combination]))

    if curve == "slack-e-matrix":
        psi = to_psi(energy)
        data = invariant_slacks(psi, cfg)
        gamma = np.sqrt(data.I - 2.0)
        lam1 = 0.5 * (gamma + np.sqrt(gamma ** 2 + 4.0))
        check = e_matrix_slacks(psi, lam1, 1.0 / lam1)
        m = check.matrix
        return (["lambda1", "e11", "e22", "e12", "det", "slack"],
                np.column_stack([lam1, m.e11, m.e22, m.e12, m.det, check.cone_slack]))

    from core.isochoric import as_isochoric

    t = cfg.ratio_grid()
    values = np.asarray(as_isochoric(energy).h(t))
    if curve == "h":
        return ["t", "h"], np.column_stack([t, values])
    dd1, scale1, dd2, scale2 = divided_differences(t, values)
    return (["t", "slack_monotonicity", "slack_convexity"],
            np.column_stack([t[1:-1], (dd1 / scale1)[1:], dd2 / scale2]))
