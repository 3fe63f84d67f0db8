"""Report document: schema, construction from analyses, deterministic JSON.

Numbers that are not finite (empty bins, undefined variances) are written as
``null``. Everything except the ``timing`` block is a pure function of the
resolved configuration and the input pixels, so reruns give byte-identical
files once timing is set aside.
"""

import json
import math
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from . import rng
from .detect import GRID_CONTROL_LAGS, GRID_LATTICE_LAGS

__all__ = ["SCHEMA_VERSION", "Report", "build_report", "dump_report", "write_report",
           "load_report", "finite_or_none"]

SCHEMA_VERSION = "fpscope.report/1"
CONVENTION = "toolkit convention calibrated on synthetic fixtures"

Num = Optional[float]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SummaryRef(_Model):
    file: Optional[str]
    height: int
    width: int
    image_count: int
    norm_constant: Num


class ProfileBlock(_Model):
    mode: str
    source: str
    count: int
    centers: List[Num]
    mean: List[Num]
    var: List[Num]
    population: List[int]
    cutoff: Num = None


class PeakBlock(_Model):
    f_u: Num
    f_v: Num
    prominence: Num
    value: Num


class PeakReportBlock(_Model):
    peaks: List[PeakBlock]
    scores: Dict[str, Num]
    inferred: Optional[int]
    threshold: Num
    rule: str
    neighborhood: int
    min_prominence: Num
    convention: str = CONVENTION


class GridBlock(_Model):
    score: Num
    horizontal: Num
    vertical: Num
    period: int
    lattice_lags: List[int]
    control_lags: List[int]
    convention: str = CONVENTION


class FitBlock(_Model):
    alpha: Num
    intercept: Num
    rmse: Num
    rho_min: Num
    rho_max: Num
    bins_used: int
    mode: str


class FisherBlock(_Model):
    subject: str
    reference: str
    centers: List[Num]
    values: List[Num]
    defined: List[bool]


class ReferenceBlock(_Model):
    summary: SummaryRef
    angular: ProfileBlock
    errors: List[Dict[str, str]]


class Report(_Model):
    schema_version: str
    command: str
    config: dict
    rng: str
    summary: SummaryRef
    radial: ProfileBlock
    radial_power: ProfileBlock
    angular: ProfileBlock
    peaks: PeakReportBlock
    grid: Optional[GridBlock]
    power_law: Optional[FitBlock]
    fisher: Optional[FisherBlock] = None
    reference: Optional[ReferenceBlock] = None
    errors: List[Dict[str, str]]
    notes: List[str]
    timing: dict


def finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _nums(values):
    return [finite_or_none(v) for v in np.asarray(values, dtype=np.float64).ravel()]


def _summary_ref(summary, file=None):
    M, N = summary.shape
    return SummaryRef(file=file, height=M, width=N, image_count=summary.image_count,
                      norm_constant=finite_or_none(summary.norm_constant))


def _profile_block(p):
    return ProfileBlock(mode=p.mode, source=p.source, count=p.count, centers=_nums(p.centers),
                        mean=_nums(p.mean), var=_nums(p.var),
                        population=[int(v) for v in p.population],
                        cutoff=finite_or_none(p.cutoff) if hasattr(p, "cutoff") else None)


def _peak_block(r):
    return PeakReportBlock(
        peaks=[PeakBlock(f_u=finite_or_none(p.f_u), f_v=finite_or_none(p.f_v),
                         prominence=finite_or_none(p.prominence), value=finite_or_none(p.value))
               for p in r.peaks],
        scores={str(k): finite_or_none(v) for k, v in sorted(r.scores.items())},
        inferred=r.inferred, threshold=finite_or_none(r.threshold), rule=r.rule,
        neighborhood=r.neighborhood, min_prominence=finite_or_none(r.min_prominence))


def _errors(errors):
    return [{"source": str(e["source"]), "error": str(e["error"])} for e in errors]


def build_report(command, config, analysis, summary_file=None, fisher=None, reference=None):
    """Assemble a :class:`Report` from a :class:`fpscope.pipeline.Analysis`."""
    grid = analysis.grid
    fit = analysis.fit
    ref_block = None
    if reference is not None:
        ref_block = ReferenceBlock(summary=_summary_ref(reference.summary),
                                   angular=_profile_block(reference.profiles.angular),
                                   errors=_errors(reference.errors))
    fisher_block = None
    if fisher is not None:
        fisher_block = FisherBlock(subject=fisher.subject, reference=fisher.reference,
                                   centers=_nums(fisher.centers), values=_nums(fisher.values),
                                   defined=[bool(v) for v in fisher.defined])
    return Report(
        schema_version=SCHEMA_VERSION,
        command=command,
        config=config,
        rng=rng.ALGORITHM,
        summary=_summary_ref(analysis.summary, summary_file),
        radial=_profile_block(analysis.profiles.radial),
        radial_power=_profile_block(analysis.profiles.radial_power),
        angular=_profile_block(analysis.profiles.angular),
        peaks=_peak_block(analysis.peaks),
        grid=None if grid is None else GridBlock(
            score=finite_or_none(grid.score), horizontal=finite_or_none(grid.horizontal),
            vertical=finite_or_none(grid.vertical), period=grid.period,
            lattice_lags=list(GRID_LATTICE_LAGS), control_lags=list(GRID_CONTROL_LAGS)),
        power_law=None if fit is None else FitBlock(
            alpha=finite_or_none(fit.alpha), intercept=finite_or_none(fit.intercept),
            rmse=finite_or_none(fit.rmse), rho_min=fit.rho_min, rho_max=fit.rho_max,
            bins_used=fit.bins_used, mode=fit.mode),
        fisher=fisher_block,
        reference=ref_block,
        errors=_errors(analysis.errors),
        notes=list(analysis.notes),
        timing={k: round(v, 6) for k, v in analysis.timing.items()},
    )


def dump_report(report):
    """Canonical JSON text: sorted keys, 2-space indent, no NaN, trailing newline."""
    data = report.model_dump(mode="json")
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(report, path):
    path = Path(path)
    path.write_text(dump_report(report))
    return path


def load_report(path_or_text):
    text = path_or_text
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str)
                                          and not path_or_text.lstrip().startswith("{")):
        text = Path(path_or_text).read_text()
    return Report.model_validate_json(text)
