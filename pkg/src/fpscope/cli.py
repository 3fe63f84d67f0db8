"""``fpscope`` command line: analyze, compare, synth, report.

Exit codes: 0 success, 1 internal error, 2 invalid input or configuration.
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import __version__, detect, pipeline, plots, report, stats
from .corpus import CorpusSpec, list_images
from .errors import FpscopeError
from .residual import KINDS, DenoiserSpec
from .synth import FixtureSpec, write_fixture

logger = logging.getLogger("fpscope")

EXIT_OK, EXIT_INTERNAL, EXIT_INVALID = 0, 1, 2


class RunConfig(BaseModel):
    """Fully resolved run configuration (echoed into every report)."""

    model_config = ConfigDict(extra="forbid")

    subcommand: Literal["analyze", "compare", "synth", "report"]
    input: Optional[str] = None
    reference: Optional[str] = None
    output: Optional[str] = None
    crop: Optional[int] = Field(default=256, ge=1)
    denoiser: Literal[KINDS] = "gaussian"
    strength: float = Field(default=1.0, gt=0)
    window: int = Field(default=3, ge=3)
    range_sigma: float = Field(default=0.1, gt=0)
    denoiser_command: Optional[str] = None
    no_residual: bool = False
    profiles_on: Literal["raw", "residual"] = "raw"
    max_images: int = Field(default=1000, ge=1)
    min_images: int = Field(default=1, ge=1)
    threads: int = Field(default=1, ge=1, le=256)
    color_mode: Literal["luminance", "per-channel"] = "luminance"
    decoder: Optional[str] = None
    candidates: List[int] = Field(default_factory=lambda: list(detect.DEFAULT_CANDIDATES))
    peak_threshold: float = Field(default=detect.DEFAULT_THRESHOLD, gt=0)
    neighborhood: int = Field(default=detect.DEFAULT_NEIGHBORHOOD, ge=3)
    min_prominence: float = Field(default=detect.DEFAULT_MIN_PROMINENCE, gt=0)
    plots: bool = True
    spec: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.neighborhood % 2 == 0:
            raise ValueError("neighborhood must be odd")
        if any(c < 2 for c in self.candidates):
            raise ValueError("candidates must be >= 2")
        sub = self.subcommand
        if sub in ("analyze", "compare", "report") and not self.input:
            raise ValueError(f"{sub} needs --input")
        if sub == "compare":
            if not self.reference:
                raise ValueError("compare needs --reference")
            if Path(self.reference).resolve() == Path(self.input).resolve():
                logger.info("subject and reference are the same directory")
        if sub in ("analyze", "compare", "synth") and not self.output:
            raise ValueError(f"{sub} needs --output")
        if sub == "synth" and not self.spec:
            raise ValueError("synth needs --spec")
        if self.output and self.input and sub != "report" and \
                Path(self.output).resolve() == Path(self.input).resolve():
            raise ValueError("--output must differ from --input")
        if self.denoiser == "external" and not self.denoiser_command:
            raise ValueError("external denoiser needs denoiser_command")
        return self

    def denoiser_spec(self):
        if self.no_residual:
            return None
        return DenoiserSpec(self.denoiser, self.strength, self.window, self.range_sigma,
                            self.denoiser_command)

    def echo(self):
        """Config as stored in the report: everything except run-only knobs."""
        data = self.model_dump(mode="json")
        data.pop("threads")
        data["denoiser_mapping"] = "heuristic: gaussian std in pixels stands in for a learned denoiser noise level"
        return data


def build_parser():
    p = argparse.ArgumentParser(prog="fpscope", description=(
        "Corpus-level spectral fingerprint analysis of image sets."))
    p.add_argument("--version", action="version", version=f"fpscope {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, corpus=True):
        sp.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
        sp.add_argument("--output", help="output directory")
        if corpus:
            sp.add_argument("--crop", type=int, help="center crop size (default 256)")
            sp.add_argument("--denoiser", choices=KINDS)
            sp.add_argument("--strength", type=float, help="denoiser strength (gaussian std)")
            sp.add_argument("--profiles-on", dest="profiles_on", choices=("raw", "residual"))
            sp.add_argument("--max-images", dest="max_images", type=int)
            sp.add_argument("--threads", type=int)
            sp.add_argument("--decoder", help="external command that prints PNM for a path")

    a = sub.add_parser("analyze", help="analyze one corpus directory")
    a.add_argument("--input", required=False)
    common(a)
    a.add_argument("--no-plots", dest="no_plots", action="store_true")

    c = sub.add_parser("compare", help="analyze a subject corpus against a reference")
    c.add_argument("--input", required=False)
    c.add_argument("--reference")
    common(c)
    c.add_argument("--no-plots", dest="no_plots", action="store_true")

    s = sub.add_parser("synth", help="write a fixture corpus from a FixtureSpec JSON file")
    s.add_argument("--spec", help="FixtureSpec JSON file")
    common(s, corpus=False)

    r = sub.add_parser("report", help="re-render plots from an existing report.json")
    r.add_argument("--input", help="report.json")
    common(r, corpus=False)
    return p


def resolve_config(args):
    """Merge the optional JSON config file with explicit flags."""
    data = {}
    if getattr(args, "config", None):
        data = json.loads(Path(args.config).read_text())
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
    data["subcommand"] = args.subcommand
    for key in ("input", "reference", "output", "crop", "denoiser", "strength", "profiles_on",
                "max_images", "threads", "decoder", "spec"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if getattr(args, "no_plots", False):
        data["plots"] = False
    return RunConfig.model_validate(data)


def _corpus(cfg, directory, name):
    files = list_images(directory)
    return CorpusSpec(tuple(str(f) for f in files), crop=cfg.crop, residual=cfg.denoiser_spec(),
                      max_images=cfg.max_images, min_images=cfg.min_images,
                      color_mode=cfg.color_mode, decoder=cfg.decoder, name=name)


def _analyze(cfg, directory, name):
    return pipeline.analyze(_corpus(cfg, directory, name), cfg.threads, cfg.profiles_on,
                            tuple(cfg.candidates), cfg.peak_threshold, cfg.neighborhood,
                            cfg.min_prominence)


def _write_profile_csv(path, prof):
    lines = ["center,mean,var,population"]
    for c, m, v, n in prof.rows():
        lines.append(",".join([repr(c), repr(m), repr(v), str(n)]))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_fisher_csv(path, fisher):
    lines = ["center,value,defined"]
    for c, v, d in zip(fisher.centers, fisher.values, fisher.defined):
        lines.append(f"{float(c)!r},{float(v)!r},{int(bool(d))}")
    Path(path).write_text("\n".join(lines) + "\n")


def render_plots(rep, summary, outdir):
    """Write every SVG figure derivable from a report and its summary grids."""
    outdir = Path(outdir)
    written = []

    def put(name, text):
        (outdir / name).write_text(text)
        written.append(name)

    put("power_spectrum.svg", plots.heatmap_svg(
        np.fft.fftshift(summary.avg_power), "average power spectrum (log10, DC centered)",
        log=True))
    # largest odd window that fits small grids
    side = min(stats.DEFAULT_CROP_LAGS, (min(summary.shape) - 1) // 2 * 2 + 1)
    crop = stats.autocorr_crop(summary, side)
    off = crop.copy()
    h = crop.shape[0] // 2
    off[h, h] = np.nan
    finite = off[np.isfinite(off)]
    put("autocorrelation.svg", plots.heatmap_svg(
        crop, f"average autocorrelation, lags -{h}..{h} (zero lag at center, saturated)",
        vmin=float(finite.min()), vmax=float(finite.max()), lag_labels=f"lags -{h} .. +{h}"))
    put("radial.svg", plots.radial_svg(rep.radial_power.centers, rep.radial_power.mean,
                                       rep.power_law, "radial power spectrum"))
    put("angular.svg", plots.angular_svg(rep.angular.centers, rep.angular.mean))
    if rep.fisher is not None:
        put("fisher_polar.svg", plots.fisher_polar_svg(rep.fisher.centers, [
            np.nan if v is None else v for v in rep.fisher.values]))
    return written


def cmd_analyze(cfg, reference=False):
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    subject = _analyze(cfg, cfg.input, "subject" if reference else "corpus")
    ref = fisher = None
    if reference:
        ref = _analyze(cfg, cfg.reference, "reference")
        fisher = pipeline.compare(subject, ref)
        if fisher is None:
            subject.notes.append("Fisher profile undefined: a corpus has fewer than 2 images")
    stats.save_summary(subject.summary, out, "summary")
    subject.timing["threads"] = cfg.threads
    subject.timing["total"] = time.perf_counter() - t0
    rep = report.build_report(cfg.subcommand, cfg.echo(), subject, "summary.json", fisher, ref)
    _write_profile_csv(out / "radial.csv", subject.profiles.radial)
    _write_profile_csv(out / "radial_power.csv", subject.profiles.radial_power)
    _write_profile_csv(out / "angular.csv", subject.profiles.angular)
    if fisher is not None:
        _write_fisher_csv(out / "fisher.csv", fisher)
    if cfg.plots:
        render_plots(rep, subject.summary, out)
    report.write_report(rep, out / "report.json")
    logger.info("wrote %s", out / "report.json")
    return rep


def cmd_synth(cfg):
    spec = FixtureSpec.model_validate_json(Path(cfg.spec).read_text())
    return write_fixture(spec, cfg.output)


def cmd_report(cfg):
    path = Path(cfg.input)
    rep = report.load_report(path)
    if rep.summary.file is None:
        raise FpscopeError("report has no summary grids to plot")
    summary = stats.load_summary(path.parent / rep.summary.file)
    out = Path(cfg.output) if cfg.output else path.parent
    out.mkdir(parents=True, exist_ok=True)
    return render_plots(rep, summary, out)


def _describe(exc):
    if isinstance(exc, ValidationError):
        parts = []
        for e in exc.errors():
            loc = ".".join(str(x) for x in e["loc"]) or "config"
            parts.append(f"{loc}: {e['msg']}")
        return "invalid configuration: " + "; ".join(parts)
    return f"{type(exc).__name__}: {exc}"


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if cfg.subcommand == "analyze":
            cmd_analyze(cfg)
        elif cfg.subcommand == "compare":
            cmd_analyze(cfg, reference=True)
        elif cfg.subcommand == "synth":
            cmd_synth(cfg)
        else:
            cmd_report(cfg)
    except (FpscopeError, ValidationError, ValueError, OSError) as exc:
        print(f"fpscope: error: {_describe(exc)}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - stable exit-code contract
        logger.exception("internal error")
        print(f"fpscope: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
