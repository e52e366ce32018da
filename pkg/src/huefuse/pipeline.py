"""End-to-end runs: stack -> adjusted set -> fusion -> hue correction.

Also hosts the corpus evaluation harness used by the CLI: render stacks from
a directory of radiance maps under one or more EV conditions, produce each
requested method's output, score it, and write deterministic CSVs.
"""

import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .formats import read_pfm, read_radiance_hdr
from .fusion import fuse
from .hueplane import correct_hue_image
from .luminance import geometric_mean, luminance
from .metrics import MetricsReport, evaluate_pair
from .response import estimate_crf_debevec, estimate_crf_mitsunaga, merge_hdr
from .ssla import SslaConfig, ssla
from .synth import DEFAULT_KEY, SynthConfig, generate_stack

#: method labels understood by the evaluation harness, in report order
METHODS = ("mertens", "tm-global", "ssla-only", "proposed")

#: EV conditions exercised by default: full, under-, and over-exposed
DEFAULT_CONDITIONS = (
    (-4.0, -2.0, 0.0, 2.0, 4.0),
    (-4.0, -2.0, 0.0),
    (0.0, 2.0, 4.0),
)

RESULTS_HEADER = "image,method,condition,mean_dh,tmqi_q,tmqi_s,tmqi_n"
SUMMARY_HEADER = "condition,method,metric,min,q1,median,q3,max"


@dataclass
class FusionConfig:
    levels: int = None
    wc: float = 1.0
    ws: float = 1.0
    we: float = 1.0


@dataclass
class PipelineConfig:
    """Everything a full run needs besides the stack itself."""

    crf_method: str = "mitsunaga"
    use_ssla: bool = True
    gamma: float = 2.2
    ssla: SslaConfig = field(default_factory=SslaConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)

    def __post_init__(self):
        if self.crf_method not in ("mitsunaga", "debevec"):
            raise ValueError("crf_method must be 'mitsunaga' or 'debevec'")


@dataclass
class PipelineResult:
    fused: np.ndarray
    corrected: np.ndarray
    hdr: np.ndarray
    curve: object
    adjusted: object = None


def estimate_curve(stack, method="mitsunaga"):
    if method == "mitsunaga":
        return estimate_crf_mitsunaga(stack)
    if method == "debevec":
        return estimate_crf_debevec(stack)
    raise ValueError("crf method must be 'mitsunaga' or 'debevec'")


def run_pipeline(stack, cfg=None):
    """Adjust, fuse, merge, and hue-correct one exposure stack."""
    cfg = cfg or PipelineConfig()
    adjusted = None
    if cfg.use_ssla and len(stack) > 0:
        adjusted = ssla(stack, cfg.ssla)
        fused = fuse(
            adjusted.images,
            levels=cfg.fusion.levels,
            wc=cfg.fusion.wc,
            ws=cfg.fusion.ws,
            we=cfg.fusion.we,
        )
    else:
        fused = fuse(
            stack,
            levels=cfg.fusion.levels,
            wc=cfg.fusion.wc,
            ws=cfg.fusion.ws,
            we=cfg.fusion.we,
        )
    curve = estimate_curve(stack, cfg.crf_method)
    hdr = merge_hdr(stack, curve)
    corrected = correct_hue_image(fused, hdr)
    return PipelineResult(
        fused=fused, corrected=corrected, hdr=hdr, curve=curve, adjusted=adjusted
    )


def tone_map_global(hdr, key=DEFAULT_KEY, gamma=2.2):
    """Whole-image photographic tone map of a radiance map.

    The luminance is keyed to mid-gray, compressed through the same
    halfway-anchored curve the per-area adjustment uses, and the color
    image is rescaled by the luminance ratio and gamma-encoded. This is a
    global baseline, not a local operator.
    """
    hdr = np.asarray(hdr, dtype=np.float64)
    lum = luminance(hdr)
    scaled = (key / geometric_mean(lum)) * lum
    peak = float(scaled.max())
    if peak == 0.0:
        return np.zeros_like(hdr)
    mapped = scaled / (1.0 + scaled) * (1.0 + scaled / peak**2)
    ratio = np.where(lum < 1e-9, 0.0, mapped / np.maximum(lum, 1e-9))
    display_linear = np.clip(ratio[..., None] * hdr, 0.0, 1.0)
    return np.power(display_linear, 1.0 / gamma)


def method_outputs(stack, methods=METHODS, cfg=None):
    """Produce each requested method's display image from one stack.

    The merged radiance map and the adjusted set are shared across the
    methods that need them; returns {method: image}.
    """
    cfg = cfg or PipelineConfig()
    methods = list(methods)
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    fusion = cfg.fusion
    outputs = {}
    hdr = None
    if any(m in methods for m in ("tm-global", "proposed")):
        hdr = merge_hdr(stack, estimate_curve(stack, cfg.crf_method))
    adjusted_fused = None
    if any(m in methods for m in ("ssla-only", "proposed")):
        adjusted = ssla(stack, cfg.ssla)
        adjusted_fused = fuse(
            adjusted.images,
            levels=fusion.levels,
            wc=fusion.wc,
            ws=fusion.ws,
            we=fusion.we,
        )
    if "mertens" in methods:
        outputs["mertens"] = fuse(
            stack, levels=fusion.levels, wc=fusion.wc, ws=fusion.ws, we=fusion.we
        )
    if "tm-global" in methods:
        outputs["tm-global"] = tone_map_global(hdr, gamma=cfg.gamma)
    if "ssla-only" in methods:
        outputs["ssla-only"] = adjusted_fused
    if "proposed" in methods:
        outputs["proposed"] = correct_hue_image(adjusted_fused, hdr)
    return outputs


# ---------------------------------------------------------------------------
# Corpus evaluation

def _condition_label(evs):
    return "/".join(f"{v:g}" for v in evs)


def load_radiance(path):
    path = Path(path)
    if path.suffix.lower() == ".pfm":
        return read_pfm(path)
    return read_radiance_hdr(path)


def evaluate_scene(hdr, conditions, methods, cfg):
    """Score every (condition, method) cell for one radiance map."""
    rows = []
    for evs in conditions:
        stack = generate_stack(hdr, SynthConfig(ev_list=list(evs), gamma=cfg.gamma))
        outputs = method_outputs(stack, methods, cfg)
        for method in methods:
            report = evaluate_pair(outputs[method], hdr)
            rows.append((_condition_label(evs), method, report))
    return rows


def run_eval(
    corpus_paths,
    out_dir,
    conditions=DEFAULT_CONDITIONS,
    methods=METHODS,
    cfg=None,
    threads=1,
    log=None,
):
    """Evaluate a corpus of radiance maps and write results/summary CSVs.

    Scenes may be processed concurrently; rows are sorted before writing,
    so the CSVs are byte-identical across runs with the same inputs and
    configuration. Scenes that fail are reported and skipped; the run
    fails only if nothing succeeds.
    """
    cfg = cfg or PipelineConfig()
    log = log if log is not None else sys.stderr
    corpus_paths = [Path(p) for p in corpus_paths]
    if not corpus_paths:
        raise ValueError("empty corpus")

    def work(path):
        return evaluate_scene(load_radiance(path), conditions, methods, cfg)

    results = {}
    failures = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {p: pool.submit(work, p) for p in corpus_paths}
            for path, fut in futures.items():
                try:
                    results[path.name] = fut.result()
                except Exception as exc:  # noqa: BLE001 - per-scene isolation
                    failures.append((path.name, exc))
    else:
        for path in corpus_paths:
            try:
                results[path.name] = work(path)
            except Exception as exc:  # noqa: BLE001 - per-scene isolation
                failures.append((path.name, exc))

    for name, exc in failures:
        print(f"eval: {name} failed: {exc}", file=log)
    if not results:
        raise RuntimeError("every corpus scene failed to evaluate")

    rows = []
    for name in sorted(results):
        for condition, method, report in results[name]:
            rows.append((name, method, condition, report))
    rows.sort(key=lambda r: (r[0], r[2], r[1]))

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.csv"
    with open(results_path, "w", encoding="ascii", newline="\n") as f:
        f.write(RESULTS_HEADER + "\n")
        for name, method, condition, report in rows:
            f.write(
                f"{name},{method},{condition},"
                f"{report.mean_dh:.10g},{report.tmqi_q:.10g},"
                f"{report.tmqi_s:.10g},{report.tmqi_n:.10g}\n"
            )

    summary_path = out_dir / "summary.csv"
    with open(summary_path, "w", encoding="ascii", newline="\n") as f:
        f.write(SUMMARY_HEADER + "\n")
        conditions_seen = sorted({r[2] for r in rows})
        methods_seen = sorted({r[1] for r in rows})
        for condition in conditions_seen:
            for method in methods_seen:
                cell = [
                    r[3]
                    for r in rows
                    if r[1] == method and r[2] == condition
                ]
                for metric, pick in (
                    ("mean_dh", lambda rep: rep.mean_dh),
                    ("tmqi_q", lambda rep: rep.tmqi_q),
                ):
                    values = np.array([pick(rep) for rep in cell])
                    q = np.percentile(values, [0, 25, 50, 75, 100])
                    stats = ",".join(f"{v:.10g}" for v in q)
                    f.write(f"{condition},{method},{metric},{stats}\n")
    return results_path, summary_path


def summarize_report(report: MetricsReport):
    """One-line human-readable rendering of a metrics report."""
    return (
        f"mean_dh={report.mean_dh:.6f} tmqi_q={report.tmqi_q:.6f} "
        f"tmqi_s={report.tmqi_s:.6f} tmqi_n={report.tmqi_n:.6f}"
    )


def pipeline_config_from_mapping(options):
    """Build a PipelineConfig from flat 'section.key' -> value options."""
    cfg = PipelineConfig()
    ssla_kwargs = {}
    fusion_kwargs = {}
    for key, value in options.items():
        if value is None:
            continue
        if key == "crf.method":
            cfg = replace(cfg, crf_method=str(value))
        elif key == "pipeline.ssla":
            cfg = replace(cfg, use_ssla=_as_bool(value))
        elif key == "pipeline.gamma":
            cfg = replace(cfg, gamma=float(value))
        elif key == "ssla.m":
            ssla_kwargs["areas"] = int(value)
        elif key == "ssla.sigma_frac":
            ssla_kwargs["sigma_frac"] = float(value)
        elif key == "ssla.seed":
            ssla_kwargs["seed"] = int(value)
        elif key == "ssla.key_value":
            ssla_kwargs["key"] = float(value)
        elif key == "fusion.levels":
            fusion_kwargs["levels"] = int(value)
        elif key in ("fusion.wc", "fusion.ws", "fusion.we"):
            fusion_kwargs[key.split(".")[1]] = float(value)
        else:
            raise ValueError(f"unknown configuration key {key!r}")
    if ssla_kwargs:
        cfg = replace(cfg, ssla=replace(cfg.ssla, **ssla_kwargs))
    if fusion_kwargs:
        cfg = replace(cfg, fusion=replace(cfg.fusion, **fusion_kwargs))
    return cfg


def _as_bool(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")
