"""Command line interface.

Every subcommand reads its inputs fully and computes the result before the
first byte is written, so a failed run never leaves partial outputs behind.
Stacks on disk are a directory of 8-bit PNGs plus a stack.json manifest.
"""

import argparse
import json
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import pipeline as pl
from .formats import read_png8, write_png8, write_pfm, write_radiance_hdr
from .fusion import fuse
from .hueplane import correct_hue_image
from .metrics import evaluate_pair, mean_hue_difference
from .response import crf_mse, load_curve, merge_hdr, save_curve
from .ssla import ssla
from .stack import load_stack, save_stack
from .synth import SynthConfig, generate_stack


def _fail(message):
    print(f"huefuse: {message}", file=sys.stderr)
    return 1


def _require(path, kind="input"):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{kind} not found: {path}")
    return path


def _write_radiance(path, image):
    path = Path(path)
    if path.suffix.lower() == ".pfm":
        write_pfm(path, image)
    else:
        write_radiance_hdr(path, image)


def _parse_ev_list(text):
    try:
        values = [float(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError as exc:
        raise ValueError(f"bad EV list {text!r}") from exc
    if not values:
        raise ValueError("empty EV list")
    return values


def _parse_conditions(text):
    groups = [g for g in text.split(";") if g.strip()]
    if not groups:
        raise ValueError("empty condition list")
    return [tuple(_parse_ev_list(g)) for g in groups]


def _read_config_file(path):
    options = {}
    for lineno, raw in enumerate(_require(path, "config").read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        options[key.strip()] = value.strip()
    return options


def _collect_config(args):
    """Merge config-file options with command line flags; flags win."""
    options = {}
    if getattr(args, "config", None):
        options.update(_read_config_file(args.config))
    overrides = {
        "crf.method": getattr(args, "crf", None),
        "pipeline.gamma": getattr(args, "gamma", None),
        "ssla.m": getattr(args, "areas", None),
        "ssla.sigma_frac": getattr(args, "sigma_frac", None),
        "ssla.seed": getattr(args, "seed", None),
        "ssla.key_value": getattr(args, "key", None),
        "fusion.levels": getattr(args, "levels", None),
        "fusion.wc": getattr(args, "wc", None),
        "fusion.ws": getattr(args, "ws", None),
        "fusion.we": getattr(args, "we", None),
    }
    if getattr(args, "no_ssla", False):
        overrides["pipeline.ssla"] = False
    for key, value in overrides.items():
        if value is not None:
            options[key] = value
    return pl.pipeline_config_from_mapping(options)


def _add_config_flags(parser, fusion=True, ssla_flags=True):
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--gamma", type=float, help="display gamma (default 2.2)")
    if ssla_flags:
        parser.add_argument("--areas", type=int, help="luminance area count")
        parser.add_argument("--sigma-frac", type=float, help="contrast blur fraction")
        parser.add_argument("--seed", type=int, help="segmentation RNG seed")
        parser.add_argument("--key", type=float, help="mid-gray key value")
    if fusion:
        parser.add_argument("--levels", type=int, help="pyramid level count")
        parser.add_argument("--wc", type=float, help="contrast weight exponent")
        parser.add_argument("--ws", type=float, help="saturation weight exponent")
        parser.add_argument("--we", type=float, help="well-exposedness exponent")


def _load_stack_arg(path):
    return load_stack(_require(path, "stack"))[0]


# ---------------------------------------------------------------------------
# subcommands

def cmd_synth(args):
    hdr = pl.load_radiance(_require(args.hdr, "radiance map"))
    cfg = SynthConfig(
        ev_list=_parse_ev_list(args.ev),
        gamma=args.gamma if args.gamma is not None else 2.2,
    )
    stack = generate_stack(hdr, cfg)
    save_stack(args.out, stack, gamma=cfg.gamma)
    print(f"wrote {len(stack)} exposures to {args.out}")
    return 0


def cmd_crf(args):
    stack = _load_stack_arg(args.stack)
    curve = pl.estimate_curve(stack, args.method)
    mse = None
    if args.truth_gamma is not None:
        mse = crf_mse(curve, args.truth_gamma)
    if args.out:
        save_curve(args.out, curve)
    if mse is not None:
        print(f"mse_r={mse[0]:.6e} mse_g={mse[1]:.6e} mse_b={mse[2]:.6e}")
    if args.out:
        print(f"wrote {curve.kind} curve to {args.out}")
    elif mse is None:
        print(f"estimated {curve.kind} curve (use --out to save it)")
    return 0


def cmd_merge(args):
    stack = _load_stack_arg(args.stack)
    if args.curve:
        curve = load_curve(_require(args.curve, "curve file"))
    else:
        curve = pl.estimate_curve(stack, args.method)
    hdr = merge_hdr(stack, curve)
    _write_radiance(args.out, hdr)
    print(f"wrote radiance map to {args.out}")
    return 0


def cmd_ssla(args):
    stack = _load_stack_arg(args.stack)
    cfg = _collect_config(args)
    adjusted = ssla(stack, cfg.ssla)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for i, img in enumerate(adjusted.images):
        name = f"adjusted_{i:02d}.png"
        write_png8(out_dir / name, img)
        files.append(name)
    manifest = {
        "files": files,
        "sources": [int(s) for s in adjusted.sources],
        "scales": [float(a) for a in adjusted.scales],
        "areas": int(adjusted.segments.count),
    }
    with open(out_dir / "adjusted.json", "w", encoding="ascii") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {len(files)} adjusted images ({manifest['areas']} areas) "
          f"to {out_dir}")
    return 0


def cmd_fuse(args):
    stack = _load_stack_arg(args.stack)
    cfg = _collect_config(args)
    images = stack.images
    if args.ssla:
        images = ssla(stack, cfg.ssla).images
    fused = fuse(
        images,
        levels=cfg.fusion.levels,
        wc=cfg.fusion.wc,
        ws=cfg.fusion.ws,
        we=cfg.fusion.we,
    )
    write_png8(args.out, fused)
    print(f"wrote fused image to {args.out}")
    return 0


def cmd_correct(args):
    fused = read_png8(_require(args.fused, "fused image"))
    hdr = pl.load_radiance(_require(args.hdr, "radiance map"))
    if fused.shape != hdr.shape:
        raise ValueError(
            f"shape mismatch: fused {fused.shape} vs radiance {hdr.shape}"
        )
    corrected = correct_hue_image(fused, hdr)
    write_png8(args.out, corrected)
    print(f"wrote hue-corrected image to {args.out}")
    return 0


def cmd_metrics(args):
    image = read_png8(_require(args.fused, "fused image"))
    hdr = pl.load_radiance(_require(args.ref, "radiance map"))
    gamma = args.fused_gamma if args.fused_gamma is not None else 1.0
    if args.hue_only:
        dh = mean_hue_difference(image, hdr, fused_gamma=gamma)
        print(f"mean_dh={dh:.6f}")
        return 0
    report = evaluate_pair(image, hdr, fused_gamma=gamma)
    print(pl.summarize_report(report))
    return 0


def cmd_pipeline(args):
    stack = _load_stack_arg(args.stack)
    cfg = _collect_config(args)
    result = pl.run_pipeline(stack, cfg)
    out_dir = Path(args.out)
    # compute everything above; only now touch the filesystem
    out_dir.mkdir(parents=True, exist_ok=True)
    write_png8(out_dir / "fused.png", result.fused)
    write_png8(out_dir / "corrected.png", result.corrected)
    write_pfm(out_dir / "hdr.pfm", result.hdr)
    save_curve(out_dir / "curve.txt", result.curve)
    print(f"wrote fused.png, corrected.png, hdr.pfm, curve.txt to {out_dir}")
    return 0


def cmd_eval(args):
    corpus = _require(args.corpus, "corpus directory")
    paths = sorted(
        p
        for p in corpus.iterdir()
        if p.suffix.lower() in (".hdr", ".pfm") and p.is_file()
    )
    if not paths:
        raise FileNotFoundError(f"no .hdr or .pfm files in {corpus}")
    conditions = (
        _parse_conditions(args.conditions)
        if args.conditions
        else pl.DEFAULT_CONDITIONS
    )
    methods = args.methods.split(",") if args.methods else list(pl.METHODS)
    cfg = _collect_config(args)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("HUEFUSE_THREADS", "1"))
    results_path, summary_path = pl.run_eval(
        paths,
        args.out,
        conditions=conditions,
        methods=methods,
        cfg=cfg,
        threads=max(1, threads),
    )
    print(f"wrote {results_path} and {summary_path}")
    return 0


# lets "--ev -4,-2,0,2,4" parse: EV lists begin like negative numbers
_EV_TOKEN = re.compile(r"^-\d+(\.\d+)?([,;]-?\d+(\.\d+)?)*$")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="huefuse",
        description="Exposure fusion with radiance-guided hue correction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render an exposure stack from a radiance map")
    p._negative_number_matcher = _EV_TOKEN
    p.add_argument("--hdr", required=True, help="input .hdr or .pfm radiance map")
    p.add_argument("--ev", default="-4,-2,0,2,4", help="comma-separated EV list")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--out", required=True, help="output stack directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("crf", help="estimate a camera response curve")
    p.add_argument("--stack", required=True, help="stack.json or its directory")
    p.add_argument(
        "--method", choices=("mitsunaga", "debevec"), default="mitsunaga"
    )
    p.add_argument(
        "--truth-gamma",
        type=float,
        help="print per-channel MSE against this power-law response",
    )
    p.add_argument("--out", help="save the curve to this file")
    p.set_defaults(func=cmd_crf)

    p = sub.add_parser("merge", help="merge a stack into a radiance map")
    p.add_argument("--stack", required=True, help="stack.json or its directory")
    p.add_argument("--curve", help="saved curve file (estimated when omitted)")
    p.add_argument(
        "--method", choices=("mitsunaga", "debevec"), default="mitsunaga"
    )
    p.add_argument("--out", required=True, help="output .hdr or .pfm file")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("ssla", help="write the locally adjusted exposure set")
    p.add_argument("--stack", required=True, help="stack.json or its directory")
    p.add_argument("--out", required=True, help="output directory")
    _add_config_flags(p, fusion=False)
    p.set_defaults(func=cmd_ssla)

    p = sub.add_parser("fuse", help="exposure-fuse a stack")
    p.add_argument("--stack", required=True, help="stack.json or its directory")
    p.add_argument(
        "--ssla", action="store_true", help="adjust the stack before fusing"
    )
    p.add_argument("--out", required=True, help="output PNG")
    _add_config_flags(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("correct", help="hue-correct a fused image")
    p.add_argument("--fused", required=True, help="fused PNG")
    p.add_argument("--hdr", required=True, help="reference .hdr or .pfm radiance map")
    p.add_argument("--out", required=True, help="output PNG")
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("metrics", help="score an image against a radiance map")
    p.add_argument("--fused", required=True, help="display image PNG")
    p.add_argument("--ref", required=True, help="reference .hdr or .pfm radiance map")
    p.add_argument(
        "--fused-gamma",
        type=float,
        default=None,
        help="linearize the fused image first (default: compare as displayed)",
    )
    p.add_argument(
        "--hue-only", action="store_true", help="print only the hue difference"
    )
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("pipeline", help="full run: adjust, fuse, merge, correct")
    p.add_argument("--stack", required=True, help="stack.json or its directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--crf", choices=("mitsunaga", "debevec"), default=None)
    p.add_argument("--no-ssla", action="store_true", help="skip local adjustment")
    _add_config_flags(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("eval", help="score methods over a corpus of radiance maps")
    p._negative_number_matcher = _EV_TOKEN
    p.add_argument("--corpus", required=True, help="directory of .hdr/.pfm scenes")
    p.add_argument("--out", required=True, help="output directory for CSVs")
    p.add_argument(
        "--conditions",
        help="semicolon-separated EV lists, e.g. '-4,-2,0,2,4;-4,-2,0'",
    )
    p.add_argument(
        "--methods", help="comma-separated subset of " + ",".join(pl.METHODS)
    )
    p.add_argument("--crf", choices=("mitsunaga", "debevec"), default=None)
    p.add_argument(
        "--threads", type=int, default=None, help="scene parallelism (HUEFUSE_THREADS)"
    )
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
