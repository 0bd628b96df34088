"""Batch command-line front end.

Usage::

    scatterprox synthesize clean/*.png --depth-mode vertical --seed 7 --out-dir out/
    scatterprox dehaze out/*_hazy.png --emit-intermediates --out-dir dehazed/
    scatterprox audit dehazed/*_dehazed.png --out-dir audit/
    scatterprox roundtrip --scenes 20 --size 256 --out-dir rt/

Settings can also come from ``--config FILE`` (``key=value`` lines, keys spelled
like the long flags); explicit flags win. The default worker count is read
from ``SCATTERPROX_THREADS``.

Item ``i`` of a batch uses seed ``--seed + i``, so results do not depend on
the thread count or on which other items are in the batch.
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import audit as audit_mod
from . import fileio, synth
from .core import ProximalWeights
from .proximal import StageConfig, run_psar
from .refinement import KINDS, RefinementOperator

THREADS_ENV = "SCATTERPROX_THREADS"

MANIFEST_NAME = "manifest.tsv"
ROUNDTRIP_NAME = "roundtrip.tsv"
SUMMARY_NAME = "summary.txt"


def psnr(estimate, reference):
    """Peak signal-to-noise ratio in dB for images in [0, 1]."""
    mse = float(np.mean((np.asarray(estimate) - np.asarray(reference)) ** 2))
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(1.0 / mse))


def read_config_file(path):
    values = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def _add_common(p):
    p.add_argument("inputs", nargs="*", help="input image paths")
    p.add_argument("--config", help="key=value settings file; flags override it")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads, 0 = auto (default from ${THREADS_ENV}, else 1)")
    p.add_argument("--emit-intermediates", action="store_true")
    p.add_argument("--stages", type=int, default=4)
    p.add_argument("--lambda-a", type=float, default=0.1)
    p.add_argument("--lambda-t", type=float, default=0.1)
    p.add_argument("--lambda-j", type=float, default=0.1)
    p.add_argument("--refine-t", choices=KINDS, default="identity")
    p.add_argument("--refine-j", choices=KINDS, default="identity")
    p.add_argument("--refine-strength", type=float, default=1.0)
    p.add_argument("--refine-radius", type=int, default=2)


def _add_synthesis(p):
    d = synth.SynthesisSpec()
    n = d.noise
    p.add_argument("--depth", nargs="*", default=None,
                   help="depth maps (PFM or PNG, 1 = near), one per input")
    p.add_argument("--depth-mode", choices=("vertical", "radial", "two-plane"), default="vertical",
                   help="procedural depth when --depth is not given")
    p.add_argument("--beta-min", type=float, default=d.beta_min)
    p.add_argument("--beta-max", type=float, default=d.beta_max)
    p.add_argument("--nonuniform-prob", type=float, default=d.nonuniform_prob)
    p.add_argument("--near-haze-min", type=float, default=d.near_haze_min)
    p.add_argument("--near-haze-max", type=float, default=d.near_haze_max)
    p.add_argument("--airlight-min", type=float, default=d.airlight_min)
    p.add_argument("--airlight-max", type=float, default=d.airlight_max)
    p.add_argument("--airlight-jitter", type=float, default=d.airlight_jitter)
    p.add_argument("--noise-resolution", type=int, default=n.base_resolution)
    p.add_argument("--noise-sigma0", type=float, default=n.sigma0)
    p.add_argument("--noise-sigma1", type=float, default=n.sigma1)
    p.add_argument("--rescale-min", type=float, default=n.rescale_min)
    p.add_argument("--rescale-max", type=float, default=n.rescale_max)
    p.add_argument("--luminance-jitter", type=float, default=0.0)
    p.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--compress", action="store_true", help="8-bit quantization round trip")


def build_parser():
    parser = argparse.ArgumentParser(prog="scatterprox", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = sub.choices

    p = sub.add_parser("synthesize", help="render non-uniform haze over clean images")
    _add_common(p)
    _add_synthesis(p)

    p = sub.add_parser("dehaze", help="run the proximal stages on hazy images")
    _add_common(p)

    p = sub.add_parser("audit", help="residual-haze audit of dehazed images")
    _add_common(p)
    p.add_argument("--t-target", type=float, default=audit_mod.T_TARGET)
    p.add_argument("--student", nargs="*", default=None,
                   help="images to gate each input against, one per input")

    p = sub.add_parser("roundtrip", help="synthesize, dehaze and score against the clean image")
    _add_common(p)
    _add_synthesis(p)
    p.add_argument("--scenes", type=int, default=0, help="procedural clean scenes to add")
    p.add_argument("--size", type=int, default=256, help="procedural scene size (pixels)")
    return parser


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = read_config_file(args.config)
        sub = parser.subcommands[args.command]
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, raw in values.items():
            if key not in known or key in ("inputs", "config", "command"):
                parser.error(f"unknown config key {key!r}")
            action = known[key]
            if action.nargs == 0:
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            elif action.nargs in ("*", "+"):
                defaults[key] = raw.split()
            else:
                defaults[key] = action.type(raw) if action.type else raw
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def resolve_threads(requested):
    if requested is None:
        requested = int(os.environ.get(THREADS_ENV, "1"))
    if requested < 0:
        raise ValueError("--threads must be nonnegative")
    return requested or (os.cpu_count() or 1)


def stage_config(args):
    def op(kind):
        return RefinementOperator(kind=kind, strength=args.refine_strength, radius=args.refine_radius)

    return StageConfig(
        num_stages=args.stages,
        weights=ProximalWeights(args.lambda_a, args.lambda_t, args.lambda_j),
        refine_T=op(args.refine_t),
        refine_J=op(args.refine_j),
    )


def synthesis_spec(args, seed):
    return synth.SynthesisSpec(
        beta_min=args.beta_min,
        beta_max=args.beta_max,
        nonuniform_prob=args.nonuniform_prob,
        near_haze_min=args.near_haze_min,
        near_haze_max=args.near_haze_max,
        airlight_min=args.airlight_min,
        airlight_max=args.airlight_max,
        airlight_jitter=args.airlight_jitter,
        noise=synth.NoiseFieldSpec(
            base_resolution=args.noise_resolution,
            sigma0=args.noise_sigma0,
            sigma1=args.noise_sigma1,
            rescale_min=args.rescale_min,
            rescale_max=args.rescale_max,
        ),
        augment=synth.AugmentSpec(
            luminance_jitter=args.luminance_jitter,
            noise_std=args.noise_std,
            enable_compress=args.compress,
        ),
        seed=seed,
    )


def load_depth(path, shape):
    path = str(path)
    depth = fileio.read_pfm(path) if path.lower().endswith(".pfm") else fileio.read_png(path)
    depth = np.asarray(depth, dtype=np.float64)
    if depth.ndim == 3:
        depth = depth.mean(axis=2)
    if depth.shape != shape:
        raise ValueError(f"{path}: depth size {depth.shape} does not match image size {shape}")
    return np.clip(depth, 0.0, 1.0)


def _write_outputs(writes):
    """Run ``(path, writer, data)`` writes; on failure remove what was written and re-raise."""
    done = []
    try:
        for path, writer, data in writes:
            writer(path, data)
            done.append(path)
    except Exception:
        fileio.remove_quietly(done)
        raise


def _write_text(path, text):
    with open(path, "w", newline="\n") as f:
        f.write(text)


def _run_batch(items, worker, threads):
    """Apply ``worker`` to ``(index, item)`` pairs; returns results or exceptions, in order."""

    def safe(pair):
        try:
            return worker(*pair)
        except Exception as exc:  # reported per item
            return exc

    pairs = list(enumerate(items))
    if threads == 1 or len(pairs) <= 1:
        return [safe(p) for p in pairs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(safe, pairs))


def _report_failure(label, exc):
    print(f"error: {label}: {exc}", file=sys.stderr)


def _check_inputs(paths):
    missing = [p for p in paths if not Path(p).is_file()]
    for p in missing:
        print(f"error: {p}: no such file", file=sys.stderr)
    return not missing


def _trace_text(seed, trace):
    lines = [f"# seed={seed}", "stage\tdata_term"]
    lines += [f"{k}\t{v!r}" for k, v in enumerate(trace.data_terms)]
    return "\n".join(lines) + "\n"


def cmd_synthesize(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ok = _check_inputs(args.inputs)
    if args.depth is not None:
        if len(args.depth) != len(args.inputs):
            print("error: --depth needs one map per input", file=sys.stderr)
            return 2
        ok = _check_inputs(args.depth) and ok
    if not ok:
        return 1

    def work(i, path):
        seed = args.seed + i
        clean = fileio.read_png(path)
        shape = clean.shape[:2]
        if args.depth is not None:
            depth = load_depth(args.depth[i], shape)
            depth_src = args.depth[i]
        else:
            depth = synth.procedural_depth(*shape, mode=args.depth_mode)
            depth_src = f"procedural:{args.depth_mode}"
        res = synth.synthesize(clean, depth, synthesis_spec(args, seed))
        return seed, depth_src, res

    results = _run_batch(args.inputs, work, resolve_threads(args.threads))
    failed = False
    records = []
    for i, (path, res) in enumerate(zip(args.inputs, results)):
        if isinstance(res, Exception):
            _report_failure(path, res)
            failed = True
            continue
        seed, depth_src, r = res
        stem = f"{i:04d}_{Path(path).stem}"
        files = {
            "hazy_file": out / f"{stem}_hazy.png",
            "transmission_file": out / f"{stem}_T.pfm",
            "airlight_file": out / f"{stem}_A.pfm",
            "density_file": out / f"{stem}_beta.pfm",
        }
        try:
            _write_outputs([
                (files["hazy_file"], fileio.write_png, r.hazy),
                (files["transmission_file"], fileio.write_pfm, r.transmission),
                (files["airlight_file"], fileio.write_pfm, r.airlight),
                (files["density_file"], fileio.write_pfm, r.density),
            ])
        except Exception as exc:
            _report_failure(path, exc)
            failed = True
            continue
        p = r.params
        records.append(fileio.format_record({
            "input": path,
            "depth": depth_src,
            "seed": seed,
            "beta_init": float(p["beta_init"]),
            "nonuniform": int(p["nonuniform"]),
            "h_near": float(p["h_near"]),
            "d0": float(p["d0"]),
            "airlight": p["airlight"],
            "gain": float(p["gain"]),
            "noise_sigma": float(p["noise_sigma"]),
            **{k: v.name for k, v in files.items()},
        }))
    _write_text(out / MANIFEST_NAME, "".join(r + "\n" for r in records))
    return 1 if failed else 0


def cmd_dehaze(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not _check_inputs(args.inputs):
        return 1
    config = stage_config(args)

    def work(i, path):
        P = fileio.read_png(path)
        return run_psar(P, config)

    results = _run_batch(args.inputs, work, resolve_threads(args.threads))
    failed = False
    for i, (path, res) in enumerate(zip(args.inputs, results)):
        if isinstance(res, Exception):
            _report_failure(path, res)
            failed = True
            continue
        state, trace = res
        stem = f"{i:04d}_{Path(path).stem}"
        writes = [(out / f"{stem}_dehazed.png", fileio.write_png, np.clip(state.J, 0.0, 1.0))]
        if args.emit_intermediates:
            writes += [
                (out / f"{stem}_T.pfm", fileio.write_pfm, state.T),
                (out / f"{stem}_A.pfm", fileio.write_pfm, state.A),
                (out / f"{stem}_trace.txt", _write_text, _trace_text(args.seed, trace)),
            ]
        try:
            _write_outputs(writes)
        except Exception as exc:
            _report_failure(path, exc)
            failed = True
    return 1 if failed else 0


def cmd_audit(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.student is not None and len(args.student) != len(args.inputs):
        print("error: --student needs one image per input", file=sys.stderr)
        return 2
    if not _check_inputs(args.inputs + (args.student or [])):
        return 1
    config = stage_config(args)

    def work(i, path):
        J = fileio.read_png(path)
        report, state, weights = audit_mod.audit_dehazed(J, config, args.t_target, return_fields=True)
        scores = [f(J) for f in audit_mod.DEFAULT_SCORERS]
        gate = None
        if args.student is not None:
            student = fileio.read_png(args.student[i])
            student_scores = [f(student) for f in audit_mod.DEFAULT_SCORERS]
            gate = audit_mod.quality_gate(scores, student_scores)
        return report, state, weights, scores, gate

    results = _run_batch(args.inputs, work, resolve_threads(args.threads))
    failed = False
    for i, (path, res) in enumerate(zip(args.inputs, results)):
        if isinstance(res, Exception):
            _report_failure(path, res)
            failed = True
            continue
        report, state, weights, scores, gate = res
        stem = f"{i:04d}_{Path(path).stem}"
        lines = [f"input={path}", f"seed={args.seed}"] + report.to_lines()
        for f, s in zip(audit_mod.DEFAULT_SCORERS, scores):
            lines.append(f"{f.__name__}={s!r}")
        if gate is not None:
            lines.append(f"student={args.student[i]}")
            lines.append(f"gate_pass={int(gate)}")
        writes = [(out / f"{stem}_audit.txt", _write_text, "\n".join(lines) + "\n")]
        if args.emit_intermediates:
            writes += [
                (out / f"{stem}_That.pfm", fileio.write_pfm, state.T),
                (out / f"{stem}_w_dist.pfm", fileio.write_pfm, weights.w_dist),
                (out / f"{stem}_w_tex.pfm", fileio.write_pfm, weights.w_tex),
                (out / f"{stem}_w_high.pfm", fileio.write_pfm, weights.w_high),
                (out / f"{stem}_w_baw.pfm", fileio.write_pfm, weights.combined),
            ]
        try:
            _write_outputs(writes)
        except Exception as exc:
            _report_failure(path, exc)
            failed = True
    return 1 if failed else 0


def roundtrip_one(clean, depth, spec, config):
    """Synthesize haze over ``clean``, dehaze it, and score the result.

    Returns a dict of per-image metrics plus the synthesis output and final state.
    """
    res = synth.synthesize(clean, depth, spec)
    state, trace = run_psar(res.hazy, config)
    J_est = np.clip(state.J, 0.0, 1.0)
    row = {
        "psnr_hazy": psnr(res.hazy, res.clean),
        "psnr_dehazed": psnr(J_est, res.clean),
        "t_mae": float(np.mean(np.abs(state.T - res.transmission))),
        "trace": list(trace.data_terms),
    }
    row["psnr_gain"] = row["psnr_dehazed"] - row["psnr_hazy"]
    return row, res, J_est


def summarize_rows(rows, seed):
    gains = [r["psnr_gain"] for r in rows]
    summary = {"count": len(rows), "seed": seed}
    if rows:
        summary.update({
            "median_psnr_hazy": float(np.median([r["psnr_hazy"] for r in rows])),
            "median_psnr_dehazed": float(np.median([r["psnr_dehazed"] for r in rows])),
            "median_psnr_gain": float(np.median(gains)),
            "mean_t_mae": float(np.mean([r["t_mae"] for r in rows])),
        })
    return summary


def cmd_roundtrip(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.depth is not None and len(args.depth) != len(args.inputs):
        print("error: --depth needs one map per input", file=sys.stderr)
        return 2
    if not _check_inputs(args.inputs + (args.depth or [])):
        return 1
    if args.scenes < 0 or args.size < 2:
        print("error: --scenes must be >= 0 and --size >= 2", file=sys.stderr)
        return 2
    config = stage_config(args)
    items = [("file", p) for p in args.inputs]
    items += [("scene", f"scene{k:04d}") for k in range(args.scenes)]

    def work(i, item):
        kind, name = item
        seed = args.seed + i
        if kind == "file":
            clean = fileio.read_png(name)
        else:
            # scene content uses its own stream so the haze draws match file inputs
            clean = synth.procedural_scene(args.size, args.size, np.random.default_rng([seed, 1]))
        shape = clean.shape[:2]
        if args.depth is not None and kind == "file":
            depth = load_depth(args.depth[i], shape)
        else:
            depth = synth.procedural_depth(*shape, mode=args.depth_mode)
        row, res, J_est = roundtrip_one(clean, depth, synthesis_spec(args, seed), config)
        row = {"image": name, "seed": seed, **row}
        return row, res, J_est

    results = _run_batch(items, work, resolve_threads(args.threads))
    failed = False
    rows = []
    lines = []
    for i, ((kind, name), res) in enumerate(zip(items, results)):
        if isinstance(res, Exception):
            _report_failure(name, res)
            failed = True
            continue
        row, r, J_est = res
        if args.emit_intermediates:
            stem = f"{i:04d}_{Path(name).stem}"
            try:
                _write_outputs([
                    (out / f"{stem}_clean.png", fileio.write_png, r.clean),
                    (out / f"{stem}_hazy.png", fileio.write_png, r.hazy),
                    (out / f"{stem}_dehazed.png", fileio.write_png, J_est),
                ])
            except Exception as exc:
                _report_failure(name, exc)
                failed = True
                continue
        rows.append(row)
        lines.append(fileio.format_record(row))
    _write_text(out / ROUNDTRIP_NAME, "".join(line + "\n" for line in lines))
    summary = summarize_rows(rows, args.seed)
    _write_text(out / SUMMARY_NAME, "".join(f"{k}={v!r}\n" for k, v in summary.items()))
    return 1 if failed else 0


COMMANDS = {
    "synthesize": cmd_synthesize,
    "dehaze": cmd_dehaze,
    "audit": cmd_audit,
    "roundtrip": cmd_roundtrip,
}


def main(argv=None):
    args = parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
