"""Command-line front end: ``run``, ``eval`` and ``fixture`` subcommands.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 shape or
domain error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import io, metrics, scenes
from .errors import (DegenerateInputError, DomainError, FormatError, ParameterError, ShapeError,
                     StereoFuseError)
from .guidance import AugmentSpec, substitute_perfect_mono
from .pipeline import PipelineConfig, StageError, run_pipeline

log = logging.getLogger("stereofuse")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DOMAIN = 4

PATH_KEYS = ("left", "right", "mono_left", "mono_right", "gt", "occ", "out", "report")
REQUIRED_KEYS = ("left", "right", "mono_left", "mono_right")
DEFAULT_TAUS = (1.0, 2.0)


class ConfigError(ParameterError):
    """Malformed configuration file or override."""


_BOOL = {"true": True, "1": True, "yes": True, "on": True,
         "false": False, "0": False, "no": False, "off": False}


def _convert(key: str, raw: str, kind):
    try:
        if kind is bool:
            return _BOOL[raw.strip().lower()]
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except (KeyError, ValueError):
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None
    return raw


_PIPELINE_TYPES = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}
_PY_TYPES = {"int": int, "float": float, "bool": bool, "str": str}
_AUGMENT_TYPES = {"kind": str, "region": int, "seed": int, "roll": int, "amplitude": float,
                  "sigma": float, "target": str}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def parse_overrides(items) -> dict[str, str]:
    return parse_config_text("\n".join(items or ()))


def load_config(path=None, overrides=None) -> dict[str, str]:
    """Merge a config file (paths resolved against its directory) with overrides."""
    raw: dict[str, str] = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        raw = parse_config_text(text)
        for key in PATH_KEYS:
            if key in raw and not Path(raw[key]).is_absolute():
                raw[key] = str(path.parent / raw[key])
    raw.update(parse_overrides(overrides))
    return raw


def build_pipeline_config(raw: dict[str, str]) -> PipelineConfig:
    """Typed pipeline settings from raw strings; unknown keys are rejected."""
    kwargs = {}
    augment = {}
    for key, value in raw.items():
        if key in PATH_KEYS:
            continue
        if key.startswith("augment."):
            name = key.split(".", 1)[1]
            if name not in _AUGMENT_TYPES:
                raise ConfigError(f"unknown augmentation key {key!r}")
            augment[name] = _convert(key, value, _AUGMENT_TYPES[name])
            continue
        if key not in _PIPELINE_TYPES or key in ("augment", "augment_target"):
            raise ConfigError(f"unknown config key {key!r}")
        kind = _PY_TYPES.get(str(_PIPELINE_TYPES[key]).split(" ")[0], str)
        kwargs[key] = _convert(key, value, kind)
    if augment:
        if "kind" not in augment:
            raise ConfigError("augment.kind is required when any augment.* key is set")
        target = augment.pop("target", "stereo")
        if target not in ("stereo", "mono"):
            raise ConfigError(f"augment.target must be stereo or mono, got {target!r}")
        try:
            kwargs["augment"] = AugmentSpec(**augment)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc
        kwargs["augment_target"] = target
    cfg = PipelineConfig(**kwargs)
    if cfg.mode not in ("wta", "softargmax"):
        raise ConfigError(f"mode must be wta or softargmax, got {cfg.mode!r}")
    if cfg.n_bins < 1:
        raise ConfigError("n_bins must be positive")
    return cfg


def _right_view_perfect_mono(gt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Perfect mono maps for both views; the right one shares the left's normalization."""
    left = substitute_perfect_mono(gt)
    valid = np.isfinite(gt)
    lo, hi = gt[valid].min(), gt[valid].max()
    disp_right, _, _ = scenes.forward_zbuffer(np.where(valid, gt, lo))
    return left, (disp_right - lo) / (hi - lo)


def _read(path) -> np.ndarray:
    return io.read_float_map(path).to_array(np.float64)


def run_from_config(raw: dict[str, str]):
    """Execute the pipeline described by a raw config mapping.

    Returns ``(disparity FloatMap, RunReport)``.
    """
    missing = [k for k in REQUIRED_KEYS if k not in raw]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    cfg = build_pipeline_config(raw)
    left, right = _read(raw["left"]), _read(raw["right"])
    gt = _read(raw["gt"]) if "gt" in raw else None
    occ = io.read_mask(raw["occ"]) if "occ" in raw else None
    if cfg.augment is not None and cfg.augment.kind == "perfect_mono":
        if gt is None:
            raise ConfigError("augment.kind=perfect_mono needs a gt map")
        if gt.shape != left.shape:
            raise ShapeError("gt and image shapes differ")
        mono_left, mono_right = _right_view_perfect_mono(gt)
        cfg = dataclasses.replace(cfg, augment=None)
    else:
        mono_left, mono_right = _read(raw["mono_left"]), _read(raw["mono_right"])

    result = run_pipeline(left, right, mono_left, mono_right, cfg)
    report = io.RunReport()
    report.config = cfg.as_dict()
    if cfg.augment is None and "augment.kind" in raw:
        report.config["augment"] = {"kind": raw["augment.kind"]}
    report.config["augment_target"] = cfg.augment_target
    for key in PATH_KEYS:
        if key in raw:
            report.config[key] = raw[key]
    report.metrics = {"scale": result.scale_shift.s, "shift": result.scale_shift.t}
    if gt is not None:
        if gt.shape != result.disparity.shape:
            raise ShapeError("gt shape differs from the disparity")
        report.metrics.update(metrics.disparity_report(result.disparity, gt, occ, DEFAULT_TAUS))
    report.timings = dict(result.timings)
    return io.FloatMap.from_array(result.disparity), report


def evaluate(pred_path, gt_path, occ_path=None, taus=DEFAULT_TAUS) -> io.RunReport:
    pred, gt = _read(pred_path), _read(gt_path)
    occ = io.read_mask(occ_path) if occ_path is not None else None
    if pred.shape != gt.shape:
        raise ShapeError(f"prediction {pred.shape} and ground truth {gt.shape} differ")
    report = io.RunReport()
    report.metrics = metrics.disparity_report(pred, gt, occ, tuple(taus))
    report.config = {"pred": str(pred_path), "gt": str(gt_path), "taus": list(taus)}
    if occ_path is not None:
        report.config["occ"] = str(occ_path)
    return report


_FIXTURE_PARAMS = {
    "random_dot": {"h": int, "w": int, "seed": int, "far": float, "near": float, "mono_noise": float},
    "mirror": {"h": int, "w": int, "seed": int, "rect": str, "d_mirror": float, "d_virtual": float,
               "surface_texture": float, "mono_noise": float},
}


def _mono_pair(gt, disp_right, noise, seed):
    lo, hi = gt.min(), gt.max()
    span = hi - lo if hi > lo else 1.0
    right = np.where(np.isfinite(disp_right), disp_right, lo)
    rng = np.random.default_rng([seed, 1])
    ml = np.clip((gt - lo) / span + noise * rng.standard_normal(gt.shape), 0.0, 1.0)
    mr = np.clip((right - lo) / span + noise * rng.standard_normal(gt.shape), 0.0, 1.0)
    return ml, mr


def gen_fixture(kind: str, params: dict[str, str], out_dir) -> list[Path]:
    """Write a synthetic scene bundle plus a ready-to-run ``config.txt``."""
    if kind not in _FIXTURE_PARAMS:
        raise ConfigError(f"unknown fixture kind {kind!r}; choose from {sorted(_FIXTURE_PARAMS)}")
    spec = _FIXTURE_PARAMS[kind]
    p = {}
    for key, value in params.items():
        if key not in spec:
            raise ConfigError(f"unknown parameter {key!r} for fixture {kind!r}")
        p[key] = _convert(key, value, spec[key])
    h, w, seed = p.get("h", 128), p.get("w", 256), p.get("seed", 0)
    noise = p.get("mono_noise", 0.01)
    maps: dict[str, np.ndarray] = {}
    masks: dict[str, np.ndarray] = {}
    if kind == "random_dot":
        gt = scenes.two_plane_disparity(h, w, p.get("far", 8.0), p.get("near", 16.0))
        fx = scenes.make_random_dot_pair(h, w, gt, seed)
        maps["mono_left"], maps["mono_right"] = _mono_pair(gt, fx.disparity_right, noise, seed)
        maps.update(left=fx.left, right=fx.right, gt=fx.disparity)
        masks["occ"] = fx.occlusion
    else:
        rect_text = p.get("rect", f"{h // 4},{3 * w // 8},{3 * h // 4},{5 * w // 8}")
        try:
            rect = tuple(int(v) for v in rect_text.split(","))
        except ValueError:
            raise ConfigError(f"rect must be four comma-separated integers, got {rect_text!r}") from None
        if len(rect) != 4:
            raise ConfigError("rect must have four entries: top,left,bottom,right")
        mf = scenes.make_mirror_scene(h, w, rect, p.get("d_mirror", 12.0), p.get("d_virtual", 4.0), seed,
                                      surface_texture=p.get("surface_texture", 0.0), mono_noise=noise)
        maps.update(left=mf.left, right=mf.right, gt=mf.disparity,
                    mono_left=mf.mono_left, mono_right=mf.mono_right)
        masks.update(occ=mf.occlusion, mirror=mf.mirror_mask)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, arr in maps.items():
        path = out / f"{name}.pfm"
        io.write_float_map(io.FloatMap.from_array(arr), path)
        written.append(path)
    for name, mask in masks.items():
        path = out / f"{name}.pgm"
        io.write_mask(mask, path)
        written.append(path)
    cfg_path = out / "config.txt"
    lines = [f"{name} = {name}.pfm" for name in ("left", "right", "mono_left", "mono_right", "gt")]
    lines.append("occ = occ.pgm")
    lines.append(f"seed = {seed}")
    cfg_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(cfg_path)
    return written


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        return exit_code_for(exc.cause)
    if isinstance(exc, ParameterError):
        return EXIT_CONFIG
    if isinstance(exc, (OSError, FormatError)):
        return EXIT_IO
    if isinstance(exc, (ShapeError, DomainError, DegenerateInputError)):
        return EXIT_DOMAIN
    return EXIT_DOMAIN


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stereofuse", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug output to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="estimate disparity from a stereo pair and mono maps")
    run.add_argument("--config", help="key=value config file")
    run.add_argument("--out", help="output disparity PFM (or config key 'out')")
    run.add_argument("--report", help="output JSON report (or config key 'report')")
    run.add_argument("overrides", nargs="*", metavar="KEY=VALUE")

    ev = sub.add_parser("eval", help="score a disparity PFM against ground truth")
    ev.add_argument("pred")
    ev.add_argument("gt")
    ev.add_argument("--occ", help="occlusion mask PGM (nonzero = occluded)")
    ev.add_argument("--tau", type=float, nargs="+", default=list(DEFAULT_TAUS))
    ev.add_argument("--report", help="write the JSON report here instead of stdout")

    fx = sub.add_parser("fixture", help="write a synthetic scene bundle")
    fx.add_argument("kind", help="random_dot or mirror")
    fx.add_argument("out_dir")
    fx.add_argument("params", nargs="*", metavar="KEY=VALUE")
    return parser


def _emit(report: io.RunReport, path) -> None:
    if path:
        io.write_report(report, path)
    else:
        sys.stdout.write(io.dumps_report(report) + "\n")


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            raw = load_config(args.config, args.overrides)
            out = args.out or raw.get("out")
            if not out:
                raise ConfigError("no output path: pass --out or set 'out' in the config")
            disparity, report = run_from_config(raw)
            io.write_float_map(disparity, out)
            _emit(report, args.report or raw.get("report"))
        elif args.command == "eval":
            _emit(evaluate(args.pred, args.gt, args.occ, args.tau), args.report)
        else:
            for path in gen_fixture(args.kind, parse_overrides(args.params), args.out_dir):
                log.info("wrote %s", path)
    except (StereoFuseError, OSError) as exc:
        code = exit_code_for(exc)
        print(f"stereofuse: error: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
