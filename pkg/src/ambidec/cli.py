"""Command-line interface: design, evaluate, compare, pan-grid."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .arrays import ArrayConfigError, load_array
from .decoder_io import (
    TOOL_VERSION,
    DecoderFileError,
    load_decoder,
    save_decoder,
)
from .grids import GridParseError, SphericalGrid, builtin_grid, builtin_grid_names, fibonacci_grid, load_grid
from .metrics import evaluate_grid, metrics_to_csv
from .optimize import DesignConfig, GoalFieldError, ObjectiveSpec, design_two_band
from .plots import pan_grid_csv, pan_grid_lines, render_heatmaps
from .spherical import parse_signal_set

_WEIGHT_KEYS = {
    "dir": "alpha_dir",
    "mag": "alpha_mag",
    "energy": "alpha_energy",
    "amp": "alpha_amp",
    "tikhonov": "tikhonov",
    "sparse": "sparseness",
}


class CliError(Exception):
    def __init__(self, message, code=1):
        super().__init__(message)
        self.code = code


def resolve_grid(spec: str) -> SphericalGrid:
    if spec.startswith("fibonacci:"):
        return fibonacci_grid(int(spec.split(":", 1)[1]))
    if spec in builtin_grid_names():
        return builtin_grid(spec)
    path = Path(spec)
    if path.exists():
        return load_grid(path)
    raise CliError(
        f"unknown grid {spec!r}: not a builtin "
        f"({', '.join(builtin_grid_names())}), not a file, not 'fibonacci:N'"
    )


def _parse_weights(pairs) -> dict:
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise CliError(f"--weights entries look like k=v, got {pair!r}")
        key, _, value = pair.partition("=")
        if key not in _WEIGHT_KEYS:
            raise CliError(
                f"unknown weight {key!r}; choose from {sorted(_WEIGHT_KEYS)}"
            )
        try:
            out[_WEIGHT_KEYS[key]] = float(value)
        except ValueError:
            raise CliError(f"weight {key!r} needs a number, got {value!r}") from None
    return out


def _grid_doc(grid: SphericalGrid) -> dict:
    return {"name": grid.name, "n_points": grid.n_points, "t_degree": grid.t_degree}


def cmd_design(args) -> int:
    try:
        array = load_array(args.array)
        signal_set = parse_signal_set(args.set)
    except (OSError, ArrayConfigError, ValueError) as exc:
        raise CliError(str(exc)) from exc

    overrides = _parse_weights(args.weights)
    if args.sparseness_penalty is not None:
        overrides["sparseness"] = args.sparseness_penalty
    if args.bound is not None:
        overrides["bound"] = args.bound
    try:
        objective = replace(ObjectiveSpec(), **overrides)
    except ValueError as exc:
        raise CliError(str(exc)) from exc

    x0 = args.x0
    if x0 not in ("allrad", "pinv", "random"):
        try:
            x0 = load_decoder(x0).decoder.hf
        except (OSError, DecoderFileError) as exc:
            raise CliError(f"--x0 must be allrad|pinv|random or a decoder file: {exc}") from exc

    eval_grid = resolve_grid(args.grid)
    goal_grid = resolve_grid(args.goal_grid)
    config = DesignConfig(
        objective=objective,
        eval_grid=eval_grid,
        goal_grid=goal_grid,
        x0=x0,
        seed=args.seed,
        max_iterations=args.max_iter,
        crossover_hz=args.crossover,
    )
    try:
        result = design_two_band(signal_set, array, config)
    except GoalFieldError as exc:
        raise CliError(f"goal-field stage failed: {exc}", code=2) from exc

    provenance = {
        "tool": TOOL_VERSION,
        "seed": args.seed,
        "signal_set": signal_set.name,
        "array": array.name,
        "eval_grid": _grid_doc(eval_grid),
        "goal_grid": _grid_doc(goal_grid),
        "x0": args.x0,
        "weights": {
            "alpha_dir": objective.alpha_dir,
            "alpha_mag": objective.alpha_mag,
            "alpha_energy": objective.alpha_energy,
            "alpha_amp": objective.alpha_amp,
            "tikhonov": objective.tikhonov,
            "sparseness": objective.sparseness,
        },
        "bound": objective.bound,
        "max_iterations": args.max_iter,
        "hf": {
            "iterations": result.hf_result.iterations,
            "converged": result.hf_result.converged,
            "objective": result.hf_result.objective,
        },
        "lf": {
            "iterations": result.lf_result.iterations,
            "converged": result.lf_result.converged,
            "objective": result.lf_result.objective,
        },
    }
    save_decoder(result.two_band, args.out, provenance)

    print(f"designed {signal_set.name} two-band decoder for {array.name!r}")
    print(f"  matrices: {array.n_real} x {signal_set.n_channels}, seed {args.seed}")
    for label, stage in (("HF", result.hf_result), ("LF", result.lf_result)):
        print(
            f"  {label}: objective {stage.objective:.6g} after {stage.iterations} "
            f"iterations, converged={stage.converged}"
        )
        for term, value in stage.breakdown.items():
            print(f"      {term:<11}{value:.6g}")
        print(
            f"      gradient spot-check relative error "
            f"{stage.gradient_check['relative_error']:.2e}"
        )
    for note in result.warnings:
        print(f"  warning: {note}")
    print(f"  wrote {args.out}")
    return 0


def _load_decoder_arg(path):
    try:
        return load_decoder(path)
    except (OSError, DecoderFileError) as exc:
        raise CliError(str(exc)) from exc


def cmd_evaluate(args) -> int:
    dfile = _load_decoder_arg(args.decoder)
    decoder = dfile.decoder
    source_set = parse_signal_set(args.set) if args.set else None
    grid = resolve_grid(args.grid)
    try:
        metrics = evaluate_grid(decoder, grid, source_set=source_set)
    except ValueError as exc:
        raise CliError(str(exc)) from exc

    if args.out_csv:
        Path(args.out_csv).write_text(metrics_to_csv(metrics), encoding="utf-8")
        print(f"wrote {args.out_csv} ({grid.n_points} rows)")
    if args.plots_dir:
        paths = render_heatmaps(
            decoder, args.plots_dir, clip_deg=args.clip_deg, source_set=source_set
        )
        print(f"wrote {len(paths)} maps to {args.plots_dir}")

    print(f"decoder {decoder.signal_set.name} on {decoder.array.name!r}, seed {args.seed}")
    summary = metrics.summary()
    print(f"  {'field':<16}{'mean':>12}{'rms':>12}{'min':>12}{'max':>12}  missing")
    for name, stats in summary.items():
        if "mean" in stats:
            print(
                f"  {name:<16}{stats['mean']:>12.5g}{stats['rms']:>12.5g}"
                f"{stats['min']:>12.5g}{stats['max']:>12.5g}  {stats['missing']}"
            )
    return 0


_COMPARE_ROWS = (
    ("dir_err_e_deg", "rms", "lower"),
    ("dir_err_v_deg", "rms", "lower"),
    ("rv_re_angle_deg", "rms", "lower"),
    ("re_mag", "mean", "higher"),
    ("rv_mag", "mean", "higher"),
    ("energy", "spread", "lower"),
    ("pressure", "spread", "lower"),
)


def _stat(metrics, field, kind):
    if kind == "rms":
        return metrics.weighted_rms(field)
    summary = metrics.summary()[field]
    if kind == "mean":
        return summary["mean"]
    # spread: weighted rms of value/weighted-mean - 1
    values = getattr(metrics, field)
    ok = ~np.isnan(values)
    w = metrics.coverage.weights[ok]
    v = values[ok]
    mean = (w * v).sum() / w.sum()
    return float(np.sqrt((w * (v / mean - 1.0) ** 2).sum() / w.sum()))


def cmd_compare(args) -> int:
    file_a = _load_decoder_arg(args.a)
    file_b = _load_decoder_arg(args.b)
    dec_a, dec_b = file_a.decoder, file_b.decoder
    if dec_a.array != dec_b.array:
        raise CliError("decoders were designed for different arrays")

    set_a, set_b = dec_a.signal_set, dec_b.signal_set
    if args.set:
        source = parse_signal_set(args.set)
    else:
        acns_a, acns_b = set(set_a.acns), set(set_b.acns)
        if acns_a <= acns_b:
            source = set_a
        elif acns_b <= acns_a:
            source = set_b
        else:
            raise CliError(
                f"signal sets {set_a.name} and {set_b.name} are not nested; "
                "pass --set explicitly"
            )
    grid = resolve_grid(args.grid)
    try:
        metrics_a = evaluate_grid(dec_a, grid, source_set=source)
        metrics_b = evaluate_grid(dec_b, grid, source_set=source)
    except ValueError as exc:
        raise CliError(str(exc)) from exc

    rows = []
    score = {"a": 0, "b": 0}
    print(
        f"comparing A={Path(args.a).name} ({set_a.name}) vs "
        f"B={Path(args.b).name} ({set_b.name}) with a {source.name} signal"
    )
    print(f"  {'metric':<24}{'A':>14}{'B':>14}  winner")
    for field, kind, better in _COMPARE_ROWS:
        va = _stat(metrics_a, field, kind)
        vb = _stat(metrics_b, field, kind)
        if va == vb:
            winner = "tie"
        elif (va < vb) == (better == "lower"):
            winner = "A"
            score["a"] += 1
        else:
            winner = "B"
            score["b"] += 1
        label = f"{field}.{kind}"
        rows.append(
            {"metric": label, "a": va, "b": vb, "better": better, "winner": winner}
        )
        print(f"  {label:<24}{va:>14.6g}{vb:>14.6g}  {winner}")
    print(f"  overall: A wins {score['a']}, B wins {score['b']}")

    if args.out:
        doc = {
            "a": str(args.a),
            "b": str(args.b),
            "signal_set": source.name,
            "grid": _grid_doc(grid),
            "seed": args.seed,
            "rows": rows,
        }
        Path(args.out).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    return 0


def _parse_line_list(text, fallback):
    if text is None:
        return fallback
    return tuple(float(v) for v in text.split(",") if v.strip())


def cmd_pan_grid(args) -> int:
    dfile = _load_decoder_arg(args.decoder)
    rows = pan_grid_lines(
        dfile.decoder,
        az_lines_deg=_parse_line_list(args.az_lines, (-180.0, -135.0, -90.0, -45.0, 0.0, 45.0, 90.0, 135.0)),
        el_lines_deg=_parse_line_list(args.el_lines, (-30.0, 0.0, 30.0, 60.0)),
        step_deg=args.step_deg,
        source_set=parse_signal_set(args.set) if args.set else None,
    )
    csv_text = pan_grid_csv(rows, seed=args.seed)
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        print(f"wrote {args.out} ({len(rows)} samples)")
    else:
        sys.stdout.write(csv_text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ambidec",
        description="Design, evaluate, and compare two-band Ambisonic decoders.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="design a two-band decoder")
    p_design.add_argument("--array", required=True, help="speaker array JSON config")
    p_design.add_argument("--set", required=True, help="signal set, e.g. 3H2V or 3")
    p_design.add_argument("--out", required=True, help="decoder JSON output path")
    p_design.add_argument("--grid", default="design5200", help="evaluation grid")
    p_design.add_argument("--goal-grid", default="design240", help="goal design grid")
    p_design.add_argument("--x0", default="allrad", help="allrad|pinv|random|decoder file")
    p_design.add_argument("--seed", type=int, default=0)
    p_design.add_argument("--weights", nargs="*", metavar="K=V",
                          help="term weights: dir,mag,energy,amp,tikhonov,sparse")
    p_design.add_argument("--sparseness-penalty", type=float, default=None)
    p_design.add_argument("--bound", type=float, default=None, help="matrix entry bound")
    p_design.add_argument("--max-iter", type=int, default=2000)
    p_design.add_argument("--crossover", type=float, default=400.0)
    p_design.set_defaults(func=cmd_design)

    p_eval = sub.add_parser("evaluate", help="metric table and heatmaps")
    p_eval.add_argument("--decoder", required=True)
    p_eval.add_argument("--grid", default="design5200")
    p_eval.add_argument("--set", default=None, help="source signal set (zero-filled)")
    p_eval.add_argument("--out-csv", default=None)
    p_eval.add_argument("--plots-dir", default=None)
    p_eval.add_argument("--clip-deg", type=float, default=20.0)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.set_defaults(func=cmd_evaluate)

    p_cmp = sub.add_parser("compare", help="rank two decoders per criterion")
    p_cmp.add_argument("--a", required=True)
    p_cmp.add_argument("--b", required=True)
    p_cmp.add_argument("--grid", default="design5200")
    p_cmp.add_argument("--set", default=None, help="source signal set")
    p_cmp.add_argument("--out", default=None, help="JSON report path")
    p_cmp.add_argument("--seed", type=int, default=0)
    p_cmp.set_defaults(func=cmd_compare)

    p_pan = sub.add_parser("pan-grid", help="rendered directions along az/el lines")
    p_pan.add_argument("--decoder", required=True)
    p_pan.add_argument("--az-lines", default=None, help="comma-separated degrees")
    p_pan.add_argument("--el-lines", default=None, help="comma-separated degrees")
    p_pan.add_argument("--step-deg", type=float, default=2.0)
    p_pan.add_argument("--set", default=None)
    p_pan.add_argument("--out", default=None)
    p_pan.add_argument("--seed", type=int, default=0)
    p_pan.set_defaults(func=cmd_pan_grid)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (GridParseError, ArrayConfigError, DecoderFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
