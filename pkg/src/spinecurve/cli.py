"""Command line entry point: ``spinecurve {analyze,evaluate,generate,cohort}``.

Exit codes: 0 success, 1 some inputs failed, 2 fatal input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import report_io, svg
from .angle_matrix import build_angle_matrix
from .config import Config, load_config
from .diagnosis import diagnose
from .errors import EmptyIntersection, SpineCurveError
from .landmarks import landmark_files, load_spines, spine_to_dict, spines_to_csv
from .metrics import COHORT_COLUMNS, CasePair, cohort_correlations, evaluate, parse_cohort_csv
from .synthetic import SpineSpec, generate, generate_cohort, random_spec

log = logging.getLogger("spinecurve")

EXIT_OK, EXIT_PARTIAL, EXIT_FATAL = 0, 1, 2


def _config(args) -> Config:
    cfg = load_config(args.config)
    return cfg.updated(
        gamma_threshold_deg=getattr(args, "gamma_threshold", None),
        output_format=getattr(args, "format", None),
        svg_emit=True if getattr(args, "svg", False) else None,
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _write_svgs(spine, report, am, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    stem = directory / report.case_id
    Path(f"{stem}.gamma.svg").write_text(svg.angle_matrix_svg(am))
    Path(f"{stem}.pc1.svg").write_text(svg.pc1_svg(report.pc1, report))
    Path(f"{stem}.spine.svg").write_text(svg.spine_svg(spine, report))


def _load_all(paths) -> tuple[list, list[str]]:
    """Load every file, collecting per-file errors rather than stopping."""
    spines, errors = [], []
    for path in paths:
        for f in landmark_files(path):
            try:
                spines.extend(load_spines(f))
            except SpineCurveError as exc:
                errors.append(str(exc))
            except (OSError, UnicodeDecodeError) as exc:
                errors.append(f"{f}: {exc}")
    return spines, errors


def _by_case(spines, side: str) -> dict:
    out = {}
    for s in spines:
        if s.case_id in out:
            raise SpineCurveError(f"{side}: duplicate case_id {s.case_id!r}")
        out[s.case_id] = s
    return out


def cmd_analyze(args) -> int:
    cfg = _config(args)
    spines, errors = _load_all(args.inputs)
    reports = []
    for spine in sorted(spines, key=lambda s: s.case_id):
        report = diagnose(spine, cfg)
        reports.append(report)
        if cfg.svg_emit:
            _write_svgs(spine, report, build_angle_matrix(spine), Path(args.svg_dir))
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    if reports:
        if cfg.output_format == "csv":
            _emit(report_io.reports_to_csv(reports), args.output)
        else:
            _emit(report_io.dumps([report_io.report_to_dict(r) for r in reports]) + "\n", args.output)
    if not errors:
        return EXIT_OK
    return EXIT_PARTIAL if reports else EXIT_FATAL


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    gt_spines, gt_err = _load_all([args.gt])
    pred_spines, pred_err = _load_all([args.pred])
    for e in gt_err + pred_err:
        print(f"error: {e}", file=sys.stderr)
    gt, pred = _by_case(gt_spines, "ground truth"), _by_case(pred_spines, "predictions")
    common = sorted(set(gt) & set(pred))
    if not common:
        raise EmptyIntersection("ground-truth and prediction sets share no case_id")
    warnings = [f"case {cid!r} only in ground truth" for cid in sorted(set(gt) - set(pred))]
    warnings += [f"case {cid!r} only in predictions" for cid in sorted(set(pred) - set(gt))]
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    pairs = [
        CasePair(cid, diagnose(gt[cid], cfg), diagnose(pred[cid], cfg), gt[cid], pred[cid])
        for cid in common
    ]
    ev = evaluate(pairs)
    _emit(report_io.dumps(report_io.eval_to_dict(ev, warnings)) + "\n", args.output)
    if cfg.svg_emit:
        Path(args.svg_path).write_text(svg.confusion_svg(ev.confusion))
    return EXIT_PARTIAL if gt_err or pred_err else EXIT_OK


def _specs_from_file(path: Path, seed: int | None) -> list[SpineSpec]:
    text = path.read_text()
    doc = json.loads(text) if path.suffix.lower() != ".yaml" else __import__("yaml").safe_load(text)
    items = doc["specs"] if isinstance(doc, dict) and "specs" in doc else doc
    if isinstance(items, dict):
        items = [items]
    specs = []
    for k, d in enumerate(items):
        d = dict(d)
        d.setdefault("case_id", f"synthetic{k:04d}")
        if seed is not None:
            d["seed"] = seed + k
        specs.append(SpineSpec.from_dict(d))
    return specs


def cmd_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.cohort:
        rows = generate_cohort(args.cohort, args.planted_r, args.seed or 0)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COHORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({**r, "vwi": f"{r['vwi']:.6f}", "cobb": f"{r['cobb']:.6f}"})
        (out / "cohort.csv").write_text(buf.getvalue())
        return EXIT_OK
    if args.spec:
        specs = _specs_from_file(Path(args.spec), args.seed)
    else:
        rng = np.random.default_rng(args.seed or 0)
        specs = [
            random_spec(rng, case_id=f"synthetic{k:04d}", noise_px=args.noise_px, seed=(args.seed or 0) + k)
            for k in range(args.count)
        ]
    for spec in specs:
        spine, truth = generate(spec)
        stem = out / spec.case_id
        if args.format == "csv":
            Path(f"{stem}.csv").write_text(spines_to_csv([spine]))
        else:
            # full repr precision so that landmarks round-trip exactly
            Path(f"{stem}.json").write_text(json.dumps(spine_to_dict(spine), indent=2) + "\n")
        sidecar = {"spec": spec.to_dict(), "truth": report_io.report_to_dict(truth)}
        Path(f"{stem}.truth.json").write_text(report_io.dumps(sidecar) + "\n")
    return EXIT_OK


def cmd_cohort(args) -> int:
    path = Path(args.csv)
    rows = parse_cohort_csv(path.read_text(), str(path))
    result = cohort_correlations(rows)
    _emit(report_io.dumps(report_io.cohort_to_dict(result)) + "\n", args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinecurve", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON/YAML config file (default: $SPINECURVE_CONFIG)")
        sp.add_argument("-o", "--output", help="write to this file instead of stdout")

    a = sub.add_parser("analyze", help="diagnose landmark files")
    a.add_argument("inputs", nargs="+", help="landmark .json/.csv files or directories")
    common(a)
    a.add_argument("--gamma-threshold", type=float)
    a.add_argument("--format", choices=("json", "csv"))
    a.add_argument("--svg", action="store_true", help="also write gamma, PC1 and spine SVGs")
    a.add_argument("--svg-dir", default=".")
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("evaluate", help="score predicted landmarks against ground truth")
    e.add_argument("gt")
    e.add_argument("pred")
    common(e)
    e.add_argument("--gamma-threshold", type=float)
    e.add_argument("--svg", action="store_true", help="also write a confusion-matrix SVG")
    e.add_argument("--svg-path", default="confusion.svg")
    e.set_defaults(func=cmd_evaluate)

    g = sub.add_parser("generate", help="write synthetic landmark files with ground truth")
    g.add_argument("spec", nargs="?", help="spec file: one SpineSpec object, a list, or {specs: [...]}")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--count", type=int, default=10, help="random specs to draw when no spec file is given")
    g.add_argument("--noise-px", type=float, default=0.0)
    g.add_argument("--format", choices=("json", "csv"), default="json")
    g.add_argument("--cohort", type=int, metavar="N", help="write a synthetic N-patient cohort.csv instead")
    g.add_argument("--planted-r", type=float, default=-0.19)
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("cohort", help="baseline-vs-progression correlations")
    c.add_argument("csv")
    common(c)
    c.set_defaults(func=cmd_cohort)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (SpineCurveError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
