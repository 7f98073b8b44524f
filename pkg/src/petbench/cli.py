"""Command line: ``bench {run,baseline,anonymize,synthesize,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .anonymizer import AnonymizationConfig, anonymize
from .bench import BenchReport, emit, emit_all, run_experiment
from .config import load_config
from .energy import EnergyMeter, ProbeError, make_probe
from .synthesizer import SynthesizerConfig, synthesize

log = logging.getLogger("petbench")


def _probe_for(args, cfg=None):
    spec = args.probe if getattr(args, "probe", None) else (cfg.probe if cfg else "hardware")
    return make_probe(spec)


def _out_dir(args, cfg) -> Path:
    return Path(args.out) if args.out else cfg.output_dir


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.probe:
        cfg.probe = args.probe
    report = run_experiment(cfg, _probe_for(args, cfg))
    out = _out_dir(args, cfg)
    for path in emit_all(report, out):
        log.info("wrote %s", path)
    failed = [c for c in report.cells if not c.ok] + [v for v in report.variants if v.error]
    for item in failed:
        log.error("incomplete: %s", item.error)
    return 0 if report.complete else 1


def cmd_baseline(args) -> int:
    cfg = load_config(args.config) if args.config else None
    meter = EnergyMeter(_probe_for(args, cfg))
    baseline = meter.idle_baseline(args.replicates)
    text = json.dumps(baseline.to_dict(), indent=2, sort_keys=True)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "baseline.json").write_text(text + "\n")
    print(text)
    return 0


def cmd_anonymize(args) -> int:
    cfg = load_config(args.config)
    data = cfg.dataset.load()
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    hierarchies = cfg.load_hierarchies()
    for k in args.k or cfg.k_values:
        solution = anonymize(
            data, AnonymizationConfig(k, cfg.quasi_identifiers, hierarchies, cfg.suppression_limit))
        path = out / f"{cfg.name}_k{k}.csv"
        solution.write(path)
        print(f"k={k}: node {solution.sidecar()['node']} "
              f"suppressed {len(solution.suppressed_rows)} rows, "
              f"cell fraction {solution.suppressed_cell_fraction:.3f} -> {path}")
    return 0


def cmd_synthesize(args) -> int:
    cfg = load_config(args.config)
    data = cfg.dataset.load()
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    s = cfg.synthesizer
    syn_cfg = SynthesizerConfig(s.degree, s.n_out, cfg.seed if args.seed is None else args.seed,
                                s.bins, s.smoothing)
    synthetic, net = synthesize(data, syn_cfg)
    path = out / f"{cfg.name}_synthetic.csv"
    synthetic.to_csv(path)
    net.write_description(out / f"{cfg.name}_network.json")
    print(f"{synthetic.n} synthetic rows -> {path}")
    return 0


def cmd_report(args) -> int:
    report = BenchReport.from_json(Path(args.input).read_text())
    out = Path(args.out) if args.out else Path(args.input).parent
    for fmt in ("csv_tables", "scatter_csv"):
        for path in emit(report, fmt, out):
            print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    # also accepted after the subcommand; SUPPRESS keeps it from resetting the top-level value
    verbose = argparse.ArgumentParser(add_help=False)
    verbose.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="experiment YAML file")
        p.add_argument("--probe", default=None,
                       help="'hardware' or 'simulated:<watts>' (overrides the config)")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("run", parents=[verbose], help="full experiment, writes report.json, tables and scatter data")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("baseline", parents=[verbose], help="idle power only")
    common(p, config_required=False)
    p.add_argument("--replicates", type=int, default=10)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("anonymize", parents=[verbose], help="write k-anonymous versions of the cleaned dataset")
    common(p)
    p.add_argument("--k", type=int, action="append", help="k value (repeatable)")
    p.set_defaults(func=cmd_anonymize)

    p = sub.add_parser("synthesize", parents=[verbose], help="write a synthetic dataset and its network description")
    common(p)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("report", parents=[verbose], help="regenerate CSV tables from a report.json")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ProbeError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"bench: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
