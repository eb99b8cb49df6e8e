"""Command-line entry point: ``spikecopula {run,simulate,analyze,report,reproduce}``.

Exit codes: 0 success, 1 validation error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .harness import (PRESETS, ConfigError, Manifest, _write_text, analyze_fpt, analyze_spikes,
                      load_config, render_cases, render_fpt, reproduce, run, simulate_fpt)
from .intervals import neuron_label, write_paired_sample
from .network import (SpikeFileError, read_fpt_sample, read_spike_trains, simulate_spike_trains,
                      write_fpt_sample, write_spike_trains)
from .report import dependence_table

log = logging.getLogger("spikecopula")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, sim=replace(cfg.sim, master_seed=args.seed))
    if getattr(args, "out", None):
        cfg = replace(cfg, output_dir=Path(args.out))
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    m = run(cfg, workers=args.workers, dt_halve=args.dt_halve)
    text = (cfg.output_dir / f"{cfg.name}_summary.txt").read_text()
    print(text, end="")
    if m.discarded_trials:
        print(f"warning: {m.discarded_trials} FPT trial(s) discarded after timeout", file=sys.stderr)
    print(f"wrote {len(m.files)} files to {cfg.output_dir} (manifest.txt)")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    sim = cfg.sim.halved() if args.dt_halve else cfg.sim
    if cfg.protocol == "fpt":
        sample = simulate_fpt(cfg.network, sim, args.workers)
        path = write_fpt_sample(sample, out / f"{cfg.name}_fpt.csv")
        if sample.discarded.size:
            print(f"warning: {sample.discarded.size} trial(s) discarded after timeout", file=sys.stderr)
    else:
        path = write_spike_trains(simulate_spike_trains(cfg.network, sim), out / f"{cfg.name}_spikes.csv")
    print(path)
    return EXIT_OK


def _read_input(args):
    path = Path(args.input)
    with path.open() as fh:
        header = fh.readline().strip()
    if header.startswith("trial,"):
        return "fpt", read_fpt_sample(path)
    return "spikes", read_spike_trains(path, n_neurons=args.n_neurons)


def cmd_analyze(args) -> int:
    kind, data = _read_input(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = args.name or Path(args.input).stem
    manifest = Manifest(out)
    if kind == "fpt":
        summaries = analyze_fpt(data, name)
    else:
        cases, summaries = analyze_spikes(data, args.burn_in)
        for s in cases:
            p = out / f"{name}_{neuron_label(s.target)}_{s.direction}_D{neuron_label(s.partner)}.csv"
            write_paired_sample(s, p, source=str(args.input))
            manifest.add(p)
            manifest.add(p.with_suffix(".json"))
    text, csv_text = dependence_table(summaries)
    _write_text(out, f"{name}_summary.csv", csv_text, manifest)
    _write_text(out, f"{name}_summary.txt", text, manifest)
    manifest.write()
    print(text, end="")
    return EXIT_OK


def cmd_report(args) -> int:
    kind, data = _read_input(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = args.name or Path(args.input).stem
    manifest = Manifest(out)
    if kind == "fpt":
        render_fpt(data, name, out, manifest)
    else:
        cases, _ = analyze_spikes(data, args.burn_in)
        render_cases(cases, name, out, manifest)
    manifest.write()
    for k in sorted(manifest.files):
        print(out / k)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    seed = 42 if args.seed is None else args.seed
    m = reproduce(args.preset, args.out, seed=seed, workers=args.workers, dt_halve=args.dt_halve,
                  n_trials=args.n_trials, duration=args.duration_ms)
    print((Path(args.out) / f"{args.preset}_comparison.txt").read_text(), end="")
    print(f"wrote {len(m.files)} files to {args.out} (manifest.txt)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spikecopula", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def sim_flags(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="experiment YAML file")
        sp.add_argument("--seed", type=int, default=None, help="override master seed")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--workers", type=int, default=1, help="parallel FPT workers")
        sp.add_argument("--dt-halve", action="store_true", help="also run at dt/2 (convergence check)")

    sp = sub.add_parser("run", help="simulate, analyze and render one experiment")
    sim_flags(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("simulate", help="write the raw spike or FPT CSV only")
    sim_flags(sp)
    sp.set_defaults(func=cmd_simulate)

    for name, func, helptext in (("analyze", cmd_analyze, "dependence summaries from a CSV"),
                                 ("report", cmd_report, "SVG scatterplots from a CSV")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--input", required=True, help="spike CSV (neuron,time_ms) or FPT CSV")
        sp.add_argument("--out", default="out")
        sp.add_argument("--name", default=None, help="output file prefix")
        sp.add_argument("--burn-in", type=int, default=50)
        sp.add_argument("--n-neurons", type=int, default=None)
        sp.set_defaults(func=func)

    sp = sub.add_parser("reproduce", help="run a bundled preset and compare with reference values")
    sp.add_argument("preset", choices=PRESETS)
    sim_flags(sp, config=False)
    sp.set_defaults(out="out")
    sp.add_argument("--n-trials", type=int, default=None, help="override FPT trial count")
    sp.add_argument("--duration-ms", type=float, default=None, help="override spike-train duration")
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; here that is a validation error
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SpikeFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
