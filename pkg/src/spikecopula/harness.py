"""
Experiment orchestration: configuration files, the simulate -> extract ->
summarize -> render pipeline, and bundled reproduction presets.

Every output file is listed in ``manifest.txt`` as ``<name> <sha256>``.
Given the same configuration and seed, every byte written is identical.
"""
from __future__ import annotations

import csv
import hashlib
import io
import logging
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import presets
from .copula import pseudo_observations, summarize
from .engine import check_correlation_matrix
from .intervals import CaseSet, all_fpt_pairs, enumerate_cases, neuron_label, write_paired_sample
from .network import (CASCADE_MODES, STANDARD, FptSample, NetworkSpec, SimConfig,
                      SpikeTrains, TrialTimeout, simulate_fpt_trials, simulate_spike_trains, write_fpt_sample,
                      write_spike_trains)
from .report import PlotSpec, dependence_table, network_diagram, panel_matrix, scatterplot_svg

log = logging.getLogger(__name__)

PROTOCOLS = ("fpt", "spike_train")


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.line = line
        self.source = source
        loc = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(loc + message)


@dataclass
class ExperimentConfig:
    name: str
    protocol: str
    network: NetworkSpec
    sim: SimConfig = field(default_factory=SimConfig)
    analyses: list[str] | None = None  # None means every case
    output_dir: Path = Path("out")


# ---------------------------------------------------------------- config parsing

_NEURON_KEYS = {
    "mu_mv_per_ms": "mu",
    "tau_ms": "tau",
    "sigma2_mv2_per_ms": "sigma2",
    "theta_mv": "theta",
    "reset_mv": "reset",
}
_SIM_KEYS = {
    "dt_ms": "dt",
    "duration_ms": "duration",
    "n_trials": "n_trials",
    "burn_in_spikes": "burn_in_spikes",
    "master_seed": "master_seed",
    "timeout_ms": "timeout",
    "cascade": "cascade",
}
_TOP_KEYS = {"name", "protocol", "neurons", "noise_corr", "jumps_mv", "sim", "analyses", "output_dir"}


def _line_map(node, path=(), out=None) -> dict[tuple, int]:
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            out[path + (k.value,)] = k.start_mark.line + 1
            _line_map(v, path + (k.value,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_map(v, path + (i,), out)
    return out


class _Parser:
    def __init__(self, text: str, source: str):
        self.source = source
        try:
            node = yaml.compose(text)
            self.data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ConfigError(f"cannot parse: {getattr(exc, 'problem', exc)}",
                              mark.line + 1 if mark else None, source) from None
        self.lines = _line_map(node) if node is not None else {}

    def fail(self, path: tuple, message: str):
        line = None
        for k in range(len(path), -1, -1):
            if path[:k] in self.lines:
                line = self.lines[path[:k]]
                break
        dotted = ".".join(f"[{p}]" if isinstance(p, int) else str(p) for p in path)
        raise ConfigError(f"{dotted}: {message}" if dotted else message, line, self.source)

    def number(self, value, path, integer=False):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        if integer and int(value) != value:
            self.fail(path, f"expected an integer, got {value!r}")
        return int(value) if integer else float(value)

    def matrix(self, value, path, n):
        try:
            m = np.array(value, dtype=float)
        except (TypeError, ValueError):
            self.fail(path, "expected a numeric matrix")
        if m.shape != (n, n):
            self.fail(path, f"expected a {n}x{n} matrix, got shape {m.shape}")
        return m

    def parse(self) -> ExperimentConfig:
        d = self.data
        if not isinstance(d, dict):
            self.fail((), "top level must be a mapping")
        for k in d:
            if k not in _TOP_KEYS:
                self.fail((k,), f"unknown key (expected one of {sorted(_TOP_KEYS)})")
        name = str(d.get("name", "experiment"))
        if not name or any(ch in name for ch in "/\\ "):
            self.fail(("name",), "name must be non-empty without spaces or slashes")
        protocol = d.get("protocol")
        if protocol not in PROTOCOLS:
            self.fail(("protocol",), f"protocol must be one of {PROTOCOLS}, got {protocol!r}")

        neurons = self._neurons(d.get("neurons", 2))
        n = len(neurons)
        if "noise_corr" in d:
            c = d["noise_corr"]
            if isinstance(c, (int, float)) and not isinstance(c, bool):
                corr = np.full((n, n), float(c))
                np.fill_diagonal(corr, 1.0)
            else:
                corr = self.matrix(c, ("noise_corr",), n)
        else:
            corr = np.eye(n)
        problems = check_correlation_matrix(corr)
        if problems:
            self.fail(("noise_corr",), "; ".join(problems))
        jumps = self.matrix(d["jumps_mv"], ("jumps_mv",), n) if "jumps_mv" in d else np.zeros((n, n))
        if np.any(np.diag(jumps) != 0):
            self.fail(("jumps_mv",), "diagonal must be zero (no self-jump)")

        sim = self._sim(d.get("sim", {}) or {}, protocol)
        analyses = d.get("analyses", "all")
        if analyses == "all" or analyses is None:
            analyses = None
        elif not isinstance(analyses, list) or not all(isinstance(a, str) for a in analyses):
            self.fail(("analyses",), "expected 'all' or a list of case names like FWD-A")
        else:
            valid = _case_names(n, protocol)
            for i, a in enumerate(analyses):
                if a not in valid:
                    self.fail(("analyses", i), f"unknown case {a!r} (valid: {', '.join(valid)})")
        out = Path(str(d.get("output_dir", "out")))
        return ExperimentConfig(name, protocol, NetworkSpec(tuple(neurons), corr, jumps), sim, analyses, out)

    def _neurons(self, value):
        path = ("neurons",)
        if isinstance(value, int) and not isinstance(value, bool):
            if value not in (2, 3):
                self.fail(path, f"networks have 2 or 3 neurons, got {value}")
            return [STANDARD] * value
        if not isinstance(value, list) or len(value) not in (2, 3):
            self.fail(path, "expected a neuron count (2 or 3) or a list of 2-3 parameter mappings")
        out = []
        for i, item in enumerate(value):
            item = item or {}
            if not isinstance(item, dict):
                self.fail(path + (i,), "expected a mapping of neuron parameters")
            kw = {}
            for k, v in item.items():
                if k not in _NEURON_KEYS:
                    self.fail(path + (i, k), f"unknown neuron parameter (expected one of {sorted(_NEURON_KEYS)})")
                kw[_NEURON_KEYS[k]] = self.number(v, path + (i, k))
            p = replace(STANDARD, **kw)
            if not p.tau > 0:
                self.fail(path + (i, "tau_ms"), f"tau_ms must be > 0, got {p.tau:g}")
            if not p.sigma2 >= 0:
                self.fail(path + (i, "sigma2_mv2_per_ms"), f"sigma2_mv2_per_ms must be >= 0, got {p.sigma2:g}")
            if not p.theta > p.reset:
                key = "theta_mv" if "theta_mv" in item else "reset_mv"
                self.fail(path + (i, key), f"theta_mv ({p.theta:g}) must exceed reset_mv ({p.reset:g})")
            out.append(p)
        return out

    def _sim(self, d, protocol):
        if not isinstance(d, dict):
            self.fail(("sim",), "expected a mapping")
        kw = {}
        for k, v in d.items():
            path = ("sim", k)
            if k not in _SIM_KEYS:
                self.fail(path, f"unknown sim key (expected one of {sorted(_SIM_KEYS)})")
            if k == "cascade":
                if v not in CASCADE_MODES:
                    self.fail(path, f"cascade must be one of {CASCADE_MODES}")
                kw["cascade"] = v
            else:
                kw[_SIM_KEYS[k]] = self.number(v, path, integer=k in ("n_trials", "burn_in_spikes", "master_seed"))
        sim = SimConfig(**kw)
        if not sim.dt > 0:
            self.fail(("sim", "dt_ms"), "dt_ms must be > 0")
        if sim.burn_in_spikes < 0:
            self.fail(("sim", "burn_in_spikes"), "burn_in_spikes must be >= 0")
        if protocol == "fpt" and sim.n_trials <= 0:
            self.fail(("sim", "n_trials"), "n_trials must be > 0 for the fpt protocol")
        if protocol == "spike_train" and not sim.duration > 0:
            self.fail(("sim", "duration_ms"), "duration_ms must be > 0 for the spike_train protocol")
        if not sim.timeout > 0:
            self.fail(("sim", "timeout_ms"), "timeout_ms must be > 0")
        return sim


def _case_names(n: int, protocol: str) -> list[str]:
    if protocol == "fpt":
        return [f"FPT-{i + 1}{j + 1}" for i in range(n) for j in range(i + 1, n)]
    return [f"{d}-{neuron_label(k)}" for k in range(n) for d in ("FWD", "BWD")]


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    return _Parser(text, source).parse()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def config_to_yaml(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config`, for writing preset configs to disk."""
    inv_n = {v: k for k, v in _NEURON_KEYS.items()}
    inv_s = {v: k for k, v in _SIM_KEYS.items()}
    d = {
        "name": cfg.name,
        "protocol": cfg.protocol,
        "neurons": [{inv_n[f]: getattr(p, f) for f in inv_n} for p in cfg.network.neurons],
        "noise_corr": cfg.network.noise_corr.tolist(),
        "jumps_mv": cfg.network.jumps.tolist(),
        "sim": {inv_s[f]: getattr(cfg.sim, f) for f in inv_s},
        "analyses": cfg.analyses if cfg.analyses is not None else "all",
        "output_dir": str(cfg.output_dir),
    }
    return yaml.safe_dump(d, sort_keys=False, default_flow_style=None)


# ---------------------------------------------------------------- manifest


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class Manifest:
    out_dir: Path
    files: dict[str, str] = field(default_factory=dict)  # name -> sha256
    summaries: dict = field(default_factory=dict)
    discarded_trials: int = 0

    def add(self, path: Path):
        self.files[Path(path).relative_to(self.out_dir).as_posix()] = sha256_file(path)

    def merge(self, other: "Manifest"):
        self.files.update(other.files)
        self.summaries.update(other.summaries)
        self.discarded_trials += other.discarded_trials

    def text(self) -> str:
        return "".join(f"{k} {v}\n" for k, v in sorted(self.files.items()))

    def write(self, name: str = "manifest.txt") -> Path:
        p = self.out_dir / name
        p.write_text(self.text())
        return p


def _write_text(out_dir: Path, name: str, text: str, manifest: Manifest) -> Path:
    p = out_dir / name
    p.write_text(text)
    manifest.add(p)
    return p


# ---------------------------------------------------------------- pipeline


def analyze_fpt(sample: FptSample, name: str, select=None):
    """Summaries for every neuron pair of an FPT sample."""
    out = []
    for (i, j), pairs in all_fpt_pairs(sample).items():
        label = f"FPT-{i + 1}{j + 1}"
        if select is None or label in select:
            out.append(summarize(pairs, label))
    return out


def analyze_spikes(trains: SpikeTrains, burn_in: int, select=None) -> tuple[CaseSet, list]:
    cases = enumerate_cases(trains, burn_in, skip_empty=True)
    chosen = [s for s in cases if select is None or s.case in select]
    summaries = []
    for s in chosen:
        label = s.case if cases.n_neurons == 2 else s.label
        summaries.append(summarize(s.pairs, label))
    return cases, summaries


def render_fpt(sample: FptSample, name: str, out_dir: Path, manifest: Manifest, select=None):
    for (i, j), pairs in all_fpt_pairs(sample).items():
        label = f"FPT-{i + 1}{j + 1}"
        if select is not None and label not in select:
            continue
        spec = PlotSpec(title=f"{name}: FPT ({i + 1}) vs ({j + 1})", x_label=f"U1 ({i + 1})", y_label=f"U2 ({j + 1})")
        _write_text(out_dir, f"{name}_fpt_{i + 1}_{j + 1}.svg", scatterplot_svg(pseudo_observations(pairs), spec), manifest)
    _write_text(out_dir, f"{name}_fpt_panels.svg", panel_matrix(sample, title=name), manifest)


def render_cases(cases: CaseSet, name: str, out_dir: Path, manifest: Manifest, select=None):
    for target, direction in cases.cases():
        parts = cases.partners(target, direction)
        case = parts[0].case
        if select is not None and case not in select:
            continue
        fname = f"{name}_{neuron_label(target)}_{direction}.svg"
        if cases.n_neurons == 2:
            s = parts[0]
            spec = PlotSpec(title=f"{name}: {case}", x_label=f"U1 (T_{neuron_label(target)})",
                            y_label=f"U2 (D_{neuron_label(s.partner)})")
            svg = scatterplot_svg(pseudo_observations(s.pairs), spec)
        else:
            svg = panel_matrix(cases, target, direction, title=f"{name}: {case}")
        _write_text(out_dir, fname, svg, manifest)
    if cases.n_neurons == 2 and len(cases) == 4:
        _write_text(out_dir, f"{name}_panels.svg", panel_matrix(cases, title=name), manifest)


def run(config: ExperimentConfig, out_dir=None, workers: int = 1, dt_halve: bool = False,
        write_manifest: bool = True) -> Manifest:
    """
    Simulate, extract, summarize and render one experiment.

    Writes the raw sample CSV, per-case paired CSVs (spike-train protocol),
    ``<name>_summary.csv``/``.txt``, SVG scatterplots, a network diagram and
    ``manifest.txt``. With ``dt_halve`` the experiment is repeated at dt/2
    and ``<name>_dt_halve.csv`` compares the two.
    """
    out_dir = Path(out_dir if out_dir is not None else config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(out_dir)
    name = config.name
    select = config.analyses

    summaries = _simulate_and_write(config, config.sim, name, out_dir, manifest, workers, select, raw=True)
    manifest.summaries[name] = summaries
    text, csv_text = dependence_table(summaries)
    _write_text(out_dir, f"{name}_summary.csv", csv_text, manifest)
    _write_text(out_dir, f"{name}_summary.txt", text, manifest)
    _write_text(out_dir, f"{name}_network.svg", network_diagram(config.network, title=name), manifest)

    if dt_halve:
        half = _simulate_and_write(config, config.sim.halved(), name, out_dir, manifest, workers, select, raw=False)
        manifest.summaries[name + "@dt/2"] = half
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "dt_ms", "kendall_tau", "kendall_tau_dt_half", "spearman_rho", "spearman_rho_dt_half"])
        for a, b in zip(summaries, half):
            w.writerow([a.label, f"{config.sim.dt:g}", f"{a.kendall_tau:.4f}", f"{b.kendall_tau:.4f}",
                        f"{a.spearman_rho:.4f}", f"{b.spearman_rho:.4f}"])
        _write_text(out_dir, f"{name}_dt_halve.csv", buf.getvalue(), manifest)

    if write_manifest:
        manifest.write()
    return manifest


def _simulate_and_write(config, sim, name, out_dir, manifest, workers, select, raw):
    if config.protocol == "fpt":
        sample = simulate_fpt(config.network, sim, workers)
        manifest.discarded_trials += int(sample.discarded.size)
        if raw:
            write_fpt_sample(sample, out_dir / f"{name}_fpt.csv")
            manifest.add(out_dir / f"{name}_fpt.csv")
            render_fpt(sample, name, out_dir, manifest, select)
        return analyze_fpt(sample, name, select)
    trains = simulate_spike_trains(config.network, sim)
    cases, summaries = analyze_spikes(trains, sim.burn_in_spikes, select)
    if raw:
        write_spike_trains(trains, out_dir / f"{name}_spikes.csv")
        manifest.add(out_dir / f"{name}_spikes.csv")
        for s in cases:
            if select is None or s.case in select:
                p = out_dir / f"{name}_{neuron_label(s.target)}_{s.direction}_D{neuron_label(s.partner)}.csv"
                write_paired_sample(s, p, source=f"{name}_spikes.csv")
                manifest.add(p)
                manifest.add(p.with_suffix(".json"))
        render_cases(cases, name, out_dir, manifest, select)
    return summaries


def simulate_fpt(spec, sim, workers=1) -> FptSample:
    """FPT trials with timeout warnings routed to the log."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TrialTimeout)
        sample = simulate_fpt_trials(spec, sim, workers)
    for w in caught:
        log.warning("%s", w.message)
    return sample


# ---------------------------------------------------------------- presets

PRESETS = ("table2", "table3", "table4-family", "table5", "table6",
           "fpt-3neuron-gallery", "spiketrain-3neuron-gallery")


def _fmt_h(v) -> str:
    return f"m{abs(v):g}" if v < 0 else f"{v:g}"


def preset_experiments(preset: str, seed: int = 42, n_trials: int | None = None,
                       duration: float | None = None) -> list[tuple[ExperimentConfig, dict]]:
    """
    Experiments of a preset, each with its published reference values.

    The reference dict maps a summary label to ``(r, tau, rho)``; any of the
    three may be ``None`` when no reference value exists.
    """
    fpt_sim = SimConfig(master_seed=seed, n_trials=n_trials or 10_000)
    st_sim = SimConfig(master_seed=seed, duration=duration or 250_000.0)
    out: list[tuple[ExperimentConfig, dict]] = []
    if preset == "table2":
        for c, ref in presets.TABLE2.items():
            name = f"table2_c{_fmt_h(c)}"
            out.append((ExperimentConfig(name, "fpt", NetworkSpec.standard(2, corr=c), fpt_sim),
                        {"FPT-12": ref}))
    elif preset == "table3":
        for (a, b), ref in presets.TABLE3.items():
            name = f"table3_h{_fmt_h(a)}_{_fmt_h(b)}"
            out.append((ExperimentConfig(name, "fpt", presets.jump2(a, b), fpt_sim), {"FPT-12": ref}))
    elif preset in ("table4-family", "fpt-3neuron-gallery"):
        for topo, (t12, t23, t13) in presets.TABLE4.items():
            name = f"{'table4' if preset == 'table4-family' else 'fpt3'}_{topo}"
            ref = {"FPT-12": (None, t12, None), "FPT-23": (None, t23, None), "FPT-13": (None, t13, None)}
            out.append((ExperimentConfig(name, "fpt", presets.table4_network(topo), fpt_sim), ref))
    elif preset == "table5":
        out.append((ExperimentConfig("table5_c0.5", "spike_train", NetworkSpec.standard(2, corr=0.5), st_sim),
                    dict(presets.TABLE5)))
    elif preset == "table6":
        out.append((ExperimentConfig("table6_h1_1", "spike_train", presets.jump2(1, 1), st_sim),
                    dict(presets.TABLE6)))
    elif preset == "spiketrain-3neuron-gallery":
        for topo in presets.SPIKE_GALLERY:
            out.append((ExperimentConfig(f"st3_{topo}", "spike_train", presets.three_neuron(topo), st_sim), {}))
    else:
        raise KeyError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    return out


def _comparison_rows(name, summaries, ref, half=None):
    rows = []
    half_by_label = {s.label: s for s in (half or [])}
    for s in summaries:
        known = ref.get(s.label)
        for k, (qty, value) in enumerate((("r", s.pearson_r), ("tau", s.kendall_tau), ("rho", s.spearman_rho))):
            pv = None if known is None else known[k]
            row = {"experiment": name, "case": s.label, "quantity": qty, "reference": pv, "computed": value,
                   "p_value": s.tau_p_value if qty == "tau" else None}
            if half is not None:
                hs = half_by_label.get(s.label)
                row["computed_dt_half"] = None if hs is None else (hs.pearson_r, hs.kendall_tau, hs.spearman_rho)[k]
            rows.append(row)
    return rows


def comparison_tables(rows, dt_halve: bool) -> tuple[str, str]:
    cols = ["experiment", "case", "quantity", "reference", "computed", "abs_diff", "p_value"]
    if dt_halve:
        cols.append("computed_dt_half")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)

    def fmt(v):
        return "" if v is None else f"{v:.4f}"

    lines = []
    width = max([len(r["experiment"]) for r in rows] + [10])
    head = f"{'experiment':<{width}}  {'case':<12} {'qty':<4} {'ref':>7} {'computed':>9} {'diff':>7}"
    lines.append(head + ("  dt/2" if dt_halve else ""))
    for r in rows:
        diff = None if r["reference"] is None else abs(r["computed"] - r["reference"])
        rec = [r["experiment"], r["case"], r["quantity"], fmt(r["reference"]), fmt(r["computed"]), fmt(diff), fmt(r["p_value"])]
        if dt_halve:
            rec.append(fmt(r.get("computed_dt_half")))
        w.writerow(rec)
        shown = r["computed"]
        # a tau that is not significant at 5% is shown as 0
        if r["quantity"] == "tau" and r["p_value"] is not None and r["p_value"] > 0.05:
            shown = 0.0
        line = (f"{r['experiment']:<{width}}  {r['case']:<12} {r['quantity']:<4} "
                f"{fmt(r['reference']) or '-':>7} {shown:>9.2f} {fmt(diff) or '-':>7}")
        if dt_halve and r.get("computed_dt_half") is not None:
            line += f"  {r['computed_dt_half']:.2f}"
        lines.append(line)
    return "\n".join(lines) + "\n", buf.getvalue()


def reproduce(preset: str, out_dir, seed: int = 42, workers: int = 1, dt_halve: bool = False,
              n_trials: int | None = None, duration: float | None = None) -> Manifest:
    """Run every experiment of ``preset`` and write ``<preset>_comparison.csv``/``.txt``."""
    experiments = preset_experiments(preset, seed, n_trials, duration)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(out_dir)
    rows = []
    for cfg, ref in experiments:
        cfg_path = out_dir / f"{cfg.name}.yaml"
        cfg_path.write_text(config_to_yaml(replace(cfg, output_dir=Path("."))))
        manifest.add(cfg_path)
        m = run(cfg, out_dir, workers=workers, dt_halve=dt_halve, write_manifest=False)
        manifest.merge(m)
        rows.extend(_comparison_rows(cfg.name, m.summaries[cfg.name], ref,
                                     m.summaries.get(cfg.name + "@dt/2") if dt_halve else None))
        log.info("finished %s", cfg.name)
    text, csv_text = comparison_tables(rows, dt_halve)
    _write_text(out_dir, f"{preset}_comparison.csv", csv_text, manifest)
    _write_text(out_dir, f"{preset}_comparison.txt", text, manifest)
    manifest.summaries["__rows__"] = rows
    manifest.write()
    return manifest


__all__ = [
    "ConfigError", "ExperimentConfig", "Manifest", "PRESETS", "load_config", "parse_config",
    "config_to_yaml", "run", "reproduce", "preset_experiments", "analyze_fpt", "analyze_spikes",
]
