"""Command-line front end: gram, sweep, verify, bp-scan, spectrum."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import concentration as conc
from . import vqa
from .circuits import AnsatzSpec, Family, build, build_encoder, parse_family
from .data import Dataset, load_csv, load_idx, prepare_dataset, synthetic_uniform
from .kernel import GramMatrix, encode_states, gram
from .sampling import default_threads, stream, uniform_angles
from .statevec import fidelity
from .svg import heatmap

log = logging.getLogger("qkonc")

SWEEP_COLUMNS = ["n", "var_total", "var_cond_min", "var_cond_max", "mu", "b_fit", "flatness"]


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    ansatz: list[str] = field(default_factory=lambda: ["havlicek"])
    qubits: list[int] = field(default_factory=list)
    depth: int = 2
    depth_rule: str = "constant"
    entanglement: str = "full"
    data: str = "synthetic"
    classes: list[int] = field(default_factory=lambda: [0, 1])
    points: int = 100
    normalize: bool = True
    shots: int = 0
    samples: int = 0
    anchors: int = 20
    seed: int | None = None
    delta: list[float] = field(default_factory=lambda: [0.01, 0.1])
    threads: int | None = None
    out: str = "out"

    def validate(self) -> "SweepConfig":
        if not self.qubits:
            raise ConfigError("qubit list is empty")
        if any(b <= a for a, b in zip(self.qubits, self.qubits[1:])):
            raise ConfigError(f"qubit list must be strictly increasing, got {self.qubits}")
        if self.qubits[0] < 1:
            raise ConfigError("qubit counts must be >= 1")
        if self.seed is None:
            raise ConfigError("a seed is required (--seed or config file)")
        if self.depth_rule not in ("constant", "n"):
            raise ConfigError(f"depth rule must be 'constant' or 'n', got {self.depth_rule!r}")
        if self.depth < 1:
            raise ConfigError("depth must be >= 1")
        if self.points < 1 or self.shots < 0 or self.samples < 0 or self.anchors < 2:
            raise ConfigError("points >= 1, shots >= 0, samples >= 0 and anchors >= 2 required")
        for name in self.ansatz:
            try:
                parse_family(name)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        return self

    def families(self) -> list[Family]:
        return [parse_family(a) for a in self.ansatz]

    def depth_for(self, n: int) -> int:
        return n if self.depth_rule == "n" else self.depth

    def spec_for(self, family: Family, n: int) -> AnsatzSpec:
        return AnsatzSpec(family, n, self.depth_for(n), self.entanglement, seed=self.seed)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


# -- config plumbing -----------------------------------------------------------


def _int_list(text: str) -> list[int]:
    """'2,4,6' or '2-10' or '2-16:2'."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            rng, _, step = part.partition(":")
            lo, hi = rng.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1, int(step) if step else 1))
        else:
            out.append(int(part))
    return out


def _float_list(text: str) -> list[float]:
    return [float(p) for p in str(text).split(",") if p.strip()]


def _str_list(text: str) -> list[str]:
    return [p.strip() for p in str(text).split(",") if p.strip()]


_PARSERS: dict[str, Callable[[Any], Any]] = {
    "ansatz": lambda v: v if isinstance(v, list) else _str_list(v),
    "qubits": lambda v: [int(q) for q in v] if isinstance(v, list) else _int_list(v),
    "classes": lambda v: [int(q) for q in v] if isinstance(v, list) else _int_list(v),
    "delta": lambda v: [float(q) for q in v] if isinstance(v, list) else _float_list(v),
}


def resolve_config(file_values: dict[str, Any] | None, flag_values: dict[str, Any]) -> SweepConfig:
    """Defaults, then the JSON config file, then explicit flags."""
    known = {f.name for f in fields(SweepConfig)}
    merged: dict[str, Any] = {}
    for source in (file_values or {}, flag_values):
        for key, value in source.items():
            key = key.replace("-", "_")
            if value is None:
                continue
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = _PARSERS.get(key, lambda v: v)(value)
    if "classes" in merged and len(merged["classes"]) != 2:
        raise ConfigError("--classes needs exactly two labels")
    cfg = SweepConfig(**merged)
    if cfg.threads is None or cfg.threads < 1:
        cfg.threads = default_threads()
    return cfg.validate()


def _config_text(cfg: SweepConfig) -> str:
    return json.dumps(cfg.to_dict(), sort_keys=True)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _dump_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _csv_text(cfg: SweepConfig, header: list[str] | None, rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    buf.write(f"# qkonc config={_config_text(cfg)}\n")
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


# -- data sources --------------------------------------------------------------

_BASE_CACHE: dict[str, Dataset] = {}


def _base_dataset(source: str) -> Dataset | None:
    if source == "synthetic":
        return None
    if source not in _BASE_CACHE:
        kind, _, rest = source.partition(":")
        if kind == "idx":
            paths = rest.split(",")
            if len(paths) != 2:
                raise ConfigError("idx data source is idx:IMAGES,LABELS")
            _BASE_CACHE[source] = load_idx(paths[0], paths[1])
        elif kind == "csv":
            _BASE_CACHE[source] = load_csv(rest)
        else:
            raise ConfigError(f"unknown data source {source!r} (synthetic | idx:IMAGES,LABELS | csv:PATH)")
    return _BASE_CACHE[source]


def dataset_for(cfg: SweepConfig, d: int) -> Dataset:
    base = _base_dataset(cfg.data)
    if base is None:
        return synthetic_uniform(cfg.points, d, cfg.seed + d)
    classes = tuple(cfg.classes) if base.labels is not None else None
    return prepare_dataset(base, d, classes, cfg.points, cfg.seed, normalize=cfg.normalize)


# -- gram ----------------------------------------------------------------------


def run_gram(cfg: SweepConfig) -> dict[int, GramMatrix]:
    out_dir = Path(cfg.out)
    family = cfg.families()[0]
    results = {}
    for n in cfg.qubits:
        circuit = build_encoder(cfg.spec_for(family, n))
        ds = dataset_for(cfg, circuit.n_data_slots)
        g = gram(circuit, ds.features, shots=cfg.shots, seed=cfg.seed, threads=cfg.threads)
        g.meta["data"] = ds.provenance
        results[n] = g
        sub = out_dir / f"n{n}"
        _write(sub / "gram.csv", f"# qkonc config={_config_text(cfg)}\n" + g.to_csv())
        _write(sub / "gram.json", _dump_json({"config": cfg.to_dict(), "meta": g.meta, "entries": g.entries.tolist()}))
        title = f"{family.value} n={n} N={g.size}"
        _write(sub / "gram.svg", heatmap(g.entries, title=title, metadata=_config_text(cfg)))
        log.info("gram n=%d: wrote %s", n, sub)
    return results


# -- sweep ---------------------------------------------------------------------


def _pair_rows(circuit, cfg: SweepConfig, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Independent anchors x_i and draws x'_ij; returns (kernel rows, anchor Gram)."""
    anchors = cfg.anchors
    draws = max(2, cfg.samples // anchors)
    d = circuit.n_data_slots
    xs = uniform_angles(stream(cfg.seed, n, 0), anchors, d)
    ys = uniform_angles(stream(cfg.seed, n, 1), anchors * draws, d)
    sa = encode_states(circuit, xs, cfg.threads)
    sb = encode_states(circuit, ys, cfg.threads)
    rows = np.array([[fidelity(sa[i], sb[i * draws + j]) for j in range(draws)] for i in range(anchors)])
    K = np.array([[fidelity(a, b) for b in sa] for a in sa])
    K = np.triu(K) + np.triu(K, 1).T
    return rows, K


def run_sweep(cfg: SweepConfig, variance_hook: Callable[[int], float] | None = None) -> dict[str, Any]:
    """Per-n concentration reports plus a decay fit.

    Synthetic data with ``samples > 0`` uses independent pairs
    (``anchors`` x ``samples // anchors``); otherwise the off-diagonal
    entries of an N-point kernel matrix. ``variance_hook`` replaces the
    measured total variance (test fixture).
    """
    if len(cfg.qubits) < 3:
        raise ConfigError("sweep needs at least 3 qubit counts")
    family = cfg.families()[0]
    reports, flats = [], []
    for n in cfg.qubits:
        circuit = build_encoder(cfg.spec_for(family, n))
        if cfg.data == "synthetic" and cfg.samples > 0:
            rows, K = _pair_rows(circuit, cfg, n)
            rep = conc.concentration_report(rows, n_qubits=n, deltas=cfg.delta)
        else:
            ds = dataset_for(cfg, circuit.n_data_slots)
            g = gram(circuit, ds.features, shots=cfg.shots, seed=cfg.seed, threads=cfg.threads)
            K = g.entries
            rep = conc.gram_report(g, n_qubits=n, deltas=cfg.delta)
        reports.append(rep)
        flats.append(conc.spectrum_flatness(K).flatness)
        log.info("sweep n=%d mu=%.4g var=%.4g", n, rep.mu, rep.var_total)
    variances = [variance_hook(r.n_qubits) if variance_hook else r.var_total for r in reports]
    fit = conc.fit_decay(list(zip(cfg.qubits, variances)))
    rows_out = [
        [r.n_qubits, v, r.var_cond_min, r.var_cond_max, r.mu, fit.b, f]
        for r, v, f in zip(reports, variances, flats)
    ]
    out_dir = Path(cfg.out)
    _write(out_dir / "sweep.csv", _csv_text(cfg, SWEEP_COLUMNS, rows_out))
    result = {
        "config": cfg.to_dict(),
        "fit": fit.to_dict(),
        "reports": [r.to_dict() for r in reports],
        "flatness": flats,
    }
    _write(out_dir / "fit.json", _dump_json(result))
    return result


# -- verify --------------------------------------------------------------------


def _toy_samples(seed: int, anchors: int, draws: int) -> dict[str, np.ndarray]:
    return {
        "cos_diff": conc.sample_function(lambda x, y: np.cos(x - y), anchors, draws, seed),
        "product_uniform": conc.sample_function(lambda x, y: x * y, anchors, draws, seed, -1.0, 1.0),
        "constant": conc.sample_function(lambda x, y: np.full(np.broadcast(x, y).shape, 0.25), anchors, draws, seed),
    }


def _valid_for(family: Family, n: int) -> bool:
    return n >= (2 if family in (Family.PERM_INVARIANT, Family.HARDWARE_EFFICIENT) else 1)


def run_verify(cfg: SweepConfig, inject: dict[str, np.ndarray] | None = None) -> tuple[bool, list[str]]:
    """Lemma checks on analytic toys and sampled kernels, theorem checks per ansatz.

    ``inject`` adds named sample grids to the lemma checks (fault injection).
    Returns ``(all_passed, failed_check_names)``.
    """
    draws = max(2, cfg.samples // cfg.anchors) if cfg.samples else 100
    lemma_results: dict[str, Any] = {}
    failures: list[str] = []
    grids = _toy_samples(cfg.seed, cfg.anchors, draws)
    for name, S in (inject or {}).items():
        grids[name] = S
    for name, S in grids.items():
        rep = conc.lemma_check(S)
        lemma_results[name] = rep.to_dict()
        failures += [f"lemma:{name}:{f}" for f in rep.failures()]
    theorem_results: dict[str, Any] = {}
    for family in cfg.families():
        for n in cfg.qubits:
            if not _valid_for(family, n):
                continue
            key = f"{family.value}:n={n}"
            rep = conc.theorem_check(
                cfg.spec_for(family, n), anchors=cfg.anchors, draws=draws, seed=cfg.seed, threads=cfg.threads
            )
            theorem_results[key] = rep.to_dict()
            lemma_results[f"kernel:{key}"] = rep.lemma.to_dict()
            failures += [f"theorem:{key}:{f}" for f in rep.failures()]
    out_dir = Path(cfg.out)
    _write(out_dir / "lemmas.json", _dump_json({"config": cfg.to_dict(), "checks": lemma_results}))
    _write(out_dir / "theorem.json", _dump_json({"config": cfg.to_dict(), "checks": theorem_results}))
    return not failures, failures


# -- bp-scan -------------------------------------------------------------------

BP_COLUMNS = ["n", "m", "bp_var_max", "bp_var_max_se", "argmax_slot", "cost_var", "cost_var_se", "cost_mean"]


def bp_cost_spec(cfg: SweepConfig, family: Family, n: int) -> tuple[vqa.CostSpec, np.ndarray]:
    spec = cfg.spec_for(family, n)
    if family is Family.HARDWARE_EFFICIENT:
        return vqa.CostSpec(variational=build(spec)), np.zeros(0)
    circuit = build_encoder(spec)
    x = uniform_angles(stream(cfg.seed, n, 2), 1, circuit.n_data_slots)[0]
    return vqa.kernel_cost_spec(circuit), x


def run_bp_scan(cfg: SweepConfig) -> list[list[Any]]:
    family = cfg.families()[0]
    samples = cfg.samples or 200
    rows = []
    for n in cfg.qubits:
        if not _valid_for(family, n):
            raise ConfigError(f"{family.value} is not defined for n={n}")
        spec, x = bp_cost_spec(cfg, family, n)
        bp = vqa.bp_variance(spec, x, n_samples=samples, seed=cfg.seed, threads=cfg.threads)
        cc = vqa.cost_concentration(spec, x, n_samples=samples, seed=cfg.seed, deltas=cfg.delta, threads=cfg.threads)
        i = bp.argmax_slot
        rows.append([n, spec.n_params, bp.max_variance, float(bp.standard_errors[i]), i,
                     cc.variance, cc.estimate.se_variance, cc.mean])
        log.info("bp-scan n=%d max Var[dC]=%.4g Var[C]=%.4g", n, bp.max_variance, cc.variance)
    _write(Path(cfg.out) / "bp.csv", _csv_text(cfg, BP_COLUMNS, rows))
    return rows


# -- spectrum ------------------------------------------------------------------


def run_spectrum(cfg: SweepConfig) -> dict[int, conc.Spectrum]:
    grams = run_gram(cfg)
    out = {}
    for n, g in grams.items():
        sp = conc.spectrum_flatness(g)
        out[n] = sp
        sub = Path(cfg.out) / f"n{n}"
        _write(sub / "spectrum.json", _dump_json({"config": cfg.to_dict(), "n": n, **sp.to_dict()}))
        _write(sub / "spectrum.csv", _csv_text(cfg, ["index", "eigenvalue"], [[k, v] for k, v in enumerate(sp.eigenvalues)]))
    return out


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--ansatz", help="havlicek | perm | hardware | product (comma list for verify)")
    common.add_argument("--qubits", help="e.g. 2,4,6 or 2-16:2")
    common.add_argument("--depth", type=int)
    common.add_argument("--depth-rule", choices=["constant", "n"])
    common.add_argument("--entanglement", choices=["full", "linear"])
    common.add_argument("--data", help="synthetic | idx:IMAGES,LABELS | csv:PATH")
    common.add_argument("--classes", help="two labels, e.g. 0,1")
    common.add_argument("--points", type=int)
    common.add_argument("--no-normalize", dest="normalize", action="store_const", const=False)
    common.add_argument("--shots", type=int, help="0 = exact kernel")
    common.add_argument("--samples", type=int, help="Monte-Carlo samples / sampled pairs per n")
    common.add_argument("--anchors", type=int, help="anchor points for conditional variances")
    common.add_argument("--seed", type=int)
    common.add_argument("--delta", help="Chebyshev deltas, e.g. 0.01,0.1")
    common.add_argument("--threads", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="qkonc", description="Quantum fidelity-kernel concentration toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("gram", "kernel matrices per qubit count (CSV, JSON, SVG)"),
        ("sweep", "variance-vs-n sweep with decay fit"),
        ("verify", "lemma and theorem checks; nonzero exit on any failure"),
        ("bp-scan", "gradient and cost variance over random parameters"),
        ("spectrum", "kernel eigenvalues and flatness"),
    ]:
        sub.add_parser(name, parents=[common], help=help_text)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    try:
        file_values = None
        if args.config:
            file_values = json.loads(Path(args.config).read_text())
        cfg = resolve_config(file_values, flags)
    except ConfigError as exc:
        parser.error(str(exc))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"qkonc: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "gram":
            run_gram(cfg)
        elif args.command == "sweep":
            res = run_sweep(cfg)
            print(f"classification={res['fit']['classification']} b={res['fit']['b']:.4f}")
        elif args.command == "verify":
            ok, failed = run_verify(cfg)
            for name in failed:
                print(f"FAIL {name}", file=sys.stderr)
            print("all checks passed" if ok else f"{len(failed)} check(s) failed")
            return 0 if ok else 1
        elif args.command == "bp-scan":
            run_bp_scan(cfg)
        elif args.command == "spectrum":
            for n, sp in run_spectrum(cfg).items():
                print(f"n={n} flatness={sp.flatness:.6f}")
    except ConfigError as exc:
        print(f"qkonc: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"qkonc: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
