"""Seeded experiment runs, convergence sweeps and their CSV/JSON/SVG artefacts.

Seeding rule: run ``(sigma2, N, seed)`` simulates from
``SeedSequence([master_seed, seed])``.  The mode chain, input, noise path and
any random model/PTM therefore depend on ``seed`` alone, so adding noise
levels, lengths or seeds never changes an existing run, and the records for
different ``N`` are prefixes of one another.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .extraction import match_to_truth
from .model import NoiseSpec, SarModel, TransitionMatrix, model_from_dict, model_to_dict
from .pipeline import run_pipeline
from .ptm import normalized_frobenius, unvisited_states
from .simulate import child_streams, random_transition_matrix, simulate, noise_to_output_ratio

WORKERS_ENV = "SARJUMP_WORKERS"

REFERENCE_MODEL = SarModel.from_coefficients([[0.3], [-0.5]], [[1.0], [-1.0]])


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    model: SarModel | str = REFERENCE_MODEL
    ptm: TransitionMatrix | str = "random"
    sigma2: list = field(default_factory=lambda: [0.01])
    N: list = field(default_factory=lambda: [10**6])
    seeds: list = field(default_factory=lambda: [0])
    n_l: int = 2
    epsilon: float | None = None
    sigma_max: float | None = None
    grid: int = 64
    smoothing: float = 0.0
    input_kind: str = "gaussian"
    master_seed: int = 0
    use_true_params: bool = False
    output_dir: str | None = None
    # used only when model == "random"
    n_modes: int = 2
    n_a: int = 1
    n_c: int = 1
    a_range: tuple = (-0.8, 0.8)
    c_range: tuple = (-2.0, 2.0)

    def __post_init__(self):
        if isinstance(self.model, str) and self.model != "random":
            raise ConfigError(f"model must be a SarModel or 'random', got {self.model!r}")
        if isinstance(self.ptm, str) and self.ptm != "random":
            raise ConfigError(f"ptm must be a TransitionMatrix or 'random', got {self.ptm!r}")
        self.sigma2 = [float(v) for v in self.sigma2]
        self.N = [int(v) for v in self.N]
        self.seeds = [int(v) for v in self.seeds]
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if any(v < 0 for v in self.sigma2) or not self.sigma2:
            raise ConfigError("sigma2 values must be >= 0 (and at least one given)")
        if any(v < 1 for v in self.N) or not self.N:
            raise ConfigError("N values must be >= 1 (and at least one given)")
        if self.n_l < 1 or self.grid < 8 or self.smoothing < 0:
            raise ConfigError("need n_l >= 1, grid >= 8 and smoothing >= 0")
        if isinstance(self.model, SarModel) and isinstance(self.ptm, TransitionMatrix):
            if self.model.n != self.ptm.n:
                raise ConfigError("model and ptm disagree on the number of modes")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if isinstance(d.get("model"), dict):
                d["model"] = model_from_dict(d["model"])[0]
            if isinstance(d.get("ptm"), list):
                d["ptm"] = TransitionMatrix(d["ptm"])
            for key in ("a_range", "c_range"):
                if key in d:
                    d[key] = tuple(d[key])
            return cls(**d)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["model"] = model_to_dict(self.model) if isinstance(self.model, SarModel) else self.model
        d["ptm"] = self.ptm.p.tolist() if isinstance(self.ptm, TransitionMatrix) else self.ptm
        d["a_range"], d["c_range"] = list(self.a_range), list(self.c_range)
        return d


def load_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ExperimentConfig.from_dict(doc)


def random_model(n: int, n_a: int, n_c: int, a_range, c_range, rng) -> SarModel:
    """Random subsystems; AR parts are drawn until ``sum |a_j| < 1`` so every mode is stable."""
    a = np.empty((n, n_a))
    for i in range(n):
        while True:
            a[i] = rng.uniform(*a_range, n_a)
            if np.abs(a[i]).sum() < 1:
                break
    return SarModel.from_coefficients(a, rng.uniform(*c_range, (n, n_c)))


@dataclass
class RunResult:
    sigma2: float
    N: int
    seed: int
    status: str = "ok"
    norm: float = math.nan
    gamma: float = math.nan
    sigma_true: float = math.nan
    sigma_est: float = math.nan
    sigma_status: str = ""
    min_singular_value: float = math.nan
    epsilon: float = math.nan
    epsilon_default: bool = True
    coef_max_abs_err: float = math.nan
    coef_errors: list = field(default_factory=list)
    decode_accuracy: float = math.nan
    n_snippets: int = 0
    unvisited: list = field(default_factory=list)
    true_ptm: list = field(default_factory=list)
    est_ptm: list = field(default_factory=list)
    error: str = ""
    wall_time: float = 0.0


CSV_COLUMNS = [f.name for f in fields(RunResult) if f.name != "wall_time"]


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    runs: list

    @property
    def failures(self) -> list:
        return [r for r in self.runs if r.status != "ok"]

    def median_norm(self, sigma2: float, N: int) -> float:
        vals = [r.norm for r in self.runs if r.status == "ok" and r.sigma2 == sigma2 and r.N == N]
        return float(np.median(vals)) if vals else math.nan


def _truth_setup(cfg: ExperimentConfig, seed: int):
    ss = np.random.SeedSequence([cfg.master_seed, seed])
    extra = child_streams(ss)[3]
    model = cfg.model
    if model == "random":
        model = random_model(cfg.n_modes, cfg.n_a, cfg.n_c, cfg.a_range, cfg.c_range, extra)
    ptm = cfg.ptm
    if ptm == "random":
        ptm = random_transition_matrix(model.n, extra)
    return ss, model, ptm


def _evaluate(cfg: ExperimentConfig, ds, model: SarModel, ptm: TransitionMatrix,
              sigma2: float, seed: int) -> RunResult:
    res = RunResult(sigma2, ds.N, seed, sigma_true=math.sqrt(sigma2), true_ptm=ptm.p.tolist())
    t0 = time.perf_counter()
    try:
        res.gamma = noise_to_output_ratio(ds)
        kw = {}
        if cfg.use_true_params:
            kw = dict(model=model, sigma=math.sqrt(sigma2))
        else:
            kw = dict(sigma_max=cfg.sigma_max, grid=cfg.grid, epsilon=cfg.epsilon, seed=seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            out = run_pipeline(ds, model.n, n_l=cfg.n_l, smoothing=cfg.smoothing, **kw)
        if out.identification is not None:
            est = out.identification.sigma
            res.sigma_est, res.sigma_status = est.sigma, est.status
            res.min_singular_value, res.epsilon = est.min_singular_value, est.epsilon
            res.epsilon_default = est.epsilon_default
            b_hat = out.identification.b
        else:
            res.sigma_est, res.sigma_status = out.sigma, "injected"
            b_hat = model.coefficient_vectors()
        perm, err = match_to_truth(b_hat, model.coefficient_vectors())
        perm = list(perm)
        res.coef_errors = err.tolist()
        res.coef_max_abs_err = float(err.max())
        # relabel estimated modes to the true labelling
        p_hat = out.ptm.p[np.ix_(perm, perm)]
        res.est_ptm = p_hat.tolist()
        res.norm = normalized_frobenius(p_hat, ptm)
        to_true = np.empty(model.n, dtype=np.int64)
        to_true[perm] = np.arange(1, model.n + 1)
        pairs = out.decoding.modes()
        decoded = to_true[pairs[:, 1] - 1]
        res.decode_accuracy = float(np.mean(decoded == ds.truth.delta[pairs[:, 0] - 1]))
        res.n_snippets = len(out.decoding)
        res.unvisited = [int(to_true[i - 1]) for i in unvisited_states(out.counts)]
    except Exception as exc:  # recorded per run; other runs proceed
        res.status = "error"
        res.error = f"{type(exc).__name__}: {exc}"
    res.wall_time = time.perf_counter() - t0
    return res


def _run_seed_level(args) -> list:
    cfg, sigma2, seed, Ns = args
    ss, model, ptm = _truth_setup(cfg, seed)
    t0 = time.perf_counter()
    try:
        full = simulate(model, ptm, NoiseSpec(sigma2), max(Ns), seed=ss, input_kind=cfg.input_kind)
    except Exception as exc:
        return [RunResult(sigma2, N, seed, status="error", error=f"{type(exc).__name__}: {exc}",
                          true_ptm=ptm.p.tolist()) for N in Ns]
    sim_time = time.perf_counter() - t0
    out = []
    for N in Ns:
        r = _evaluate(cfg, full.truncate(N) if N < full.N else full, model, ptm, sigma2, seed)
        r.wall_time += sim_time
        out.append(r)
    return out


def _workers(workers: int | None) -> int:
    if workers is None:
        try:
            workers = int(os.environ.get(WORKERS_ENV, "1"))
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV} must be an integer") from exc
    return max(1, workers)


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """Simulate and identify every ``(sigma2, N, seed)`` combination.

    One simulation is made per ``(sigma2, seed)`` at the largest ``N`` and
    truncated for the shorter lengths.  Runs are ordered by
    ``(sigma2, seed, N)`` regardless of how they were scheduled.
    """
    Ns = sorted(set(cfg.N))
    jobs = [(cfg, s2, seed, Ns) for s2 in cfg.sigma2 for seed in cfg.seeds]
    w = _workers(workers)
    if w == 1 or len(jobs) == 1:
        results = [_run_seed_level(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=w) as pool:
            results = list(pool.map(_run_seed_level, jobs))
    report = ExperimentReport(cfg, [r for block in results for r in block])
    if cfg.output_dir:
        write_report(report, cfg.output_dir)
    return report


def run_convergence_sweep(cfg: ExperimentConfig, workers: int | None = None) -> list[dict]:
    """Per-seed PTM error as ``N`` grows; rows ``{sigma2, seed, N, norm, status}``."""
    if len(set(cfg.N)) < 2:
        raise ConfigError("a convergence sweep needs at least two values of N")
    report = run_experiment(replace(cfg, output_dir=None), workers)
    rows = [dict(sigma2=r.sigma2, seed=r.seed, N=r.N, norm=r.norm, status=r.status)
            for r in report.runs]
    if cfg.output_dir:
        write_report(report, cfg.output_dir)
        _atomic_write(Path(cfg.output_dir) / "sweep.csv", _rows_to_csv(rows, list(rows[0])))
    return rows


# -- artefacts --------------------------------------------------------------


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return json.dumps(v)
    return str(v)


def _rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def report_csv(report: ExperimentReport) -> str:
    return _rows_to_csv([asdict(r) for r in report.runs], CSV_COLUMNS)


def write_report(report: ExperimentReport, out_dir) -> None:
    """``runs.csv`` (deterministic) and ``summary.json`` (adds timings)."""
    out = Path(out_dir)
    _atomic_write(out / "runs.csv", report_csv(report))
    cfg = report.config
    summary = {
        "config": cfg.to_dict(),
        "median_norm": [
            {"sigma2": s2, "N": N, "median_norm": report.median_norm(s2, N)}
            for s2 in cfg.sigma2 for N in sorted(set(cfg.N))
        ],
        "failures": [{"sigma2": r.sigma2, "N": r.N, "seed": r.seed, "error": r.error}
                     for r in report.failures],
        "epsilon_default": all(r.epsilon_default for r in report.runs),
        "smoothing": cfg.smoothing,
        "wall_time": [{"sigma2": r.sigma2, "N": r.N, "seed": r.seed, "seconds": r.wall_time}
                      for r in report.runs],
    }
    _atomic_write(out / "summary.json", json.dumps(summary, indent=2, allow_nan=True) + "\n")


def read_sweep_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [dict(sigma2=float(r["sigma2"]), seed=int(r["seed"]), N=int(r["N"]),
                     norm=float(r["norm"]), status=r["status"]) for r in csv.DictReader(fh)]


def sweep_svg(rows: list[dict], width: int = 640, height: int = 400) -> str:
    """Line chart of PTM error against ``N`` (log axis), one line per (sigma2, seed)."""
    ok = [r for r in rows if r["status"] == "ok" and np.isfinite(r["norm"])]
    if not ok:
        raise ValueError("no successful sweep rows to plot")
    margin = 60
    xs = np.log10([r["N"] for r in ok])
    ymax = max(r["norm"] for r in ok) * 1.1 or 1.0
    x0, x1 = float(xs.min()), float(xs.max())
    x1 = x1 if x1 > x0 else x0 + 1

    def px(n):
        return margin + (math.log10(n) - x0) / (x1 - x0) * (width - 2 * margin)

    def py(v):
        return height - margin - v / ymax * (height - 2 * margin)

    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'font-family="sans-serif" font-size="12">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
             f'y2="{height - margin}" stroke="black"/>',
             f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>']
    for e in range(math.floor(x0), math.ceil(x1) + 1):
        if x0 <= e <= x1:
            x = px(10**e)
            parts.append(f'<text x="{x:.1f}" y="{height - margin + 18}" text-anchor="middle">'
                         f'1e{e}</text>')
    for t in np.linspace(0, ymax, 5):
        parts.append(f'<text x="{margin - 6}" y="{py(t) + 4:.1f}" text-anchor="end">{t:.3f}</text>')
    parts.append(f'<text x="{width / 2}" y="{height - 15}" text-anchor="middle">N</text>')
    parts.append(f'<text x="15" y="{height / 2}" transform="rotate(-90 15 {height / 2})" '
                 f'text-anchor="middle">normalized Frobenius error</text>')
    keys = sorted({(r["sigma2"], r["seed"]) for r in ok})
    for i, key in enumerate(keys):
        line = sorted((r for r in ok if (r["sigma2"], r["seed"]) == key), key=lambda r: r["N"])
        pts = " ".join(f"{px(r['N']):.1f},{py(r['norm']):.1f}" for r in line)
        color = palette[i % len(palette)]
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{width - margin + 4}" y="{margin + 14 * i}" fill="{color}">'
                     f's2={key[0]:g} seed={key[1]}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(rows: list[dict], path) -> None:
    _atomic_write(Path(path), sweep_svg(rows))
