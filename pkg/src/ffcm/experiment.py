"""Repeated centralized-vs-federated experiments and their reports.

Every repetition ``r`` of a cell uses seed ``base_seed + r``. That seed is
expanded with ``numpy.random.SeedSequence`` into four independent streams:
data generation, the centralized FCM initialisation, the server's center
initialisation and the avg2 inner k-means. Given the spec and seed, every
output byte except the separate timing file is fixed.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import datagen
from .core import FcmConfig, KmeansConfig, MembershipFormula, fcm_fit, fcm_membership_update
from .datagen import FederatedDataset
from .federation import AvgMethod, ClientState, FedConfig, InitStrategy, run_federated
from .metrics import MetricsReport, evaluate

log = logging.getLogger(__name__)

METHODS = ("central", "avg1", "avg2")
METRICS = ("wsse", "osse", "gap", "ngap")

RUN_COLUMNS = (
    "cell", "repetition", "seed", "method", "status",
    "wsse", "osse", "gap", "ngap", "n_points", "dim", "k", "rounds", "converged",
)
SUMMARY_COLUMNS = ("cell", "method", "n_runs", "n_failed") + tuple(
    f"{m}_{s}" for m in METRICS for s in ("mean", "std")
)


class Case(str, enum.Enum):
    CASE1_EQUAL = "case1_equal"
    CASE1_UNEQUAL = "case1_unequal"
    CASE2 = "case2"
    CASE3 = "case3"
    G2 = "g2"
    CUSTOM = "custom"


DEFAULT_K = {
    Case.CASE1_EQUAL: 3,
    Case.CASE1_UNEQUAL: 3,
    Case.CASE2: 3,
    Case.CASE3: 4,
    Case.G2: 2,
}


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one experiment.

    ``params`` holds case-specific settings: ``points_per_client`` for
    case 3; ``dim``, ``sigma`` and ``n_clients`` for g2; ``sigma`` for
    case 1; ``shards`` (list of text files) and optional ``truth`` for
    custom data. ``k`` and ``m`` default per case (m=1.1 for case 2).
    """

    case: Case
    params: dict = field(default_factory=dict)
    k: int | None = None
    m: float | None = None
    membership_formula: MembershipFormula = MembershipFormula.PAPER_LITERAL
    methods: tuple = METHODS
    repetitions: int = 10
    base_seed: int = 0
    local_epochs: int = 5
    max_rounds: int = 300
    round_epsilon: float = 1e-4
    fcm_epsilon: float = 1e-4
    fcm_max_iter: int = 300
    init_strategy: InitStrategy = InitStrategy.BOUNDING_BOX
    kmeans_n_init: int = 10
    sse_distance: str = "euclidean"
    gap_reduction: str = "mean"
    output_dir: str | None = None

    def __post_init__(self):
        self.case = Case(self.case)
        self.membership_formula = MembershipFormula(self.membership_formula)
        self.init_strategy = InitStrategy(self.init_strategy)
        self.methods = tuple(self.methods)
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise ValueError(f"methods must be a non-empty subset of {METHODS}, got {self.methods}")
        if self.k is None:
            if self.case is Case.CUSTOM:
                raise ValueError("custom experiments need an explicit k")
            self.k = DEFAULT_K[self.case]
        if self.m is None:
            self.m = 1.1 if self.case is Case.CASE2 else 2.0
        if self.case is Case.CASE3:
            pts = self.params.get("points_per_client", (1000, 1000, 1000))
            self.params["points_per_client"] = [int(v) for v in pts]
        if self.case is Case.G2:
            self.params.setdefault("n_clients", 10)
            for key in ("dim", "sigma"):
                if key not in self.params:
                    raise ValueError(f"g2 experiments need params[{key!r}]")
        if self.case is Case.CUSTOM and not self.params.get("shards"):
            raise ValueError("custom experiments need params['shards']")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["case"] = self.case.value
        d["membership_formula"] = self.membership_formula.value
        d["init_strategy"] = self.init_strategy.value
        d["methods"] = list(self.methods)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown experiment spec keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    @property
    def cell(self) -> str:
        if self.case is Case.CASE3:
            return "case3-" + "-".join(str(v) for v in self.params["points_per_client"])
        if self.case is Case.G2:
            return f"g2-d{self.params['dim']}-s{self.params['sigma']}"
        return self.case.value


@dataclass
class RunRow:
    cell: str
    repetition: int
    seed: int
    method: str
    status: str
    metrics: MetricsReport | None
    rounds: int | None
    converged: bool | None
    centers: list | None
    error: str | None = None
    wall_time: float = 0.0

    def csv_record(self) -> dict:
        rec = {c: None for c in RUN_COLUMNS}
        rec.update(cell=self.cell, repetition=self.repetition, seed=self.seed, method=self.method,
                   status=self.status, rounds=self.rounds, converged=self.converged)
        if self.metrics is not None:
            for name in MetricsReport.FIELDS:
                rec[name] = getattr(self.metrics, name)
        return rec

    def json_record(self) -> dict:
        rec = self.csv_record()
        rec["centers"] = self.centers
        rec["error"] = self.error
        return rec


@dataclass
class ExperimentReport:
    specs: list[ExperimentSpec]
    rows: list[RunRow]
    summary: list[dict] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def failed(self) -> list[RunRow]:
        return [r for r in self.rows if r.status != "ok"]

    def runs(self, cell: str | None = None, method: str | None = None) -> list[RunRow]:
        return [r for r in self.rows
                if (cell is None or r.cell == cell) and (method is None or r.method == method)]

    def metric(self, name: str, cell: str | None = None, method: str | None = None) -> np.ndarray:
        """Per-repetition values of ``name`` for successful runs."""
        return np.array([getattr(r.metrics, name) for r in self.runs(cell, method) if r.status == "ok"])

    def to_dict(self) -> dict:
        return {
            "specs": [s.to_dict() for s in self.specs],
            "runs": [r.json_record() for r in self.rows],
            "summary": self.summary,
            "extras": self.extras,
        }


def repetition_seeds(seed: int) -> dict[str, int]:
    names = ("data", "central", "server_init", "inner_kmeans")
    states = np.random.SeedSequence(seed).generate_state(len(names))
    return {n: int(s) for n, s in zip(names, states)}


def build_dataset(spec: ExperimentSpec, data_seed: int) -> FederatedDataset:
    p = spec.params
    if spec.case is Case.CASE1_EQUAL:
        return datagen.build_case1("equal", data_seed, p.get("sigma", datagen.CASE1_SIGMA))
    if spec.case is Case.CASE1_UNEQUAL:
        return datagen.build_case1("unequal", data_seed, p.get("sigma", datagen.CASE1_SIGMA))
    if spec.case is Case.CASE2:
        return datagen.build_case2(data_seed)
    if spec.case is Case.CASE3:
        return datagen.build_case3(p["points_per_client"], data_seed)
    if spec.case is Case.G2:
        return datagen.build_g2(int(p["dim"]), p["sigma"], int(p["n_clients"]), data_seed)
    shards = [datagen.load_dataset(path) for path in p["shards"]]
    truth = datagen.load_dataset(p["truth"]) if p.get("truth") else None
    if truth is None:
        # no ground truth: gap metrics are left empty
        return FederatedDataset(list(enumerate(shards)), np.zeros((0, shards[0].shape[1])), "custom")
    return FederatedDataset(list(enumerate(shards)), truth, "custom")


def _fcm_config(spec: ExperimentSpec, seed: int) -> FcmConfig:
    return FcmConfig(
        m=spec.m, epsilon=spec.fcm_epsilon, max_iter=spec.fcm_max_iter,
        membership_formula=spec.membership_formula, rng_seed=seed,
    )


def _run_method(spec, method, fd, seeds):
    x = fd.gathered()
    truth = fd.ground_truth_centers if fd.ground_truth_centers.shape[0] else None
    if method == "central":
        cfg = _fcm_config(spec, seeds["central"])
        res = fcm_fit(x, spec.k, cfg)
        centers, u, rounds, converged = res.centers, res.u, res.n_iter, res.n_iter < cfg.max_iter
    else:
        cfg = _fcm_config(spec, seeds["central"])
        fed = FedConfig(
            k=spec.k, fcm=cfg, avg_method=AvgMethod(method), local_epochs=spec.local_epochs,
            max_rounds=spec.max_rounds, round_epsilon=spec.round_epsilon,
            init_strategy=spec.init_strategy,
            inner_kmeans=KmeansConfig(n_init=spec.kmeans_n_init, rng_seed=seeds["inner_kmeans"]),
        )
        clients = [ClientState(cid, shard) for cid, shard in fd.shards]
        res = run_federated(clients, fed, np.random.default_rng(seeds["server_init"]))
        centers, rounds, converged = res.global_centers, res.rounds_used, res.converged
        u = fcm_membership_update(x, centers, cfg)
    metrics = evaluate(x, u, centers, truth, spec.sse_distance, spec.gap_reduction)
    return metrics, rounds, converged, centers


def _run_cell(spec: ExperimentSpec) -> tuple[list[RunRow], dict]:
    rows = []
    timing = {}
    for r in range(spec.repetitions):
        seed = spec.base_seed + r
        seeds = repetition_seeds(seed)
        try:
            fd = build_dataset(spec, seeds["data"])
        except Exception as exc:  # noqa: BLE001 - recorded as a failed cell
            log.error("%s rep %d: data generation failed: %s", spec.cell, r, exc)
            for method in spec.methods:
                rows.append(RunRow(spec.cell, r, seed, method, "failed", None, None, None, None, repr(exc)))
            continue
        for method in spec.methods:
            t0 = time.perf_counter()
            try:
                metrics, rounds, converged, centers = _run_method(spec, method, fd, seeds)
                row = RunRow(spec.cell, r, seed, method, "ok", metrics, int(rounds), bool(converged),
                             np.asarray(centers).tolist())
            except Exception as exc:  # noqa: BLE001 - recorded as a failed run
                log.error("%s rep %d %s failed: %s", spec.cell, r, method, exc)
                row = RunRow(spec.cell, r, seed, method, "failed", None, None, None, None, repr(exc))
            row.wall_time = time.perf_counter() - t0
            timing[f"{spec.cell}/{r}/{method}"] = row.wall_time
            rows.append(row)
    return rows, timing


def _summarise(rows: list[RunRow]) -> list[dict]:
    """Mean and sample standard deviation per (cell, method), in row order."""
    order = []
    for r in rows:
        if (r.cell, r.method) not in order:
            order.append((r.cell, r.method))
    out = []
    for cell, method in order:
        group = [r for r in rows if r.cell == cell and r.method == method]
        ok = [r for r in group if r.status == "ok"]
        rec = {"cell": cell, "method": method, "n_runs": len(group), "n_failed": len(group) - len(ok)}
        for name in METRICS:
            vals = [getattr(r.metrics, name) for r in ok if getattr(r.metrics, name) is not None]
            rec[f"{name}_mean"] = math.fsum(vals) / len(vals) if vals else None
            rec[f"{name}_std"] = float(np.std(vals, ddof=1)) if len(vals) > 1 else (0.0 if vals else None)
        out.append(rec)
    return out


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    """Central FCM on the gathered data plus federated avg1/avg2, repeated."""
    rows, timing = _run_cell(spec)
    return ExperimentReport([spec], rows, _summarise(rows), {"timing": timing})


def _quantiles(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {
        "q25": float(np.quantile(v, 0.25)),
        "median": float(np.quantile(v, 0.5)),
        "q75": float(np.quantile(v, 0.75)),
        "min": float(v.min()),
        "max": float(v.max()),
    }


def run_g2_suite(
    dims=datagen.G2_DIMS,
    sigmas=datagen.G2_SIGMAS,
    n_clients: int = 10,
    repetitions: int = 10,
    base_seed: int = 0,
    **spec_kwargs,
) -> ExperimentReport:
    """Run every (dim, sigma) G2 cell and add the grid-level summaries.

    ``extras["gap_quantiles"][method]`` holds quantiles over cells of the
    per-cell mean gap; ``extras["gap_by_sigma"]`` and ``extras["osse_by_dim"]``
    average the per-cell means over the other grid axis.
    """
    specs, rows, timing = [], [], {}
    for d in dims:
        for s in sigmas:
            spec = ExperimentSpec(
                case=Case.G2, params={"dim": int(d), "sigma": s, "n_clients": n_clients},
                repetitions=repetitions, base_seed=base_seed, **spec_kwargs,
            )
            cell_rows, cell_timing = _run_cell(spec)
            specs.append(spec)
            rows.extend(cell_rows)
            timing.update(cell_timing)
    summary = _summarise(rows)
    report = ExperimentReport(specs, rows, summary, {"timing": timing})
    methods = specs[0].methods
    by_cell = {(rec["cell"], rec["method"]): rec for rec in summary}
    quantiles, gap_by_sigma, osse_by_dim = {}, {}, {}
    for method in methods:
        cells = [(sp.params["dim"], sp.params["sigma"], by_cell[(sp.cell, method)]) for sp in specs]
        gaps = [rec["gap_mean"] for _, _, rec in cells if rec["gap_mean"] is not None]
        if gaps:
            quantiles[method] = _quantiles(gaps)
        gap_by_sigma[method] = [
            [s, _mean([rec["gap_mean"] for _, cs, rec in cells if cs == s])] for s in sigmas
        ]
        osse_by_dim[method] = [
            [d, _mean([rec["osse_mean"] for cd, _, rec in cells if cd == d])] for d in dims
        ]
    report.extras.update(gap_quantiles=quantiles, gap_by_sigma=gap_by_sigma, osse_by_dim=osse_by_dim)
    return report


def _mean(values):
    vals = [v for v in values if v is not None]
    return math.fsum(vals) / len(vals) if vals else None


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, columns, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for rec in records:
            w.writerow([_fmt(rec.get(c)) for c in columns])


def emit_report(report: ExperimentReport, out_dir, formats=("csv", "json", "plot")) -> list[Path]:
    """Write the report to ``out_dir`` and return the files written.

    csv: ``runs.csv`` (columns ``RUN_COLUMNS``) and ``summary.csv``
    (``SUMMARY_COLUMNS``). json: ``report.json``. plot: two-column
    whitespace files, one per series. Wall-clock times go to ``timing.json``
    so that the other files stay byte-for-byte reproducible.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        _write_csv(out / "runs.csv", RUN_COLUMNS, [r.csv_record() for r in report.rows])
        _write_csv(out / "summary.csv", SUMMARY_COLUMNS, report.summary)
        written += [out / "runs.csv", out / "summary.csv"]
    if "json" in formats:
        payload = report.to_dict()
        payload["extras"] = {k: v for k, v in payload["extras"].items() if k != "timing"}
        (out / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        written.append(out / "report.json")
    if "plot" in formats:
        for name, series in plot_series(report).items():
            path = out / f"{name}.dat"
            path.write_text("".join(f"{_fmt(x)} {_fmt(y)}\n" for x, y in series))
            written.append(path)
    timing = report.extras.get("timing")
    if timing is not None:
        (out / "timing.json").write_text(json.dumps(timing, indent=2, sort_keys=True) + "\n")
    return written


def plot_series(report: ExperimentReport) -> dict[str, list]:
    """Named ``(x, y)`` series.

    G2 suites give ``gap_vs_sigma_<method>`` and ``osse_vs_dim_<method>``;
    other experiments give ``gap_by_repetition_<cell>_<method>``.
    """
    series = {}
    for method, pts in report.extras.get("gap_by_sigma", {}).items():
        series[f"gap_vs_sigma_{method}"] = [tuple(p) for p in pts]
    for method, pts in report.extras.get("osse_by_dim", {}).items():
        series[f"osse_vs_dim_{method}"] = [tuple(p) for p in pts]
    if not series:
        for rec in report.summary:
            rows = [r for r in report.runs(rec["cell"], rec["method"]) if r.status == "ok"]
            if rows and rows[0].metrics.gap is not None:
                series[f"gap_by_repetition_{rec['cell']}_{rec['method']}"] = [
                    (r.repetition, r.metrics.gap) for r in rows
                ]
    return series


def load_report(path) -> ExperimentReport:
    """Rebuild a report from ``report.json``."""
    d = json.loads(Path(path).read_text())
    specs = [ExperimentSpec.from_dict(s) for s in d["specs"]]
    rows = []
    for rec in d["runs"]:
        metrics = None
        if rec["status"] == "ok":
            metrics = MetricsReport(**{k: rec[k] for k in MetricsReport.FIELDS})
        rows.append(RunRow(rec["cell"], rec["repetition"], rec["seed"], rec["method"], rec["status"],
                           metrics, rec["rounds"], rec["converged"], rec["centers"], rec.get("error")))
    return ExperimentReport(specs, rows, d["summary"], d.get("extras", {}))


def with_overrides(spec: ExperimentSpec, **kwargs) -> ExperimentSpec:
    return replace(spec, **{k: v for k, v in kwargs.items() if v is not None})
