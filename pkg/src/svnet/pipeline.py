"""End-to-end runs: transactions -> validated networks -> clusters -> reports.

``infer`` writes one directory per network::

    <out>/infer/<security>/<window>/links.csv
                                   /report.json        sorted p-values + FDR line
                                   /network.edgelist
                                   /network.json
                                   /partition.csv
                                   /partition.json
    <out>/infer/<security>/activity.json             investor counts per window
    <out>/infer/manifest.json

Mature securities get networks over each IPO's windows, labelled
``Y1@<ipo>`` and ``Y2@<ipo>``.  ``analyze`` reads that tree back and writes
the similarity, expression and table files under ``<out>/analyze``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import date
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .expression import ExpressionProfile, group_expressed_clusters, profile_network, write_expression, write_groups
from .fdr import FDR_MODES, FdrConfig
from .infomap import DetectorConfig, Partition, detect
from .ingest import (
    DailyNetVolume, Window, aggregate_daily, build_windows, complete_attributes, filter_universe, parse_attributes,
    parse_calendar, read_transactions, split_by_security,
)
from .links import UNIVERSES, validate_security_window, write_links
from .network import ValidatedNetwork, assemble, network_stats
from .similarity import (
    RESULT_FIELDS, SimilarityResult, asset_specific, cross_security, ipo_vs_mature, mature_overlaps, percent,
    persistence, persisting_counts, ratio_label, unique_cluster_stats,
)
from .states import EncoderConfig, encode, filter_active

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    transactions: str | None = None
    attributes: str | None = None
    calendar: str | None = None
    out: str = "svnet-out"
    theta: float = 0.25
    min_days: int = 5
    alpha: float = 0.05
    fdr_mode: str = "step_up"
    universe: str = "intersection"
    trials: int = 100
    seed: int = 0
    workers: int = 1
    exclude_nominee: bool = True
    mature: list[str] = field(default_factory=list)
    data_end: str | None = None
    refine_rounds: int = 4
    expression: bool = True

    def __post_init__(self):
        try:
            EncoderConfig(float(self.theta), self.min_days)
            FdrConfig(float(self.alpha), self.fdr_mode)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if self.universe not in UNIVERSES:
            raise ConfigError(f"universe must be one of {UNIVERSES}, got {self.universe!r}")
        for name in ("trials", "seed", "workers", "refine_rounds"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < (0 if name in ("seed", "refine_rounds") else 1):
                raise ConfigError(f"{name} must be a {'non-negative' if name == 'seed' else 'positive'} integer, got {v!r}")
        if self.data_end is not None:
            try:
                date.fromisoformat(str(self.data_end))
            except ValueError:
                raise ConfigError(f"data_end must be an ISO date, got {self.data_end!r}") from None
        if not isinstance(self.mature, list):
            raise ConfigError("mature must be a list of security ids")
        for name in ("transactions", "attributes", "calendar"):
            v = getattr(self, name)
            if v is not None and not Path(v).is_file():
                raise ConfigError(f"{name} file {v} does not exist")

    @property
    def encoder(self) -> EncoderConfig:
        return EncoderConfig(self.theta, self.min_days)

    @property
    def fdr(self) -> FdrConfig:
        return FdrConfig(self.alpha, self.fdr_mode)

    @property
    def detector(self) -> DetectorConfig:
        return DetectorConfig(trials=self.trials, seed=self.seed, refine_rounds=self.refine_rounds)

    @classmethod
    def load(cls, path: str | Path | None = None, **overrides) -> "PipelineConfig":
        """Config file values, then non-``None`` overrides on top.

        Relative input paths in the file are resolved against the file's
        directory.
        """
        data: dict[str, Any] = {}
        if path is not None:
            path = Path(path)
            try:
                data = json.loads(path.read_text(encoding="utf-8"))
            except FileNotFoundError:
                raise ConfigError(f"config file {path} not found") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
            if not isinstance(data, dict):
                raise ConfigError(f"{path}: expected a JSON object")
            for key in ("transactions", "attributes", "calendar", "out"):
                if isinstance(data.get(key), str) and not Path(data[key]).is_absolute():
                    data[key] = str(path.parent / data[key])
        data.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def require_inputs(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is None:
                raise ConfigError(f"missing required input {name!r}")


def network_seed(root: int, network_id: str) -> int:
    """Detector seed of one network, independent of scheduling order."""
    ss = np.random.SeedSequence([root, zlib.crc32(network_id.encode("utf-8"))])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


# -- infer -------------------------------------------------------------------


@dataclass
class NetworkResult:
    security_id: str
    window: Window
    links: list
    report: Any
    network: ValidatedNetwork
    partition: Partition | None


@dataclass
class _Job:
    security_id: str
    anchor: str  # the IPO whose windows are used
    windows: tuple[Window, Window]
    daily: list[DailyNetVolume]


def _run_job(job: _Job, cfg: PipelineConfig) -> tuple[list[NetworkResult], dict]:
    y1, y2 = job.windows
    m1 = encode(job.daily, cfg.encoder, y1)
    m2 = encode(job.daily, cfg.encoder, y2)
    activity = {
        "security_id": job.security_id,
        "anchor": job.anchor,
        "windows": [y1.label, y2.label],
        "unique_investors": [len(m1), len(m2)],
        "active_investors": [int((m1.activity >= cfg.min_days).sum()), int((m2.activity >= cfg.min_days).sum())],
        "trading_days": [len(m1.trading_days), len(m2.trading_days)],
    }
    a1 = {inv for inv, n in zip(m1.investors, m1.activity) if n >= cfg.min_days}
    a2 = {inv for inv, n in zip(m2.investors, m2.activity) if n >= cfg.min_days}
    activity["active_both"] = len(a1 & a2)
    f1, f2 = filter_active(m1, m2, cfg.min_days)
    results = []
    for m in (f1, f2):
        m.security_id = job.security_id
        links, report = validate_security_window(m, cfg.fdr, cfg.universe)
        report.security_id = job.security_id
        net = assemble(links, job.security_id, m.window.label)
        part = None
        if net.edges:
            dcfg = DetectorConfig(cfg.trials, network_seed(cfg.seed, net.network_id), cfg.refine_rounds)
            part = detect(net, dcfg)
        results.append(NetworkResult(job.security_id, m.window, links, report, net, part))
    return results, activity


def _run_job_star(args):
    return _run_job(*args)


def _jobs(cfg: PipelineConfig) -> tuple[list[_Job], list[str], dict]:
    cfg.require_inputs("transactions", "calendar")
    txns = read_transactions(cfg.transactions)
    ipo_dates = parse_calendar(cfg.calendar)
    daily = aggregate_daily(filter_universe(txns, cfg.exclude_nominee))
    by_sec = split_by_security(daily)
    if not daily:
        raise DataError("no transactions left after filtering")
    data_end = date.fromisoformat(cfg.data_end) if cfg.data_end else max(r.date for r in daily)

    mature = sorted(set(cfg.mature))
    unknown = [s for s in mature if s not in by_sec]
    if unknown:
        raise DataError(f"mature securities without transactions: {unknown}")
    ipos = sorted(s for s in by_sec if s not in mature)
    missing = [s for s in ipos if s not in ipo_dates]
    if missing:
        raise DataError(f"securities missing from the calendar: {missing}")

    jobs, skipped = [], []
    for sec in ipos:
        try:
            y1, y2 = build_windows(ipo_dates[sec], data_end=data_end)
        except DataError as exc:
            log.warning("skipping %s: %s", sec, exc)
            skipped.append(sec)
            continue
        jobs.append(_Job(sec, sec, (y1, y2), by_sec[sec]))
        for mat in mature:
            wins = (Window(f"{y1.label}@{sec}", y1.start, y1.stop), Window(f"{y2.label}@{sec}", y2.start, y2.stop))
            recs = [r for r in by_sec[mat] if y1.start <= r.date < y2.stop]
            jobs.append(_Job(mat, sec, wins, recs))
    meta = {"ipo_securities": [j.security_id for j in jobs if j.security_id == j.anchor],
            "mature_securities": mature, "skipped_truncated": skipped, "data_end": data_end.isoformat()}
    return jobs, ipos, meta


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_network(base: Path, res: NetworkResult) -> None:
    d = base / res.security_id / res.window.label
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "links.csv", "w", encoding="utf-8", newline="") as fh:
        write_links(res.links, res.security_id, res.window.label, fh)
    _write_json(d / "report.json", res.report.to_dict())
    with open(d / "network.edgelist", "w", encoding="utf-8", newline="\n") as fh:
        res.network.write_edgelist(fh)
    _write_json(d / "network.json", network_stats(res.network))
    part = res.partition or Partition(res.security_id, res.window.label, [], float("nan"))
    with open(d / "partition.csv", "w", encoding="utf-8", newline="") as fh:
        part.to_csv(fh)
    info = part.to_dict()
    if res.partition is None:
        info["codelength"] = None
    _write_json(d / "partition.json", info)


_INPUTS = ("transactions", "attributes", "calendar")


def _input_digests(cfg: PipelineConfig) -> dict:
    # content, not location, so a moved or copied dataset gives the same manifest
    out = {}
    for key in _INPUTS:
        path = getattr(cfg, key)
        if path is not None:
            out[key] = {"name": Path(path).name, "sha256": hashlib.sha256(Path(path).read_bytes()).hexdigest()}
    return out


def run_infer(cfg: PipelineConfig) -> dict:
    jobs, _, meta = _jobs(cfg)
    base = Path(cfg.out) / "infer"
    base.mkdir(parents=True, exist_ok=True)
    args = [(j, cfg) for j in jobs]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outputs = list(pool.map(_run_job_star, args))
    else:
        outputs = [_run_job_star(a) for a in args]

    networks = []
    for job, (results, activity) in zip(jobs, outputs):
        for res in results:
            _write_network(base, res)
            networks.append({"security_id": res.security_id, "window": res.window.label, "anchor": job.anchor,
                             "start": res.window.start.isoformat(), "stop": res.window.stop.isoformat(),
                             "nodes": len(res.network), "edges": len(res.network.edges),
                             "clusters": len(res.partition) if res.partition else 0})
        name = "activity.json" if job.anchor == job.security_id else f"activity@{job.anchor}.json"
        _write_json(base / job.security_id / name, activity)
    config = {k: v for k, v in asdict(cfg).items() if k not in ("workers", "out", *_INPUTS)}
    manifest = {"config": config, "inputs": _input_digests(cfg), **meta, "networks": networks}
    _write_json(base / "manifest.json", manifest)
    return manifest


# -- analyze -----------------------------------------------------------------


def _load_partition(base: Path, sec: str, window: str) -> Partition:
    d = base / sec / window
    info = json.loads((d / "partition.json").read_text(encoding="utf-8"))
    with open(d / "partition.csv", encoding="utf-8", newline="") as fh:
        cl = info.get("codelength")
        return Partition.from_csv(fh, sec, window, float("nan") if cl is None else cl)


def _median_size(p: Partition) -> str:
    return str(int(np.median(p.sizes))) if len(p) else "0"


def run_analyze(cfg: PipelineConfig) -> dict:
    if cfg.expression and cfg.attributes is None:
        raise ConfigError("expression analysis needs an attributes file (or set expression to false)")
    base = Path(cfg.out) / "infer"
    try:
        manifest = json.loads((base / "manifest.json").read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"no inference results under {base}; run 'infer' first") from None
    out = Path(cfg.out) / "analyze"
    out.mkdir(parents=True, exist_ok=True)
    notices: list[str] = []
    ipos = manifest["ipo_securities"]
    matures = manifest["mature_securities"]
    parts = {(n["security_id"], n["window"]): _load_partition(base, n["security_id"], n["window"])
             for n in manifest["networks"]}

    sims: list[SimilarityResult] = []
    persist_by_sec = {}
    for sec in ipos:
        sim = persistence(parts[(sec, "Y1")], parts[(sec, "Y2")], cfg.alpha, cfg.fdr_mode)
        persist_by_sec[sec] = sim
        sims.append(sim)

    cross: dict[str, SimilarityResult | None] = {}
    for yr in ("Y1", "Y2"):
        if len(ipos) < 2:
            cross[yr] = None
            continue
        cross[yr] = cross_security([parts[(s, yr)] for s in ipos], cfg.alpha, cfg.fdr_mode)
        sims.append(cross[yr])
    if len(ipos) < 2:
        notices.append("fewer than two IPO securities: cross-security similarity skipped")

    mature_sims: dict[tuple[str, str], SimilarityResult] = {}
    if matures:
        for sec in ipos:
            for yr in ("Y1", "Y2"):
                mparts = [parts[(m, f"{yr}@{sec}")] for m in matures]
                mature_sims[(sec, yr)] = ipo_vs_mature(parts[(sec, yr)], mparts, cfg.alpha, cfg.fdr_mode)

    with open(out / "similarity.csv", "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerow(RESULT_FIELDS)
        for sim in sims + [mature_sims[k] for k in sorted(mature_sims)]:
            sim.write_csv(fh, header=False)

    # table 3
    t3_rows = []
    unique_pct = {"Y1": [], "Y2": []}
    for sec in ipos:
        act = json.loads((base / sec / "activity.json").read_text(encoding="utf-8"))
        p1, p2 = parts[(sec, "Y1")], parts[(sec, "Y2")]
        row = {"security_id": sec}
        for yr, p in (("Y1", p1), ("Y2", p2)):
            uniq, total = asset_specific([p], cross[yr])[p.network_id]
            row[f"unique_clusters_{yr}"] = ratio_label(uniq, total)
            unique_pct[yr].append(percent(uniq, total))
        k, m = persisting_counts(persist_by_sec[sec], p1, p2)
        row["persisting_Y1_Y2"] = f"{k} → {m}" if k or m else ""
        row["unique_investors_Y1"], row["unique_investors_Y2"] = act["unique_investors"]
        row["active_investors_Y1"], row["active_investors_Y2"] = act["active_investors"]
        row["active_investors_Y1_Y2"] = act["active_both"]
        row["median_cluster_size"] = f"{_median_size(p1)} ({_median_size(p2)})"
        t3_rows.append(row)
    t3_fields = ["security_id", "unique_clusters_Y1", "unique_clusters_Y2", "persisting_Y1_Y2",
                 "unique_investors_Y1", "active_investors_Y1", "unique_investors_Y2", "active_investors_Y2",
                 "active_investors_Y1_Y2", "median_cluster_size"]
    with open(out / "table3.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, t3_fields, lineterminator="\n")
        w.writeheader()
        w.writerows(t3_rows)

    # table 4
    t4_rows, t4_pct = [], {"Y1": [], "Y2": []}
    if matures:
        for sec in ipos:
            for yr in ("Y1", "Y2"):
                mparts = [parts[(m, f"{yr}@{sec}")] for m in matures]
                rows, n_unique = mature_overlaps(mature_sims[(sec, yr)], parts[(sec, yr)], mparts)
                total = len(parts[(sec, yr)])
                row = {"security_id": sec, "year": yr}
                for m, r in zip(matures, rows):
                    row[m] = r.label()
                row["unique_clusters"] = ratio_label(n_unique, total) if total else "0"
                t4_pct[yr].append(percent(n_unique, total))
                t4_rows.append(row)
        with open(out / "table4.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.DictWriter(fh, ["security_id", "year", *matures, "unique_clusters"], lineterminator="\n")
            w.writeheader()
            w.writerows(t4_rows)
    else:
        notices.append("no mature securities configured: IPO-vs-mature comparison skipped")

    # attribute expression
    profiles: list[ExpressionProfile] = []
    if cfg.expression:
        attrs = parse_attributes(cfg.attributes)
        for sec in ipos:
            for yr in ("Y1", "Y2"):
                p = parts[(sec, yr)]
                profiles.append(profile_network(p, complete_attributes(p.nodes, attrs), cfg.alpha, cfg.fdr_mode))
        with open(out / "expression.csv", "w", encoding="utf-8", newline="") as fh:
            write_expression(profiles, fh)
        group_sims = list(persist_by_sec.values()) + [s for s in cross.values() if s is not None]
        for d in ("over", "under"):
            with open(out / f"groups_{d}.json", "w", encoding="utf-8", newline="\n") as fh:
                write_groups(group_expressed_clusters(group_sims, profiles, d), fh)
    else:
        notices.append("expression analysis disabled")

    summary = {
        "ipo_securities": ipos,
        "mature_securities": matures,
        "persistence": {sec: {"tests": s.family_size, "validated": len(s.validated)}
                        for sec, s in persist_by_sec.items()},
        "cross_security": {yr: ({"tests": s.family_size, "validated": len(s.validated)} if s else None)
                           for yr, s in cross.items()},
        "unique_clusters_pct": {yr: unique_cluster_stats(v) for yr, v in unique_pct.items()},
        "table4_unique_clusters_pct": {yr: unique_cluster_stats(v) for yr, v in t4_pct.items()} if matures else None,
        "expression": {p.network_id: {"tests_per_family": p.family_size("over"),
                                      "over": sum(t.direction == "over" for t in p.validated),
                                      "under": sum(t.direction == "under" for t in p.validated)}
                       for p in profiles},
        "notices": notices,
    }
    _write_json(out / "summary.json", summary)
    return summary


# -- report ------------------------------------------------------------------


def run_report(cfg: PipelineConfig) -> str:
    """Plot-ready FDR curves plus a plain-text digest of the tables."""
    base = Path(cfg.out) / "infer"
    try:
        manifest = json.loads((base / "manifest.json").read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"no inference results under {base}; run 'infer' first") from None
    out = Path(cfg.out) / "report"
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    with open(out / "fdr_curves.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["security_id", "window", "rank", "p_value", "threshold"])
        for n in manifest["networks"]:
            rep = json.loads((base / n["security_id"] / n["window"] / "report.json").read_text(encoding="utf-8"))
            slope = rep["threshold_slope"]
            for k, p in enumerate(rep["sorted_p_values"], start=1):
                w.writerow([n["security_id"], n["window"], k, repr(p), repr(slope * k)])
            lines.append(f"{n['security_id']:>16} {n['window']:<16} co-occurrences {rep['n_observed']:>8}  "
                         f"validated links {rep['n_validated']:>6}  clusters {n['clusters']:>4}")
    for name in ("table3.csv", "table4.csv"):
        path = Path(cfg.out) / "analyze" / name
        if path.exists():
            lines.append("")
            lines.append(name)
            lines.extend(path.read_text(encoding="utf-8").rstrip("\n").split("\n"))
    text = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(text, encoding="utf-8")
    return text
