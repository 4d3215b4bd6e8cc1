"""Result records, manifests, and the CSV/JSON/plot-data emitters.

One RunRecord per simulation run. The CSV schema is fixed; absent values
(no delivered packets, or a metric that does not apply to the protocol)
serialize as empty fields and read back as None, so a write/read cycle is
lossless. Plot-data files hold one aggregated series per (scenario, metric,
protocol): rows of parameter value, mean, standard deviation across seeds.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import SimConfig, config_from_dict, config_to_dict

CSV_HEADER = ("protocol,scenario,param_name,param_value,seed,"
              "pdr_pct,eed_s,ro,ec_j,hc,converged_episode")

# Metrics plotted against the swept parameter, per scenario.
SERIES_METRICS = {
    "density": ("pdr_pct", "eed_s", "ro", "ec_j", "hc"),
    "rate": ("pdr_pct", "eed_s", "ro", "ec_j", "hc"),
}


@dataclass
class RunRecord:
    protocol: str
    scenario: str
    param_name: str
    param_value: float
    seed: int
    pdr_pct: float
    eed_s: float | None
    ro: float
    ec_j: float
    hc: float | None
    converged_episode: int | None


def make_record(report, scenario: str, param_name: str, param_value,
                seed: int) -> RunRecord:
    return RunRecord(protocol=report.protocol, scenario=scenario,
                     param_name=param_name, param_value=param_value,
                     seed=seed, pdr_pct=report.pdr, eed_s=report.eed,
                     ro=report.ro, ec_j=report.ec, hc=report.hc,
                     converged_episode=report.converged_episode)


def _num(value) -> str:
    if value is None:
        return ""
    return repr(value)


def _conv(rec: RunRecord) -> str:
    if rec.converged_episode is not None:
        return str(rec.converged_episode)
    return "not_converged" if rec.protocol == "qqmr" else ""


def record_to_row(rec: RunRecord) -> str:
    return ",".join([rec.protocol, rec.scenario, rec.param_name,
                     _num(rec.param_value), str(rec.seed), _num(rec.pdr_pct),
                     _num(rec.eed_s), _num(rec.ro), _num(rec.ec_j),
                     _num(rec.hc), _conv(rec)])


def write_csv(records, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for rec in records:
            fh.write(record_to_row(rec) + "\n")
    return path


def _parse_number(text: str):
    if text == "":
        return None
    as_float = float(text)
    return as_float


def read_csv(path):
    """Inverse of write_csv; returns RunRecord objects."""
    records = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header: {header!r}")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            (protocol, scenario, param_name, param_value, seed, pdr, eed, ro,
             ec, hc, conv) = line.split(",")
            if conv in ("", "not_converged"):
                conv_val = None
            else:
                conv_val = int(conv)
            records.append(RunRecord(
                protocol=protocol, scenario=scenario, param_name=param_name,
                param_value=_parse_number(param_value), seed=int(seed),
                pdr_pct=_parse_number(pdr), eed_s=_parse_number(eed),
                ro=_parse_number(ro), ec_j=_parse_number(ec),
                hc=_parse_number(hc), converged_episode=conv_val))
    return records


def build_manifest(cfg: SimConfig, seeds, scenario: str, protocols,
                   outputs) -> dict:
    return {
        "tool": "wbansim",
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(),
        "scenario": scenario,
        "protocols": list(protocols),
        "seeds": list(seeds),
        "config": config_to_dict(cfg),
        "outputs": [str(p) for p in outputs],
    }


def write_json(records, manifest: dict, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"manifest": manifest,
               "records": [asdict(rec) for rec in records]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return path


def load_manifest_config(path) -> tuple[SimConfig, list]:
    """Read back a manifest (or a results JSON embedding one); returns the
    frozen config and the seed list it ran with."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    manifest = data.get("manifest", data)
    if "config" not in manifest:
        raise ValueError(f"{path} does not look like a run manifest")
    return config_from_dict(manifest["config"]), list(manifest["seeds"])


def aggregate(records, protocol: str, metric: str):
    """param_value -> (mean, stddev) over seeds, absent values skipped."""
    buckets = {}
    for rec in records:
        if rec.protocol != protocol:
            continue
        value = getattr(rec, metric)
        if value is None:
            continue
        buckets.setdefault(rec.param_value, []).append(value)
    out = {}
    for pv in sorted(buckets):
        vals = buckets[pv]
        mu = math.fsum(vals) / len(vals)
        var = math.fsum((v - mu) ** 2 for v in vals) / len(vals)
        out[pv] = (mu, math.sqrt(var))
    return out


def write_plotdata(records, out_dir):
    """One series file per (scenario, metric, protocol); returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    scenarios = sorted({rec.scenario for rec in records})
    protocols = sorted({rec.protocol for rec in records})
    for scenario in scenarios:
        subset = [rec for rec in records if rec.scenario == scenario]
        if not subset:
            continue
        param_name = subset[0].param_name
        for metric in SERIES_METRICS.get(scenario, SERIES_METRICS["density"]):
            for protocol in protocols:
                series = aggregate(subset, protocol, metric)
                if not series:
                    continue
                path = out_dir / f"{scenario}_{metric}_{protocol}.dat"
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(f"# {param_name} mean stddev\n")
                    for pv, (mu, sd) in series.items():
                        fh.write(f"{_num(pv)} {mu!r} {sd!r}\n")
                paths.append(path)
    return paths
