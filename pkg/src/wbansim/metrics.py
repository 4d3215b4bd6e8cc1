"""Run metrics computed from the simulation event log.

The log is a list of (time, kind, subject, detail) tuples. Kinds consumed
here: 'gen' (packet created), 'deliver' (accepted at the sink), 'drop'
(terminal loss with a cause), 'ctrl' (control frames, batched counts), and
'energy_total' (cumulative consumed joules, last row wins). Computing the
report from the log rather than from live counters keeps it replayable by an
independent reader.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class MetricsReport:
    """Per-run results. eed and hc are None when nothing was delivered."""

    protocol: str = ""
    generated: int = 0
    delivered: int = 0
    pdr: float = 0.0
    eed: float | None = None
    ro: float = 0.0
    ec: float = 0.0
    hc: float | None = None
    control_packets: int = 0
    drops: dict = field(default_factory=dict)
    per_class: dict = field(default_factory=dict)
    reward_trace: list = field(default_factory=list)
    converged_episode: int | None = None
    in_flight: int = 0
    residual_energy: float = 0.0
    samples: list = field(default_factory=list)


def compute_metrics(event_log) -> MetricsReport:
    """Replay the log into delivery, delay, overhead, energy, and hop stats."""
    rep = MetricsReport()
    delay_sum = 0.0
    hop_sum = 0
    cls_stats = {1: [0, 0, 0.0], 2: [0, 0, 0.0], 3: [0, 0, 0.0]}

    for time, kind, subject, detail in event_log:
        if kind == "gen":
            rep.generated += 1
            cls_stats[detail[0]][0] += 1
        elif kind == "deliver":
            t_gen, hops, cls = detail
            rep.delivered += 1
            delay_sum += time - t_gen
            hop_sum += hops
            cls_stats[cls][1] += 1
            cls_stats[cls][2] += time - t_gen
        elif kind == "drop":
            cause = detail[0]
            rep.drops[cause] = rep.drops.get(cause, 0) + 1
        elif kind == "ctrl":
            rep.control_packets += detail[0]
        elif kind == "energy_total":
            rep.ec = detail[0]

    if rep.generated > 0:
        rep.pdr = rep.delivered / rep.generated * 100.0
        rep.ro = rep.control_packets / rep.generated
    if rep.delivered > 0:
        rep.eed = delay_sum / rep.delivered
        rep.hc = hop_sum / rep.delivered

    for cls, (g, d, dsum) in cls_stats.items():
        rep.per_class[cls] = {
            "generated": g,
            "delivered": d,
            "pdr": d / g * 100.0 if g else 0.0,
            "eed": dsum / d if d else None,
        }
    return rep


def track_convergence(rewards, window: int = 20, rel_tol: float = 0.05):
    """First episode (1-based) after which every trailing `window`-episode
    stddev stays within rel_tol of the window mean's magnitude; None when the
    final window still violates. A series that never violates converged at 1.
    """
    n = len(rewards)
    if n < window:
        raise ValueError(f"need at least {window} episodes, got {n}")
    last_bad = 0
    for end in range(window, n + 1):
        chunk = rewards[end - window:end]
        mu = math.fsum(chunk) / window
        var = math.fsum((x - mu) ** 2 for x in chunk) / window
        if math.sqrt(var) > rel_tol * abs(mu):
            last_bad = end
    if last_bad == 0:
        return 1
    if last_bad == n:
        return None
    return last_bad + 1
