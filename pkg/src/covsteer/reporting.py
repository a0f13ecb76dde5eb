"""Episode logging and plot-ready report generation.

The episode log is a CSV with the fixed header
``episode,<knob names...>,<event names...>,reward``. Reals are rendered
with repr() so the file round-trips exactly and identical runs produce
identical bytes. A run directory holds ``episodes.csv``, ``summary.json``
(totals, histograms, final agent snapshot, resolved config), and
``histograms.csv`` (per-knob value frequencies).

Reports aggregate several runs of the same design side by side: per-event
totals, event ratios of the first run over each other run, and per-knob
histograms. Output is data, not images.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .actionspace import CONTINUOUS, ActionSpace
from .env import EpisodeRecord
from .errors import ReportError

CONTINUOUS_BINS = 10


def format_real(x: float) -> str:
    """Shortest decimal that parses back to exactly the same float."""
    return repr(float(x))


class EpisodeCsvWriter:
    """Streams episode records to disk; each row is flushed as written."""

    def __init__(self, path, knob_names, event_names):
        self.path = Path(path)
        self.knob_names = tuple(knob_names)
        self.event_names = tuple(event_names)
        self._fh = open(self.path, "w", encoding="utf-8", newline="")
        header = ["episode", *self.knob_names, *self.event_names, "reward"]
        self._fh.write(",".join(header) + "\n")
        self._fh.flush()

    def write(self, record: EpisodeRecord) -> None:
        row = [str(record.episode)]
        row.extend(format_real(v) for v in record.action.values)
        row.extend(str(int(c)) for c in record.counts)
        row.append(format_real(record.reward))
        self._fh.write(",".join(row) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


@dataclass(frozen=True)
class EpisodeLog:
    """Parsed episode log plus the knob/event split of its columns."""

    path: str
    knob_names: tuple[str, ...]
    event_names: tuple[str, ...]
    episodes: tuple[int, ...]
    knob_values: tuple[tuple[float, ...], ...]  # one tuple per knob column
    counts: tuple[tuple[int, ...], ...]  # one tuple per event column
    rewards: tuple[float, ...]

    @property
    def event_totals(self) -> dict[str, int]:
        return {n: sum(col) for n, col in zip(self.event_names, self.counts)}

    @property
    def total_reward(self) -> float:
        return sum(self.rewards)


def _split_columns(middle: list[str], event_names=None) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Split the columns between episode and reward into knobs and events."""
    from .config import DUT_EVENT_NAMES

    candidates = [tuple(event_names)] if event_names else list(DUT_EVENT_NAMES.values())
    for events in candidates:
        n = len(events)
        if n and len(middle) > n and tuple(middle[-n:]) == tuple(events):
            return tuple(middle[:-n]), tuple(events)
    raise ReportError(
        "cannot split log columns into knobs and events; "
        "pass the run directory so summary.json is available"
    )


def read_episode_log(path) -> EpisodeLog:
    """Load episodes.csv; accepts the csv path or its run directory."""
    p = Path(path)
    if p.is_dir():
        p = p / "episodes.csv"
    if not p.exists():
        raise ReportError(f"episode log not found: {p}")
    event_names = None
    sidecar = p.parent / "summary.json"
    if sidecar.exists():
        try:
            meta = json.loads(sidecar.read_text(encoding="utf-8"))
            event_names = meta.get("event_names")
        except (OSError, json.JSONDecodeError):
            event_names = None
    with open(p, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ReportError(f"episode log is empty: {p}")
    header = lines[0].split(",")
    if header[0] != "episode" or header[-1] != "reward" or len(header) < 3:
        raise ReportError(f"unrecognized episode log header in {p}")
    knob_names, ev_names = _split_columns(header[1:-1], event_names)
    n_knobs, n_events = len(knob_names), len(ev_names)
    episodes, rewards = [], []
    knob_cols = [[] for _ in range(n_knobs)]
    count_cols = [[] for _ in range(n_events)]
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != len(header):
            raise ReportError(f"malformed row in {p}: {ln!r}")
        episodes.append(int(cells[0]))
        for i in range(n_knobs):
            knob_cols[i].append(float(cells[1 + i]))
        for i in range(n_events):
            count_cols[i].append(int(cells[1 + n_knobs + i]))
        rewards.append(float(cells[-1]))
    return EpisodeLog(
        path=str(p),
        knob_names=knob_names,
        event_names=ev_names,
        episodes=tuple(episodes),
        knob_values=tuple(tuple(col) for col in knob_cols),
        counts=tuple(tuple(col) for col in count_cols),
        rewards=tuple(rewards),
    )


def knob_histograms(space: ActionSpace, actions) -> dict:
    """Value frequencies per knob: exact values for discrete, 10 bins for continuous."""
    hists = {}
    for k, knob in enumerate(space.knobs):
        values = [a.values[k] for a in actions]
        if knob.kind == CONTINUOUS:
            width = (knob.hi - knob.lo) / CONTINUOUS_BINS
            bins = []
            for b in range(CONTINUOUS_BINS):
                lo = knob.lo + b * width
                hi = knob.hi if b == CONTINUOUS_BINS - 1 else lo + width
                if b == CONTINUOUS_BINS - 1:
                    n = sum(1 for v in values if lo <= v <= hi)
                else:
                    n = sum(1 for v in values if lo <= v < hi)
                bins.append({"lo": lo, "hi": hi, "count": n})
            hists[knob.name] = {"kind": knob.kind, "bins": bins}
        else:
            counts = {v: 0 for v in knob.values}
            for v in values:
                counts[v] += 1
            hists[knob.name] = {
                "kind": knob.kind,
                "bins": [{"lo": v, "hi": v, "count": c} for v, c in counts.items()],
            }
    return hists


def write_histograms_csv(path, hists: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("knob,lo,hi,count\n")
        for name, h in hists.items():
            for b in h["bins"]:
                fh.write(
                    f"{name},{format_real(b['lo'])},{format_real(b['hi'])},{b['count']}\n"
                )


def write_summary(path, *, config_dict, defaulted, knob_names, event_names,
                  cumulative, total_reward, hists, agent_snapshot) -> dict:
    summary = {
        "config": config_dict,
        "applied_defaults": list(defaulted),
        "knob_names": list(knob_names),
        "event_names": list(event_names),
        "episodes": cumulative.episodes,
        "event_totals": {n: t for n, t in zip(event_names, cumulative.totals)},
        "total_reward": total_reward,
        "knob_histograms": hists,
        "agent_snapshot": agent_snapshot,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def build_report(paths) -> dict:
    """Aggregate several logs of the same design into one comparison table.

    Ratios divide the first run's event totals by each later run's, so
    ``report <steered> <baseline>`` reads as the improvement factor.
    """
    if not paths:
        raise ReportError("report needs at least one episode log")
    logs = [read_episode_log(p) for p in paths]
    first = logs[0]
    for log in logs[1:]:
        if log.knob_names != first.knob_names or log.event_names != first.event_names:
            raise ReportError(
                f"episode logs have different schemas: {first.path} vs {log.path}"
            )
    runs = []
    for log in logs:
        hist = {}
        for name, col in zip(log.knob_names, log.knob_values):
            values: dict[str, int] = {}
            for v in col:
                key = format_real(v)
                values[key] = values.get(key, 0) + 1
            hist[name] = values
        runs.append(
            {
                "path": log.path,
                "episodes": len(log.episodes),
                "event_totals": log.event_totals,
                "total_reward": log.total_reward,
                "knob_value_counts": hist,
            }
        )
    ratios = []
    for log in logs[1:]:
        entry = {}
        for name in first.event_names:
            num = first.event_totals[name]
            den = log.event_totals[name]
            if den == 0:
                entry[name] = None if num == 0 else "inf"
            else:
                entry[name] = num / den
        ratios.append({"baseline": log.path, "ratio_first_over_this": entry})
    return {
        "knob_names": list(first.knob_names),
        "event_names": list(first.event_names),
        "runs": runs,
        "ratios": ratios,
    }


def render_report_text(report: dict) -> str:
    """Plain-text table of event totals per run plus ratio rows."""
    events = report["event_names"]
    runs = report["runs"]
    name_w = max([len(e) for e in events] + [len("total_reward"), 5])
    col_w = 14
    lines = []
    header = "event".ljust(name_w) + "".join(
        f"run{j}".rjust(col_w) for j in range(len(runs))
    )
    lines.append(header)
    for j, run in enumerate(runs):
        lines.append(f"  run{j}: {run['path']} ({run['episodes']} episodes)")
    lines.append("-" * len(header))
    for ev in events:
        row = ev.ljust(name_w)
        for run in runs:
            row += str(run["event_totals"][ev]).rjust(col_w)
        lines.append(row)
    row = "total_reward".ljust(name_w)
    for run in runs:
        row += format_real(run["total_reward"]).rjust(col_w)
    lines.append(row)
    for j, ratio in enumerate(report["ratios"], start=1):
        lines.append("")
        lines.append(f"run0 / run{j} event ratios:")
        for ev in events:
            value = ratio["ratio_first_over_this"][ev]
            if value is None:
                shown = "n/a"
            elif value == "inf":
                shown = "inf"
            else:
                shown = f"{value:.3f}"
            lines.append(f"  {ev.ljust(name_w)} {shown}")
    return "\n".join(lines) + "\n"
