"""Statistics and reporting: success rates with binomial SEM, per-predicate
accuracy, compounding-error curves, and leaderboards.

Every task is treated as a Bernoulli trial, so the standard error of a rate
p over n tasks is sqrt(p(1-p)/n); averages of independent estimates carry
SEM(mean) = (1/m) * sqrt(sum SEM_i^2). Displayed values are rounded
half-even to two decimals; serialized reports keep full precision.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .protocol.episode import EpisodeRecord


def _binomial_sem(rate: float, n: int) -> float:
    if n == 0:
        return 0.0
    return math.sqrt(rate * (1.0 - rate) / n)


def fmt2(value: float) -> str:
    """Two-decimal display using round-half-even."""
    return f"{round(value, 2):.2f}"


@dataclass(frozen=True)
class PredicateRow:
    predicate: str
    correct: int
    total: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    @property
    def sem(self) -> float:
        return _binomial_sem(self.accuracy, self.total)


@dataclass(frozen=True)
class SplitReport:
    label: str
    n: int
    successes: int
    rate: float
    sem: float
    predicates: tuple[PredicateRow, ...] = ()
    questions: int = 0
    replans: int = 0
    steps: int = 0

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "n": self.n,
            "successes": self.successes,
            "rate": self.rate,
            "sem": self.sem,
            "questions": self.questions,
            "replans": self.replans,
            "steps": self.steps,
            "predicates": {
                row.predicate: {
                    "correct": row.correct,
                    "total": row.total,
                    "accuracy": row.accuracy,
                    "sem": row.sem,
                }
                for row in self.predicates
            },
        }


@dataclass(frozen=True)
class CombinedReport:
    members: tuple[tuple[float, float], ...]  # (rate, sem) per member
    mean: float
    sem: float

    def to_dict(self) -> dict:
        return {
            "members": [{"rate": r, "sem": s} for r, s in self.members],
            "mean": self.mean,
            "sem": self.sem,
        }


@dataclass(frozen=True)
class CompoundingBucket:
    required_predictions: int
    tasks: int
    solved: int

    @property
    def fraction(self) -> float:
        return self.solved / self.tasks if self.tasks else 0.0

    @property
    def sem(self) -> float:
        return _binomial_sem(self.fraction, self.tasks)


def success_rate(records: Iterable[EpisodeRecord]) -> tuple[float, float]:
    """Fraction of successful episodes with its binomial standard error."""
    records = list(records)
    n = len(records)
    successes = sum(1 for r in records if r.success)
    rate = successes / n if n else 0.0
    return rate, _binomial_sem(rate, n)


def split_report(label: str, records: Sequence[EpisodeRecord]) -> SplitReport:
    rate, sem = success_rate(records)
    return SplitReport(
        label=label,
        n=len(records),
        successes=sum(1 for r in records if r.success),
        rate=rate,
        sem=sem,
        predicates=predicate_accuracy(records),
        questions=sum(r.questions_asked for r in records),
        replans=sum(r.replans for r in records),
        steps=sum(r.steps for r in records),
    )


def combined_average(reports: Sequence[SplitReport | CombinedReport]) -> CombinedReport:
    """Average of independent estimates with propagated standard error."""
    if not reports:
        raise ValueError("combined_average needs at least one member")
    members = tuple(
        (r.mean, r.sem) if isinstance(r, CombinedReport) else (r.rate, r.sem) for r in reports
    )
    m = len(members)
    mean = sum(rate for rate, _ in members) / m
    sem = math.sqrt(sum(s * s for _, s in members)) / m
    return CombinedReport(members, mean, sem)


def predicate_accuracy(records: Iterable[EpisodeRecord]) -> tuple[PredicateRow, ...]:
    """Correct/total per predicate name over all logged questions."""
    correct: dict[str, int] = defaultdict(int)
    total: dict[str, int] = defaultdict(int)
    for record in records:
        for event in record.question_events():
            predicate = event["atom"][0]
            total[predicate] += 1
            if (event["verdict"] == "yes") == bool(event["truth"]):
                correct[predicate] += 1
    return tuple(
        PredicateRow(predicate, correct[predicate], total[predicate])
        for predicate in sorted(total)
    )


def compounding_curve(records: Iterable[EpisodeRecord]) -> list[CompoundingBucket]:
    """Group tasks by their oracle-path question count; fraction solved per k.

    Records without a required-prediction annotation are skipped.
    """
    tasks: dict[int, int] = defaultdict(int)
    solved: dict[int, int] = defaultdict(int)
    for record in records:
        k = record.required_predictions
        if k is None:
            continue
        tasks[k] += 1
        if record.success:
            solved[k] += 1
    return [CompoundingBucket(k, tasks[k], solved[k]) for k in sorted(tasks)]


# --- Leaderboard ---------------------------------------------------------------


@dataclass(frozen=True)
class LeaderboardRow:
    agent: str
    setting: str
    cot: bool
    domain_scores: tuple[tuple[str, CombinedReport], ...]
    combined: CombinedReport

    @property
    def key(self) -> tuple:
        # Descending mean, then smaller error, then name for total order.
        return (-self.combined.mean, self.combined.sem, self.agent, self.setting, self.cot)


def leaderboard(
    cells: Mapping[tuple[str, str, bool], Mapping[str, Sequence[SplitReport]]]
) -> list[LeaderboardRow]:
    """Rank (agent, setting, cot) triplets by combined mean success rate.

    ``cells`` maps each triplet to its per-domain split reports; the combined
    score averages the per-domain averages.
    """
    rows = []
    for (agent, setting, cot), domains in cells.items():
        domain_scores = tuple(
            (domain, combined_average(list(reports)))
            for domain, reports in sorted(domains.items())
            if reports
        )
        combined = combined_average([score for _, score in domain_scores])
        rows.append(LeaderboardRow(agent, setting, cot, domain_scores, combined))
    return sorted(rows, key=lambda r: r.key)


def leaderboard_text(rows: Sequence[LeaderboardRow]) -> str:
    domains = sorted({name for row in rows for name, _ in row.domain_scores})
    header = ["rank", "agent", "setting", "cot"] + domains + ["combined"]
    lines = ["\t".join(header)]
    for rank, row in enumerate(rows, start=1):
        scores = dict(row.domain_scores)
        cells = [str(rank), row.agent, row.setting, "yes" if row.cot else "no"]
        for domain in domains:
            score = scores.get(domain)
            cells.append(f"{fmt2(score.mean)} ({fmt2(score.sem)})" if score else "-")
        cells.append(f"{fmt2(row.combined.mean)} ({fmt2(row.combined.sem)})")
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def leaderboard_csv(rows: Sequence[LeaderboardRow]) -> str:
    domains = sorted({name for row in rows for name, _ in row.domain_scores})
    header = ["rank", "agent", "setting", "cot"]
    for domain in domains:
        header += [f"{domain}_rate", f"{domain}_sem"]
    header += ["combined_rate", "combined_sem"]
    lines = [",".join(header)]
    for rank, row in enumerate(rows, start=1):
        scores = dict(row.domain_scores)
        cells = [str(rank), row.agent, row.setting, "yes" if row.cot else "no"]
        for domain in domains:
            score = scores.get(domain)
            cells += [f"{score.mean:.6f}", f"{score.sem:.6f}"] if score else ["", ""]
        cells += [f"{row.combined.mean:.6f}", f"{row.combined.sem:.6f}"]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def leaderboard_json(rows: Sequence[LeaderboardRow]) -> str:
    payload = [
        {
            "rank": rank,
            "agent": row.agent,
            "setting": row.setting,
            "cot": row.cot,
            "domains": {name: score.to_dict() for name, score in row.domain_scores},
            "combined": row.combined.to_dict(),
        }
        for rank, row in enumerate(rows, start=1)
    ]
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def cot_comparison(
    cells: Mapping[tuple[str, str, bool], Mapping[str, Sequence[SplitReport]]]
) -> list[dict]:
    """Per (agent, setting, domain): success-rate difference with and without
    chain-of-thought prompting, its propagated error, and the |mean|/error
    ratio (a ratio below 3 reads as no significant difference)."""
    rows = []
    pairs = {}
    for (agent, setting, cot), domains in cells.items():
        pairs.setdefault((agent, setting), {})[cot] = domains
    for (agent, setting), variants in sorted(pairs.items()):
        if True not in variants or False not in variants:
            continue
        domains = sorted(set(variants[True]) & set(variants[False]))
        for domain in domains:
            with_cot = combined_average(list(variants[True][domain]))
            without = combined_average(list(variants[False][domain]))
            difference = with_cot.mean - without.mean
            error = math.sqrt(with_cot.sem**2 + without.sem**2)
            ratio = abs(difference) / error if error > 0 else math.inf
            rows.append(
                {
                    "agent": agent,
                    "setting": setting,
                    "domain": domain,
                    "difference": difference,
                    "error": error,
                    "ratio": ratio,
                }
            )
    return rows


def cot_comparison_csv(rows: Sequence[dict]) -> str:
    lines = ["agent,setting,domain,difference,error,ratio"]
    for row in rows:
        ratio = "inf" if math.isinf(row["ratio"]) else f"{row['ratio']:.3f}"
        lines.append(
            f"{row['agent']},{row['setting']},{row['domain']},"
            f"{row['difference']:.6f},{row['error']:.6f},{ratio}"
        )
    return "\n".join(lines) + "\n"


def compounding_plot_data(buckets: Sequence[CompoundingBucket]) -> str:
    """CSV of (k, fraction, sem, tasks) pairs for external plotting."""
    lines = ["required_predictions,fraction,sem,tasks"]
    for bucket in buckets:
        lines.append(
            f"{bucket.required_predictions},{bucket.fraction:.6f},{bucket.sem:.6f},{bucket.tasks}"
        )
    return "\n".join(lines) + "\n"


def compounding_svg(buckets: Sequence[CompoundingBucket], width: int = 480, height: int = 320) -> str:
    """Minimal line chart of solved fraction against required predictions."""
    pad = 40
    if not buckets:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"/>'
    ks = [b.required_predictions for b in buckets]
    k_lo, k_hi = min(ks), max(ks)
    span = max(k_hi - k_lo, 1)

    def x(k: int) -> float:
        return pad + (k - k_lo) / span * (width - 2 * pad)

    def y(fraction: float) -> float:
        return height - pad - fraction * (height - 2 * pad)

    points = " ".join(f"{x(b.required_predictions):.1f},{y(b.fraction):.1f}" for b in buckets)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<polyline fill="none" stroke="#d62728" stroke-width="2" points="{points}"/>',
    ]
    for bucket in buckets:
        parts.append(
            f'<circle cx="{x(bucket.required_predictions):.1f}" cy="{y(bucket.fraction):.1f}" '
            f'r="3" fill="#d62728"/>'
        )
        parts.append(
            f'<text x="{x(bucket.required_predictions):.1f}" y="{height - pad + 16}" '
            f'font-size="10" text-anchor="middle">{bucket.required_predictions}</text>'
        )
    for tick in (0.0, 0.5, 1.0):
        parts.append(
            f'<text x="{pad - 6}" y="{y(tick) + 3:.1f}" font-size="10" text-anchor="end">{tick:.1f}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
