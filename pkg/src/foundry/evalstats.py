"""Statistical comparison of policy success rates.

Success rates get independent Beta(1,1)-prior posteriors. Pairs are declared
significantly different from the probability of superiority under those
posteriors, thresholded with a Bonferroni correction that controls the
family-wise error rate; a compact letter display summarizes the resulting
matrix (two policies share a letter iff they are not significantly
different). Multi-task aggregation truncates every task to the per-policy
minimum trial count so the aggregate estimates equally-weighted multi-task
performance.

The comparison is isolated behind :func:`pairwise_compare`, so a different
test (e.g. an anytime-valid procedure) can be substituted without touching
the rest of the module. The Bonferroni construction here is conservative and
does not claim anytime validity under optional stopping.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np
from scipy import integrate
from scipy import stats as sp_stats

DEFAULT_ALPHA_FWER = 0.05
DEFAULT_PRIOR = (1.0, 1.0)

SUMMARY_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)
DENSITY_POINTS = 64


class InsufficientDataError(ValueError):
    """Aggregation refused (some task has zero trials)."""


@dataclass(frozen=True)
class RolloutRecord:
    """One simulated or real evaluation episode."""

    policy: str
    task: str
    seed: int
    success: bool
    timestamp: datetime
    video_uri: str | None = None

    def to_json_line(self) -> str:
        doc = {
            "policy": self.policy,
            "task": self.task,
            "seed": self.seed,
            "success": self.success,
            "timestamp": _format_rfc3339(self.timestamp),
        }
        if self.video_uri is not None:
            doc["video_uri"] = self.video_uri
        return json.dumps(doc)

    @classmethod
    def from_json_line(cls, line: str) -> "RolloutRecord":
        doc = json.loads(line)
        return cls(
            policy=str(doc["policy"]),
            task=str(doc["task"]),
            seed=int(doc["seed"]),
            success=bool(doc["success"]),
            timestamp=_parse_rfc3339(str(doc["timestamp"])),
            video_uri=doc.get("video_uri"),
        )


def _format_rfc3339(ts: datetime) -> str:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _parse_rfc3339(text: str) -> datetime:
    ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


def read_records(data: str) -> list[RolloutRecord]:
    """Parse the JSON-lines interchange format."""
    records = []
    for lineno, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(RolloutRecord.from_json_line(line))
        except (KeyError, ValueError) as exc:
            raise ValueError(f"line {lineno}: malformed rollout record ({exc})") from exc
    return records


def dedup_latest(records: list[RolloutRecord]) -> list[RolloutRecord]:
    """One record per (policy, task, seed): the most recent; ingestion order breaks ties."""
    latest: dict[tuple[str, str, int], RolloutRecord] = {}
    for record in records:
        key = (record.policy, record.task, record.seed)
        held = latest.get(key)
        if held is None or record.timestamp >= held.timestamp:
            latest[key] = record
    return list(latest.values())


def balanced_counts(per_task: dict[str, list[RolloutRecord]]) -> dict[str, tuple[int, int]]:
    """Truncate each task to the minimum per-task trial count, keeping the most recent.

    Returns task -> (successes, trials) with every trials equal to the
    minimum. Raises :class:`InsufficientDataError` when any task has no
    rollouts (zeros would bias the aggregate, so aggregation is refused).
    """
    if not per_task:
        raise InsufficientDataError("no tasks to aggregate")
    for task, rollouts in per_task.items():
        if not rollouts:
            raise InsufficientDataError(f"task {task!r} has no rollouts")
    n_min = min(len(rollouts) for rollouts in per_task.values())
    out: dict[str, tuple[int, int]] = {}
    for task, rollouts in per_task.items():
        kept = sorted(rollouts, key=lambda r: r.timestamp)[-n_min:]
        out[task] = (sum(1 for r in kept if r.success), n_min)
    return out


@dataclass(frozen=True)
class Posterior:
    """Beta posterior over a success rate."""

    alpha: float
    beta: float
    successes: int
    trials: int

    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    def quantile(self, q: float) -> float:
        return float(sp_stats.beta.ppf(q, self.alpha, self.beta))

    def density(self, xs: np.ndarray) -> np.ndarray:
        return sp_stats.beta.pdf(xs, self.alpha, self.beta)

    def density_curve(self, n: int = DENSITY_POINTS) -> tuple[list[float], list[float]]:
        xs = np.linspace(0.0, 1.0, n)
        return xs.tolist(), self.density(xs).tolist()


def posterior(successes: int, trials: int,
              prior: tuple[float, float] = DEFAULT_PRIOR) -> Posterior:
    if not 0 <= successes <= trials:
        raise ValueError(f"successes {successes} must lie in [0, trials={trials}]")
    return Posterior(
        alpha=prior[0] + successes,
        beta=prior[1] + (trials - successes),
        successes=successes,
        trials=trials,
    )


def prob_greater(a: Posterior, b: Posterior) -> float:
    """P(p_a > p_b) under independent posteriors, by adaptive quadrature."""

    def integrand(x: float) -> float:
        return sp_stats.beta.pdf(x, a.alpha, a.beta) * sp_stats.beta.cdf(x, b.alpha, b.beta)

    hints = sorted({a.mean(), b.mean()})
    value, _err = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-6, limit=200, points=hints)
    return min(1.0, max(0.0, value))


@dataclass(frozen=True)
class SignificanceMatrix:
    policies: tuple[str, ...]
    significant: tuple[tuple[bool, ...], ...]
    alpha_fwer: float

    def pair(self, a: str, b: str) -> bool:
        i, j = self.policies.index(a), self.policies.index(b)
        return self.significant[i][j]


def pairwise_compare(results: dict[str, tuple[int, int]],
                     alpha_fwer: float = DEFAULT_ALPHA_FWER,
                     prior: tuple[float, float] = DEFAULT_PRIOR) -> SignificanceMatrix:
    """Pairwise two-sided superiority tests at a Bonferroni-corrected level."""
    policies = list(results)
    n = len(policies)
    if n < 2:
        raise ValueError("pairwise comparison needs at least 2 policies")
    for name, (successes, trials) in results.items():
        if trials < 1:
            raise ValueError(f"policy {name!r} has no trials")
        if not 0 <= successes <= trials:
            raise ValueError(f"policy {name!r} has invalid counts ({successes}/{trials})")
    posteriors = {name: posterior(s, t, prior) for name, (s, t) in results.items()}
    n_pairs = n * (n - 1) // 2
    alpha_pair = alpha_fwer / n_pairs
    matrix = [[False] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            p = prob_greater(posteriors[policies[i]], posteriors[policies[j]])
            significant = min(p, 1.0 - p) < alpha_pair / 2.0
            matrix[i][j] = matrix[j][i] = significant
    return SignificanceMatrix(
        policies=tuple(policies),
        significant=tuple(tuple(row) for row in matrix),
        alpha_fwer=alpha_fwer,
    )


def _letter(index: int) -> str:
    out = ""
    index += 1
    while index:
        index, rem = divmod(index - 1, 26)
        out = chr(ord("a") + rem) + out
    return out


def compute_cld(matrix: SignificanceMatrix) -> dict[str, set[str]]:
    """Compact letter display by insert-and-absorb.

    Start from one column holding every policy; for each significant pair
    split every column containing both, then drop columns that another
    column subsumes. Two policies share a letter iff some surviving column
    contains both.
    """
    policies = list(matrix.policies)
    columns: list[set[str]] = [set(policies)]
    pairs = sorted(
        (policies[i], policies[j])
        for i in range(len(policies))
        for j in range(i + 1, len(policies))
        if matrix.significant[i][j]
    )
    for a, b in pairs:
        for column in [c for c in columns if a in c and b in c]:
            columns.remove(column)
            for candidate in (column - {b}, column - {a}):
                if any(candidate <= other for other in columns):
                    continue
                columns = [other for other in columns if not other < candidate]
                columns.append(candidate)
    letters: dict[str, set[str]] = {p: set() for p in policies}
    for index, column in enumerate(columns):
        for p in column:
            letters[p].add(_letter(index))
    return letters


def letters_string(letters: set[str]) -> str:
    return "".join(sorted(letters, key=lambda s: (len(s), s)))


def _cell(successes: int, trials: int, prior: tuple[float, float]) -> dict:
    post = posterior(successes, trials, prior)
    xs, ys = post.density_curve()
    cell = {
        "successes": successes,
        "trials": trials,
        "mean": post.mean(),
        "density": {"x": xs, "y": ys},
    }
    for q in SUMMARY_QUANTILES:
        cell[f"q{int(q * 100):02d}"] = post.quantile(q)
    return cell


def _comparison(counts: dict[str, tuple[int, int]], alpha_fwer: float,
                prior: tuple[float, float]) -> dict | None:
    eligible = {p: c for p, c in counts.items() if c[1] >= 1}
    if len(eligible) == 1:
        only = next(iter(eligible))
        return {
            "policies": [only],
            "significant": [[False]],
            "alpha_fwer": alpha_fwer,
            "cld": {only: "a"},
        }
    if len(eligible) < 1:
        return None
    matrix = pairwise_compare(eligible, alpha_fwer, prior)
    cld = compute_cld(matrix)
    return {
        "policies": list(matrix.policies),
        "significant": [list(row) for row in matrix.significant],
        "alpha_fwer": alpha_fwer,
        "cld": {p: letters_string(s) for p, s in cld.items()},
    }


def campaign_summary(records: list[RolloutRecord],
                     tasks: list[str] | None = None,
                     policies: list[str] | None = None,
                     alpha_fwer: float = DEFAULT_ALPHA_FWER,
                     prior: tuple[float, float] = DEFAULT_PRIOR) -> dict:
    """Per-task and balanced-aggregate posteriors, significance, and letters.

    A pure function of the record set: recomputing after ingesting more
    records never mutates anything prior, which is what makes the
    stop-early / collect-more workflow safe to drive from these summaries.
    """
    records = dedup_latest(records)
    if tasks is None:
        tasks = sorted({r.task for r in records})
    if policies is None:
        policies = sorted({r.policy for r in records})

    by_policy_task: dict[str, dict[str, list[RolloutRecord]]] = {
        p: {t: [] for t in tasks} for p in policies
    }
    for record in records:
        if record.policy in by_policy_task and record.task in by_policy_task[record.policy]:
            by_policy_task[record.policy][record.task].append(record)

    per_task: dict[str, dict[str, dict]] = {}
    per_task_comparison: dict[str, dict | None] = {}
    for task in tasks:
        cells = {}
        counts = {}
        for policy in policies:
            rollouts = by_policy_task[policy][task]
            successes = sum(1 for r in rollouts if r.success)
            cells[policy] = _cell(successes, len(rollouts), prior)
            if rollouts:
                counts[policy] = (successes, len(rollouts))
        per_task[task] = cells
        per_task_comparison[task] = _comparison(counts, alpha_fwer, prior)

    aggregate: dict[str, dict | None] = {}
    aggregate_counts: dict[str, tuple[int, int]] = {}
    balanced: dict[str, dict[str, list[int]] | None] = {}
    for policy in policies:
        try:
            truncated = balanced_counts(by_policy_task[policy])
        except InsufficientDataError:
            aggregate[policy] = None
            balanced[policy] = None
            continue
        successes = sum(s for s, _ in truncated.values())
        trials = sum(t for _, t in truncated.values())
        aggregate[policy] = _cell(successes, trials, prior)
        aggregate_counts[policy] = (successes, trials)
        balanced[policy] = {t: [s, n] for t, (s, n) in truncated.items()}

    return {
        "policies": policies,
        "tasks": tasks,
        "per_task": per_task,
        "per_task_comparison": per_task_comparison,
        "aggregate": aggregate,
        "aggregate_balanced": balanced,
        "aggregate_comparison": _comparison(aggregate_counts, alpha_fwer, prior),
        "record_count": len(records),
    }
