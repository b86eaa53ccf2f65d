"""Duration-budgeted subset selection over classifier rankings.

Three strategies:

- ensemble: the multi-list procedure. Rankings U1, U2, U3 are consulted
  through growing top-L prefixes (L starts at l0 and grows by l0 per pass);
  an utterance is admitted when it sits in all three current prefixes, in U1
  order. The duration budget is checked only at the top of the while loop,
  so the result may overshoot by at most one full pass (a --tight-budget
  mode checks per admission instead). If a full pass at L >= every list
  length admits nothing and the budget is unmet, the pool is exhausted.
- single: greedy prefix of one ranking until the budget is met.
- random: seeded uniform shuffle, then greedy prefix.

Score files are JSONL {"id", "score"}; selections are JSONL rows
{"rank", "id", "duration_sec", "cumulative_sec"} plus a trailing
{"summary": ...} record.
"""

import json
import math
from dataclasses import dataclass, field

from .errors import DataError, ManifestError, UsageError
from .numcore import MASK64, SplitMix64


class ScoredList:
    """Ranking of (id, score) pairs: score descending, ties by id ascending."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        self.entries = list(entries)
        seen = set()
        for uid, _ in self.entries:
            if uid in seen:
                raise DataError(f"duplicate id {uid!r} in ranking")
            seen.add(uid)

    def ids(self):
        return [uid for uid, _ in self.entries]

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        if not isinstance(other, ScoredList):
            return NotImplemented
        return self.entries == other.entries


def rank_pool(scores, durations):
    """Build a ScoredList from id->score, validating durations exist."""
    for uid, score in scores.items():
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise DataError(f"score for id {uid!r} is not a number")
        if math.isnan(score):
            raise DataError(f"NaN score for id {uid!r}")
        if math.isinf(score):
            raise DataError(f"non-finite score for id {uid!r}")
        if uid not in durations:
            raise DataError(f"scored id {uid!r} has no duration in the pool")
    entries = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return ScoredList(entries)


@dataclass
class SelectionConfig:
    k_hours: float
    l0: int = 1000
    strategy: str = "ensemble"
    seed: int = 0
    tight_budget: bool = False

    def validate(self):
        if not (
            isinstance(self.k_hours, (int, float))
            and math.isfinite(self.k_hours)
            and self.k_hours > 0
        ):
            raise UsageError(f"k_hours must be positive, got {self.k_hours!r}")
        if not (isinstance(self.l0, int) and self.l0 >= 1):
            raise UsageError(f"l0 must be an integer >= 1, got {self.l0!r}")
        if self.strategy not in ("ensemble", "single", "random"):
            raise UsageError(f"unknown strategy {self.strategy!r}")


@dataclass
class SelectionResult:
    selected: list
    total_sec: float
    exhausted: bool
    passes: int = 0


def _require_durations(ids, durations):
    for uid in ids:
        if uid not in durations:
            raise DataError(f"id {uid!r} has no duration in the pool")


def select_ensemble(u1, u2, u3, durations, config):
    """Multi-list selection; see the module docstring for the semantics.

    Ids absent from a list are simply never members of its prefixes. The
    admitted order is U1-prefix order of first admission.
    """
    config.validate()
    ids1 = u1.ids()
    ids2 = u2.ids()
    ids3 = u3.ids()
    _require_durations(ids1, durations)
    budget = config.k_hours * 3600.0
    max_len = max(len(ids1), len(ids2), len(ids3))
    selected = []
    chosen = set()
    total = 0.0
    limit = config.l0
    passes = 0
    exhausted = False
    while total < budget:
        passes += 1
        top2 = set(ids2[:limit])
        top3 = set(ids3[:limit])
        added = 0
        cut_short = False
        for uid in ids1[:limit]:
            if uid not in chosen and uid in top2 and uid in top3:
                selected.append(uid)
                chosen.add(uid)
                total += durations[uid]
                added += 1
                if config.tight_budget and total >= budget:
                    cut_short = True
                    break
        if cut_short:
            break
        if added == 0 and limit >= max_len and total < budget:
            exhausted = True
            break
        limit += config.l0
    return SelectionResult(selected, total, exhausted, passes)


def select_single(u, durations, config):
    """Greedy descending-score prefix until the budget is met."""
    config.validate()
    ids = u.ids()
    _require_durations(ids, durations)
    budget = config.k_hours * 3600.0
    selected = []
    total = 0.0
    for uid in ids:
        if total >= budget:
            break
        selected.append(uid)
        total += durations[uid]
    return SelectionResult(selected, total, exhausted=total < budget, passes=0)


def select_random(pool_ids, durations, config):
    """Seeded uniform shuffle of the pool, then greedy prefix to the budget."""
    config.validate()
    ids = list(pool_ids)
    _require_durations(ids, durations)
    rng = SplitMix64(config.seed & MASK64)
    rng.shuffle(ids)
    budget = config.k_hours * 3600.0
    selected = []
    total = 0.0
    for uid in ids:
        if total >= budget:
            break
        selected.append(uid)
        total += durations[uid]
    return SelectionResult(selected, total, exhausted=total < budget, passes=0)


def read_scores(path):
    """Load a JSONL scores file into an id -> score dict."""
    scores = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                raise ManifestError(f"line {line_no}: blank line")
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ManifestError(
                    f"line {line_no}: malformed JSON ({exc.msg})"
                ) from None
            if not isinstance(obj, dict) or "id" not in obj or "score" not in obj:
                raise ManifestError(f"line {line_no}: need keys 'id' and 'score'")
            uid = obj["id"]
            if not isinstance(uid, str) or not uid:
                raise ManifestError(f"line {line_no}: id must be a non-empty string")
            if uid in scores:
                raise ManifestError(f"line {line_no}: duplicate id {uid!r}")
            score = obj["score"]
            if isinstance(score, bool) or not isinstance(score, (int, float)):
                raise ManifestError(f"line {line_no}: score must be a number")
            scores[uid] = float(score)
    return scores


def write_scores(path, ids, scores):
    """Write scores as JSONL in the given id order."""
    with open(path, "w", encoding="utf-8") as fh:
        for uid, score in zip(ids, scores):
            fh.write(json.dumps({"id": uid, "score": float(score)}))
            fh.write("\n")


def write_selection(path, result, durations):
    """Write ranked selection rows plus the trailing summary record."""
    with open(path, "w", encoding="utf-8") as fh:
        cumulative = 0.0
        for rank, uid in enumerate(result.selected, start=1):
            cumulative += durations[uid]
            fh.write(
                json.dumps(
                    {
                        "rank": rank,
                        "id": uid,
                        "duration_sec": durations[uid],
                        "cumulative_sec": cumulative,
                    }
                )
            )
            fh.write("\n")
        fh.write(
            json.dumps(
                {
                    "summary": {
                        "count": len(result.selected),
                        "total_sec": result.total_sec,
                        "exhausted": result.exhausted,
                        "passes": result.passes,
                    }
                }
            )
        )
        fh.write("\n")


def read_selection(path):
    """Load a selection file back as (rows, summary)."""
    rows = []
    summary = None
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            raw = raw.strip()
            if not raw:
                continue
            obj = json.loads(raw)
            if "summary" in obj:
                summary = obj["summary"]
            else:
                rows.append(obj)
    return rows, summary
