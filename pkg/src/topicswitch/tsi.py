"""Topic-switching index: per-pair scores and per-call averages.

A pair's index is one minus the cosine similarity between the question
and answer embeddings; a call's index averages its pair indices.  Pairs
where either embedding has zero norm are skipped rather than scored,
and a call where everything was skipped produces no record at all.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Sequence

import numpy as np

from .encoder import as_array
from .errors import AllPairsSkipped, DimensionMismatch, ZeroNorm
from .transcript import QAPair, Sector

WEIGHTINGS = ("per-pair", "per-analyst")


@dataclass(frozen=True)
class PairScore:
    """Similarity and switching index for one question/answer pair."""

    pair_ordinal: int
    analyst_name: str
    similarity: float
    index: float


@dataclass(frozen=True)
class CallIndexRecord:
    """Per-call topic-switching index with call metadata and skip counts."""

    company_symbol: str
    call_date: date
    sector: Sector
    index: float
    n_pairs_scored: int
    n_pairs_skipped: int


def cosine_similarity(a, b) -> float:
    """Dot product over the product of norms, clamped into [-1, 1].

    Raises ZeroNorm when either vector has zero magnitude (the caller is
    expected to skip the pair) and DimensionMismatch on unequal lengths.
    """
    av, bv = as_array(a), as_array(b)
    if av.shape != bv.shape:
        raise DimensionMismatch(f"vector lengths differ: {av.shape[0]} vs {bv.shape[0]}")
    norm_a = float(np.linalg.norm(av))
    norm_b = float(np.linalg.norm(bv))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroNorm("cosine similarity undefined for a zero-norm vector")
    sim = float(av @ bv) / (norm_a * norm_b)
    return min(1.0, max(-1.0, sim))


def score_pair(q_vec, a_vec, pair: QAPair) -> PairScore | None:
    """Score one pair; None means the pair is skipped (zero-norm guard)."""
    try:
        sim = cosine_similarity(q_vec, a_vec)
    except ZeroNorm:
        return None
    return PairScore(
        pair_ordinal=pair.pair_ordinal,
        analyst_name=pair.analyst_name,
        similarity=sim,
        index=1.0 - sim,
    )


def score_call(
    pairs: Sequence[tuple[QAPair, object, object]],
    *,
    company_symbol: str,
    call_date: date,
    sector: Sector,
    weighting: str = "per-pair",
) -> CallIndexRecord:
    """Average pair indices into one call record.

    ``pairs`` holds (pair, question vector, answer vector) triples.  The
    default weighting averages over pairs exactly as the per-pair loop
    does; "per-analyst" first averages each analyst's own pairs, then
    averages those per-analyst means.

    Raises AllPairsSkipped when no pair survives the zero-norm guard.
    """
    if weighting not in WEIGHTINGS:
        raise ValueError(f"weighting must be one of {WEIGHTINGS}")
    scores: list[PairScore] = []
    skipped = 0
    for pair, q_vec, a_vec in pairs:
        score = score_pair(q_vec, a_vec, pair)
        if score is None:
            skipped += 1
        else:
            scores.append(score)
    if not scores:
        raise AllPairsSkipped(
            f"all {skipped} pair(s) of {company_symbol} {call_date} had zero-norm embeddings"
        )
    if weighting == "per-pair":
        index = float(np.mean([s.index for s in scores]))
    else:
        by_analyst: dict[str, list[float]] = {}
        for s in scores:
            by_analyst.setdefault(s.analyst_name, []).append(s.index)
        index = float(np.mean([np.mean(v) for v in by_analyst.values()]))
    return CallIndexRecord(
        company_symbol=company_symbol,
        call_date=call_date,
        sector=sector,
        index=index,
        n_pairs_scored=len(scores),
        n_pairs_skipped=skipped,
    )


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

CSV_FIELDS = ("symbol", "date", "sector", "index", "n_pairs_scored", "n_pairs_skipped")


def _record_row(r: CallIndexRecord) -> list[str]:
    return [
        r.company_symbol,
        r.call_date.isoformat(),
        r.sector.value,
        repr(r.index),
        str(r.n_pairs_scored),
        str(r.n_pairs_skipped),
    ]


def records_to_csv(records: Iterable[CallIndexRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in records:
        writer.writerow(_record_row(r))
    return buf.getvalue()


def records_from_csv(text: str) -> list[CallIndexRecord]:
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for row in reader:
        out.append(
            CallIndexRecord(
                company_symbol=row["symbol"],
                call_date=date.fromisoformat(row["date"]),
                sector=Sector(row["sector"]),
                index=float(row["index"]),
                n_pairs_scored=int(row["n_pairs_scored"]),
                n_pairs_skipped=int(row["n_pairs_skipped"]),
            )
        )
    return out


def records_to_jsonl(records: Iterable[CallIndexRecord]) -> str:
    lines = []
    for r in records:
        lines.append(
            json.dumps(
                {
                    "symbol": r.company_symbol,
                    "date": r.call_date.isoformat(),
                    "sector": r.sector.value,
                    "index": r.index,
                    "n_pairs_scored": r.n_pairs_scored,
                    "n_pairs_skipped": r.n_pairs_skipped,
                },
                sort_keys=True,
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")
