"""Seeded synthetic corpus generator with a planted index/return relation.

Writes a transcript per synthetic company plus a matching price file.
Each call's answers either reuse most of the question's vocabulary or
wander off into fresh words, which drives the realized switching index
into a low or a high group.  Returns are then constructed directly from
the realized index as ``slope * index + noise``, so a correct pipeline
must recover the planted slope and, with the suggested threshold, a
near-separable classification problem.

The module is import-only machinery for tests and demos; run
``python -m topicswitch.synth OUT`` to materialize a corpus by hand.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .encoder import BuiltinBackend, EncoderConfig
from .transcript import Sector, parse_transcript, segment_and_pair, TranscriptFormat
from .tsi import score_call

_SYLLABLES = (
    "ba", "be", "bo", "da", "de", "di", "fa", "fo", "ga", "go", "ka", "ke",
    "ki", "la", "le", "lo", "ma", "me", "mi", "na", "ne", "no", "pa", "po",
    "ra", "re", "ri", "sa", "se", "so", "ta", "te", "ti", "va", "vo", "za",
)

_FIRST_NAMES = (
    "Avery", "Blake", "Casey", "Devon", "Ellis", "Finley", "Harper",
    "Jordan", "Kendall", "Logan", "Morgan", "Parker", "Quinn", "Riley",
    "Sawyer", "Taylor",
)

_ANALYST_SURNAMES = (
    "Calder", "Draper", "Fenwick", "Garrett", "Holloway", "Irving",
    "Keating", "Lawson", "Mercer", "Norwood", "Prescott", "Radcliffe",
)

_MANAGER_SURNAMES = (
    "Ashford", "Blackwell", "Carrington", "Davenport", "Ellsworth",
    "Fairbanks", "Granger", "Hawthorne", "Ingram", "Jennings",
)

SECTORS = [s for s in Sector if s is not Sector.UNKNOWN]


@dataclass(frozen=True)
class GeneratedCorpus:
    """What the generator planted, for assertions in tests."""

    transcript_dir: Path
    price_dir: Path
    n_calls: int
    slope: float
    noise_sigma: float
    suggested_tau: float
    indices: tuple[float, ...]
    returns: tuple[float, ...]


def _word_pool(rng: np.random.Generator, size: int) -> list[str]:
    pool = set()
    while len(pool) < size:
        n = int(rng.integers(2, 5))
        pool.add("".join(rng.choice(_SYLLABLES) for _ in range(n)))
    return sorted(pool)


def _sentences(words: list[str], rng: np.random.Generator, question: bool) -> str:
    chunks = []
    i = 0
    while i < len(words):
        step = int(rng.integers(8, 14))
        chunk = words[i : i + step]
        i += step
        text = " ".join(chunk).capitalize()
        chunks.append(text + ("?" if question else "."))
    return " ".join(chunks)


def _make_name(rng: np.random.Generator, surnames: tuple[str, ...]) -> str:
    return f"{rng.choice(_FIRST_NAMES)} {rng.choice(surnames)}"


def generate_corpus(
    root: str | Path,
    n_calls: int = 220,
    seed: int = 7,
    slope: float = -0.02,
    noise_sigma: float = 0.001,
    encoder: EncoderConfig | None = None,
    pairs_range: tuple[int, int] = (3, 5),
) -> GeneratedCorpus:
    """Write transcripts and prices under ``root`` and return the plan.

    Half of the calls land before 2016 and half after, so the default
    study split has both sides.  The relative price change of each call
    is ``slope * realized_index + N(0, noise_sigma)``.
    """
    rng = np.random.default_rng(seed)
    root = Path(root)
    tdir = root / "transcripts"
    pdir = root / "prices"
    tdir.mkdir(parents=True, exist_ok=True)
    pdir.mkdir(parents=True, exist_ok=True)
    backend = BuiltinBackend(encoder or EncoderConfig())
    vocab = _word_pool(rng, 600)

    indices: list[float] = []
    returns: list[float] = []
    evasive_flags: list[bool] = []
    call_dates: list[date] = []
    symbols: list[str] = []

    for i in range(n_calls):
        symbol = f"SYN{i:04d}"
        sector = SECTORS[i % len(SECTORS)]
        if i % 2 == 0:
            year = int(rng.choice((2014, 2015)))
        else:
            year = int(rng.choice((2016, 2017)))
        call_date = date(year, int(rng.integers(1, 13)), int(rng.integers(2, 27)))
        analyst_names = [_make_name(rng, _ANALYST_SURNAMES) for _ in range(2)]
        manager = _make_name(rng, _MANAGER_SURNAMES)
        # Low-overlap calls answer with fresh vocabulary; high-overlap
        # calls mostly echo the question's words back.  The two groups sit
        # far apart so the label threshold falls into the gap between them.
        evasive = bool(rng.random() < 0.5)
        overlap = rng.uniform(0.02, 0.10) if evasive else rng.uniform(0.90, 0.98)

        lines = [
            f"#symbol: {symbol}",
            f"#date: {call_date.isoformat()}",
            f"#sector: {sector.value}",
            f"#managers: {manager}",
            "",
            "Operator:",
            "Welcome everyone. We will now begin the question and answer session.",
            "",
        ]
        n_pairs = int(rng.integers(pairs_range[0], pairs_range[1] + 1))
        for k in range(n_pairs):
            analyst = analyst_names[k % len(analyst_names)]
            q_words = list(rng.choice(vocab, size=int(rng.integers(28, 48))))
            n_echo = int(round(overlap * int(rng.integers(40, 70))))
            n_fresh = max(0, int(rng.integers(40, 70)) - n_echo)
            a_words = list(rng.choice(q_words, size=min(n_echo, len(q_words)) or 1)) + list(
                rng.choice(vocab, size=n_fresh)
            )
            rng.shuffle(a_words)
            lines.append(f"{analyst}:")
            lines.append(_sentences(q_words, rng, question=True))
            lines.append("")
            lines.append(f"{manager}:")
            lines.append(_sentences(a_words, rng, question=False))
            lines.append("")
        text = "\n".join(lines)
        (tdir / f"{symbol}.txt").write_text(text, encoding="utf-8")

        # Score exactly what was written so prices match the pipeline's view.
        call = segment_and_pair(
            parse_transcript(text.encode("utf-8"), TranscriptFormat.SPEAKER_COLON_PLAIN)
        )
        embeds = backend.embed_texts(
            [t for p in call.qa_pairs for t in (p.question_text, p.answer_text)]
        )
        record = score_call(
            [(p, embeds[2 * j], embeds[2 * j + 1]) for j, p in enumerate(call.qa_pairs)],
            company_symbol=symbol,
            call_date=call_date,
            sector=sector,
        )
        ret = slope * record.index + rng.normal(0.0, noise_sigma)
        base = float(rng.uniform(50.0, 150.0))
        rows = ["date,high"]
        drift = rng.uniform(-0.002, 0.002, size=2)
        rows.append(f"{(call_date - timedelta(days=3)).isoformat()},{base * (1 + drift[0]):.6f}")
        rows.append(f"{(call_date - timedelta(days=1)).isoformat()},{base!r}")
        rows.append(f"{(call_date + timedelta(days=1)).isoformat()},{base * (1 + ret)!r}")
        rows.append(
            f"{(call_date + timedelta(days=3)).isoformat()},{base * (1 + ret + drift[1]):.6f}"
        )
        (pdir / f"{symbol}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")

        indices.append(record.index)
        returns.append(ret)
        evasive_flags.append(evasive)
        call_dates.append(call_date)
        symbols.append(symbol)

    # Threshold at the midpoint of the two planted groups, so the label
    # boundary falls into the index gap rather than inside a mode.
    xi = np.asarray(indices)
    flags = np.asarray(evasive_flags)
    if flags.any() and (~flags).any():
        midpoint = (float(np.median(xi[flags])) + float(np.median(xi[~flags]))) / 2.0
    else:
        midpoint = float(np.median(xi))
    suggested_tau = slope * midpoint
    return GeneratedCorpus(
        transcript_dir=tdir,
        price_dir=pdir,
        n_calls=n_calls,
        slope=slope,
        noise_sigma=noise_sigma,
        suggested_tau=suggested_tau,
        indices=tuple(indices),
        returns=tuple(returns),
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Generate a planted synthetic corpus")
    parser.add_argument("root", type=Path, help="directory for transcripts/ and prices/")
    parser.add_argument("--calls", type=int, default=220)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    corpus = generate_corpus(args.root, n_calls=args.calls, seed=args.seed)
    print(
        f"wrote {corpus.n_calls} calls under {args.root}; "
        f"suggested tau {corpus.suggested_tau:.6f}"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
