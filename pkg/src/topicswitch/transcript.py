"""Earnings-call transcript parsing, role inference, and Q&A pairing.

Two input formats are supported:

* ``SpeakerColonPlain`` — UTF-8 text with optional ``#key: value`` header
  lines (symbol, date, sector, managers) followed by turns, each opened
  by a ``Name:`` line at column 0.
* ``JsonTurns`` — one JSON object: ``{symbol, date, sector,
  turns: [{speaker, role?, text}]}``.

Parsing yields an :class:`EarningsCall` with ordered turns;
:func:`segment_and_pair` then derives question/answer pairs from block
adjacency.  Everything here is a pure function over immutable values.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, replace
from datetime import date

from .errors import MalformedInput, NoPairsFound


class Role(enum.Enum):
    ANALYST = "Analyst"
    MANAGER = "Manager"
    OPERATOR = "Operator"
    UNKNOWN = "Unknown"


class Sector(enum.Enum):
    """The 11 GICS categories plus Unknown."""

    CONSUMER_DISCRETIONARY = "Consumer Discretionary"
    HEALTH_CARE = "Health Care"
    INFORMATION_TECHNOLOGY = "Information Technology"
    CONSUMER_STAPLES = "Consumer Staples"
    INDUSTRIALS = "Industrials"
    COMMUNICATION_SERVICES = "Communication Services"
    FINANCIALS = "Financials"
    MATERIALS = "Materials"
    ENERGY = "Energy"
    REAL_ESTATE = "Real Estate"
    UTILITIES = "Utilities"
    UNKNOWN = "Unknown"


_SECTOR_BY_NAME = {s.value.casefold(): s for s in Sector}


def sector_from_name(name: str) -> Sector:
    key = name.strip().casefold()
    if key not in _SECTOR_BY_NAME:
        raise ValueError(f"unrecognized sector {name!r}")
    return _SECTOR_BY_NAME[key]


class TranscriptFormat(enum.Enum):
    SPEAKER_COLON_PLAIN = "plain"
    JSON_TURNS = "json"


@dataclass(frozen=True)
class SpeakerTurn:
    """One contiguous utterance by one speaker."""

    speaker_name: str
    role: Role
    text: str
    ordinal: int


@dataclass(frozen=True)
class QAPair:
    """An analyst's question block paired with the management answer block."""

    analyst_name: str
    question_text: str
    answer_text: str
    pair_ordinal: int


@dataclass(frozen=True)
class EarningsCall:
    """One parsed call: metadata, ordered turns, and derived Q&A pairs."""

    company_symbol: str
    call_date: date
    sector: Sector
    turns: tuple[SpeakerTurn, ...]
    qa_pairs: tuple[QAPair, ...] = ()


# A turn opens with a capitalized name of one to six words followed by a
# colon at column 0; initials ("J. Michael Schlotman") are fine.  Body
# lines with interior colons do not start at column 0 with this shape,
# which keeps ordinary sentences out of the speaker track.
_SPEAKER_LINE = re.compile(
    r"^(?P<name>[A-Z][A-Za-z.'\-]*(?: [A-Z][A-Za-z.'\-]*){0,5}):(?P<rest>.*)$"
)

_HEADER_LINE = re.compile(r"^#\s*(?P<key>[A-Za-z_]+)\s*:\s*(?P<value>.*)$")

_HEADER_KEYS = {"symbol", "date", "sector", "managers"}


def _sentence_question_ratio(text: str) -> float:
    """Fraction of sentences that end with a question mark."""
    enders = re.findall(r"[.?!]", text)
    if not enders:
        return 0.0
    return enders.count("?") / len(enders)


def infer_roles(
    named_turns: list[tuple[str, str]],
    managers: set[str],
) -> dict[str, Role]:
    """Assign one role per speaker name.

    Header-listed managers are Manager; "Operator" is Operator; a
    speaker whose sentences are mostly questions is an Analyst, as is
    the first speaker who is neither Operator nor Manager (the opener of
    the Q&A discussion).  Everyone else stays Unknown.
    """
    manager_keys = {m.casefold() for m in managers}
    roles: dict[str, Role] = {}
    texts: dict[str, list[str]] = {}
    order: list[str] = []
    for name, text in named_turns:
        if name not in texts:
            texts[name] = []
            order.append(name)
        texts[name].append(text)
    for name in order:
        if name.casefold().startswith("operator"):
            roles[name] = Role.OPERATOR
        elif name.casefold() in manager_keys:
            roles[name] = Role.MANAGER
    first_open = next((n for n in order if n not in roles), None)
    for name in order:
        if name in roles:
            continue
        ratio = _sentence_question_ratio(" ".join(texts[name]))
        if ratio >= 0.5 or name == first_open:
            roles[name] = Role.ANALYST
        else:
            roles[name] = Role.UNKNOWN
    return roles


def _parse_plain(text: str) -> EarningsCall:
    headers: dict[str, str] = {}
    turns_raw: list[tuple[str, list[str], int]] = []  # (name, body lines, line no)
    current: tuple[str, list[str], int] | None = None
    in_body = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not in_body:
            if not line.strip():
                continue
            header = _HEADER_LINE.match(line)
            if header and header.group("key").lower() in _HEADER_KEYS:
                headers[header.group("key").lower()] = header.group("value").strip()
                continue
            in_body = True
        speaker = _SPEAKER_LINE.match(line)
        if speaker:
            if current is not None:
                turns_raw.append(current)
            rest = speaker.group("rest").strip()
            current = (speaker.group("name"), [rest] if rest else [], lineno)
        elif current is not None:
            current[1].append(line)
        elif line.strip():
            raise MalformedInput("text before the first speaker line", line=lineno)
    if current is not None:
        turns_raw.append(current)
    if not turns_raw:
        raise MalformedInput("no parseable turn found", line=1)

    if "symbol" not in headers or not headers.get("symbol"):
        raise MalformedInput("missing required header field: symbol", line=1)
    if "date" not in headers or not headers.get("date"):
        raise MalformedInput("missing required header field: date", line=1)
    try:
        call_date = date.fromisoformat(headers["date"])
    except ValueError as exc:
        raise MalformedInput(f"bad date header: {exc}", line=1) from exc
    sector = Sector.UNKNOWN
    if headers.get("sector"):
        try:
            sector = sector_from_name(headers["sector"])
        except ValueError as exc:
            raise MalformedInput(str(exc), line=1) from exc
    managers = {m.strip() for m in headers.get("managers", "").split(";") if m.strip()}

    named: list[tuple[str, str]] = []
    for name, body, lineno in turns_raw:
        joined = "\n".join(body).strip()
        if not joined:
            raise MalformedInput(f"turn by {name!r} has no text", line=lineno)
        named.append((name, joined))
    roles = infer_roles(named, managers)
    turns = tuple(
        SpeakerTurn(speaker_name=name, role=roles[name], text=text, ordinal=i)
        for i, (name, text) in enumerate(named)
    )
    return EarningsCall(
        company_symbol=headers["symbol"],
        call_date=call_date,
        sector=sector,
        turns=turns,
    )


def _parse_json(text: str) -> EarningsCall:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(doc, dict):
        raise MalformedInput("top-level JSON value must be an object")
    for key in ("symbol", "date", "sector", "turns"):
        if key not in doc:
            raise MalformedInput(f"missing required field: {key}")
    try:
        call_date = date.fromisoformat(str(doc["date"]))
    except ValueError as exc:
        raise MalformedInput(f"bad date field: {exc}") from exc
    try:
        sector = sector_from_name(str(doc["sector"]))
    except ValueError as exc:
        raise MalformedInput(str(exc)) from exc
    if not isinstance(doc["turns"], list) or not doc["turns"]:
        raise MalformedInput("turns must be a non-empty list")

    explicit: dict[int, Role] = {}
    named: list[tuple[str, str]] = []
    for i, raw in enumerate(doc["turns"]):
        if not isinstance(raw, dict) or "speaker" not in raw or "text" not in raw:
            raise MalformedInput(f"turn {i} must carry speaker and text")
        text_value = str(raw["text"]).strip()
        if not text_value:
            raise MalformedInput(f"turn {i} has empty text")
        if "role" in raw and raw["role"] is not None:
            try:
                explicit[i] = Role(raw["role"])
            except ValueError as exc:
                raise MalformedInput(f"turn {i} has unknown role {raw['role']!r}") from exc
        named.append((str(raw["speaker"]), text_value))

    inferred = infer_roles(
        [(name, text) for i, (name, text) in enumerate(named) if i not in explicit],
        managers=set(),
    )
    turns = tuple(
        SpeakerTurn(
            speaker_name=name,
            role=explicit.get(i, inferred.get(name, Role.UNKNOWN)),
            text=text,
            ordinal=i,
        )
        for i, (name, text) in enumerate(named)
    )
    return EarningsCall(
        company_symbol=str(doc["symbol"]),
        call_date=call_date,
        sector=sector,
        turns=turns,
    )


def parse_transcript(raw: bytes, fmt: TranscriptFormat) -> EarningsCall:
    """Parse raw transcript bytes into a call with empty qa_pairs.

    Raises MalformedInput (with line context where possible) on bad
    encoding, missing headers, or unparseable structure.
    """
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedInput(f"not valid UTF-8: {exc.reason}", offset=exc.start) from exc
    if fmt is TranscriptFormat.JSON_TURNS:
        return _parse_json(text)
    return _parse_plain(text)


def sniff_format(path_name: str) -> TranscriptFormat:
    if path_name.lower().endswith(".json"):
        return TranscriptFormat.JSON_TURNS
    return TranscriptFormat.SPEAKER_COLON_PLAIN


def segment_and_pair(
    call: EarningsCall,
    roster: dict[str, Role] | None = None,
) -> EarningsCall:
    """Derive qa_pairs from turn adjacency and return the paired call.

    A maximal run of consecutive turns by one analyst forms the question
    block; the following run of consecutive manager turns forms the
    answer block; together they yield one pair.  A follow-up by the same
    analyst opens a new pair.  Operator and Unknown turns never join a
    block and break any block in progress; a different analyst speaking
    before an answer arrives replaces the pending question block.
    Blocks merge their turns with a single newline.

    Raises NoPairsFound when no analyst block is ever answered.
    """
    turns = call.turns
    if roster:
        lookup = {name.casefold(): role for name, role in roster.items()}
        turns = tuple(
            replace(t, role=lookup.get(t.speaker_name.casefold(), t.role)) for t in turns
        )

    pairs: list[QAPair] = []
    q_block: list[SpeakerTurn] = []
    a_block: list[SpeakerTurn] = []

    def emit() -> None:
        if q_block and a_block:
            pairs.append(
                QAPair(
                    analyst_name=q_block[0].speaker_name,
                    question_text="\n".join(t.text for t in q_block),
                    answer_text="\n".join(t.text for t in a_block),
                    pair_ordinal=len(pairs),
                )
            )

    for turn in turns:
        if turn.role is Role.ANALYST:
            if a_block:
                emit()
                q_block, a_block = [], []
            if q_block and q_block[0].speaker_name != turn.speaker_name:
                q_block = []
            q_block.append(turn)
        elif turn.role is Role.MANAGER:
            if q_block:
                a_block.append(turn)
            # Manager speech with no pending question (presentation) is skipped.
        else:
            emit()
            q_block, a_block = [], []
    emit()

    if not pairs:
        raise NoPairsFound(
            f"{call.company_symbol} {call.call_date}: no analyst question "
            "followed by a manager answer"
        )
    return replace(call, turns=turns, qa_pairs=tuple(pairs))


def to_json_turns(call: EarningsCall) -> str:
    """Serialize a call to the JsonTurns format (qa_pairs are derivable)."""
    doc = {
        "symbol": call.company_symbol,
        "date": call.call_date.isoformat(),
        "sector": call.sector.value,
        "turns": [
            {"speaker": t.speaker_name, "role": t.role.value, "text": t.text}
            for t in call.turns
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
