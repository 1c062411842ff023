"""Parser and pairing tests, including the two appendix-style samples."""

import json
from datetime import date

import pytest

from topicswitch.errors import MalformedInput, NoPairsFound
from topicswitch.transcript import (
    EarningsCall,
    QAPair,
    Role,
    Sector,
    SpeakerTurn,
    TranscriptFormat,
    parse_transcript,
    segment_and_pair,
    to_json_turns,
)

PLAIN = TranscriptFormat.SPEAKER_COLON_PLAIN
JSON_FMT = TranscriptFormat.JSON_TURNS


def _plain(text: str) -> EarningsCall:
    return parse_transcript(text.encode("utf-8"), PLAIN)


def test_low_sample_parses_to_analyst_and_manager(a1_low_path):
    call = parse_transcript(a1_low_path.read_bytes(), PLAIN)
    assert call.company_symbol == "AAPL"
    assert call.call_date == date(2015, 4, 27)
    assert call.sector is Sector.INFORMATION_TECHNOLOGY
    assert [t.speaker_name for t in call.turns] == ["Shannon Cross", "Tim Cook"]
    assert [t.role for t in call.turns] == [Role.ANALYST, Role.MANAGER]
    assert call.qa_pairs == ()


def test_low_sample_pairs_to_one_qa(a1_low_path):
    call = segment_and_pair(parse_transcript(a1_low_path.read_bytes(), PLAIN))
    assert len(call.qa_pairs) == 1
    pair = call.qa_pairs[0]
    assert pair.analyst_name == "Shannon Cross"
    assert pair.question_text.startswith("Tim, can you talk")
    assert "incredible quarter" in pair.answer_text


def test_high_sample_pairs_to_one_qa(a1_high_path):
    call = segment_and_pair(parse_transcript(a1_high_path.read_bytes(), PLAIN))
    assert len(call.qa_pairs) == 1
    assert call.qa_pairs[0].analyst_name == "Judah Frommer"
    assert call.turns[1].speaker_name == "J. Michael Schlotman"
    assert call.turns[1].role is Role.MANAGER


def test_empty_file_is_malformed():
    with pytest.raises(MalformedInput):
        _plain("")


def test_header_only_file_is_malformed():
    with pytest.raises(MalformedInput):
        _plain("#symbol: A\n#date: 2020-01-01\n")


SIX_TURNS = """\
#symbol: SIX
#date: 2019-05-02
#sector: Industrials
#managers: Pat Chief

Operator:
Welcome to the call. First question please.

Ann Alpha:
How did the segment perform this quarter?

Pat Chief:
It performed well across all regions.

Operator:
Next question comes from Bob.

Bob Beta:
What is the outlook for margins next year?

Pat Chief:
We expect them to remain stable.
"""


def test_six_turn_fixture_fields():
    call = _plain(SIX_TURNS)
    assert len(call.turns) == 6
    assert [t.ordinal for t in call.turns] == [0, 1, 2, 3, 4, 5]
    roles = [t.role for t in call.turns]
    assert roles == [
        Role.OPERATOR,
        Role.ANALYST,
        Role.MANAGER,
        Role.OPERATOR,
        Role.ANALYST,
        Role.MANAGER,
    ]
    assert call.turns[0].text == "Welcome to the call. First question please."
    assert call.turns[3].speaker_name == "Operator"


def test_six_turn_fixture_pairs_across_operator_breaks():
    call = segment_and_pair(_plain(SIX_TURNS))
    assert len(call.qa_pairs) == 2
    assert [p.analyst_name for p in call.qa_pairs] == ["Ann Alpha", "Bob Beta"]
    assert [p.pair_ordinal for p in call.qa_pairs] == [0, 1]


def test_manager_monologue_has_no_pairs():
    text = "#symbol: M\n#date: 2020-02-02\n#managers: Sam Solo\n\nSam Solo:\nPrepared remarks only.\n"
    with pytest.raises(NoPairsFound):
        segment_and_pair(_plain(text))


def _turn(name, role, text, i):
    return SpeakerTurn(speaker_name=name, role=role, text=text, ordinal=i)


def test_follow_up_produces_three_pairs():
    turns = (
        _turn("Ada", Role.ANALYST, "First question?", 0),
        _turn("Mgr", Role.MANAGER, "First answer.", 1),
        _turn("Ada", Role.ANALYST, "Follow up question?", 2),
        _turn("Mgr", Role.MANAGER, "Second answer.", 3),
        _turn("Beth", Role.ANALYST, "Different question?", 4),
        _turn("Mgr", Role.MANAGER, "Third answer.", 5),
    )
    call = EarningsCall("X", date(2020, 1, 1), Sector.UNKNOWN, turns)
    paired = segment_and_pair(call)
    assert [p.analyst_name for p in paired.qa_pairs] == ["Ada", "Ada", "Beth"]
    assert [p.question_text for p in paired.qa_pairs] == [
        "First question?",
        "Follow up question?",
        "Different question?",
    ]


def test_consecutive_manager_turns_merge_into_one_answer():
    turns = (
        _turn("Ada", Role.ANALYST, "Question?", 0),
        _turn("Mgr One", Role.MANAGER, "Part one.", 1),
        _turn("Mgr Two", Role.MANAGER, "Part two.", 2),
    )
    paired = segment_and_pair(EarningsCall("X", date(2020, 1, 1), Sector.UNKNOWN, turns))
    assert len(paired.qa_pairs) == 1
    assert paired.qa_pairs[0].answer_text == "Part one.\nPart two."


def test_operator_between_question_and_answer_breaks_block():
    turns = (
        _turn("Ada", Role.ANALYST, "Question?", 0),
        _turn("Operator", Role.OPERATOR, "Hold please.", 1),
        _turn("Mgr", Role.MANAGER, "Answer.", 2),
    )
    with pytest.raises(NoPairsFound):
        segment_and_pair(EarningsCall("X", date(2020, 1, 1), Sector.UNKNOWN, turns))


def test_roster_overrides_roles():
    turns = (
        _turn("Ada", Role.UNKNOWN, "Question?", 0),
        _turn("Mgr", Role.UNKNOWN, "Answer.", 1),
    )
    call = EarningsCall("X", date(2020, 1, 1), Sector.UNKNOWN, turns)
    paired = segment_and_pair(call, roster={"Ada": Role.ANALYST, "Mgr": Role.MANAGER})
    assert len(paired.qa_pairs) == 1


def test_pairing_is_idempotent(a1_low_path):
    once = segment_and_pair(parse_transcript(a1_low_path.read_bytes(), PLAIN))
    twice = segment_and_pair(once)
    assert once == twice


def test_pair_texts_come_from_turn_texts():
    call = segment_and_pair(_plain(SIX_TURNS))
    turn_texts = {t.text for t in call.turns}
    for pair in call.qa_pairs:
        for block in (pair.question_text, pair.answer_text):
            for piece in block.split("\n"):
                assert piece in turn_texts


def test_json_round_trip(a1_low_path, a1_high_path):
    for path in (a1_low_path, a1_high_path):
        call = segment_and_pair(parse_transcript(path.read_bytes(), PLAIN))
        serialized = to_json_turns(call)
        reparsed = parse_transcript(serialized.encode("utf-8"), JSON_FMT)
        assert reparsed.turns == call.turns
        assert reparsed.company_symbol == call.company_symbol
        assert reparsed.call_date == call.call_date
        assert reparsed.sector == call.sector
        assert segment_and_pair(reparsed) == call


def test_json_parse_uses_explicit_roles():
    doc = {
        "symbol": "J",
        "date": "2018-07-09",
        "sector": "Energy",
        "turns": [
            {"speaker": "Quinn", "role": "Analyst", "text": "Any update on volumes?"},
            {"speaker": "Drew", "role": "Manager", "text": "Volumes were flat."},
        ],
    }
    call = parse_transcript(json.dumps(doc).encode("utf-8"), JSON_FMT)
    assert [t.role for t in call.turns] == [Role.ANALYST, Role.MANAGER]
    assert call.sector is Sector.ENERGY


def test_json_missing_field_is_malformed():
    with pytest.raises(MalformedInput):
        parse_transcript(b'{"symbol": "X", "date": "2020-01-01"}', JSON_FMT)


def test_json_bad_role_is_malformed():
    doc = {
        "symbol": "J",
        "date": "2018-07-09",
        "sector": "Energy",
        "turns": [{"speaker": "Quinn", "role": "Chairman", "text": "hello"}],
    }
    with pytest.raises(MalformedInput):
        parse_transcript(json.dumps(doc).encode("utf-8"), JSON_FMT)


def test_missing_symbol_header_is_malformed():
    with pytest.raises(MalformedInput, match="symbol"):
        _plain("#date: 2020-01-01\n\nAda:\nHello there.\n")


def test_bad_date_header_is_malformed():
    with pytest.raises(MalformedInput, match="date"):
        _plain("#symbol: X\n#date: not-a-date\n\nAda:\nHello there.\n")


def test_unrecognized_sector_is_malformed():
    with pytest.raises(MalformedInput, match="sector"):
        _plain("#symbol: X\n#date: 2020-01-01\n#sector: Tech\n\nAda:\nHi.\n")


def test_text_before_first_speaker_reports_line():
    text = "#symbol: X\n#date: 2020-01-01\n\nstray prose without a speaker\n"
    with pytest.raises(MalformedInput) as exc_info:
        _plain(text)
    assert exc_info.value.line == 4


def test_empty_turn_is_malformed():
    text = "#symbol: X\n#date: 2020-01-01\n\nAda:\nBen:\nHello.\n"
    with pytest.raises(MalformedInput, match="Ada"):
        _plain(text)


def test_invalid_utf8_is_malformed():
    with pytest.raises(MalformedInput, match="UTF-8"):
        parse_transcript(b"\xff\xfe\x00bad", PLAIN)


def test_question_ratio_marks_second_analyst():
    # Beth is neither first nor rostered, but asks mostly questions.
    text = (
        "#symbol: X\n#date: 2020-01-01\n#managers: Mgr Person\n\n"
        "Ada Alpha:\nOpening question?\n\n"
        "Mgr Person:\nAnswer one.\n\n"
        "Beth Beta:\nSecond question here? And another part?\n\n"
        "Mgr Person:\nAnswer two.\n"
    )
    call = _plain(text)
    roles = {t.speaker_name: t.role for t in call.turns}
    assert roles["Beth Beta"] is Role.ANALYST
