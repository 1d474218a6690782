import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from astshield.ast_nodes import AstKind, AstNode
from astshield.parser import parse_text
from astshield.pipeline import (
    PipelinePair,
    PipelineRecord,
    linearize,
    read_jsonl,
    write_jsonl,
)

from conftest import CRADLE_KINDS_DEPTHS, CRADLE_SRC


def leaf(kind, text, lo, hi):
    return AstNode(kind, text, (lo, hi))


def test_linearize_hand_built_command():
    # ScriptRoot -> CommandAst("ping uc.edu") -> CmdletAst + ArgumentAst
    cmdlet = leaf(AstKind.CMDLET, "ping", 0, 4)
    arg = leaf(AstKind.ARGUMENT, "uc.edu", 5, 11)
    cmd = AstNode(AstKind.COMMAND, "ping uc.edu", (0, 11), (cmdlet, arg))
    root = AstNode(AstKind.SCRIPT_ROOT, "ping uc.edu", (0, 11), (cmd,))
    record = linearize(root, "s", 0)
    assert [(p.ast_type, p.text, p.depth) for p in record.pairs] == [
        ("CommandAst", "ping uc.edu", 0),
        ("CmdletAst", "ping", 1),
        ("ArgumentAst", "uc.edu", 1),
    ]


def test_linearize_empty_root():
    root = AstNode(AstKind.SCRIPT_ROOT, "", (0, 0))
    record = linearize(root, "empty", 1)
    assert record.pairs == ()
    assert record.label == 1


def test_linearize_requires_root():
    node = leaf(AstKind.CMDLET, "x", 0, 1)
    with pytest.raises(ValueError):
        linearize(node, "s", 0)


def test_linearize_excludes_root_and_counts_nodes():
    tree = parse_text(CRADLE_SRC)
    record = linearize(tree, "pf", 1)
    assert len(record.pairs) == tree.node_count() - 1


def test_cradle_pair_golden():
    record = linearize(parse_text(CRADLE_SRC), "pf", 1)
    assert [(p.ast_type, p.depth) for p in record.pairs] == CRADLE_KINDS_DEPTHS
    # composite rows carry the full (whitespace-collapsed) slice, leaves the leaf token
    assert record.pairs[0].text.startswith("IEX (New-Object")
    assert record.pairs[2].text == "IEX"


def test_whitespace_collapsed_in_pair_text():
    tree = parse_text("ping   a\t b")
    record = linearize(tree, "s", 0)
    assert record.pairs[0].text == "ping a b"


def test_depth_never_jumps_by_more_than_one():
    tree = parse_text("if ($x) { ping a } else { ping b }; $y = 1")
    record = linearize(tree, "s", 0)
    prev = -1
    for pair in record.pairs:
        assert pair.depth <= prev + 1
        prev = pair.depth


# ---------------------------------------------------------------------------
# JSONL round trip
# ---------------------------------------------------------------------------

KIND_NAME_STRATEGY = st.sampled_from([k.value for k in AstKind])
TEXT_STRATEGY = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), max_size=40
)


@st.composite
def records_strategy(draw):
    n_pairs = draw(st.integers(0, 8))
    depth = 0
    pairs = []
    for _ in range(n_pairs):
        depth = draw(st.integers(0, max(depth + 1, 1)))
        pairs.append(
            PipelinePair(draw(KIND_NAME_STRATEGY), draw(TEXT_STRATEGY), depth)
        )
    return PipelineRecord(
        script_id=draw(st.text(min_size=1, max_size=12)),
        label=draw(st.sampled_from([0, 1])),
        pairs=tuple(pairs),
    )


@given(st.lists(records_strategy(), max_size=20))
@settings(max_examples=200, deadline=None)
def test_roundtrip_identity(tmp_path_factory, records):
    path = tmp_path_factory.mktemp("jsonl") / "data.jsonl"
    write_jsonl(records, path)
    result = read_jsonl(path)
    assert not result.errors
    assert not result.partial
    assert result.records == list(records)


def test_one_record_per_line(tmp_path, tiny_corpus):
    from astshield.pipeline import linearize

    records = [linearize(parse_text(s.text), s.id, s.label) for s in tiny_corpus]
    path = tmp_path / "data.jsonl"
    count = write_jsonl(records, path)
    assert count == 40
    assert len(path.read_text(encoding="utf-8").splitlines()) == 40


def test_large_corpus_writes_one_line_per_record(tmp_path):
    records = [
        PipelineRecord(f"s{i}", i % 2, (PipelinePair("CmdletAst", f"cmd{i}", 0),))
        for i in range(4120)
    ]
    path = tmp_path / "big.jsonl"
    assert write_jsonl(records, path) == 4120
    assert sum(1 for _ in path.open(encoding="utf-8")) == 4120


def test_labels_survive_roundtrip(tmp_path, tiny_corpus):
    records = [linearize(parse_text(s.text), s.id, s.label) for s in tiny_corpus]
    path = tmp_path / "data.jsonl"
    write_jsonl(records, path)
    back = read_jsonl(path).records
    assert [r.label for r in back] == [s.label for s in tiny_corpus]


def test_malformed_line_reported_with_number(tmp_path):
    records = [
        PipelineRecord("a", 0, (PipelinePair("CmdletAst", "x", 0),)),
        PipelineRecord("b", 1, ()),
        PipelineRecord("c", 0, ()),
    ]
    path = tmp_path / "data.jsonl"
    write_jsonl(records, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    lines[1] = "{ this is garbage"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    result = read_jsonl(path)
    assert result.partial
    assert [r.script_id for r in result.records] == ["a", "c"]
    assert [e.line for e in result.errors] == [2]


def test_unknown_ast_type_rejected(tmp_path):
    path = tmp_path / "data.jsonl"
    obj = {"script_id": "x", "label": 0, "pairs": [{"t": "NotAKind", "x": "y", "d": 0}]}
    path.write_text(json.dumps(obj) + "\n", encoding="utf-8")
    result = read_jsonl(path)
    assert result.records == []
    assert result.errors and result.errors[0].line == 1
