"""Total lexer for a practical subset of PowerShell.

Accepts any string, never raises: characters that fit no rule come out as
``unknown`` lexemes.  Spans are offsets into the (leniently decoded)
source text, non-overlapping and ordered; everything skipped between two
lexemes is whitespace, so the source can be reconstructed from the spans.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class LexemeKind(str, Enum):
    WORD = "word"
    PARAMETER = "parameter"
    VARIABLE = "variable"
    STRING = "string-literal"
    NUMBER = "number"
    OPERATOR = "operator"
    PIPE = "pipe"
    SEMICOLON = "semicolon"
    OPEN_PAREN = "open-paren"
    CLOSE_PAREN = "close-paren"
    OPEN_BRACE = "open-brace"
    CLOSE_BRACE = "close-brace"
    DOT = "dot"
    COMMENT = "comment"
    NEWLINE = "newline"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Lexeme:
    kind: LexemeKind
    text: str
    span: tuple[int, int]


_WS = " \t\r"
_SINGLE_CHAR = {
    "|": LexemeKind.PIPE,
    ";": LexemeKind.SEMICOLON,
    "(": LexemeKind.OPEN_PAREN,
    ")": LexemeKind.CLOSE_PAREN,
    "{": LexemeKind.OPEN_BRACE,
    "}": LexemeKind.CLOSE_BRACE,
    ".": LexemeKind.DOT,
}
_OPERATOR_CHARS = set("=+*/\\:<>,@&%!?^~`[]")
# boundary chars after which a dash starts a parameter rather than an operator
_PARAM_BOUNDARY = set(" \t\r\n(|;{,=")


def _is_word_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_"


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def lex(source) -> list[Lexeme]:
    """Tokenize a script; comments are retained, whitespace is skipped.

    Accepts a string or anything with a ``.text`` attribute (a
    :class:`~astshield.corpus.SourceScript`).
    """
    text: str = source.text if hasattr(source, "text") else source
    out: list[Lexeme] = []
    n = len(text)
    i = 0

    def emit(kind: LexemeKind, start: int, end: int) -> None:
        out.append(Lexeme(kind, text[start:end], (start, end)))

    while i < n:
        ch = text[i]

        if ch in _WS:
            i += 1
            continue

        if ch == "\n":
            emit(LexemeKind.NEWLINE, i, i + 1)
            i += 1
            continue

        if ch == "#":
            start = i
            while i < n and text[i] != "\n":
                i += 1
            emit(LexemeKind.COMMENT, start, i)
            continue

        if ch == "<" and i + 1 < n and text[i + 1] == "#":
            start = i
            end = text.find("#>", i + 2)
            i = n if end < 0 else end + 2
            emit(LexemeKind.COMMENT, start, i)
            continue

        if ch == "'":
            start = i
            i += 1
            while i < n:
                if text[i] == "'":
                    if i + 1 < n and text[i + 1] == "'":  # doubled quote escape
                        i += 2
                        continue
                    i += 1
                    break
                i += 1
            emit(LexemeKind.STRING, start, i)
            continue

        if ch == '"':
            start = i
            i += 1
            while i < n:
                c = text[i]
                if c == "`" and i + 1 < n:  # backtick escape
                    i += 2
                    continue
                if c == '"':
                    if i + 1 < n and text[i + 1] == '"':  # doubled quote escape
                        i += 2
                        continue
                    i += 1
                    break
                i += 1
            emit(LexemeKind.STRING, start, i)
            continue

        if ch == "$":
            start = i
            i += 1
            if i < n and text[i] == "{":
                while i < n and text[i] != "}":
                    i += 1
                if i < n:
                    i += 1
                emit(LexemeKind.VARIABLE, start, i)
                continue
            while i < n and _is_word_char(text[i]):
                i += 1
            if i > start + 1:
                emit(LexemeKind.VARIABLE, start, i)
            else:
                emit(LexemeKind.UNKNOWN, start, i)
            continue

        if ch == "-":
            at_boundary = i == 0 or text[i - 1] in _PARAM_BOUNDARY
            if at_boundary and i + 1 < n and text[i + 1].isalpha():
                start = i
                i += 2
                while i < n and (_is_word_char(text[i]) or text[i] == "-"):
                    i += 1
                emit(LexemeKind.PARAMETER, start, i)
            else:
                emit(LexemeKind.OPERATOR, i, i + 1)
                i += 1
            continue

        if ch.isdigit():
            start = i
            i += 1
            if ch == "0" and i < n and text[i] in "xX" and i + 1 < n and text[i + 1] in "0123456789abcdefABCDEF":
                i += 1
                while i < n and text[i] in "0123456789abcdefABCDEF":
                    i += 1
            else:
                while i < n and text[i].isdigit():
                    i += 1
            emit(LexemeKind.NUMBER, start, i)
            continue

        if _is_word_start(ch):
            start = i
            i += 1
            while i < n:
                c = text[i]
                if _is_word_char(c):
                    i += 1
                elif c == "-" and i + 1 < n and _is_word_char(text[i + 1]):
                    i += 2  # hyphenated names: Get-ChildItem, Invoke-Expression
                else:
                    break
            emit(LexemeKind.WORD, start, i)
            continue

        if ch in _SINGLE_CHAR:
            emit(_SINGLE_CHAR[ch], i, i + 1)
            i += 1
            continue

        if ch in _OPERATOR_CHARS:
            emit(LexemeKind.OPERATOR, i, i + 1)
            i += 1
            continue

        # anything else: group a run of unrecognizable characters
        start = i
        while i < n and not _recognized(text[i]):
            i += 1
        if i == start:
            i += 1
        emit(LexemeKind.UNKNOWN, start, i)

    return out


def _recognized(ch: str) -> bool:
    return (
        ch in _WS
        or ch in "\n#'\"$-"
        or ch.isdigit()
        or _is_word_start(ch)
        or ch in _SINGLE_CHAR
        or ch in _OPERATOR_CHARS
        or ch == "<"
    )
