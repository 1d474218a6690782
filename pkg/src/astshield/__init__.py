"""AST-based PowerShell script classification toolkit.

Parses scripts into trees, linearizes them into (AST-type, text) pair
records, tokenizes records into fixed-length id sequences, and trains
from-scratch LSTM/BiLSTM classifiers with a full evaluation and
reporting path.  Scripts are treated strictly as data: nothing here
executes or evaluates input.
"""

from .ast_nodes import AstKind, AstNode, dump_tree
from .corpus import CorpusManifest, ManifestEntry, SourceScript, ingest_corpus, read_manifest, write_manifest
from .lexer import Lexeme, LexemeKind, lex
from .parser import parse, parse_text

__version__ = "0.1.0"

__all__ = [
    "AstKind",
    "AstNode",
    "CorpusManifest",
    "Lexeme",
    "LexemeKind",
    "ManifestEntry",
    "SourceScript",
    "dump_tree",
    "ingest_corpus",
    "lex",
    "parse",
    "parse_text",
    "read_manifest",
    "write_manifest",
    "__version__",
]
