"""Tree node types produced by the PowerShell parser.

The node-kind inventory is a closed set; ``ErrorAst`` is the only kind
allowed to wrap source regions the grammar cannot handle.  Nodes are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class AstKind(str, Enum):
    SCRIPT_ROOT = "ScriptRoot"
    PIPELINE = "PipelineAst"
    COMMAND = "CommandAst"
    CMDLET = "CmdletAst"
    COMMAND_PARAMETER = "CommandParameterAst"
    ARGUMENT = "ArgumentAst"
    COMMAND_EXPRESSION = "CommandExpressionAst"
    EXPRESSION = "ExpressionAst"
    METHOD_INVOCATION = "MethodInvocationAst"
    METHOD_NAME = "MethodNameAst"
    TYPE_NAME = "TypeNameAst"
    STRING_LITERAL = "StringLiteralAst"
    VARIABLE = "VariableAst"
    ASSIGNMENT = "AssignmentAst"
    SCRIPT_BLOCK = "ScriptBlockAst"
    IF = "IfAst"
    LOOP = "LoopAst"
    FUNCTION_DEFINITION = "FunctionDefinitionAst"
    OPERATOR = "OperatorAst"
    ERROR = "ErrorAst"


#: Kind names accepted in serialized pipeline records.
KIND_NAMES = frozenset(k.value for k in AstKind)


@dataclass(frozen=True)
class AstNode:
    """One parse-tree node.

    ``text`` is the exact source slice ``source[span[0]:span[1]]``;
    child spans are always contained in the parent span.
    """

    kind: AstKind
    text: str
    span: tuple[int, int]
    children: tuple[AstNode, ...] = field(default_factory=tuple)

    def walk(self):
        """Yield this node and all descendants in pre-order."""
        yield self
        for child in self.children:
            yield from child.walk()

    def node_count(self) -> int:
        return sum(1 for _ in self.walk())


def collapse_ws(text: str) -> str:
    """Collapse internal whitespace runs to single spaces and strip ends."""
    return " ".join(text.split())


def dump_tree(root: AstNode) -> str:
    """Render a tree as indented text, one node per line.

    The root itself is omitted; its direct children start at depth 0 and
    each extra level adds a ``|   `` prefix, matching the layout used in
    AST report listings.
    """
    lines: list[str] = []

    def visit(node: AstNode, depth: int) -> None:
        label = node.kind.value
        text = collapse_ws(node.text)
        lines.append("|   " * depth + (f"{label}: {text}" if text else label))
        for child in node.children:
            visit(child, depth + 1)

    for child in root.children:
        visit(child, 0)
    return "\n".join(lines)
