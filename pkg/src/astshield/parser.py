"""Recursive-descent parser producing command/expression trees.

Covers commands, pipelines, parameters, strings, variables, assignment,
member access and method invocation, parenthesized expressions, script
blocks, if/while/for/foreach, function definitions, comments and the
usual statement separators.  Input is never executed.

Parsing is total: a region that fails every grammar rule is wrapped in an
``ErrorAst`` spanning its lexemes and parsing resumes after the next
statement separator, so the worst case for garbage input is a root with a
single ``ErrorAst`` child.
"""

from __future__ import annotations

from .ast_nodes import AstKind, AstNode
from .lexer import Lexeme, LexemeKind, lex

_K = LexemeKind

# lexeme kinds that may be glued into one bare-word argument when adjacent
_GLUE_KINDS = {_K.WORD, _K.NUMBER, _K.DOT, _K.OPERATOR, _K.UNKNOWN, _K.PARAMETER}
_STATEMENT_KEYWORDS = {"if", "while", "for", "foreach", "function"}
_LOOP_KEYWORDS = {"while", "for", "foreach"}


class _ParseError(Exception):
    """Internal signal: current statement cannot be parsed; recover."""


class _Parser:
    def __init__(self, text: str, lexemes: list[Lexeme]):
        self.text = text
        self.toks = [lx for lx in lexemes if lx.kind is not _K.COMMENT]
        self.pos = 0
        self.paren_depth = 0

    # ---- token access -----------------------------------------------------

    def peek(self, offset: int = 0) -> Lexeme | None:
        idx = self.pos + offset
        return self.toks[idx] if idx < len(self.toks) else None

    def next(self) -> Lexeme:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def at_end(self) -> bool:
        return self.pos >= len(self.toks)

    def skip_newlines_in_parens(self) -> None:
        # inside parentheses a newline is plain whitespace
        while self.paren_depth > 0 and (tok := self.peek()) and tok.kind is _K.NEWLINE:
            self.pos += 1

    def skip_continuations(self) -> None:
        # backtick at end of line continues the statement
        while (
            (tok := self.peek()) is not None
            and tok.kind is _K.OPERATOR
            and tok.text == "`"
            and (nxt := self.peek(1)) is not None
            and nxt.kind is _K.NEWLINE
        ):
            self.pos += 2

    def touching(self, a: Lexeme, b: Lexeme) -> bool:
        return a.span[1] == b.span[0]

    def slice_node(self, kind: AstKind, start: int, end: int, children: tuple[AstNode, ...] = ()) -> AstNode:
        return AstNode(kind, self.text[start:end], (start, end), children)

    # ---- script / statements ----------------------------------------------

    def parse_script(self) -> AstNode:
        children: list[AstNode] = []
        while True:
            self._skip_separators()
            if self.at_end():
                break
            start_pos = self.pos
            try:
                children.append(self.parse_statement())
            except _ParseError:
                children.append(self._recover(start_pos))
        return AstNode(AstKind.SCRIPT_ROOT, self.text, (0, len(self.text)), tuple(children))

    def _skip_separators(self) -> None:
        while (tok := self.peek()) and tok.kind in (_K.NEWLINE, _K.SEMICOLON):
            self.pos += 1

    def _recover(self, start_pos: int) -> AstNode:
        """Consume the broken statement and wrap its lexemes in ErrorAst.

        Recovery stops at the first statement separator even if the
        garbage opened a group: confining the damage to one line beats
        swallowing the valid statements after it.
        """
        self.pos = start_pos
        consumed: list[Lexeme] = []
        while not self.at_end():
            tok = self.peek()
            if tok.kind in (_K.NEWLINE, _K.SEMICOLON):
                break
            if tok.kind is _K.CLOSE_BRACE:
                break  # let an enclosing script block close
            consumed.append(self.next())
        if not consumed:  # cannot even consume: drop one lexeme to guarantee progress
            consumed.append(self.next())
        kids = tuple(
            AstNode(AstKind.ARGUMENT, lx.text, lx.span) for lx in consumed if lx.kind is not _K.NEWLINE
        )
        start = consumed[0].span[0]
        end = consumed[-1].span[1]
        return self.slice_node(AstKind.ERROR, start, end, kids)

    def parse_statement(self) -> AstNode:
        tok = self.peek()
        assert tok is not None
        if tok.kind is _K.WORD:
            word = tok.text.lower()
            if word == "if":
                return self.parse_if()
            if word in _LOOP_KEYWORDS:
                return self.parse_loop(word)
            if word == "function":
                return self.parse_function()
        if tok.kind is _K.VARIABLE and self._assignment_ahead():
            return self.parse_assignment()
        return self.parse_pipeline_content()

    def _at_statement_end(self) -> bool:
        tok = self.peek()
        if tok is None:
            return True
        if tok.kind in (_K.SEMICOLON, _K.CLOSE_BRACE, _K.CLOSE_PAREN):
            return True
        return tok.kind is _K.NEWLINE and self.paren_depth == 0

    def _assignment_ahead(self) -> bool:
        nxt = self.peek(1)
        if nxt is None:
            return False
        if nxt.kind is _K.OPERATOR and nxt.text == "=":
            return True
        # compound assignment: += -= *= /=
        if (
            nxt.kind is _K.OPERATOR
            and nxt.text in "+-*/"
            and (third := self.peek(2))
            and third.kind is _K.OPERATOR
            and third.text == "="
            and self.touching(nxt, third)
        ):
            return True
        return False

    # ---- statement kinds ----------------------------------------------------

    def parse_assignment(self) -> AstNode:
        var = self.next()
        lhs = AstNode(AstKind.VARIABLE, var.text, var.span)
        op = self.next()
        if op.text != "=":  # compound: consume the '='
            self.next()
        self.skip_continuations()
        self.skip_newlines_in_parens()
        if self._at_statement_end():
            raise _ParseError("assignment without right-hand side")
        rhs = self.parse_pipeline_content()
        if (
            len(rhs.children) == 1
            and rhs.children[0].kind is AstKind.COMMAND_EXPRESSION
            and len(rhs.children[0].children) == 1
        ):
            rhs = rhs.children[0].children[0]  # `$x = <expr>` keeps the bare expression
        return self.slice_node(AstKind.ASSIGNMENT, var.span[0], rhs.span[1], (lhs, rhs))

    def parse_if(self) -> AstNode:
        start = self.next().span[0]  # 'if'
        children = [self._parse_paren_condition()]
        children.append(self.parse_script_block())
        end = children[-1].span[1]
        while True:
            save = self.pos
            self._skip_separators_soft()
            tok = self.peek()
            if tok is not None and tok.kind is _K.WORD and tok.text.lower() == "elseif":
                sub_start = self.next().span[0]
                cond = self._parse_paren_condition()
                body = self.parse_script_block()
                sub = self.slice_node(AstKind.IF, sub_start, body.span[1], (cond, body))
                children.append(sub)
                end = sub.span[1]
                continue
            if tok is not None and tok.kind is _K.WORD and tok.text.lower() == "else":
                self.next()
                body = self.parse_script_block()
                children.append(body)
                end = body.span[1]
            else:
                self.pos = save
            break
        return self.slice_node(AstKind.IF, start, end, tuple(children))

    def _skip_separators_soft(self) -> None:
        # between a closing brace and elseif/else a newline is allowed
        while (tok := self.peek()) and tok.kind is _K.NEWLINE:
            self.pos += 1

    def parse_loop(self, keyword: str) -> AstNode:
        start = self.next().span[0]
        children: list[AstNode] = []
        if keyword == "for":
            children.extend(self._parse_for_header())
        elif keyword == "foreach":
            children.extend(self._parse_foreach_header())
        else:  # while
            children.append(self._parse_paren_condition())
        body = self.parse_script_block()
        children.append(body)
        return self.slice_node(AstKind.LOOP, start, body.span[1], tuple(children))

    def _expect(self, kind: LexemeKind) -> Lexeme:
        tok = self.peek()
        if tok is None or tok.kind is not kind:
            raise _ParseError(f"expected {kind.value}")
        return self.next()

    def _parse_paren_condition(self) -> AstNode:
        self.skip_continuations()
        self._expect(_K.OPEN_PAREN)
        self.paren_depth += 1
        try:
            node = self.parse_pipeline_content()
        finally:
            self.paren_depth -= 1
        self.skip_newlines_after_paren()
        self._expect(_K.CLOSE_PAREN)
        return self._unwrap_group(node)

    def skip_newlines_after_paren(self) -> None:
        while (tok := self.peek()) and tok.kind is _K.NEWLINE:
            self.pos += 1

    def _parse_for_header(self) -> list[AstNode]:
        self._expect(_K.OPEN_PAREN)
        self.paren_depth += 1
        parts: list[AstNode] = []
        try:
            while True:
                self.skip_newlines_after_paren()
                tok = self.peek()
                if tok is None:
                    raise _ParseError("unterminated for header")
                if tok.kind is _K.CLOSE_PAREN:
                    break
                if tok.kind is _K.SEMICOLON:
                    self.pos += 1
                    continue
                if tok.kind is _K.VARIABLE and self._assignment_ahead():
                    parts.append(self.parse_assignment())
                else:
                    parts.append(self.parse_expression_sequence(stop_kinds=(_K.SEMICOLON, _K.CLOSE_PAREN)))
        finally:
            self.paren_depth -= 1
        self._expect(_K.CLOSE_PAREN)
        return parts

    def _parse_foreach_header(self) -> list[AstNode]:
        self._expect(_K.OPEN_PAREN)
        self.paren_depth += 1
        try:
            self.skip_newlines_after_paren()
            var = self._expect(_K.VARIABLE)
            var_node = AstNode(AstKind.VARIABLE, var.text, var.span)
            kw = self.peek()
            if kw is None or kw.kind is not _K.WORD or kw.text.lower() != "in":
                raise _ParseError("expected 'in' in foreach header")
            self.next()
            iterable = self.parse_expression_sequence(stop_kinds=(_K.CLOSE_PAREN,))
        finally:
            self.paren_depth -= 1
        self._expect(_K.CLOSE_PAREN)
        return [var_node, iterable]

    def parse_function(self) -> AstNode:
        start = self.next().span[0]  # 'function'
        self.skip_continuations()
        name = self.peek()
        if name is None or name.kind is not _K.WORD:
            raise _ParseError("function name expected")
        self.next()
        children: list[AstNode] = [AstNode(AstKind.CMDLET, name.text, name.span)]
        tok = self.peek()
        if tok is not None and tok.kind is _K.OPEN_PAREN:
            self.next()
            self.paren_depth += 1
            try:
                while (tok := self.peek()) and tok.kind is not _K.CLOSE_PAREN:
                    if tok.kind is _K.VARIABLE:
                        children.append(AstNode(AstKind.VARIABLE, tok.text, tok.span))
                        self.next()
                    elif tok.kind is _K.OPERATOR and tok.text == ",":
                        self.next()
                    elif tok.kind is _K.NEWLINE:
                        self.next()
                    else:
                        raise _ParseError("bad function parameter list")
            finally:
                self.paren_depth -= 1
            self._expect(_K.CLOSE_PAREN)
        body = self.parse_script_block()
        children.append(body)
        return self.slice_node(AstKind.FUNCTION_DEFINITION, start, body.span[1], tuple(children))

    def parse_script_block(self) -> AstNode:
        self.skip_continuations()
        self._skip_separators_soft()
        open_brace = self._expect(_K.OPEN_BRACE)
        children: list[AstNode] = []
        while True:
            self._skip_separators()
            tok = self.peek()
            if tok is None:
                raise _ParseError("unterminated script block")
            if tok.kind is _K.CLOSE_BRACE:
                close = self.next()
                return self.slice_node(AstKind.SCRIPT_BLOCK, open_brace.span[0], close.span[1], tuple(children))
            start_pos = self.pos
            try:
                children.append(self.parse_statement())
            except _ParseError:
                children.append(self._recover(start_pos))

    # ---- pipelines and commands ---------------------------------------------

    def parse_pipeline_content(self) -> AstNode:
        """One statement's worth of ``cmd | cmd | ...`` (or a bare expression)."""
        elements: list[AstNode] = []
        while True:
            self.skip_continuations()
            self.skip_newlines_in_parens()
            tok = self.peek()
            if tok is None:
                break
            if tok.kind is _K.WORD:
                elements.append(self.parse_command())
            else:
                expr = self.parse_expression_sequence(
                    stop_kinds=(_K.PIPE, _K.SEMICOLON, _K.NEWLINE, _K.CLOSE_PAREN, _K.CLOSE_BRACE)
                )
                elements.append(
                    AstNode(AstKind.COMMAND_EXPRESSION, expr.text, expr.span, (expr,))
                )
            self.skip_continuations()
            tok = self.peek()
            if tok is not None and tok.kind is _K.PIPE:
                self.next()
                # a pipe at end of line continues on the next one
                while (nxt := self.peek()) is not None and nxt.kind is _K.NEWLINE:
                    self.pos += 1
                continue
            break
        if not elements:
            raise _ParseError("empty pipeline")
        start = elements[0].span[0]
        end = elements[-1].span[1]
        return self.slice_node(AstKind.PIPELINE, start, end, tuple(elements))

    def parse_command(self) -> AstNode:
        head = self._glue_run(head=True)
        children: list[AstNode] = [AstNode(AstKind.CMDLET, head.text, head.span)]
        while True:
            self.skip_continuations()
            self.skip_newlines_in_parens()
            tok = self.peek()
            if tok is None or self._ends_element(tok):
                break
            children.append(self.parse_command_element(tok))
        start = children[0].span[0]
        end = children[-1].span[1]
        return self.slice_node(AstKind.COMMAND, start, end, tuple(children))

    def _ends_element(self, tok: Lexeme) -> bool:
        if tok.kind in (_K.PIPE, _K.SEMICOLON, _K.CLOSE_BRACE):
            return True
        if tok.kind is _K.CLOSE_PAREN:
            return True
        if tok.kind is _K.NEWLINE:
            return self.paren_depth == 0
        return False

    def parse_command_element(self, tok: Lexeme) -> AstNode:
        if tok.kind is _K.PARAMETER:
            return self._parse_parameter()
        if tok.kind is _K.STRING:
            self.next()
            inner = AstNode(AstKind.STRING_LITERAL, tok.text, tok.span)
            return AstNode(AstKind.ARGUMENT, tok.text, tok.span, (inner,))
        if tok.kind is _K.VARIABLE:
            node = self.parse_primary()
            if node.kind in (AstKind.METHOD_INVOCATION, AstKind.EXPRESSION):
                return node
            return AstNode(AstKind.ARGUMENT, node.text, node.span, (node,))
        if tok.kind is _K.OPEN_PAREN:
            return self.parse_paren_group()
        if tok.kind is _K.OPEN_BRACE:
            return self.parse_script_block()
        if tok.kind in _GLUE_KINDS:
            run = self._glue_run()
            return AstNode(AstKind.ARGUMENT, run.text, run.span)
        raise _ParseError(f"unexpected {tok.kind.value} in command")

    def _parse_parameter(self) -> AstNode:
        tok = self.next()
        end = tok.span[1]
        # glued `-Name:value` form
        nxt = self.peek()
        if nxt is not None and nxt.kind is _K.OPERATOR and nxt.text == ":" and self.touching(tok, nxt):
            self.next()
            end = nxt.span[1]
            val = self.peek()
            if val is not None and val.kind in (_K.WORD, _K.NUMBER, _K.STRING, _K.VARIABLE) and val.span[0] == end:
                self.next()
                end = val.span[1]
        return self.slice_node(AstKind.COMMAND_PARAMETER, tok.span[0], end)

    def _glue_run(self, head: bool = False) -> Lexeme:
        """Merge adjacent word-ish lexemes (`uc.edu`, URLs, paths) into one."""
        first = self.next()
        if first.kind not in _GLUE_KINDS:
            raise _ParseError(f"unexpected {first.kind.value}")
        last = first
        while (tok := self.peek()) is not None:
            if tok.kind not in _GLUE_KINDS or not self.touching(last, tok):
                break
            if tok.kind is _K.OPERATOR and tok.text == "`":
                break
            self.next()
            last = tok
        span = (first.span[0], last.span[1])
        return Lexeme(first.kind, self.text[span[0]:span[1]], span)

    # ---- expressions ----------------------------------------------------------

    def parse_expression_sequence(
        self, stop_kinds: tuple[LexemeKind, ...], stop_comma: bool = False
    ) -> AstNode:
        """A flat run of primaries and operators, e.g. ``$i -lt 10``."""
        items: list[AstNode] = []
        while True:
            self.skip_continuations()
            self.skip_newlines_in_parens()
            tok = self.peek()
            if tok is None or tok.kind in stop_kinds:
                break
            if tok.kind is _K.NEWLINE:
                break
            if tok.kind is _K.PARAMETER:
                # comparison/logical operators: -eq -lt -match -and ...
                self.next()
                items.append(AstNode(AstKind.OPERATOR, tok.text, tok.span))
                continue
            if tok.kind is _K.OPERATOR:
                if stop_comma and tok.text == ",":
                    break
                self.next()
                items.append(AstNode(AstKind.OPERATOR, tok.text, tok.span))
                continue
            items.append(self.parse_primary())
        if not items:
            raise _ParseError("empty expression")
        if len(items) == 1:
            return items[0]
        start = items[0].span[0]
        end = items[-1].span[1]
        return self.slice_node(AstKind.EXPRESSION, start, end, tuple(items))

    def parse_primary(self) -> AstNode:
        self.skip_continuations()
        self.skip_newlines_in_parens()
        tok = self.peek()
        if tok is None:
            raise _ParseError("expression expected")
        if tok.kind is _K.STRING:
            self.next()
            node = AstNode(AstKind.STRING_LITERAL, tok.text, tok.span)
            return self._parse_postfix(node)
        if tok.kind is _K.VARIABLE:
            self.next()
            node = AstNode(AstKind.VARIABLE, tok.text, tok.span)
            return self._parse_postfix(node)
        if tok.kind is _K.OPEN_PAREN:
            return self.parse_paren_group()
        if tok.kind is _K.OPEN_BRACE:
            return self.parse_script_block()
        if tok.kind in _GLUE_KINDS:
            run = self._glue_run()
            return AstNode(AstKind.ARGUMENT, run.text, run.span)
        raise _ParseError(f"unexpected {tok.kind.value} in expression")

    def parse_paren_group(self) -> AstNode:
        open_paren = self._expect(_K.OPEN_PAREN)
        self.paren_depth += 1
        try:
            inner = self.parse_pipeline_content()
        finally:
            self.paren_depth -= 1
        self.skip_newlines_after_paren()
        close = self._expect(_K.CLOSE_PAREN)
        node = self.slice_node(AstKind.EXPRESSION, open_paren.span[0], close.span[1], (self._unwrap_group(inner),))
        return self._parse_postfix(node, group_inner=inner)

    @staticmethod
    def _unwrap_group(pipeline: AstNode) -> AstNode:
        # `(expr)` keeps the bare expression; `(cmd ...)` keeps the command
        if pipeline.kind is AstKind.PIPELINE and len(pipeline.children) == 1:
            only = pipeline.children[0]
            if only.kind is AstKind.COMMAND_EXPRESSION and len(only.children) == 1:
                return only.children[0]
            return only
        return pipeline

    def _parse_postfix(self, node: AstNode, group_inner: AstNode | None = None) -> AstNode:
        """Member access / method invocation chains: ``.Name`` or ``.Name(args)``."""
        while True:
            dot = self.peek()
            if dot is None or dot.kind is not _K.DOT:
                return node
            prev_end = node.span[1]
            if dot.span[0] != prev_end:
                return node
            name = self.peek(1)
            if name is None or name.kind is not _K.WORD or name.span[0] != dot.span[1]:
                return node
            self.next()  # dot
            self.next()  # name
            name_node = AstNode(AstKind.METHOD_NAME, name.text, name.span)
            call = self.peek()
            if call is not None and call.kind is _K.OPEN_PAREN and call.span[0] == name.span[1]:
                self.next()
                self.paren_depth += 1
                args: list[AstNode] = []
                try:
                    while True:
                        self.skip_newlines_after_paren()
                        tok = self.peek()
                        if tok is None:
                            raise _ParseError("unterminated method call")
                        if tok.kind is _K.CLOSE_PAREN:
                            break
                        if tok.kind is _K.OPERATOR and tok.text == ",":
                            self.next()
                            continue
                        expr = self.parse_expression_sequence(stop_kinds=(_K.CLOSE_PAREN,), stop_comma=True)
                        args.append(AstNode(AstKind.ARGUMENT, expr.text, expr.span, (expr,)))
                finally:
                    self.paren_depth -= 1
                close = self._expect(_K.CLOSE_PAREN)
                receiver = self._method_receiver(node, group_inner)
                children = (receiver, name_node, *args)
                node = self.slice_node(AstKind.METHOD_INVOCATION, node.span[0], close.span[1], children)
            else:
                children = (node, name_node)
                node = self.slice_node(AstKind.EXPRESSION, node.span[0], name.span[1], children)
            group_inner = None

    def _method_receiver(self, node: AstNode, group_inner: AstNode | None) -> AstNode:
        """Collapse ``(New-Object Some.Type)`` receivers to a TypeNameAst."""
        if group_inner is not None and group_inner.kind is AstKind.PIPELINE and len(group_inner.children) == 1:
            cmd = group_inner.children[0]
            if (
                cmd.kind is AstKind.COMMAND
                and len(cmd.children) == 2
                and cmd.children[0].kind is AstKind.CMDLET
                and cmd.children[0].text.lower() == "new-object"
                and cmd.children[1].kind is AstKind.ARGUMENT
            ):
                arg = cmd.children[1]
                return AstNode(AstKind.TYPE_NAME, arg.text, arg.span)
        if node.kind is AstKind.EXPRESSION and len(node.children) == 1:
            return node.children[0]
        return node


def parse_text(text: str) -> AstNode:
    """Parse source text into a tree rooted at ``ScriptRoot``; never raises."""
    return _Parser(text, lex(text)).parse_script()


def parse(script) -> AstNode:
    """Parse a :class:`~astshield.corpus.SourceScript` (or anything with ``.text``)."""
    return parse_text(script.text)
