"""S-expression reader/writer shared by every textual format in the package.

Atoms are ints, double-quoted strings, or symbols (anything else, including
`->`, `=>`, and type variables like 'A). `#` starts a comment that runs to
end of line.
"""

from __future__ import annotations


class SexprError(ValueError):
    """Malformed S-expression input."""


class Symbol(str):
    """A bare identifier token, distinct from a quoted string."""

    def __repr__(self) -> str:
        return f"Symbol({str.__repr__(self)})"


def tokenize(text: str) -> list[str | int | Symbol]:
    tokens: list[str | int | Symbol] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
        elif c == "#":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            tokens.append(Symbol(c))
            i += 1
        elif c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            if j >= n:
                raise SexprError("unterminated string literal")
            tokens.append(text[i + 1 : j])
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in ' \t\r\n()"#':
                j += 1
            word = text[i:j]
            tokens.append(_atom(word))
            i = j
    return tokens


def _atom(word: str) -> int | Symbol:
    try:
        return int(word)
    except ValueError:
        return Symbol(word)


def parse_all(text: str) -> list:
    """Parse every top-level form in the text."""
    tokens = tokenize(text)
    forms = []
    pos = 0
    while pos < len(tokens):
        form, pos = _read(tokens, pos)
        forms.append(form)
    return forms


def parse_one(text: str):
    forms = parse_all(text)
    if len(forms) != 1:
        raise SexprError(f"expected exactly one form, found {len(forms)}")
    return forms[0]


def _read(tokens: list, pos: int):
    if pos >= len(tokens):
        raise SexprError("unexpected end of input")
    tok = tokens[pos]
    if tok == Symbol("("):
        items = []
        pos += 1
        while True:
            if pos >= len(tokens):
                raise SexprError("unbalanced parenthesis")
            if tokens[pos] == Symbol(")"):
                return items, pos + 1
            item, pos = _read(tokens, pos)
            items.append(item)
    if tok == Symbol(")"):
        raise SexprError("unexpected ')'")
    return tok, pos + 1


def write(form) -> str:
    if isinstance(form, list):
        return "(" + " ".join(write(f) for f in form) + ")"
    if isinstance(form, Symbol):
        return str(form)
    if isinstance(form, str):
        return '"' + form + '"'
    return str(form)
