from __future__ import annotations

import re
from dataclasses import dataclass

from bicheck.model import SourceSpan

KEYWORDS = frozenset(
    """class extends abstract const var invariant init final op override system
    constraint on forall ext bool int enum seq true false head tail isEmpty""".split()
)

SYMBOLS = (
    "=>", "/\\", "\\/", "++", "<>", "<=", ">=", "!=", "..", "->",
    "~", "#", "=", "<", ">", "+", "-", "(", ")", "{", "}", ",", ":", ";", ".",
)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT = re.compile(r"[0-9]+")


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, DECOR, INT, KW, SYM, EOF
    text: str
    span: SourceSpan
    value: object = None

    def describe(self) -> str:
        if self.kind == "EOF":
            return "end of input"
        return repr(self.text)


class LexError(Exception):
    def __init__(self, span: SourceSpan, message: str):
        super().__init__(message)
        self.span = span
        self.message = message


def tokenize(src: str, file: str = "<string>") -> list[Token]:
    toks: list[Token] = []
    line, col, i, n = 1, 1, 0, len(src)

    def span(l0, c0, l1, c1):
        return SourceSpan(file, l0, c0, l1, c1)

    while i < n:
        ch = src[i]
        if ch == "\n":
            line, col, i = line + 1, 1, i + 1
            continue
        if ch in " \t\r":
            i, col = i + 1, col + 1
            continue
        if src.startswith("//", i):
            j = src.find("\n", i)
            j = n if j < 0 else j
            col += j - i
            i = j
            continue
        m = _IDENT.match(src, i)
        if m:
            word = m.group()
            j = m.end()
            deco = src[j] if j < n else ""
            if deco in ("'", "?") or (deco == "!" and src[j + 1 : j + 2] != "="):
                toks.append(Token("DECOR", word + deco, span(line, col, line, col + len(word)), (word, deco)))
                j += 1
            elif word in KEYWORDS:
                toks.append(Token("KW", word, span(line, col, line, col + len(word) - 1)))
            else:
                toks.append(Token("IDENT", word, span(line, col, line, col + len(word) - 1)))
            col += j - i
            i = j
            continue
        m = _INT.match(src, i)
        if m:
            text = m.group()
            toks.append(Token("INT", text, span(line, col, line, col + len(text) - 1), int(text)))
            col += len(text)
            i = m.end()
            continue
        for sym in SYMBOLS:
            if src.startswith(sym, i):
                toks.append(Token("SYM", sym, span(line, col, line, col + len(sym) - 1)))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise LexError(span(line, col, line, col), f"unexpected character {ch!r}")
    toks.append(Token("EOF", "", span(line, col, line, col)))
    return toks
