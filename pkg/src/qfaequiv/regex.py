"""Regular expressions to minimal DFAs: parse, Thompson NFA, subsets, Hopcroft.

Syntax: ``|`` alternation, juxtaposition for concatenation, postfix ``*``,
parentheses for grouping, ``'...'`` for multi-character symbols and ``∅`` for
the empty language. Whitespace is ignored; the empty expression denotes the
empty word.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence, Union

from .machines import ClassicalDfa, split_word

DEFAULT_STATE_CAP = 10**5


class RegexSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} at offset {position}")


class StateCapError(RuntimeError):
    pass


@dataclass(frozen=True)
class EmptySet:
    pass


@dataclass(frozen=True)
class Epsilon:
    pass


@dataclass(frozen=True)
class Literal:
    symbol: str


@dataclass(frozen=True)
class Concat:
    left: "RegexAst"
    right: "RegexAst"


@dataclass(frozen=True)
class Alt:
    left: "RegexAst"
    right: "RegexAst"


@dataclass(frozen=True)
class Star:
    inner: "RegexAst"


RegexAst = Union[EmptySet, Epsilon, Literal, Concat, Alt, Star]


class _Parser:
    def __init__(self, text: str, alphabet: Sequence[str]):
        self.text = text
        self.alphabet = set(alphabet)
        self.pos = 0

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> RegexAst:
        node = self.alt()
        if self.peek():
            raise RegexSyntaxError(f"unexpected {self.peek()!r}", self.pos)
        return node

    def alt(self) -> RegexAst:
        node = self.concat()
        while self.peek() == "|":
            self.pos += 1
            node = Alt(node, self.concat())
        return node

    def concat(self) -> RegexAst:
        parts = []
        while self.peek() and self.peek() not in "|)":
            parts.append(self.star())
        if not parts:
            return Epsilon()
        node = parts[0]
        for p in parts[1:]:
            node = Concat(node, p)
        return node

    def star(self) -> RegexAst:
        node = self.atom()
        while self.peek() == "*":
            self.pos += 1
            node = Star(node)
        return node

    def atom(self) -> RegexAst:
        c = self.peek()
        start = self.pos
        if c == "(":
            self.pos += 1
            node = self.alt()
            if self.peek() != ")":
                raise RegexSyntaxError("expected ')'", self.pos)
            self.pos += 1
            return node
        if c == "∅":
            self.pos += 1
            return EmptySet()
        if c == "'":
            end = self.text.find("'", start + 1)
            if end < 0:
                raise RegexSyntaxError("unterminated quoted symbol", start)
            symbol = self.text[start + 1 : end]
            if not symbol:
                raise RegexSyntaxError("empty quoted symbol", start)
            self.pos = end + 1
        elif c == "*":
            raise RegexSyntaxError("'*' with nothing to repeat", start)
        else:
            symbol = c
            self.pos += 1
        if symbol not in self.alphabet:
            raise RegexSyntaxError(f"symbol {symbol!r} is not in the alphabet", start)
        return Literal(symbol)


def parse_regex(text: str, alphabet: Sequence[str]) -> RegexAst:
    return _Parser(text, alphabet).parse()


@dataclass
class Nfa:
    """NFA with epsilon moves; ``moves[q]`` maps a symbol (``None`` = epsilon) to targets."""

    alphabet: tuple[str, ...]
    moves: list[dict] = field(default_factory=list)
    initial: int = 0
    accepting: int = 0

    def new_state(self) -> int:
        self.moves.append({})
        return len(self.moves) - 1

    def add(self, src: int, symbol, dst: int):
        self.moves[src].setdefault(symbol, set()).add(dst)

    @property
    def n_states(self) -> int:
        return len(self.moves)

    def closure(self, states) -> frozenset:
        seen = set(states)
        stack = list(states)
        while stack:
            q = stack.pop()
            for t in self.moves[q].get(None, ()):
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return frozenset(seen)

    def step(self, states, symbol) -> frozenset:
        out = set()
        for q in states:
            out |= self.moves[q].get(symbol, set())
        return self.closure(out)

    def accepts(self, word) -> bool:
        cur = self.closure({self.initial})
        for s in split_word(word, self.alphabet):
            cur = self.step(cur, s)
        return self.accepting in cur


def thompson(ast: RegexAst, alphabet: Sequence[str]) -> Nfa:
    nfa = Nfa(tuple(alphabet))

    def build(node) -> tuple[int, int]:
        s, f = nfa.new_state(), nfa.new_state()
        if isinstance(node, Epsilon):
            nfa.add(s, None, f)
        elif isinstance(node, Literal):
            nfa.add(s, node.symbol, f)
        elif isinstance(node, Concat):
            s1, f1 = build(node.left)
            s2, f2 = build(node.right)
            nfa.add(s, None, s1)
            nfa.add(f1, None, s2)
            nfa.add(f2, None, f)
        elif isinstance(node, Alt):
            for branch in (node.left, node.right):
                bs, bf = build(branch)
                nfa.add(s, None, bs)
                nfa.add(bf, None, f)
        elif isinstance(node, Star):
            bs, bf = build(node.inner)
            nfa.add(s, None, bs)
            nfa.add(s, None, f)
            nfa.add(bf, None, bs)
            nfa.add(bf, None, f)
        # EmptySet: no path from s to f
        return s, f

    nfa.initial, nfa.accepting = build(ast)
    return nfa


def determinize(nfa: Nfa, state_cap: int = DEFAULT_STATE_CAP) -> ClassicalDfa:
    """Subset construction; the empty subset becomes an explicit dead state."""
    start = nfa.closure({nfa.initial})
    index = {start: 0}
    order = [start]
    delta = []
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        row = []
        for sym in nfa.alphabet:
            nxt = nfa.step(cur, sym)
            if nxt not in index:
                if len(order) >= state_cap:
                    raise StateCapError(f"subset construction exceeded {state_cap} states")
                index[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            row.append(index[nxt])
        delta.append(tuple(row))
    accepting = frozenset(i for i, sub in enumerate(order) if nfa.accepting in sub)
    return ClassicalDfa(len(order), nfa.alphabet, 0, tuple(delta), accepting)


def regex_to_dfa(ast_or_text, alphabet: Sequence[str], state_cap: int = DEFAULT_STATE_CAP) -> ClassicalDfa:
    ast = parse_regex(ast_or_text, alphabet) if isinstance(ast_or_text, str) else ast_or_text
    return determinize(thompson(ast, alphabet), state_cap)


def _reachable(d: ClassicalDfa) -> list[int]:
    seen = {d.initial}
    order = [d.initial]
    queue = deque([d.initial])
    while queue:
        q = queue.popleft()
        for t in d.delta[q]:
            if t not in seen:
                seen.add(t)
                order.append(t)
                queue.append(t)
    return order


def minimize_dfa(d: ClassicalDfa) -> ClassicalDfa:
    """Minimal equivalent DFA by Hopcroft partition refinement.

    Unreachable states are dropped and the result is numbered in
    breadth-first order from the initial state, so equal languages give
    identical DFAs.
    """
    states = _reachable(d)
    live = set(states)
    k = len(d.alphabet)
    inverse = [{} for _ in range(k)]
    for q in states:
        for a in range(k):
            inverse[a].setdefault(d.delta[q][a], set()).add(q)

    acc = frozenset(q for q in states if q in d.accepting)
    rej = frozenset(live - acc)
    partition = {p for p in (acc, rej) if p}
    work = set(partition) if len(partition) > 1 else set()
    if len(partition) == 2:
        work = {min(acc, rej, key=len)}

    while work:
        splitter = work.pop()
        for a in range(k):
            pre = set()
            for t in splitter:
                pre |= inverse[a].get(t, set())
            if not pre:
                continue
            for block in list(partition):
                inter = block & pre
                if not inter or inter == block:
                    continue
                diff = block - inter
                inter, diff = frozenset(inter), frozenset(diff)
                partition.remove(block)
                partition.add(inter)
                partition.add(diff)
                if block in work:
                    work.remove(block)
                    work.add(inter)
                    work.add(diff)
                else:
                    work.add(min(inter, diff, key=len))

    block_of = {}
    for block in partition:
        for q in block:
            block_of[q] = block

    # renumber blocks in BFS order from the initial block
    numbering = {block_of[d.initial]: 0}
    order = [block_of[d.initial]]
    queue = deque(order)
    while queue:
        b = queue.popleft()
        rep = min(b)
        for a in range(k):
            nb = block_of[d.delta[rep][a]]
            if nb not in numbering:
                numbering[nb] = len(order)
                order.append(nb)
                queue.append(nb)
    delta = tuple(tuple(numbering[block_of[d.delta[min(b)][a]]] for a in range(k)) for b in order)
    accepting = frozenset(numbering[b] for b in order if min(b) in d.accepting)
    return ClassicalDfa(len(order), d.alphabet, 0, delta, accepting)


def dfa_membership(d: ClassicalDfa, word) -> bool:
    return d.accepts(word)


def go_then_accept_dfa(results: Sequence[str] = ("a", "r", "g")) -> ClassicalDfa:
    """Minimal DFA for ``g* a (a|r|g)*``: start, accepting sink, dead sink.

    ``results`` fixes the alphabet order and must contain ``a``, ``r``, ``g``.
    """
    results = tuple(results)
    if set(results) != {"a", "r", "g"}:
        raise ValueError(f"expected results a, r, g; got {results}")
    nxt = {"g": 0, "a": 1, "r": 2}
    delta = (tuple(nxt[c] for c in results), (1,) * 3, (2,) * 3)
    return ClassicalDfa(3, results, 0, delta, frozenset({1}))


GO_THEN_ACCEPT_REGEX = "g*a(a|r|g)*"
