"""Penn Treebank bracketed trees: reading, terminal counting and linearization."""
from __future__ import annotations

import re
from typing import List, Tuple, Union

from .types import CorpusError

_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")

# (label, children); a leaf is a bare terminal string
Tree = Tuple[str, list]
Node = Union[Tree, str]

EMPTY_LABEL = "-NONE-"
LINEARIZE_MODES = ("labels_only", "labels_and_terminals")


class TreeError(CorpusError):
    pass


def read_tree(text: str) -> Tree:
    """Parse one bracketed tree.

    ``"( (S ...))"`` style roots with an empty label are kept as a node labelled ``""``.
    """
    tokens = _TOKEN_RE.findall(text)
    if not tokens:
        raise TreeError("empty parse tree")
    if tokens[0] != "(":
        raise TreeError(f"parse tree must start with '(' but got {tokens[0]!r}")
    stack: List[Tree] = []
    root = None
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok == "(":
            label = ""
            if i + 1 < len(tokens) and tokens[i + 1] not in ("(", ")"):
                label = tokens[i + 1]
                i += 1
            node: Tree = (label, [])
            if stack:
                stack[-1][1].append(node)
            elif root is not None:
                raise TreeError("more than one tree in parse string")
            else:
                root = node
            stack.append(node)
        elif tok == ")":
            if not stack:
                raise TreeError("unbalanced brackets: unexpected ')'")
            stack.pop()
        else:
            if not stack:
                raise TreeError(f"terminal {tok!r} outside any bracket")
            stack[-1][1].append(tok)
        i += 1
    if stack:
        raise TreeError(f"unbalanced brackets: {len(stack)} unclosed")
    return root


def _is_empty_element(node: Node) -> bool:
    return not isinstance(node, str) and node[0] == EMPTY_LABEL


def terminals(tree: Tree) -> List[str]:
    """Leaves in order, skipping ``-NONE-`` trace elements."""
    out: List[str] = []

    def visit(node: Node) -> None:
        if isinstance(node, str):
            out.append(node)
        elif not _is_empty_element(node):
            for child in node[1]:
                visit(child)

    visit(tree)
    return out


def count_terminals(parse: str) -> int:
    return len(terminals(read_tree(parse)))


def linearize_parse(parse: str, mode: str = "labels_only") -> List[str]:
    """Depth-first, left-to-right token stream of a bracketed tree.

    >>> linearize_parse("(S (NP (NN dog)) (VP (VBZ barks)))")
    ['(S', '(NP', '(NN', ')', ')', '(VP', '(VBZ', ')', ')', ')']
    """
    if mode not in LINEARIZE_MODES:
        raise ValueError(f"unknown linearization mode {mode!r}")
    keep_terminals = mode == "labels_and_terminals"
    out: List[str] = []

    def visit(node: Node) -> None:
        if isinstance(node, str):
            if keep_terminals:
                out.append(node)
            return
        if _is_empty_element(node):
            return
        out.append("(" + node[0])
        for child in node[1]:
            visit(child)
        out.append(")")

    visit(read_tree(parse))
    return out


def right_branching_tree(tokens, tags) -> str:
    """Build ``(S (t1 w1) (S (t2 w2) ... (tn wn)))`` over the given terminals."""
    leaves = [f"({t} {w})" for t, w in zip(tags, tokens)]
    tree = leaves[-1]
    for leaf in reversed(leaves[:-1]):
        tree = f"(S {leaf} {tree})"
    if len(leaves) == 1:
        tree = f"(S {tree})"
    return f"(ROOT {tree})"
