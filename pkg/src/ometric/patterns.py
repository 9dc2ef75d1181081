"""Parenthesizations of non-associative folds as full binary trees.

A tree over leaves ``first .. first+n-1`` is stored as the tuple of left-subtree
sizes of its internal nodes in preorder.  The left subtree of the root owns the
next ``size(left) - 1`` entries and the right subtree the rest, so subtrees are
contiguous slices and nothing is recursive: combs with 10^6 leaves are fine.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from ._backend import kernels
from .errors import ParameterError, PatternError, RangeError, TreeDomainError
from .tolerance import Tolerance

MAX_CATALAN = 30
MAX_ENUMERATE = 14


class CompositionTree:
    """Immutable full binary tree with 1-based consecutive leaf indices."""

    __slots__ = ("first", "splits", "_prog")

    def __init__(self, first: int = 1, splits: Sequence[int] = ()):
        self.first = int(first)
        self.splits = tuple(splits)
        self._prog = None

    # structure ---------------------------------------------------------
    @property
    def leaf_count(self) -> int:
        return len(self.splits) + 1

    @property
    def is_leaf(self) -> bool:
        return not self.splits

    @property
    def index(self) -> int:
        if self.splits:
            raise AttributeError("internal node has no leaf index")
        return self.first

    @property
    def left(self) -> "CompositionTree":
        if not self.splits:
            raise AttributeError("a leaf has no children")
        size = self.splits[0]
        return CompositionTree(self.first, self.splits[1:size])

    @property
    def right(self) -> "CompositionTree":
        if not self.splits:
            raise AttributeError("a leaf has no children")
        size = self.splits[0]
        return CompositionTree(self.first + size, self.splits[size:])

    @property
    def last(self) -> int:
        return self.first + len(self.splits)

    def shifted(self, first: int) -> "CompositionTree":
        return CompositionTree(first, self.splits)

    def depth(self) -> int:
        best = 0
        stack = [(0, 0, self.leaf_count, 0)]
        while stack:
            _, sp, size, dep = stack.pop()
            if size == 1:
                best = max(best, dep)
                continue
            left = self.splits[sp]
            stack.append((0, sp + 1, left, dep + 1))
            stack.append((0, sp + left, size - left, dep + 1))
        return best

    def __eq__(self, other):
        if not isinstance(other, CompositionTree):
            return NotImplemented
        return self.first == other.first and self.splits == other.splits

    def __hash__(self):
        return hash((self.first, self.splits))

    def __repr__(self):
        text = self.to_string() if len(self.splits) < 40 else f"<{self.leaf_count} leaves>"
        return f"CompositionTree({text})"

    def __str__(self):
        return self.to_string()

    # serialization -----------------------------------------------------
    def to_string(self) -> str:
        """Canonical form: a leaf is its index, a node is ``"(L R)"``."""
        out = []
        stack = [(self.first, 0, self.leaf_count, 0)]
        # state 0: open, 1: between children, 2: close
        while stack:
            off, sp, size, state = stack.pop()
            if size == 1:
                out.append(str(off))
                continue
            left = self.splits[sp]
            if state == 0:
                out.append("(")
                stack.append((off, sp, size, 1))
                stack.append((off, sp + 1, left, 0))
            elif state == 1:
                out.append(" ")
                stack.append((off, sp, size, 2))
                stack.append((off + left, sp + left, size - left, 0))
            else:
                out.append(")")
        return "".join(out)

    def postfix(self) -> np.ndarray:
        """Postfix program: leaf position ``k`` (0-based) pushes values[k], -1 combines."""
        if self._prog is None:
            self._prog = np.asarray(list(self._postfix_iter(spans=False)), dtype=np.int64)
        return self._prog

    def _postfix_iter(self, spans: bool):
        stack = [(0, 0, self.leaf_count, False)]
        splits = self.splits
        while stack:
            off, sp, size, done = stack.pop()
            if done:
                yield (-1, off, sp, size) if spans else -1
                continue
            if size == 1:
                yield (off, off, sp, 1) if spans else off
                continue
            left = splits[sp]
            stack.append((off, sp, size, True))
            stack.append((off + left, sp + left, size - left, False))
            stack.append((off, sp + 1, left, False))

    def subtree_at(self, pos: int) -> "CompositionTree":
        """The subtree whose value is produced at postfix position ``pos``."""
        for k, (_, off, sp, size) in enumerate(self._postfix_iter(spans=True)):
            if k == pos:
                return CompositionTree(self.first + off, self.splits[sp: sp + size - 1])
        raise IndexError(pos)


def Leaf(index: int) -> CompositionTree:
    if index < 1:
        raise ParameterError("leaf indices are 1-based")
    return CompositionTree(index, ())


def Node(left: CompositionTree, right: CompositionTree) -> CompositionTree:
    if right.first != left.last + 1:
        raise ParameterError(
            f"leaves must be consecutive: left ends at {left.last}, right starts at {right.first}"
        )
    return CompositionTree(left.first, (left.leaf_count,) + left.splits + right.splits)


def parse_tree(text: str) -> CompositionTree:
    """Inverse of :meth:`CompositionTree.to_string`."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    if not tokens:
        raise ParameterError("empty tree string")
    stack: list[list] = [[]]
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) < 2:
                raise ParameterError(f"unbalanced ')' in {text!r}")
            kids = stack.pop()
            if len(kids) != 2:
                raise ParameterError(f"node with {len(kids)} children in {text!r}")
            stack[-1].append(Node(*kids))
        else:
            try:
                stack[-1].append(Leaf(int(tok)))
            except ValueError:
                raise ParameterError(f"bad token {tok!r} in {text!r}") from None
    if len(stack) != 1 or len(stack[0]) != 1:
        raise ParameterError(f"malformed tree string {text!r}")
    return stack[0][0]


def left_comb(n: int, first: int = 1) -> CompositionTree:
    return CompositionTree(first, tuple(range(n - 1, 0, -1)))


def right_comb(n: int, first: int = 1) -> CompositionTree:
    return CompositionTree(first, (1,) * (n - 1))


def right_comb_of(blocks: Sequence[CompositionTree], first: int = 1) -> CompositionTree:
    """Fold the blocks with the right comb: B1 ω (B2 ω (... ω Bm))."""
    if not blocks:
        raise ParameterError("need at least one block")
    splits: list[int] = []
    for b in blocks[:-1]:
        splits.append(b.leaf_count)
        splits.extend(b.splits)
    splits.extend(blocks[-1].splits)
    return CompositionTree(first, tuple(splits))


# --------------------------------------------------------------------------
# Counting and enumeration


@functools.lru_cache(maxsize=None)
def _catalan_table(n: int) -> tuple:
    table = [1]
    for m in range(n):
        table.append(sum(table[i] * table[m - i] for i in range(m + 1)))
    return tuple(table)


def catalan(n: int) -> int:
    if n < 0:
        raise ParameterError("catalan needs n >= 0")
    if n > MAX_CATALAN:
        raise RangeError(f"catalan is capped at n = {MAX_CATALAN}")
    return _catalan_table(MAX_CATALAN)[n]


@functools.lru_cache(maxsize=None)
def _split_lists(n: int) -> tuple:
    if n == 1:
        return ((),)
    out = []
    for left in range(1, n):
        for ls in _split_lists(left):
            for rs in _split_lists(n - left):
                out.append((left,) + ls + rs)
    return tuple(out)


def iter_trees(leaves: int) -> Iterator[CompositionTree]:
    if leaves < 1:
        raise ParameterError("need at least one leaf")
    if leaves > MAX_ENUMERATE:
        raise RangeError(f"enumeration is capped at {MAX_ENUMERATE} leaves")
    for s in _split_lists(leaves):
        yield CompositionTree(1, s)


def enumerate_trees(leaves: int) -> list[CompositionTree]:
    """All full binary trees on ``leaves`` leaves, smallest left subtree first, recursively."""
    return list(iter_trees(leaves))


# --------------------------------------------------------------------------
# Integer patterns


@dataclass(frozen=True)
class IntegerPattern:
    """Split rule: the root of an ``n``-leaf fold splits after ``alpha(n)`` leaves."""

    alpha: Callable[[int], int]
    name: str

    def split(self, n: int) -> int:
        k = self.alpha(n)
        if not isinstance(k, (int, np.integer)) or not 1 <= k <= n - 1:
            raise PatternError(f"pattern {self.name}: alpha({n}) = {k!r} is outside [1, {n - 1}]")
        return int(k)

    def __str__(self):
        return self.name


FIFO = IntegerPattern(lambda n: n - 1, "fifo")
LIFO = IntegerPattern(lambda n: 1, "lifo")
AISO = IntegerPattern(lambda n: (n + 1) // 2, "aiso")
POW2 = IntegerPattern(lambda n: 1 << ((n - 1).bit_length() - 1), "pow2")

PATTERNS = {p.name: p for p in (FIFO, LIFO, AISO, POW2)}


def pattern_by_name(name: str) -> IntegerPattern:
    try:
        return PATTERNS[name.lower()]
    except KeyError:
        raise ParameterError(f"unknown pattern {name!r}; known: {', '.join(PATTERNS)}") from None


@functools.lru_cache(maxsize=512)
def _pattern_splits(pattern: IntegerPattern, n: int) -> tuple:
    if pattern is FIFO:
        return tuple(range(n - 1, 0, -1))
    if pattern is LIFO:
        return (1,) * (n - 1)
    out = []
    stack = [n]
    while stack:
        size = stack.pop()
        if size == 1:
            continue
        k = pattern.split(size)
        out.append(k)
        stack.append(size - k)
        stack.append(k)
    return tuple(out)


def tree_from_pattern(pattern: IntegerPattern, leaves: int) -> CompositionTree:
    if leaves < 1:
        raise ParameterError("need at least one leaf")
    return CompositionTree(1, _pattern_splits(pattern, leaves))


# --------------------------------------------------------------------------
# Evaluation


def _interval_args(interval, tol: Tolerance):
    if interval is None:
        return dict(check=False)
    # on an unbounded interval +inf is float overflow of a finite member, so it passes
    return dict(
        lo=interval.lower, hi=interval.upper, lo_closed=interval.lower_closed,
        hi_closed=interval.upper_closed or math.isinf(interval.upper), check=True, slack=tol.abs,
    )


def evaluate_tree(tree: CompositionTree, omega, values: Sequence[float], interval=None, tol=None) -> float:
    """Fold ``values`` along ``tree`` with ω.

    With ``interval`` given, every leaf and every non-root intermediate value
    (anything fed back into ω) must stay in it; the first escape raises
    :class:`TreeDomainError` carrying the subtree.
    """
    n = tree.leaf_count
    if len(values) != n:
        raise ParameterError(f"tree has {n} leaves but {len(values)} values were given")
    tol = Tolerance.coerce(tol)
    prog = tree.postfix()
    if omega.kernel is not None:
        kind, p, q = omega.kernel
        args = _interval_args(interval, tol)
        value, fail = kernels.eval_postfix(prog, np.asarray(values, dtype=np.float64), kind, p, q, **args)
    else:
        value, fail = _eval_python(prog, values, omega, interval, tol)
    if fail == len(prog) - 1 and n > 1:
        # the root result only has to be a value of ω, not a member of I_a
        fail = -1
    if fail >= 0:
        sub = tree.subtree_at(fail)
        raise TreeDomainError(
            f"subtree {sub.to_string()} evaluates to {value!r}, outside "
            f"{interval.describe() if interval is not None else 'the domain of omega'}",
            subtree=sub, value=value,
        )
    return float(value)


def _eval_python(prog, values, omega, interval, tol):
    stack = []
    for pos, op in enumerate(prog.tolist()):
        if op >= 0:
            x = float(values[op])
        else:
            v = stack.pop()
            u = stack.pop()
            try:
                x = omega(u, v)
            except (ArithmeticError, ValueError):
                return math.nan, pos
        if interval is not None and not interval.contains(x, tol.abs):
            if not (x == math.inf and math.isinf(interval.upper)):
                return x, pos
        stack.append(x)
    return stack[-1], -1


def evaluate_all(leaves: int, omega, values: Sequence[float], interval=None, tol=None) -> list[float]:
    """``evaluate_tree`` over ``enumerate_trees(leaves)``, in enumeration order."""
    if len(values) != leaves:
        raise ParameterError(f"expected {leaves} values, got {len(values)}")
    if omega.kernel is not None and interval is None and leaves > 1:
        kind, p, q = omega.kernel
        vals = np.asarray(values, dtype=np.float64)
        out: list[float] = []
        batch = []
        for tree in iter_trees(leaves):
            batch.append(tree.postfix())
            if len(batch) == 20000:
                out.extend(float(x) for x in kernels.eval_postfix_many(np.stack(batch), vals, kind, p, q))
                batch = []
        if batch:
            out.extend(float(x) for x in kernels.eval_postfix_many(np.stack(batch), vals, kind, p, q))
        return out
    return [evaluate_tree(t, omega, values, interval, tol) for t in iter_trees(leaves)]


def affine_coefficients(tree: CompositionTree, p: float, q: float) -> list[float]:
    """Coefficients ``c`` with ``evaluate_tree == sum(c_i t_i)`` for ω(u, v) = p·u + q·v."""
    coeffs = [0.0] * tree.leaf_count
    stack = [(0, 0, tree.leaf_count, 1.0)]
    splits = tree.splits
    while stack:
        off, sp, size, w = stack.pop()
        if size == 1:
            coeffs[off] = w
            continue
        left = splits[sp]
        stack.append((off, sp + 1, left, w * p))
        stack.append((off + left, sp + left, size - left, w * q))
    return coeffs
