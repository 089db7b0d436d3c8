"""Window-to-feature-bag transform: role paths, filler chaining, canonical atoms.

A window (a small set of statements) is decomposed into role paths per filler
symbol (``want A B`` puts A in role ``want1`` and B in ``want2``). Every
filler occupying k >= 2 role paths contributes all pairwise path-equality
atoms; fillers in a single role contribute nothing. ``sameAs`` statements
contribute no bare paths of their own: instead their inner statement is
spliced, via the dot operator, onto every path already reaching the label,
recursively through nested labels.

Dot extension is single-level: a label's inner statement is spliced onto the
top-level roles the label fills, and the resulting composed paths are
terminal. Nested labels therefore surface as fillers of composed paths
(``cause2.decide2``) rather than as ever-deeper compositions.

When a relation occurs in several plain statements of the window, its
instances are distinguished by uppercase letter suffixes (``wantA1``,
``wantB1``). Letters are assigned from a renaming-invariant refinement of the
window so that isomorphic windows produce token-identical bags.
"""

from __future__ import annotations

import hashlib
from collections import Counter, defaultdict
from collections.abc import Iterable
from dataclasses import dataclass
from functools import cmp_to_key
from itertools import combinations, permutations, product

from .corpus import Statement

# Windows needing more tied-lettering branches than this fall back to a
# rendered-line order (deterministic, but not renaming-invariant).
MAX_LETTERING_BRANCHES = 2000

_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


class LabelCycleError(ValueError):
    """The window's sameAs labels form a reference cycle."""


@dataclass(frozen=True)
class RolePath:
    """A chain of (relation, letter, argIndex) segments, e.g. blameFor3.fail1."""

    segments: tuple[tuple[str, str, int], ...]

    def rendered(self) -> str:
        return ".".join(f"{rel}{letter}{idx}" for rel, letter, idx in self.segments)

    def extended(self, relation: str, idx: int) -> "RolePath":
        return RolePath(self.segments + ((relation, "", idx),))


def canonical_compare(a: RolePath, b: RolePath) -> int:
    """Total order on role paths; the lesser path is a feature's left side.

    Shorter paths come first; equal lengths compare relation-name sequences
    in reverse alphabetical order, then ascending argument indexes, then
    ascending letters.
    """
    if len(a.segments) != len(b.segments):
        return -1 if len(a.segments) < len(b.segments) else 1
    for (ra, _, _), (rb, _, _) in zip(a.segments, b.segments):
        if ra != rb:
            return -1 if ra > rb else 1
    for (_, _, ia), (_, _, ib) in zip(a.segments, b.segments):
        if ia != ib:
            return -1 if ia < ib else 1
    for (_, la, _), (_, lb, _) in zip(a.segments, b.segments):
        if la != lb:
            return -1 if la < lb else 1
    return 0


_path_key = cmp_to_key(canonical_compare)


def feature_token(a: RolePath, b: RolePath) -> str:
    left, right = (a, b) if canonical_compare(a, b) <= 0 else (b, a)
    return f"{left.rendered()}={right.rendered()}"


def _prepare(window: Iterable[Statement]) -> tuple[Statement, ...]:
    stmts = tuple(sorted(set(window), key=Statement.rendered))
    labels = {s.label: s for s in stmts if s.is_labeled}
    # Reject label reference cycles (they would make dot expansion diverge).
    state: dict[str, int] = {}

    def visit(label: str) -> None:
        state[label] = 1
        for arg in labels[label].args:
            if arg in labels:
                if state.get(arg) == 1:
                    raise LabelCycleError(f"label cycle through {arg!r}")
                if arg not in state:
                    visit(arg)
        state[label] = 2

    for label in labels:
        if label not in state:
            visit(label)
    return stmts


def _fillers(
    stmts: tuple[Statement, ...], letters: dict[Statement, str]
) -> dict[str, set[RolePath]]:
    fillers: dict[str, set[RolePath]] = defaultdict(set)
    for s in stmts:
        if s.is_labeled:
            continue
        letter = letters.get(s, "")
        for idx, arg in enumerate(s.args, start=1):
            fillers[arg].add(RolePath(((s.relation, letter, idx),)))
    # Dot extension: a label's inner statement is spliced onto each top-level
    # role the label fills. Derived paths are terminal; they are not spliced
    # again even when their filler is itself a defined label.
    top = {sym: tuple(paths) for sym, paths in fillers.items()}
    for s in stmts:
        if not s.is_labeled:
            continue
        for path in top.get(s.label, ()):
            for idx, arg in enumerate(s.args, start=1):
                fillers[arg].add(path.extended(s.relation, idx))
    return dict(fillers)


def _emit(fillers: dict[str, set[RolePath]]) -> frozenset[str]:
    atoms: set[str] = set()
    for paths in fillers.values():
        if len(paths) < 2:
            continue
        ordered = sorted(paths, key=_path_key)
        for left, right in combinations(ordered, 2):
            atoms.add(f"{left.rendered()}={right.rendered()}")
    return frozenset(atoms)


# ---------------------------------------------------------------------------
# Renaming-invariant lettering


def _hash(*parts: object) -> bytes:
    return hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()


def _refine(
    stmts: tuple[Statement, ...],
    stmt_colors: dict[Statement, bytes],
) -> dict[Statement, bytes]:
    """Color refinement over statements and symbols until the partition stabilizes."""
    occurrences: dict[str, list[tuple[Statement, tuple]]] = defaultdict(list)
    for s in stmts:
        if s.is_labeled:
            occurrences[s.label].append((s, ("lbl",)))
            for idx, arg in enumerate(s.args, start=1):
                occurrences[arg].append((s, ("inner", idx)))
        else:
            for idx, arg in enumerate(s.args, start=1):
                occurrences[arg].append((s, ("arg", idx)))
    sym_colors: dict[str, bytes] = {sym: b"" for sym in occurrences}
    stmt_colors = dict(stmt_colors)
    prev = (0, 0)
    for _ in range(len(stmts) + len(sym_colors) + 2):
        sym_colors = {
            sym: _hash(
                sym_colors[sym],
                sorted((stmt_colors[s], role) for s, role in occ),
            )
            for sym, occ in occurrences.items()
        }
        new_stmt = {}
        for s in stmts:
            arg_cols = tuple(sym_colors[a] for a in s.args)
            lbl_col = sym_colors[s.label] if s.is_labeled else b""
            new_stmt[s] = _hash(stmt_colors[s], lbl_col, arg_cols)
        stmt_colors = new_stmt
        sizes = (len(set(stmt_colors.values())), len(set(sym_colors.values())))
        if sizes == prev:
            break
        prev = sizes
    return stmt_colors


def _seed_colors(stmts: tuple[Statement, ...]) -> dict[Statement, bytes]:
    return {
        s: _hash("L" if s.is_labeled else "P", s.relation, s.arity) for s in stmts
    }


def _tied_groups(
    stmts: tuple[Statement, ...], colors: dict[Statement, bytes]
) -> list[list[Statement]]:
    """Same-relation plain statements sharing a refined color (size >= 2)."""
    groups: dict[tuple[str, bytes], list[Statement]] = defaultdict(list)
    for s in stmts:
        if not s.is_labeled:
            groups[(s.relation, colors[s])].append(s)
    return [g for key, g in sorted(groups.items()) if len(g) > 1]


def _letters_from_colors(
    stmts: tuple[Statement, ...],
    colors: dict[Statement, bytes],
    multi: set[str],
) -> dict[Statement, str]:
    letters: dict[Statement, str] = {}
    by_rel: dict[str, list[Statement]] = defaultdict(list)
    for s in stmts:
        if not s.is_labeled and s.relation in multi:
            by_rel[s.relation].append(s)
    for rel, group in by_rel.items():
        ordered = sorted(group, key=lambda s: (colors[s], s.rendered()))
        for rank, s in enumerate(ordered):
            letters[s] = _LETTERS[rank] if rank < len(_LETTERS) else f"Z{rank}"
    return letters


def _assignments(
    stmts: tuple[Statement, ...],
    colors: dict[Statement, bytes],
    multi: set[str],
    budget: list[int],
) -> Iterable[dict[Statement, str]]:
    """Yield candidate letter maps for every symmetry-breaking choice."""
    groups = _tied_groups(stmts, colors)
    if not groups:
        budget[0] -= 1
        if budget[0] < 0:
            raise _BranchBudgetExceeded
        yield _letters_from_colors(stmts, colors, multi)
        return
    total = 1
    for g in groups:
        for i in range(2, len(g) + 1):
            total *= i
    if total <= 24:
        # Enumerate tied permutations jointly; disambiguate colors per order.
        budget[0] -= total
        if budget[0] < 0:
            raise _BranchBudgetExceeded
        for perm_choice in product(*(tuple(permutations(g)) for g in groups)):
            adjusted = dict(colors)
            for group_order in perm_choice:
                for pos, s in enumerate(group_order):
                    adjusted[s] = _hash(adjusted[s], "tie", pos)
            yield _letters_from_colors(stmts, adjusted, multi)
        return
    # Individualize one member of the largest group, re-refine, recurse.
    target = max(groups, key=len)
    for s in target:
        adjusted = dict(colors)
        adjusted[s] = _hash(adjusted[s], "pick")
        refined = _refine(stmts, adjusted)
        yield from _assignments(stmts, refined, multi, budget)


class _BranchBudgetExceeded(Exception):
    pass


def _choose_letters(stmts: tuple[Statement, ...]) -> dict[Statement, str]:
    counts = Counter(s.relation for s in stmts if not s.is_labeled)
    multi = {rel for rel, n in counts.items() if n > 1}
    if not multi:
        return {}
    colors = _refine(stmts, _seed_colors(stmts))
    if not _tied_groups(stmts, colors):
        return _letters_from_colors(stmts, colors, multi)
    best_key: tuple[str, ...] | None = None
    best: dict[Statement, str] = {}
    try:
        for letters in _assignments(stmts, colors, multi, [MAX_LETTERING_BRANCHES]):
            key = tuple(sorted(_emit(_fillers(stmts, letters))))
            if best_key is None or key < best_key:
                best_key, best = key, letters
    except _BranchBudgetExceeded:
        # Pathologically symmetric window; fall back to rendered-line order.
        return _letters_from_colors(
            stmts, {s: colors[s] + s.rendered().encode() for s in stmts}, multi
        )
    return best


# ---------------------------------------------------------------------------
# Public operations


def role_fillers(window: Iterable[Statement]) -> dict[str, frozenset[RolePath]]:
    """Map each filler symbol to the set of role paths it occupies.

    Raises LabelCycleError when sameAs labels in the window form a cycle.
    """
    stmts = _prepare(window)
    letters = _choose_letters(stmts)
    return {sym: frozenset(paths) for sym, paths in _fillers(stmts, letters).items()}


def transform(window: Iterable[Statement]) -> frozenset[str]:
    """Convert a window into its canonical feature bag of path-equality atoms."""
    stmts = _prepare(window)
    letters = _choose_letters(stmts)
    return _emit(_fillers(stmts, letters))
