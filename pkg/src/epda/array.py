"""Delivery arrays: data model, PDA/EPDA verification, sub-arrays, metrics, JSON I/O.

An array has ``F`` rows (subfiles) and ``K`` columns (users). Each cell is
either :data:`STAR` (the user caches that subfile of every file) or a
positive integer label ``s`` in ``[1, S]`` (the subfile is delivered in
transmission slot ``s``).

All row/column indices exposed by this module (reports, sub-arrays, JSON)
are 1-based.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .errors import FormatError, InvalidEpda, MalformedArray, ParameterInfeasible, UnknownInteger

__all__ = [
    "STAR", "Entry", "is_star", "DeliveryArray", "SubArray", "Witness",
    "ConditionResult", "VerificationReport", "SchemeMetrics",
    "verify_epda", "verify_pda", "subarray", "metrics", "occurrences",
    "emit_array", "parse_array",
]

STAR = "*"
Entry = Union[int, str]
Cell = tuple[int, int]


def is_star(entry: Entry) -> bool:
    return entry == STAR


def _is_label(entry) -> bool:
    return isinstance(entry, int) and not isinstance(entry, bool)


@dataclass(frozen=True)
class DeliveryArray:
    """An ``F x K`` array of stars and labels with declared ``(K, L, F, Z, S)``.

    The constructor enforces structure only (shape, ``1 <= L <= K``, labels
    in ``[1, S]``). Whether the declared ``Z`` and ``S`` agree with the grid
    is a question for :func:`verify_epda`.
    """

    K: int
    L: int
    F: int
    Z: int
    S: int
    grid: tuple[tuple[Entry, ...], ...]

    def __post_init__(self):
        grid = tuple(tuple(row) for row in self.grid)
        object.__setattr__(self, "grid", grid)
        for name in ("K", "L", "F", "Z", "S"):
            value = getattr(self, name)
            if not _is_label(value) or value < 0:
                raise MalformedArray(f"{name} must be a non-negative integer, got {value!r}")
        if self.K < 1 or self.F < 1:
            raise MalformedArray("an array needs at least one row and one column")
        if not 1 <= self.L <= self.K:
            raise MalformedArray(f"need 1 <= L <= K, got L={self.L}, K={self.K}")
        if len(grid) != self.F:
            raise MalformedArray(f"grid has {len(grid)} rows, declared F={self.F}")
        for j, row in enumerate(grid, start=1):
            if len(row) != self.K:
                raise MalformedArray(f"row {j} has {len(row)} cells, declared K={self.K}")
            for k, entry in enumerate(row, start=1):
                if is_star(entry):
                    continue
                if not _is_label(entry) or not 1 <= entry <= self.S:
                    raise MalformedArray(
                        f"cell ({j},{k}) = {entry!r} is neither '*' nor a label in [1, {self.S}]"
                    )

    @classmethod
    def from_grid(cls, grid: Sequence[Sequence[Entry]], L: int = 1) -> "DeliveryArray":
        """Build an array, reading ``Z`` off column 1 and ``S`` off the largest label."""
        rows = [tuple(r) for r in grid]
        labels = [e for r in rows for e in r if not is_star(e)]
        return cls(
            K=len(rows[0]) if rows else 0,
            L=L,
            F=len(rows),
            Z=sum(1 for r in rows if is_star(r[0])) if rows else 0,
            S=max(labels, default=0),
            grid=tuple(rows),
        )

    @property
    def params(self) -> tuple[int, int, int, int, int]:
        return (self.K, self.L, self.F, self.Z, self.S)

    def entry(self, row: int, col: int) -> Entry:
        """Return the cell at 1-based ``(row, col)``."""
        return self.grid[row - 1][col - 1]

    def column(self, col: int) -> tuple[Entry, ...]:
        return tuple(row[col - 1] for row in self.grid)

    def with_entry(self, row: int, col: int, value: Entry) -> "DeliveryArray":
        """Copy with one cell replaced (1-based coordinates), same declared parameters."""
        grid = [list(r) for r in self.grid]
        grid[row - 1][col - 1] = value
        return DeliveryArray(self.K, self.L, self.F, self.Z, self.S, tuple(map(tuple, grid)))

    def pretty(self) -> str:
        cells = [["⋆" if is_star(e) else str(e) for e in row] for row in self.grid]
        width = max((len(c) for row in cells for c in row), default=1)
        return "\n".join(" ".join(c.rjust(width) for c in row) for row in cells)


def occurrences(A: DeliveryArray) -> dict[int, list[Cell]]:
    """Map every label to its 1-based ``(row, col)`` cells, sorted by column."""
    occ: dict[int, list[Cell]] = defaultdict(list)
    for k in range(A.K):
        for j in range(A.F):
            e = A.grid[j][k]
            if not is_star(e):
                occ[e].append((j + 1, k + 1))
    return dict(occ)


@dataclass(frozen=True)
class SubArray:
    """The restriction of an array to the rows and columns holding one label."""

    s: int
    parent_rows: tuple[int, ...]
    parent_cols: tuple[int, ...]
    grid: tuple[tuple[Entry, ...], ...]


def subarray(A: DeliveryArray, s: int) -> SubArray:
    """Delete every row and column of ``A`` that does not contain ``s``.

    Raises
    ------
    UnknownInteger
        If ``s`` never occurs in ``A``.
    """
    cells = occurrences(A).get(s)
    if not cells:
        raise UnknownInteger(f"integer {s} does not occur in the array")
    rows = tuple(sorted({j for j, _ in cells}))
    cols = tuple(sorted({k for _, k in cells}))
    grid = tuple(tuple(A.grid[j - 1][k - 1] for k in cols) for j in rows)
    return SubArray(s, rows, cols, grid)


# -- verification ----------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    """Concrete evidence of a violated condition.

    ``cells`` holds 1-based ``(row, col)`` coordinates; ``value`` is the
    offending label (C2, C3, C4, D2, D3) or column (C1, D1) when relevant.
    """

    note: str
    cells: tuple[Cell, ...] = ()
    value: int | None = None


@dataclass(frozen=True)
class ConditionResult:
    condition: str
    passed: bool
    witnesses: tuple[Witness, ...] = ()


@dataclass(frozen=True)
class VerificationReport:
    params: tuple[int, int, int, int, int]
    condition_results: tuple[ConditionResult, ...]
    regularity: int | None = None
    counts: dict[int, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.condition_results)

    @property
    def failed(self) -> set[str]:
        return {c.condition for c in self.condition_results if not c.passed}

    def result(self, condition: str) -> ConditionResult:
        for c in self.condition_results:
            if c.condition == condition:
                return c
        raise KeyError(condition)

    def lines(self) -> list[str]:
        out = [f"params (K,L,F,Z,S) = {self.params}"]
        for c in self.condition_results:
            out.append(f"{c.condition}: {'pass' if c.passed else 'FAIL'}")
            for w in c.witnesses:
                cells = " ".join(f"({j},{k})" for j, k in w.cells)
                out.append(f"  - {w.note}" + (f" at {cells}" if cells else ""))
        if self.regularity is not None:
            out.append(f"regularity {self.regularity}")
        out.append("passed" if self.passed else "failed")
        return out

    def to_dict(self) -> dict:
        return {
            "params": dict(zip("KLFZS", self.params)),
            "passed": self.passed,
            "regularity": self.regularity,
            "conditions": [
                {
                    "condition": c.condition,
                    "passed": c.passed,
                    "witnesses": [
                        {"note": w.note, "cells": [list(x) for x in w.cells], "value": w.value}
                        for w in c.witnesses
                    ],
                }
                for c in self.condition_results
            ],
        }


def _check_stars(A: DeliveryArray, cid: str) -> ConditionResult:
    witnesses = []
    for k in range(1, A.K + 1):
        col = A.column(k)
        stars = tuple((j, k) for j, e in enumerate(col, start=1) if is_star(e))
        if len(stars) != A.Z:
            cells = stars or tuple((j, k) for j in range(1, A.F + 1))
            witnesses.append(
                Witness(f"column {k} has {len(stars)} stars, declared Z={A.Z}", cells, k)
            )
    return ConditionResult(cid, not witnesses, tuple(witnesses))


def _check_alphabet(A: DeliveryArray, counts: Counter, cid: str) -> ConditionResult:
    witnesses = tuple(
        Witness(f"integer {s} does not occur", (), s) for s in range(1, A.S + 1) if counts[s] == 0
    )
    return ConditionResult(cid, not witnesses, witnesses)


def _regularity(A: DeliveryArray, counts: Counter) -> int | None:
    values = {counts[s] for s in range(1, A.S + 1)}
    if len(values) == 1:
        g = values.pop()
        return g or None
    return None


def verify_epda(A: DeliveryArray, require_regular: bool = False) -> VerificationReport:
    """Check conditions C1-C4 of an extended placement delivery array.

    Every condition is always evaluated so the report lists the complete
    failing set. With ``require_regular`` the report also carries C2' (all
    integers occur equally often) as a checked condition; otherwise
    regularity is only reported.
    """
    occ = occurrences(A)
    counts = Counter({s: len(cells) for s, cells in occ.items()})
    results = [_check_stars(A, "C1"), _check_alphabet(A, counts, "C2")]

    g = _regularity(A, counts)
    if require_regular:
        witnesses = ()
        if A.S > 0 and len({counts[s] for s in range(1, A.S + 1)}) > 1:
            ref = counts[1]
            witnesses = tuple(
                Witness(f"integer {s} occurs {counts[s]} times, integer 1 occurs {ref}",
                        tuple(occ.get(s, ())), s)
                for s in range(2, A.S + 1) if counts[s] != ref
            )
        results.append(ConditionResult("C2'", not witnesses, witnesses))

    c3 = []
    for s in sorted(occ):
        by_col: dict[int, list[Cell]] = defaultdict(list)
        for cell in occ[s]:
            by_col[cell[1]].append(cell)
        for k, cells in sorted(by_col.items()):
            if len(cells) > 1:
                c3.append(Witness(f"integer {s} appears {len(cells)} times in column {k}",
                                  tuple(sorted(cells)), s))
    results.append(ConditionResult("C3", not c3, tuple(c3)))

    c4 = []
    for s in sorted(occ):
        rows = sorted({j for j, _ in occ[s]})
        cols = sorted({k for _, k in occ[s]})
        for j in rows:
            labelled = tuple((j, k) for k in cols if not is_star(A.grid[j - 1][k - 1]))
            if len(labelled) > A.L:
                c4.append(Witness(
                    f"row {j} of the sub-array for {s} holds {len(labelled)} integers, L={A.L}",
                    labelled, s))
    results.append(ConditionResult("C4", not c4, tuple(c4)))

    return VerificationReport(A.params, tuple(results), g, dict(sorted(counts.items())))


def verify_pda(P: DeliveryArray) -> VerificationReport:
    """Check conditions D1, D2, D3(a), D3(b) of a placement delivery array.

    D3 is evaluated pairwise over each integer's occurrence list; pairs that
    already break D3(a) are not examined for D3(b).

    Raises
    ------
    ParameterInfeasible
        If ``P`` is not declared with ``L = 1``.
    """
    if P.L != 1:
        raise ParameterInfeasible(f"a PDA is declared with L = 1, got L={P.L}")
    occ = occurrences(P)
    counts = Counter({s: len(cells) for s, cells in occ.items()})
    d3a, d3b = [], []
    for s in sorted(occ):
        cells = occ[s]
        for i, (j1, k1) in enumerate(cells):
            for j2, k2 in cells[i + 1:]:
                if j1 == j2 or k1 == k2:
                    d3a.append(Witness(f"integer {s} repeated in a shared row or column",
                                       ((j1, k1), (j2, k2)), s))
                    continue
                bad = tuple(c for c in ((j1, k2), (j2, k1)) if not is_star(P.entry(*c)))
                if bad:
                    d3b.append(Witness(
                        f"integer {s} at ({j1},{k1}) and ({j2},{k2}) without the star pattern",
                        ((j1, k1), (j2, k2)) + bad, s))
    results = (
        _check_stars(P, "D1"),
        _check_alphabet(P, counts, "D2"),
        ConditionResult("D3a", not d3a, tuple(d3a)),
        ConditionResult("D3b", not d3b, tuple(d3b)),
    )
    return VerificationReport(P.params, results, _regularity(P, counts),
                              dict(sorted(counts.items())))


# -- metrics ---------------------------------------------------------------


@dataclass(frozen=True)
class SchemeMetrics:
    """Exact scheme figures of merit for a verified array."""

    memory_ratio: Fraction
    delivery_time: Fraction
    local_gain: Fraction
    dof_bound: Fraction
    dof: int | None
    per_integer_counts: dict[int, int]

    def to_dict(self) -> dict:
        return {
            "memory_ratio": str(self.memory_ratio),
            "delivery_time": str(self.delivery_time),
            "local_gain": str(self.local_gain),
            "dof_bound": str(self.dof_bound),
            "dof": self.dof,
        }


def metrics(A: DeliveryArray) -> SchemeMetrics:
    """Memory ratio ``Z/F``, delivery time ``S/F``, local gain and DoF of ``A``.

    Raises
    ------
    InvalidEpda
        If ``A`` fails :func:`verify_epda`.
    """
    report = verify_epda(A)
    if not report.passed:
        raise InvalidEpda(f"array fails {sorted(report.failed)}")
    memory = Fraction(A.Z, A.F)
    T = Fraction(A.S, A.F)
    g = report.regularity
    if g is not None:
        # every cell is either a star or one occurrence of some integer
        assert g * A.S == A.K * (A.F - A.Z)
        assert T == Fraction(A.K, g) * (1 - memory)
        assert g <= A.L + A.K * memory
    return SchemeMetrics(
        memory_ratio=memory,
        delivery_time=T,
        local_gain=1 - memory,
        dof_bound=A.L + A.K * memory,
        dof=g,
        per_integer_counts=report.counts,
    )


# -- serialization ---------------------------------------------------------

_KEYS = ("K", "L", "F", "Z", "S")


def emit_array(A: DeliveryArray) -> str:
    """Serialize to the JSON array format, one grid row per line."""
    head = ", ".join(f'"{k}": {getattr(A, k)}' for k in _KEYS)
    rows = ",\n    ".join(json.dumps(list(row)) for row in A.grid)
    return "{\n  " + head + ',\n  "entries": [\n    ' + rows + "\n  ]\n}\n"


def parse_array(text: str) -> DeliveryArray:
    """Parse the JSON array format produced by :func:`emit_array`.

    Raises
    ------
    FormatError
        With a line number for JSON syntax errors or a field path for
        schema violations.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, line=exc.lineno) from exc
    if not isinstance(obj, dict):
        raise FormatError("top level must be an object")
    for key in _KEYS:
        if key not in obj:
            raise FormatError("missing field", field=key)
        if not _is_label(obj[key]) or obj[key] < 0:
            raise FormatError(f"expected a non-negative integer, got {obj[key]!r}", field=key)
    entries = obj.get("entries")
    if not isinstance(entries, list):
        raise FormatError("expected a list of rows", field="entries")
    if len(entries) != obj["F"]:
        raise FormatError(f"{len(entries)} rows, declared F={obj['F']}", field="entries")
    grid = []
    for j, row in enumerate(entries):
        if not isinstance(row, list) or len(row) != obj["K"]:
            raise FormatError(f"expected a row of {obj['K']} cells", field=f"entries[{j}]")
        for k, cell in enumerate(row):
            if cell == STAR:
                continue
            if not _is_label(cell) or not 1 <= cell <= obj["S"]:
                raise FormatError(
                    f"cell must be '*' or an integer in [1, {obj['S']}], got {cell!r}",
                    field=f"entries[{j}][{k}]",
                )
        grid.append(tuple(row))
    try:
        return DeliveryArray(*(obj[k] for k in _KEYS), grid=tuple(grid))
    except MalformedArray as exc:
        raise FormatError(str(exc)) from exc


def concat_grids(grids: Iterable[Sequence[Sequence[Entry]]]) -> tuple[tuple[Entry, ...], ...]:
    """Place grids with equal row counts side by side."""
    grids = [tuple(map(tuple, g)) for g in grids]
    return tuple(sum((g[j] for g in grids), ()) for j in range(len(grids[0])))
