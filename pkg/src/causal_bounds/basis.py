"""Term language for the balancing functions g(X) and its expansion to a matrix.

Grammar, one term per string::

    1                  intercept
    x3                 a covariate (1-based index)
    x3^2               integer power >= 2
    x1^2*x3            product of factors; repeated covariates have powers merged
    custom:name        a caller-supplied column, looked up at expansion time

Terms are normalized with factors sorted by covariate index, so ``x2*x1`` and
``x1*x2`` are the same term.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .data import Dataset
from .errors import DuplicateTerm, NonFiniteValue, ParseError, UnknownCovariate

# a term is either a tuple of (covariate index, power) pairs, () meaning the
# intercept, or the string "custom:<name>"
Term = Union[tuple, str]

_FACTOR = re.compile(r"^x([1-9][0-9]*)(?:\^([0-9]+))?$")
_CUSTOM = re.compile(r"^custom:([A-Za-z_][A-Za-z0-9_.-]*)$")

LADDER_LEVELS = ("D1", "D2", "D3", "D4")
D4_CUSTOM = ("custom:d4a", "custom:d4b")
RATIO_GUARD = 1e-8


def parse_term(text: str) -> Term:
    s = text.strip().replace(" ", "")
    if s == "1":
        return ()
    m = _CUSTOM.match(s)
    if m:
        return f"custom:{m.group(1)}"
    if not s:
        raise ParseError("empty term")
    powers: dict[int, int] = {}
    for factor in s.split("*"):
        m = _FACTOR.match(factor)
        if not m:
            raise ParseError(f"cannot parse factor {factor!r} in term {text!r}")
        j = int(m.group(1))
        p = 1 if m.group(2) is None else int(m.group(2))
        if m.group(2) is not None and p < 2:
            raise ParseError(f"power must be an integer >= 2 in {text!r}")
        powers[j] = powers.get(j, 0) + p
    return tuple(sorted(powers.items()))


def term_label(t: Term) -> str:
    if isinstance(t, str):
        return t
    if t == ():
        return "1"
    return "*".join(f"x{j}" if p == 1 else f"x{j}^{p}" for j, p in t)


@dataclass(frozen=True)
class DesignBasis:
    terms: tuple

    @property
    def d(self) -> int:
        return len(self.terms)

    @property
    def labels(self) -> list[str]:
        return [term_label(t) for t in self.terms]

    def max_index(self) -> int:
        return max((j for t in self.terms if not isinstance(t, str) for j, _ in t), default=0)

    def __contains__(self, item) -> bool:
        if isinstance(item, str) and not item.startswith("custom:"):
            item = parse_term(item)
        return item in self.terms


@dataclass(frozen=True, eq=False)
class BasisMatrix:
    g: np.ndarray
    column_labels: tuple


def parse_terms(spec: Union[str, Sequence[str]]) -> DesignBasis:
    """Parse a list of term strings (or one comma-separated string).

    Input order is kept except that the intercept, when present, moves to the
    first column.
    """
    if isinstance(spec, str):
        spec = [s for s in spec.split(",")]
    terms: list = []
    seen: dict = {}
    for raw in spec:
        t = parse_term(raw)
        if t in seen:
            raise DuplicateTerm(f"{raw!r} duplicates {seen[t]!r}")
        seen[t] = raw
        terms.append(t)
    if not terms:
        raise ParseError("at least one term is required")
    if () in terms:
        terms.remove(())
        terms.insert(0, ())
    return DesignBasis(tuple(terms))


def ladder(level: str, k: int) -> DesignBasis:
    """Nested polynomial bases D1 ⊂ D2 ⊂ D3 ⊂ D4 over ``k`` covariates.

    D1: intercept, linear and squared terms. D2 adds pairwise interactions.
    D3 is D1 plus cubes and the pairwise interactions (so D2 ⊂ D3).
    D4 adds 4th and 5th powers plus, when ``k >= 4``, the two custom slots in
    ``D4_CUSTOM`` (see :func:`d4_extra_columns`).
    """
    level = level.upper()
    if level not in LADDER_LEVELS:
        raise ParseError(f"unknown ladder level {level!r}")
    if k < 1:
        raise ValueError("k must be >= 1")
    idx = range(1, k + 1)
    terms: list = [()]
    terms += [((j, 1),) for j in idx]
    terms += [((j, 2),) for j in idx]
    if level != "D1":
        terms += [((a, 1), (b, 1)) for a, b in combinations(idx, 2)]
    if level in ("D3", "D4"):
        terms += [((j, 3),) for j in idx]
    if level == "D4":
        terms += [((j, 4),) for j in idx]
        terms += [((j, 5),) for j in idx]
        if k >= 4:
            terms += list(D4_CUSTOM)
    return DesignBasis(tuple(terms))


def d4_extra_columns(x: np.ndarray) -> dict[str, np.ndarray]:
    """The two non-polynomial D4 columns built from the first four covariates.

    ``d4a = x4^3 (x3 - x2)(x1 + 1.5 x2)`` and ``d4b = d4a / (x1 - x3)``.
    Raises NonFiniteValue when ``|x1 - x3| < 1e-8`` for any row.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] < 4:
        raise UnknownCovariate("the D4 custom columns need at least four covariates")
    x1, x2, x3, x4 = x[:, 0], x[:, 1], x[:, 2], x[:, 3]
    num = x4**3 * (x3 - x2) * (x1 + 1.5 * x2)
    den = x1 - x3
    bad = np.abs(den) < RATIO_GUARD
    if bad.any():
        raise NonFiniteValue(f"{int(bad.sum())} unit(s) with |x1 - x3| < {RATIO_GUARD:g}")
    return {D4_CUSTOM[0]: num, D4_CUSTOM[1]: num / den}


def expand(
    b: DesignBasis,
    d: Union[Dataset, np.ndarray],
    custom: Optional[Mapping[str, np.ndarray]] = None,
) -> BasisMatrix:
    """Evaluate every term of ``b`` at every row of the covariates."""
    x = d.x if isinstance(d, Dataset) else np.asarray(d, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    n, k = x.shape
    if b.max_index() > k:
        raise UnknownCovariate(f"term refers to x{b.max_index()} but only {k} covariates exist")
    g = np.empty((n, b.d))
    for col, t in enumerate(b.terms):
        if isinstance(t, str):
            if custom is None or t not in custom:
                raise UnknownCovariate(f"no column supplied for {t}")
            v = np.asarray(custom[t], dtype=float).reshape(-1)
            if v.shape[0] != n:
                raise ValueError(f"custom column {t} has length {v.shape[0]}, expected {n}")
            g[:, col] = v
            continue
        v = np.ones(n)
        for j, p in t:
            v = v * x[:, j - 1] ** p
        g[:, col] = v
    if not np.all(np.isfinite(g)):
        raise NonFiniteValue("basis expansion produced non-finite entries")
    return BasisMatrix(g, tuple(b.labels))
