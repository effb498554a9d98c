"""Arithmetic of polyhomogeneous index sets and per-face index families.

An index set records which (order, logpower) terms an expansion at a boundary
face may contain; a truncation marker says "orders at or above this are
unspecified".  Families map the eight standard faces of the low-energy double
space to index sets, and the generators below encode the three theorem-level
statements the fitting labs audit against.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .errors import DomainError

FACES = ("zf", "bf0", "rb0", "lb0", "sc", "bf", "lb", "rb")


class PreconditionError(ValueError):
    """A theorem hypothesis is violated by the requested parameters."""


@dataclass(frozen=True)
class IndexSet:
    """Sorted, deduplicated (order, logpower) entries plus a truncation marker."""

    entries: tuple[tuple[float, int], ...] = ()
    truncation: float = math.inf

    def __post_init__(self):
        ent = tuple(sorted(set((float(o), int(lp)) for o, lp in self.entries)))
        object.__setattr__(self, "entries", ent)

    @property
    def log_bearing(self) -> bool:
        return any(lp > 0 for _, lp in self.entries)

    def is_empty(self) -> bool:
        return not self.entries and math.isinf(self.truncation)

    def shift(self, a: float) -> "IndexSet":
        return IndexSet(tuple((o + a, lp) for o, lp in self.entries),
                        self.truncation + a)

    def union(self, other: "IndexSet") -> "IndexSet":
        return IndexSet(self.entries + other.entries,
                        min(self.truncation, other.truncation))

    def min_order(self) -> tuple[float, int] | None:
        """Leading entry: minimal order, maximal logpower at that order."""
        candidates = list(self.entries)
        if not math.isinf(self.truncation):
            candidates.append((self.truncation, 0))
        if not candidates:
            return None
        o_min = min(o for o, _ in candidates)
        lp_max = max(lp for o, lp in candidates if o == o_min)
        return (o_min, lp_max)

    def contains(self, order: float, logpower: int = 0, tol: float = 1e-9) -> bool:
        """Is a term of this (order, logpower) admitted by the set?"""
        if order >= self.truncation - tol:
            return True
        return any(abs(order - o) <= tol and logpower <= lp
                   for o, lp in self.entries)

    def to_text(self) -> str:
        def fmt(x: float) -> str:
            return str(int(x)) if x == int(x) else repr(x)

        body = "{" + ",".join(f"({fmt(o)},{lp})" for o, lp in self.entries) + "}"
        if math.isinf(self.truncation):
            return body
        return body + f"+trunc({fmt(self.truncation)})"


def shift(s: IndexSet, a: float) -> IndexSet:
    return s.shift(a)


def union(s: IndexSet, t: IndexSet) -> IndexSet:
    return s.union(t)


def min_order(s: IndexSet) -> tuple[float, int] | None:
    return s.min_order()


_SET_RE = re.compile(r"^\{(?P<body>[^{}]*)\}(?:\+trunc\((?P<trunc>[^)]+)\))?$")
_PAIR_RE = re.compile(r"\(\s*(-?[0-9.]+)\s*,\s*([0-9]+)\s*\)")


def parse_index_set(text: str) -> IndexSet:
    """Parse the literal grammar "{(-2,0),(-1,0),(0,1)}+trunc(2)"."""
    m = _SET_RE.match(text.strip().replace(" ", ""))
    if not m:
        raise DomainError(f"cannot parse index set literal {text!r}")
    body = m.group("body")
    entries = []
    if body:
        consumed = _PAIR_RE.findall(body)
        rebuilt = ",".join(f"({o},{lp})" for o, lp in consumed)
        if rebuilt != body:
            raise DomainError(f"malformed index set entries in {text!r}")
        entries = [(float(o), int(lp)) for o, lp in consumed]
    trunc = math.inf if m.group("trunc") is None else float(m.group("trunc"))
    return IndexSet(tuple(entries), trunc)


@dataclass
class IndexFamily:
    """Index sets for the eight boundary faces; missing face = rapidly vanishing."""

    faces: dict[str, IndexSet] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        for name in self.faces:
            if name not in FACES:
                raise DomainError(f"unknown face label {name!r}")
        for name in FACES:
            self.faces.setdefault(name, IndexSet())

    def __getitem__(self, face: str) -> IndexSet:
        if face not in FACES:
            raise DomainError(f"unknown face label {face!r}")
        return self.faces[face]

    def to_text(self) -> str:
        parts = [f"{face}:{self.faces[face].to_text()}"
                 for face in FACES if not self.faces[face].is_empty()]
        return "; ".join(parts)


def _check_decay_condition(n: int, m_prime: float):
    if n in (3, 4, 5) and not m_prime > (5 - n) / 2:
        raise PreconditionError(
            f"decay-order condition requires m' > (5-n)/2 = {(5 - n) / 2} "
            f"for n = {n}; got m' = {m_prime}")


def theorem_index_family(theorem: str, n: int, m_prime: float = 0.0,
                         nu: float = math.nan) -> IndexFamily:
    """Index family asserted by one of the supported resolvent statements.

    theorem is one of:
      * "euclidean_nullspace": asymptotically Euclidean, kernel allowed, the
        zf set starts (-2,0),(-1,0),(0,1) with an unspecified integral tail,
        and rb0/lb0 start at n/2 - 4 + m'.
      * "conic_nullspace": exact-cone version; zf tail starts strictly above
        order -1, other faces as in the Euclidean case.
      * "dim3_full": the dimension-3 statement with zf/bf0 at -2 and
        rb0/lb0 at -3/2, integral tails.
      * "conic_fractional": exact cone whose critical mode has non-integer
        order nu (pass it as the keyword).  For 1/2 <= nu < 1 the mode is a
        resonance and zf leads at -2*nu (no -2 term), rb0/lb0 at -nu - 1.
        For 1 < nu < 2 it is a zero mode: zf holds (-2,0) and (2*nu-4,0)
        with nothing in between, rb0/lb0 lead at nu - 3.
    """
    if n < 3:
        raise PreconditionError(f"dimension n >= 3 required, got {n}")
    if not 0.0 <= m_prime <= 2.0:
        raise PreconditionError(f"m' must lie in [0, 2], got {m_prime}")

    sc = IndexSet(((0.0, 0),), 0.0)

    if theorem == "euclidean_nullspace":
        _check_decay_condition(n, m_prime)
        zf = IndexSet(((-2.0, 0), (-1.0, 0), (0.0, 1)), 0.0)
        bf0 = IndexSet(((-2.0, 0),), -2.0)
        edge = n / 2.0 - 4.0 + m_prime
        rb0 = IndexSet(((edge, 0),), edge)
        return IndexFamily({"zf": zf, "bf0": bf0, "rb0": rb0, "lb0": rb0,
                            "sc": sc}, label=f"euclidean_nullspace(n={n}, m'={m_prime})")
    if theorem == "conic_nullspace":
        _check_decay_condition(n, m_prime)
        # zf: (-2,0), (-1,0), then a tail strictly above -1
        zf = IndexSet(((-2.0, 0), (-1.0, 0)), -1.0 + 1e-6)
        bf0 = IndexSet(((-2.0, 0), (-1.0, 0)), -1.0 + 1e-6)
        edge = n / 2.0 - 4.0 + m_prime
        rb0 = IndexSet(((edge, 0),), edge)
        return IndexFamily({"zf": zf, "bf0": bf0, "rb0": rb0, "lb0": rb0,
                            "sc": sc}, label=f"conic_nullspace(n={n}, m'={m_prime})")
    if theorem == "dim3_full":
        if n != 3:
            raise PreconditionError("dim3_full is a statement about n = 3")
        zf = IndexSet(((-2.0, 0),), -2.0)
        rb0 = IndexSet(((-1.5, 0),), -1.5)
        return IndexFamily({"zf": zf, "bf0": zf, "rb0": rb0, "lb0": rb0,
                            "sc": sc}, label="dim3_full(n=3)")
    if theorem == "conic_fractional":
        if math.isnan(nu):
            raise PreconditionError("conic_fractional needs the mode order nu")
        eps = 1e-6
        if 0.5 <= nu < 1.0:
            zf = IndexSet(((-2.0 * nu, 0),), -2.0 * nu + eps)
            edge = -nu - 1.0
        elif 1.0 < nu < 2.0:
            zf = IndexSet(((-2.0, 0), (2.0 * nu - 4.0, 0)), 2.0 * nu - 4.0 + eps)
            edge = nu - 3.0
        else:
            raise PreconditionError(
                f"conic_fractional needs nu in [1/2, 1) or (1, 2), got {nu}")
        bf0 = IndexSet(((-2.0, 0),), -2.0)
        rb0 = IndexSet(((edge, 0),), edge)
        return IndexFamily({"zf": zf, "bf0": bf0, "rb0": rb0, "lb0": rb0,
                            "sc": sc}, label=f"conic_fractional(n={n}, nu={nu})")
    raise DomainError(f"unknown theorem label {theorem!r}")
