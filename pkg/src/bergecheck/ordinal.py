"""Countable ordinals below epsilon_0 in Cantor normal form, plus an omega_1 marker.

The counterexample space X is the set of non-limit countable ordinals together
with omega_1, in the order topology.  Non-limit ordinals are isolated, and the
neighbourhoods of omega_1 are the tails (s, omega_1] intersected with X.  On X
with a one-point Y, u(x, y) = 0 for x != omega_1 and u(omega_1, y) = 1.  Every
compact subset of X is finite, so u is K-inf-compact.  But v = u(., y) has the
level set {v <= 1/2} = X minus {omega_1}, which is not closed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence, Union

import numpy as np

from .errors import ExprSyntaxError
from .exprparse import TokenStream, tokenize


@dataclass(frozen=True)
class Ordinal:
    """Cantor normal form: ((exponent, coefficient), ...) with strictly decreasing exponents."""

    terms: tuple[tuple["Ordinal", int], ...] = ()

    def __post_init__(self):
        for i, (e, c) in enumerate(self.terms):
            if not isinstance(e, Ordinal) or int(c) != c or c < 1:
                raise ValueError("terms need Ordinal exponents and positive integer coefficients")
            if i and _cmp(self.terms[i - 1][0], e) <= 0:
                raise ValueError("exponents must be strictly decreasing")

    @classmethod
    def finite(cls, n: int) -> "Ordinal":
        if n < 0:
            raise ValueError("ordinals are nonnegative")
        return cls(((ZERO, n),)) if n else ZERO

    @classmethod
    def omega_power(cls, e: "Ordinal", c: int = 1) -> "Ordinal":
        return cls(((e, c),))

    def __str__(self) -> str:
        return render(self)

    def __lt__(self, other: "Ordinal") -> bool:
        return _cmp(self, other) < 0


@dataclass(frozen=True)
class Omega1:
    """The first uncountable ordinal; a marker that is never computed with."""

    def __str__(self) -> str:
        return "ω₁"


ZERO = Ordinal()
ONE = Ordinal(((ZERO, 1),))
OMEGA = Ordinal(((ONE, 1),))
OMEGA1 = Omega1()
Point = Union[Ordinal, Omega1]


def _cmp(a: Ordinal, b: Ordinal) -> int:
    for (ea, ca), (eb, cb) in zip(a.terms, b.terms):
        c = _cmp(ea, eb)
        if c:
            return c
        if ca != cb:
            return -1 if ca < cb else 1
    return (len(a.terms) > len(b.terms)) - (len(a.terms) < len(b.terms))


def compare(a: Point, b: Point) -> str:
    """Return '<', '=' or '>'."""
    if isinstance(a, Omega1) or isinstance(b, Omega1):
        c = isinstance(a, Omega1) - isinstance(b, Omega1)
    else:
        c = _cmp(a, b)
    return "<" if c < 0 else (">" if c > 0 else "=")


def successor(a: Ordinal) -> Ordinal:
    if a.terms and a.terms[-1][0] == ZERO:
        return Ordinal(a.terms[:-1] + ((ZERO, a.terms[-1][1] + 1),))
    return Ordinal(a.terms + ((ZERO, 1),))


def is_limit(a: Ordinal) -> bool:
    return bool(a.terms) and a.terms[-1][0] != ZERO


def in_space(p: Point) -> bool:
    """Membership in X: omega_1 or a non-limit countable ordinal."""
    return isinstance(p, Omega1) or not is_limit(p)


# ----------------------------------------------------------------- text forms

def render(a: Point, ascii: bool = False) -> str:
    if isinstance(a, Omega1):
        return "w1" if ascii else "ω₁"
    if not a.terms:
        return "0"
    w = "w" if ascii else "ω"
    parts = []
    for e, c in a.terms:
        if e == ZERO:
            parts.append(str(c))
            continue
        if e == ONE:
            base = w
        else:
            es = render(e, ascii)
            base = f"{w}^{es}" if not e.terms[1:] and e.terms[0][0] == ZERO else f"{w}^({es})"
        parts.append(base if c == 1 else f"{base}*{c}")
    return " + ".join(parts)


def parse_ordinal(text: str) -> Ordinal:
    """Parse e.g. ``"w^2*3 + w + 4"`` or ``"w^(w+1)"``; ``ω`` is accepted for ``w``.

    Terms must be written in non-increasing order of exponent; equal adjacent
    exponents are merged.
    """
    ts = TokenStream(tokenize(text))
    a = _parse_sum(ts)
    if ts.peek.kind != "END":
        raise ExprSyntaxError(ts.peek.pos, f"unexpected {ts.peek.text!r}")
    return a


def _parse_sum(ts: TokenStream) -> Ordinal:
    terms: list[tuple[Ordinal, int]] = []
    while True:
        pos = ts.peek.pos
        e, c = _parse_term(ts)
        if c:
            if terms and terms[-1][0] == e:
                terms[-1] = (e, terms[-1][1] + c)
            elif terms and _cmp(terms[-1][0], e) < 0:
                raise ExprSyntaxError(pos, "terms must be in decreasing order (no absorption is performed)")
            else:
                terms.append((e, c))
        if not ts.accept("OP", "+"):
            return Ordinal(tuple(terms))


def _parse_term(ts: TokenStream) -> tuple[Ordinal, int]:
    tok = ts.peek
    if tok.kind == "NUM":
        ts.next()
        if not tok.text.isdigit():
            raise ExprSyntaxError(tok.pos, "ordinal coefficients must be natural numbers")
        return ZERO, int(tok.text)
    if tok.kind == "IDENT" and tok.text in ("w", "ω"):
        ts.next()
        e = ONE
        if ts.accept("OP", "^"):
            if ts.accept("LPAREN"):
                e = _parse_sum(ts)
                ts.expect("RPAREN")
            else:
                num = ts.expect("NUM")
                if not num.text.isdigit():
                    raise ExprSyntaxError(num.pos, "exponent must be a natural number or parenthesized")
                e = Ordinal.finite(int(num.text))
        c = 1
        if ts.accept("OP", "*"):
            num = ts.expect("NUM")
            if not num.text.isdigit() or int(num.text) < 1:
                raise ExprSyntaxError(num.pos, "coefficient must be a positive natural number")
            c = int(num.text)
        return e, c
    raise ExprSyntaxError(tok.pos, f"expected 'w' or a natural number, got {tok.text or 'end of input'!r}")


# ------------------------------------------------------------- compactness

@dataclass(frozen=True)
class Tail:
    """The neighbourhood (s, omega_1] intersected with X."""

    start: Ordinal


@dataclass(frozen=True)
class CompactnessVerdict:
    compact: bool
    justification: str


def is_compact_subset(points: Union[Sequence[Point], Tail]) -> CompactnessVerdict:
    if isinstance(points, Tail):
        s = render(points.start)
        return CompactnessVerdict(False, (
            f"({s}, ω₁] ∩ X is infinite: the singletons {{α}} for non-limit α in ({s}, ω₁) "
            f"plus ({s}, ω₁] form an open cover without a finite subcover"
        ))
    pts = list(points)
    bad = [p for p in pts if not in_space(p)]
    if bad:
        raise ValueError(f"{render(bad[0])} is a limit ordinal, not a point of X")
    return CompactnessVerdict(True, f"finite set of {len(set(pts))} points; every finite set is compact")


# ---------------------------------------------------------------- the example

def u_value(x: Point) -> int:
    return 1 if isinstance(x, Omega1) else 0


def random_point(rng: np.random.Generator, omega1_prob: float = 0.1) -> Point:
    """Random element of X: omega_1, or a non-limit CNF ordinal with small exponents."""
    if rng.random() < omega1_prob:
        return OMEGA1
    n_terms = int(rng.integers(0, 4))
    exps = sorted({int(e) for e in rng.integers(1, 4, size=n_terms)}, reverse=True)
    terms = [(Ordinal.finite(e), int(rng.integers(1, 5))) for e in exps]
    # a positive finite part keeps the ordinal non-limit; zero is allowed only alone
    c = int(rng.integers(1, 6)) if terms else int(rng.integers(0, 6))
    if c:
        terms.append((ZERO, c))
    return Ordinal(tuple(terms))


@dataclass
class KBatchResult:
    size: int
    compact: bool
    level_sets: dict[str, int]  # lambda -> cardinality


def k_batch(count: int = 100, max_size: int = 20, seed: int = 0) -> list[KBatchResult]:
    """Level sets of u on Gr_K for random finite K (one-point Y, so Gr_K ~ K)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        k = int(rng.integers(1, max_size + 1))
        pts = list({render(p): p for p in (random_point(rng) for _ in range(k))}.values())
        verdict = is_compact_subset(pts)
        levels = {lam: sum(1 for p in pts if u_value(p) <= float(lam)) for lam in ("0", "0.5", "1")}
        out.append(KBatchResult(len(pts), verdict.compact, levels))
    return out


def counterexample_report(
    probes: Sequence[Ordinal], k_count: int = 100, k_max: int = 20, seed: int = 0
) -> dict[str, Any]:
    witnesses = []
    for s in probes:
        a = successor(s)
        assert compare(s, a) == "<" and compare(a, OMEGA1) == "<" and not is_limit(a)
        witnesses.append({
            "probe": render(s),
            "witness": render(a),
            "witness_ascii": render(a, ascii=True),
            "u_witness": u_value(a),
            "v_witness": u_value(a),
            "neighbourhood": f"({render(s)}, ω₁] ∩ X",
            "tail_compact": is_compact_subset(Tail(s)).compact,
        })
    batch = k_batch(k_count, k_max, seed)
    all_ok = all(b.compact for b in batch)
    return {
        "check": "ordinal_counterexample",
        "status": "pass" if all_ok else "fail",
        "definition": {"u(x,y) for x != ω₁": 0, "u(ω₁,y)": 1, "Y": "one point"},
        "v_omega1": u_value(OMEGA1),
        "level_set": "D_v(1/2; X) = X ∖ {ω₁}; ω₁ lies in its closure, so it is not closed and v is not lsc",
        "witnesses": witnesses,
        "inequality": "liminf v(α) = 0 < 1 = v(ω₁)",
        "liminf_proxy": 0,
        "k_batch": {
            "count": len(batch),
            "max_size": max((b.size for b in batch), default=0),
            "all_compact": all_ok,
            "all_level_sets_finite": all_ok,
        },
        "note": ("Along every sequence in X converging to ω₁ the limit is attained, since such "
                 "a sequence is eventually equal to ω₁; only nets indexed by uncountable sets "
                 "of non-limit ordinals exhibit the drop."),
    }
