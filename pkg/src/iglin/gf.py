"""Finite field arithmetic for F_q.

Elements are canonical integer codes ``0..q-1``. For a prime field the code is
the residue itself; for an extension field ``F_{p^k}`` the code of
``c_0 + c_1 x + ... + c_{k-1} x^{k-1}`` is ``sum(c_i * p**i)``. Code 0 is the
additive identity and code 1 the multiplicative identity in both cases.

Only commutative fields are supported, so left and right scalar actions
coincide and no distinction between them is kept anywhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NewType, Sequence

import numpy as np

FqElem = NewType("FqElem", int)

# coefficient lists, lowest degree first
BUILTIN_POLYS = {
    4: (1, 1, 1),  # x^2 + x + 1
    8: (1, 1, 0, 1),  # x^3 + x + 1
    9: (1, 0, 1),  # x^2 + 1
}


class FieldError(ValueError):
    pass


def _prime_power(q: int) -> tuple[int, int] | None:
    if q < 2:
        return None
    p = 2
    while p * p <= q:
        if q % p == 0:
            break
        p += 1
    else:
        return q, 1
    deg = 0
    while q % p == 0:
        q //= p
        deg += 1
    return (p, deg) if q == 1 else None


@dataclass(frozen=True, eq=False)
class FieldCtx:
    """Operation tables for F_q. Immutable once built."""

    q: int
    p: int
    deg: int
    modulus: tuple[int, ...] | None
    add_table: np.ndarray = field(repr=False)
    mul_table: np.ndarray = field(repr=False)
    neg_table: np.ndarray = field(repr=False)
    inv_table: np.ndarray = field(repr=False)

    def __post_init__(self):
        for t in (self.add_table, self.mul_table, self.neg_table, self.inv_table):
            t.setflags(write=False)
        # plain-list copies: scalar lookups in Python loops are much faster on lists
        object.__setattr__(self, "_add", self.add_table.tolist())
        object.__setattr__(self, "_mul", self.mul_table.tolist())
        object.__setattr__(self, "_neg", self.neg_table.tolist())
        object.__setattr__(self, "_inv", self.inv_table.tolist())

    @property
    def is_prime(self) -> bool:
        return self.deg == 1

    def add(self, a: int, b: int) -> int:
        return self._add[a][b]

    def sub(self, a: int, b: int) -> int:
        return self._add[a][self._neg[b]]

    def mul(self, a: int, b: int) -> int:
        return self._mul[a][b]

    def neg(self, a: int) -> int:
        return self._neg[a]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero in F_%d" % self.q)
        return self._inv[a]

    def elements(self) -> range:
        return range(self.q)

    def __eq__(self, other):
        return isinstance(other, FieldCtx) and (self.q, self.modulus) == (other.q, other.modulus)

    def __hash__(self):
        return hash((self.q, self.modulus))


def _poly_mulmod(a: list[int], b: list[int], mod: Sequence[int], p: int) -> list[int]:
    k = len(mod) - 1
    prod = [0] * (2 * k - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] = (prod[i + j] + ai * bj) % p
    # reduce by the monic modulus from the top down
    for d in range(len(prod) - 1, k - 1, -1):
        c = prod[d]
        if c:
            for i in range(k + 1):
                prod[d - k + i] = (prod[d - k + i] - c * mod[i]) % p
    return prod[:k]


def _digits(code: int, p: int, k: int) -> list[int]:
    out = []
    for _ in range(k):
        out.append(code % p)
        code //= p
    return out


def make_field(q: int, irreducible_poly: Sequence[int] | None = None) -> FieldCtx:
    """Build F_q.

    For ``q = p**k`` with ``k > 1`` the modulus is ``irreducible_poly`` (lowest
    degree coefficient first, monic, degree ``k``) or the built-in choice for
    q in {4, 8, 9}.
    """
    pp = _prime_power(q)
    if pp is None:
        raise FieldError(f"{q} is not a prime power")
    p, deg = pp
    if deg == 1:
        if irreducible_poly is not None:
            raise FieldError("prime fields take no modulus polynomial")
        a = np.arange(q)
        add = (a[:, None] + a[None, :]) % q
        mul = (a[:, None] * a[None, :]) % q
        neg = (-a) % q
        inv = np.zeros(q, dtype=np.int64)
        for x in range(1, q):
            inv[x] = pow(x, q - 2, q)
        return FieldCtx(q, p, 1, None, add, mul, neg, inv)

    if irreducible_poly is None:
        if q not in BUILTIN_POLYS:
            raise FieldError(f"no built-in modulus for q={q}; supply an irreducible polynomial")
        irreducible_poly = BUILTIN_POLYS[q]
    mod = tuple(int(c) % p for c in irreducible_poly)
    if len(mod) != deg + 1 or mod[-1] != 1:
        raise FieldError(f"modulus must be monic of degree {deg} over F_{p}")

    polys = [_digits(c, p, deg) for c in range(q)]
    add = np.zeros((q, q), dtype=np.int64)
    mul = np.zeros((q, q), dtype=np.int64)
    for i in range(q):
        for j in range(q):
            s = [(x + y) % p for x, y in zip(polys[i], polys[j])]
            add[i, j] = sum(c * p**e for e, c in enumerate(s))
            m = _poly_mulmod(polys[i], polys[j], mod, p)
            mul[i, j] = sum(c * p**e for e, c in enumerate(m))
    neg = np.array([sum(((-c) % p) * p**e for e, c in enumerate(polys[i])) for i in range(q)])
    inv = np.zeros(q, dtype=np.int64)
    for i in range(1, q):
        hits = np.flatnonzero(mul[i] == 1)
        if len(hits) != 1:
            # a zero divisor exists, so the modulus factors
            raise FieldError(f"modulus {list(mod)} is reducible over F_{p}")
        inv[i] = hits[0]
    return FieldCtx(q, p, deg, mod, add, mul, neg, inv)


def add(ctx: FieldCtx, a: int, b: int) -> int:
    return ctx.add(a, b)


def mul(ctx: FieldCtx, a: int, b: int) -> int:
    return ctx.mul(a, b)


def neg(ctx: FieldCtx, a: int) -> int:
    return ctx.neg(a)


def inv(ctx: FieldCtx, a: int) -> int:
    return ctx.inv(a)
