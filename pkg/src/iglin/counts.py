"""Exact counting formulas over F_q. Python ints throughout, so nothing wraps."""

from __future__ import annotations


def gaussian_binomial(n: int, r: int, q: int) -> int:
    """Number of r-dimensional subspaces of F_q^n."""
    if q < 2:
        raise ValueError("q must be at least 2")
    if not 0 <= r <= n:
        raise ValueError(f"need 0 <= r <= n, got n={n}, r={r}")
    num = den = 1
    for i in range(r):
        num *= q ** (n - i) - 1
        den *= q ** (r - i) - 1
    value, rem = divmod(num, den)
    assert rem == 0
    return value


def gl_order(m: int, q: int) -> int:
    if m < 1:
        raise ValueError("m must be positive")
    out = 1
    for i in range(m):
        out *= q**m - q**i
    return out


def idempotent_count(n: int, r: int, q: int) -> int:
    """Rank-r idempotents in M_n(F_q): q^{r(n-r)} per row space."""
    if not 1 <= r <= n:
        raise ValueError(f"need 1 <= r <= n, got n={n}, r={r}")
    return gaussian_binomial(n, r, q) * q ** (r * (n - r))


# The GL_5(F_2) order is sometimes displayed with (2^5 - 2) appearing twice
# and (2^5 - 1) once; the general product below is what is used here.
GL_TYPO_NOTE = (
    "the often-quoted product for |GL_5(F_2)| repeats the factor (2^5 - 2); "
    "the value here is the general product (q^m - 1)(q^m - q)...(q^m - q^(m-1))"
)


def compare(n: int, r: int, q: int) -> dict:
    idem = idempotent_count(n, r, q)
    grp = gl_order(r, q)
    return {
        "n": n,
        "r": r,
        "q": q,
        "gaussian": gaussian_binomial(n, r, q),
        "gl_order": grp,
        "idempotents": idem,
        "generators_vs_group": "less" if idem < grp else "equal" if idem == grp else "greater",
    }


def generator_shortfall_check() -> dict:
    """Idempotents of rank 5 in M_7(F_2) are fewer than elements of GL_5(F_2)."""
    main = compare(7, 5, 2)
    assert main["idempotents"] == 2**10 * (2**7 - 1) * (2**6 - 1) // 3
    assert main["idempotents"] < main["gl_order"], main
    return {
        "main": main,
        "holds": True,
        "note": GL_TYPO_NOTE,
        "sweep_n7_q2": [compare(7, r, 2) for r in range(1, 7)],
        "small": compare(4, 1, 2),
    }
