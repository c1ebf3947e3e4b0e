"""Rank-r structure of the matrix monoid M_n(F_q), and certified checks that
the maximal subgroup at a rank-r idempotent of the idempotent-generated free
object is GL_r(F_q)."""

from .counts import gaussian_binomial, gl_order, idempotent_count
from .enumeration import enumerate_Y
from .gf import make_field
from .matspace import Mat
from .pipeline import verify_theorem
from .tables import build_P, build_T_full, build_T_mk

__all__ = [
    "Mat",
    "build_P",
    "build_T_full",
    "build_T_mk",
    "enumerate_Y",
    "gaussian_binomial",
    "gl_order",
    "idempotent_count",
    "make_field",
    "verify_theorem",
]
__version__ = "0.1.0"
