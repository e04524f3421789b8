"""Closed-form degrees of freedom in exact rational arithmetic.

Every function takes a :class:`DofQuery` and returns a :class:`DofReport` of
``fractions.Fraction`` values. ``T`` defaults to the scheme's natural
supersymbol length (L + 1 for the hybrid scheme, K + 1 for Blind IA) and may
be overridden explicitly.
"""
from __future__ import annotations

import csv
import itertools
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, TextIO

from .errors import InvalidParameter

__all__ = [
    "DofQuery",
    "DofReport",
    "GainThreshold",
    "dof_hybrid",
    "dof_tdma_hybrid_comparison",
    "dof_blind_ia",
    "dof_tdma_blind_comparison",
    "blind_ia_gain",
    "blind_ia_gain_threshold",
    "hybrid_gain_threshold",
    "dof_grid",
    "write_dof_table",
]


@dataclass(frozen=True)
class DofQuery:
    K: int
    L: int
    N: int
    M_r: int | None = None  # defaults to N
    T: int | None = None  # defaults per scheme
    x: int = 0  # TDMA slots given to the femtocells
    parity: str | None = None  # "odd" / "even"; defaults to the parity of x

    def __post_init__(self):
        for name in ("K", "N"):
            if getattr(self, name) < 1:
                raise InvalidParameter(f"{name} must be >= 1")
        if self.L < 0:
            raise InvalidParameter("L must be >= 0")
        if self.x < 0:
            raise InvalidParameter("x must be >= 0")
        if self.M_r is not None and self.M_r < 1:
            raise InvalidParameter("M_r must be >= 1")
        if self.parity not in (None, "odd", "even"):
            raise InvalidParameter("parity must be 'odd' or 'even'")

    @property
    def mr(self) -> int:
        return self.N if self.M_r is None else self.M_r

    @property
    def branch(self) -> str:
        if self.parity is not None:
            return self.parity
        return "odd" if self.x % 2 else "even"

    def slots(self, default: int) -> int:
        T = default if self.T is None else self.T
        if T < 1:
            raise InvalidParameter("T must be >= 1")
        if self.x >= T:
            raise InvalidParameter(f"x = {self.x} must be < T = {T}")
        return T


@dataclass(frozen=True)
class DofReport:
    scheme: str
    dof_macrocell: Fraction
    dof_femtocells: Fraction
    T: int

    @property
    def dof_total(self) -> Fraction:
        return self.dof_macrocell + self.dof_femtocells


def _report(scheme, macro, total, T) -> DofReport:
    return DofReport(scheme, Fraction(macro), Fraction(total) - Fraction(macro), T)


def dof_hybrid(q: DofQuery) -> DofReport:
    """Macro KN/T, femto KLN/T; requires T == L + 1."""
    T = q.slots(q.L + 1)
    if T != q.L + 1:
        raise InvalidParameter("the hybrid scheme uses T = L + 1")
    K, L, N = q.K, q.L, q.N
    return _report("hybrid", Fraction(K * N, T), Fraction(K * N * (1 + L), T), T)


def dof_tdma_hybrid_comparison(q: DofQuery) -> DofReport:
    """TDMA with x of the T slots given to the femtocells: macro (T-x)N/T, femto xKN/T."""
    T = q.slots(q.L + 1)
    K, N, x = q.K, q.N, q.x
    return _report("tdma", Fraction((T - x) * N, T), Fraction(x * N * (K - 1) + T * N, T), T)


def _m1(q: DofQuery) -> int:
    # messages per G_1 femtocell user, counted over the K - 1 other macro users' slots
    return (q.K - 1) * (q.N - q.L + 1)


def dof_blind_ia(q: DofQuery) -> DofReport:
    """Blind IA: K(N + (K-1)(L-1)(N-L+1) + 1)/T, or K(N + (K-1)(M_r-1) + 1)/T when L == 1."""
    T = q.slots(q.K + 1)
    K, L, N = q.K, q.L, q.N
    if L == 1:
        total = Fraction(K * (N + (K - 1) * (q.mr - 1) + 1), T)
        scheme = "blind_ia_L1"
    elif 1 < L <= 3:
        total = Fraction(K * (N + (K - 1) * (L - 1) * (N - L + 1) + 1), T)
        scheme = "blind_ia"
    else:
        raise InvalidParameter("Blind IA is defined for 1 <= L <= 3")
    return _report(scheme, Fraction(K * N, T), total, T)


def dof_tdma_blind_comparison(q: DofQuery) -> DofReport:
    """TDMA counterpart to Blind IA over the same T (odd / even x, or L == 1)."""
    T = q.slots(q.K + 1)
    K, L, N, x = q.K, q.L, q.N, q.x
    macro = Fraction((T - x) * N, T)
    if L == 1:
        total = Fraction(x * (q.mr * K - N) + N * T, T)
        return _report("tdma_L1", macro, total, T)
    if not 1 < L <= 3:
        raise InvalidParameter("Blind IA comparison is defined for 1 <= L <= 3")
    if q.branch == "odd":
        total = Fraction(2 * N * (K * L + 1) + (x - 1) * K * N * L - 2 * x * N, 2 * T)
        return _report("tdma_odd", macro, total, T)
    total = Fraction(2 * K * (N + 1) + x * K * N * L - 2 * x * N, 2 * T)
    return _report("tdma_even", macro, total, T)


@dataclass(frozen=True)
class GainThreshold:
    branch: str  # "hybrid", "odd", "even" or "L1"
    threshold: Fraction  # gain > 0 exactly when x < threshold
    gain: Fraction  # gain at the query's x
    positive: bool


def blind_ia_gain(q: DofQuery) -> Fraction:
    """DoF(Blind IA) - DoF(TDMA) as a direct difference."""
    return dof_blind_ia(q).dof_total - dof_tdma_blind_comparison(q).dof_total


def blind_ia_gain_threshold(q: DofQuery) -> GainThreshold:
    """x-threshold below which Blind IA beats TDMA, and the gain at q.x.

    Odd x:  (2K(N + M1(L-1) + 1) - 2N(KL+1) + KNL) / (N(KL-2))
    Even x: (2K(N + M1(L-1) + 1) - 2K(N+1)) / (N(KL-2))
    L == 1: (K(N + (K-1)(M_r-1) + 1) - NT) / (M_r K - N)
    """
    T = q.slots(q.K + 1)
    K, L, N = q.K, q.L, q.N
    if L == 1:
        den = q.mr * K - N
        num = K * (N + (K - 1) * (q.mr - 1) + 1) - N * T
        branch = "L1"
    else:
        M1 = _m1(q)
        den = N * (K * L - 2)
        if q.branch == "odd":
            num = 2 * K * (N + M1 * (L - 1) + 1) - 2 * N * (K * L + 1) + K * N * L
            branch = "odd"
        else:
            num = 2 * K * (N + M1 * (L - 1) + 1) - 2 * K * (N + 1)
            branch = "even"
    if den <= 0:
        raise InvalidParameter("threshold undefined: the gain does not decrease with x")
    gain = blind_ia_gain(q)
    return GainThreshold(branch, Fraction(num, den), gain, gain > 0)


def hybrid_gain_threshold(q: DofQuery) -> GainThreshold:
    """Hybrid vs TDMA: gain N(K-1)(T-x)/T, positive for every x < T (threshold T)."""
    h = dof_hybrid(q)
    gain = h.dof_total - dof_tdma_hybrid_comparison(q).dof_total
    return GainThreshold("hybrid", Fraction(h.T), gain, gain > 0)


# -- grid sweeps ------------------------------------------------------------------

_SCHEMES = {
    "hybrid": (dof_hybrid, lambda q: q.L + 1),
    "tdma_hybrid": (dof_tdma_hybrid_comparison, lambda q: q.L + 1),
    "blind_ia": (dof_blind_ia, lambda q: q.K + 1),
    "tdma_blind": (dof_tdma_blind_comparison, lambda q: q.K + 1),
}

TABLE_FIELDS = ("scheme", "K", "L", "N", "M_r", "T", "x", "dof_macrocell", "dof_femtocells", "dof_total", "dof_total_float")


def dof_grid(
    K: Iterable[int],
    L: Iterable[int],
    N: Iterable[int],
    x: Iterable[int] = (0,),
    schemes: Iterable[str] = tuple(_SCHEMES),
) -> list[dict]:
    """Evaluate every scheme on the Cartesian grid; points with x >= T or an
    unsupported L for that scheme are skipped. ``M_r`` equals ``N``."""
    rows = []
    schemes = list(schemes)
    for name in schemes:
        if name not in _SCHEMES:
            raise InvalidParameter(f"unknown scheme {name!r}")
    for name, k, l, n, xv in itertools.product(schemes, K, L, N, x):
        fn, tdef = _SCHEMES[name]
        q = DofQuery(K=k, L=l, N=n, x=xv)
        # x only affects the TDMA rows
        if name in ("hybrid", "blind_ia") and xv != 0:
            continue
        if xv >= tdef(q):
            continue
        if name in ("blind_ia", "tdma_blind") and not 1 <= l <= 3:
            continue
        r = fn(q)
        rows.append(
            {
                "scheme": r.scheme,
                "K": k,
                "L": l,
                "N": n,
                "M_r": n,
                "T": r.T,
                "x": xv,
                "dof_macrocell": r.dof_macrocell,
                "dof_femtocells": r.dof_femtocells,
                "dof_total": r.dof_total,
                "dof_total_float": float(r.dof_total),
            }
        )
    return rows


def write_dof_table(rows: Iterable[dict], out: TextIO | None = None, delimiter: str = "\t") -> None:
    """Write grid rows as a delimited table; fractions print as ``p/q``."""
    out = sys.stdout if out is None else out
    w = csv.DictWriter(out, fieldnames=TABLE_FIELDS, delimiter=delimiter, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else str(v)) for k, v in r.items()})
