"""Classical baker map on the unit torus and its symbolic dynamics.

The map is ``(q, p) -> (2q - [2q], (p + [2q]) / 2)``. A point's binary
expansion ``(p|q) = ...v_{-1}.v_0 v_1...`` is shifted one place by each
iteration, so a periodic orbit of period L is a primitive binary word of
length L read cyclically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import NonPrimitiveString, NotClosed

LYAPUNOV = math.log(2.0)
CLOSURE_TOL = 1e-12

# stand-in for the (1, 1) corner carried by the all-ones orbit
_CORNER = math.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class PhaseSpacePoint:
    q: float
    p: float

    def __post_init__(self):
        object.__setattr__(self, "q", float(self.q) % 1.0)
        object.__setattr__(self, "p", float(self.p) % 1.0)

    @property
    def symbol(self) -> int:
        return int(math.floor(2.0 * self.q))


def torus_distance(a: PhaseSpacePoint, b: PhaseSpacePoint) -> float:
    """Euclidean distance on the unit torus (minimum over integer shifts)."""
    dq = abs(a.q - b.q)
    dp = abs(a.p - b.p)
    return math.hypot(min(dq, 1.0 - dq), min(dp, 1.0 - dp))


def classical_step(x: PhaseSpacePoint) -> PhaseSpacePoint:
    e = math.floor(2.0 * x.q)
    return PhaseSpacePoint(2.0 * x.q - e, (x.p + e) / 2.0)


def branch_jacobian(symbol: int):
    """Jacobian of the linear branch of the map, as nested tuples."""
    if symbol not in (0, 1):
        raise ValueError("symbol must be 0 or 1")
    return ((2, 0), (0, Fraction(1, 2)))


def is_primitive(bits: str) -> bool:
    n = len(bits)
    return all(n % d or bits != bits[:d] * (n // d) for d in range(1, n))


def _check_bits(bits: str) -> str:
    bits = "".join(str(b) for b in bits) if not isinstance(bits, str) else bits
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"not a binary symbol string: {bits!r}")
    return bits


def _rotate(bits: str, j: int) -> str:
    j %= len(bits)
    return bits[j:] + bits[:j]


def _exact_point(bits: str) -> tuple[Fraction, Fraction]:
    den = 2 ** len(bits) - 1
    return Fraction(int(bits, 2), den), Fraction(int(bits[::-1], 2), den)


def _step_action(q, p_next, e):
    # generating function F(q, p') = 2 q p' - e (q + p') of the branch e
    return 2 * q * p_next - e * (q + p_next)


def orbit_action(points: Sequence[PhaseSpacePoint], tol: float = CLOSURE_TOL) -> float:
    """Action of a closed orbit, summed cyclically over per-step generating functions."""
    pts = list(points)
    if not pts:
        raise NotClosed("empty orbit")
    for j, x in enumerate(pts):
        nxt = pts[(j + 1) % len(pts)]
        if torus_distance(classical_step(x), nxt) > tol:
            raise NotClosed(f"step {j} does not map onto the next point")
    return math.fsum(
        _step_action(x.q, pts[(j + 1) % len(pts)].p, x.symbol) for j, x in enumerate(pts)
    )


@dataclass(frozen=True)
class PeriodicOrbit:
    """A primitive periodic orbit identified by its symbol word.

    ``points[j]`` is the orbit point whose forward symbols read
    ``symbols[j:] + symbols[:j]``. ``corner`` marks the all-ones word whose
    formula point (1, 1) coincides with (0, 0) on the torus.
    """

    symbols: str
    points: tuple[PhaseSpacePoint, ...] = field(repr=False)
    action: float
    corner: bool = False

    @property
    def period(self) -> int:
        return len(self.symbols)

    @property
    def partial_actions(self) -> list[float]:
        """Actions accumulated before each point, starting at 0."""
        out = [0.0]
        for j in range(self.period - 1):
            fr = self.exact_points
            q, _ = fr[j]
            _, pn = fr[j + 1]
            out.append(out[-1] + float(_step_action(q, pn, int(self.symbols[j]))))
        return out

    @property
    def exact_points(self) -> list[tuple[Fraction, Fraction]]:
        return [_exact_point(_rotate(self.symbols, j)) for j in range(self.period)]

    def rotated(self, shift: int) -> "PeriodicOrbit":
        return orbit_from_symbols(_rotate(self.symbols, shift))


def orbit_from_symbols(bits: str) -> PeriodicOrbit:
    bits = _check_bits(bits)
    if not is_primitive(bits):
        raise NonPrimitiveString(f"{bits!r} repeats a shorter word")
    if bits == "1":
        pt = PhaseSpacePoint(_CORNER, _CORNER)
        return PeriodicOrbit(bits, (pt,), 0.0, corner=True)
    exact = [_exact_point(_rotate(bits, j)) for j in range(len(bits))]
    points = tuple(PhaseSpacePoint(float(q), float(p)) for q, p in exact)
    action = sum(
        _step_action(q, exact[(j + 1) % len(bits)][1], int(bits[j]))
        for j, (q, _) in enumerate(exact)
    )
    return PeriodicOrbit(bits, points, float(action))


def canonical_rotation(bits: str) -> str:
    return min(_rotate(bits, j) for j in range(len(bits)))


def enumerate_orbits(max_period: int, include_corner: bool = True) -> list[PeriodicOrbit]:
    """All primitive orbits with period <= ``max_period``.

    One representative per cyclic class (its lexicographically smallest
    rotation), ordered by period, then lexicographically.
    """
    if max_period < 1:
        raise ValueError("max_period must be >= 1")
    out = []
    for length in range(1, max_period + 1):
        for n in range(2 ** length):
            bits = format(n, f"0{length}b")
            if canonical_rotation(bits) != bits or not is_primitive(bits):
                continue
            if bits == "1" and not include_corner:
                continue
            out.append(orbit_from_symbols(bits))
    return out


def format_orbit(orbit: PeriodicOrbit) -> str:
    """One listing line: ``symbols period q0 p0 action``."""
    if orbit.corner:
        q0 = p0 = 1.0
    else:
        q0, p0 = orbit.points[0].q, orbit.points[0].p
    return " ".join(
        [orbit.symbols, str(orbit.period)] + [_fixed15(v) for v in (q0, p0, orbit.action)]
    )


def _fixed15(x: float) -> str:
    # 15 significant digits in fixed-point notation
    if x == 0:
        return f"{0:.14f}"
    digits = 15 - 1 - int(math.floor(math.log10(abs(x))))
    return f"{x:.{max(digits, 0)}f}"
