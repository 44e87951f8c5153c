"""Finite-temperature dissipative channel and the composed dissipative map.

The bath lowers and raises momentum by one grid level with Kraus weights
``eps dt (1 + n(k)) k`` and ``eps dt n(k) k``. The no-jump operator is the
exact square root ``(1 - K1^dag K1 - K2^dag K2)^{1/2}``, which is diagonal in
momentum, so every substep is exactly trace preserving and completely
positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Sequence

import numpy as np

from .errors import BasisMismatch, ObserverError, StepTooLarge
from .propagator import UnitaryPropagator
from .torus import DensityMatrix, StateVector, TorusSpace, _kernel

MomentumScale = Literal["torus", "index"]
# substeps per unit of the largest decay rate, and the floor on substeps
SUBSTEPS_PER_RATE = 200
MIN_SUBSTEPS = 1000


@dataclass(frozen=True)
class BathParams:
    epsilon: float
    temperature: float
    space: TorusSpace
    momentum_scale: MomentumScale = "torus"

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.momentum_scale not in ("torus", "index"):
            raise ValueError(f"unknown momentum_scale {self.momentum_scale!r}")

    def momenta(self) -> np.ndarray:
        k = np.arange(self.space.N) + self.space.chi_p
        return k / self.space.N if self.momentum_scale == "torus" else k

    def level_gaps(self) -> np.ndarray:
        """``E_k - E_{k-1}`` for k = 1..N-1, with ``E_k = p_k^2 / 2``."""
        E = 0.5 * self.momenta() ** 2
        return np.diff(E)

    def occupations(self) -> np.ndarray:
        """Bose factors for k = 1..N-1."""
        gaps = self.level_gaps()
        if self.temperature == 0:
            return np.zeros_like(gaps)
        return 1.0 / np.expm1(gaps / self.temperature)

    def rates(self) -> np.ndarray:
        """Total decay rate ``eps k (1 + 2 n(k))`` for k = 1..N-1."""
        k = np.arange(1, self.space.N)
        return self.epsilon * k * (1.0 + 2.0 * self.occupations())

    def regime(self) -> str:
        n = self.occupations()
        if n.size and n.max() < 0.1:
            return "low-T"
        if n.size and n.min() > 10:
            return "high-T"
        return "intermediate"


def occupation(k: int, bath: BathParams) -> float:
    if not 1 <= k <= bath.space.N - 1:
        raise ValueError(f"occupation index {k} outside [1, {bath.space.N - 1}]")
    return float(bath.occupations()[k - 1])


@dataclass(frozen=True, eq=False)
class KrausTriple:
    """Kraus operators stored by their nonzero bands (momentum basis).

    ``lower[k-1]`` is the ``|p_{k-1}><p_k|`` amplitude of K1, ``raise_[k-1]``
    the ``|p_k><p_{k-1}|`` amplitude of K2, and ``diag`` the diagonal of K0.
    """

    diag: np.ndarray
    lower: np.ndarray
    raise_: np.ndarray
    dt: float

    @property
    def K0(self) -> np.ndarray:
        return np.diag(self.diag).astype(complex)

    @property
    def K1(self) -> np.ndarray:
        return np.diag(self.lower, 1).astype(complex)

    @property
    def K2(self) -> np.ndarray:
        return np.diag(self.raise_, -1).astype(complex)

    def operators(self) -> list[np.ndarray]:
        return [self.K0, self.K1, self.K2]

    def completeness_error(self) -> float:
        S = sum(K.conj().T @ K for K in self.operators())
        return float(np.max(np.abs(S - np.eye(len(self.diag)))))


def build_kraus(bath: BathParams, dt: float) -> KrausTriple:
    if dt <= 0:
        raise ValueError("dt must be positive")
    N = bath.space.N
    k = np.arange(1, N)
    nbar = bath.occupations()
    lower = np.sqrt(bath.epsilon * dt * (1.0 + nbar) * k)
    raise_ = np.sqrt(bath.epsilon * dt * nbar * k)
    # diagonal of K1^dag K1 + K2^dag K2
    loss = np.zeros(N)
    loss[1:] += lower**2
    loss[:-1] += raise_**2
    if loss.max() >= 1.0:
        raise StepTooLarge(f"jump weight {loss.max():.3g} >= 1 at dt={dt:g}; use more substeps")
    return KrausTriple(np.sqrt(1.0 - loss), lower, raise_, dt)


def dissipative_substep(rho: DensityMatrix, kraus: KrausTriple) -> DensityMatrix:
    """``sum_mu K_mu rho K_mu^dag`` for a momentum-basis density matrix."""
    if rho.basis != "momentum":
        raise BasisMismatch(f"Kraus substep needs a momentum-basis state, got {rho.basis}")
    return DensityMatrix(_apply_kraus(rho.entries, kraus), "momentum", rho.space)


def _apply_kraus(r: np.ndarray, kraus: KrausTriple) -> np.ndarray:
    d, a, b = kraus.diag, kraus.lower, kraus.raise_
    out = (d[:, None] * d[None, :]) * r
    # K1 rho K1^dag: [i, j] <- a_{i+1} a_{j+1} rho[i+1, j+1]
    out[:-1, :-1] += (a[:, None] * a[None, :]) * r[1:, 1:]
    # K2 rho K2^dag: [i, j] <- b_i b_j rho[i-1, j-1]
    out[1:, 1:] += (b[:, None] * b[None, :]) * r[:-1, :-1]
    return out


@dataclass(frozen=True)
class DissipatorPlan:
    substeps: int
    tau: float = 1.0

    def __post_init__(self):
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    @property
    def dt(self) -> float:
        return self.tau / self.substeps

    @classmethod
    def auto(cls, bath: BathParams, tau: float = 1.0) -> "DissipatorPlan":
        rates = bath.rates()
        top = float(rates.max()) if rates.size else 0.0
        return cls(max(MIN_SUBSTEPS, math.ceil(SUBSTEPS_PER_RATE * tau * top)), tau)

    def max_weight(self, bath: BathParams) -> float:
        rates = bath.rates()
        return float(self.dt * rates.max()) if rates.size else 0.0

    def doubled(self) -> "DissipatorPlan":
        return DissipatorPlan(2 * self.substeps, self.tau)


def dissipative_step(rho: DensityMatrix, bath: BathParams, plan: DissipatorPlan) -> DensityMatrix:
    """Propagate the bath for time ``plan.tau`` in ``plan.substeps`` Kraus substeps."""
    r = rho.matrix("momentum")
    if bath.epsilon > 0:
        r = DissipatorKernel(build_kraus(bath, plan.dt), plan.substeps)(r)
    return DensityMatrix(r, "momentum", rho.space).to(rho.basis)


class DissipatorKernel:
    """``substeps`` repetitions of one Kraus substep, applied in a single pass.

    A substep maps entry ``(i, i + d)`` only onto the same diagonal ``d``, so
    on each diagonal it is a tridiagonal matrix; its ``substeps``-th power is
    formed once by repeated squaring. ``method="sequential"`` applies the
    substeps one by one instead.
    """

    def __init__(self, kraus: KrausTriple, substeps: int, method: str = "power"):
        if method not in ("power", "sequential"):
            raise ValueError(f"unknown method {method!r}")
        self.kraus = kraus
        self.substeps = substeps
        self.method = method
        self.N = len(kraus.diag)
        if method == "power":
            self._blocks = {d: _power(self._diagonal_map(d), substeps, stochastic=(d == 0))
                            for d in range(-self.N + 1, self.N)}

    def _diagonal_map(self, d: int) -> np.ndarray:
        # entries (i, i + d), i = i0 .. i0 + n - 1
        N, dg, a, b = self.N, self.kraus.diag, self.kraus.lower, self.kraus.raise_
        i = np.arange(max(0, -d), N - max(0, d))
        j = i + d
        n = len(i)
        M = np.diag(dg[i] * dg[j])
        if n > 1:
            # lowering feeds (i, j) from (i+1, j+1); raising from (i-1, j-1)
            M[np.arange(n - 1), np.arange(1, n)] = a[i[:-1]] * a[j[:-1]]
            M[np.arange(1, n), np.arange(n - 1)] = b[i[1:] - 1] * b[j[1:] - 1]
        return M

    def __call__(self, r: np.ndarray) -> np.ndarray:
        if self.method == "sequential":
            for _ in range(self.substeps):
                r = _apply_kraus(r, self.kraus)
            return r
        out = np.empty_like(r)
        N = self.N
        for d, M in self._blocks.items():
            i = np.arange(max(0, -d), N - max(0, d))
            out[i, i + d] = M @ r[i, i + d]
        return out


def _power(M: np.ndarray, n: int, stochastic: bool = False) -> np.ndarray:
    """``M**n`` by repeated squaring.

    With ``stochastic`` the columns of every factor are rescaled to sum to 1;
    the population block of a trace-preserving substep has unit column sums
    exactly, so this only removes accumulated roundoff.
    """

    def fix(A):
        return A / A.sum(axis=0, keepdims=True) if stochastic else A

    result = None
    base = fix(M)
    while n:
        if n & 1:
            result = base if result is None else fix(base @ result)
        n >>= 1
        if n:
            base = fix(base @ base)
    return result


def jump_operators(bath: BathParams) -> list[np.ndarray]:
    """Lindblad operators ``L_mu = K_mu / sqrt(dt)`` (momentum basis)."""
    k = np.arange(1, bath.space.N)
    nbar = bath.occupations()
    L1 = np.diag(np.sqrt(bath.epsilon * (1.0 + nbar) * k), 1).astype(complex)
    L2 = np.diag(np.sqrt(bath.epsilon * nbar * k), -1).astype(complex)
    return [L1, L2]


def lindblad_rhs(rho: DensityMatrix, bath: BathParams) -> DensityMatrix:
    """Dissipator ``sum_mu L rho L^dag - {L^dag L, rho}/2``."""
    r = rho.matrix("momentum")
    out = np.zeros_like(r)
    for L in jump_operators(bath):
        LdL = L.conj().T @ L
        out += L @ r @ L.conj().T - 0.5 * (LdL @ r + r @ LdL)
    return DensityMatrix(out, "momentum", rho.space).to(rho.basis)


class MapStepper:
    """Composed map ``rho -> D(U rho U^dag)`` with the bath step cached.

    The state is kept in the momentum basis between steps; the unitary is
    conjugated into that basis once.
    """

    def __init__(self, U: UnitaryPropagator, bath: BathParams, plan: DissipatorPlan, method: str = "power"):
        if U.space != bath.space:
            raise ValueError("propagator and bath live on different spaces")
        self.space = U.space
        self.bath = bath
        self.plan = plan
        G = _kernel(self.space.N, self.space.chi_q, self.space.chi_p)
        self.Up = G @ U.matrix @ G.conj().T
        self.dissipator = None
        if bath.epsilon > 0:
            self.dissipator = DissipatorKernel(build_kraus(bath, plan.dt), plan.substeps, method)

    def step_momentum(self, r: np.ndarray) -> np.ndarray:
        r = self.Up @ r @ self.Up.conj().T
        return r if self.dissipator is None else self.dissipator(r)

    def __call__(self, rho: DensityMatrix) -> DensityMatrix:
        r = self.step_momentum(rho.matrix("momentum"))
        return DensityMatrix(r, "momentum", self.space).to(rho.basis)


def composed_step(rho: DensityMatrix, U: UnitaryPropagator, bath: BathParams, plan: DissipatorPlan) -> DensityMatrix:
    return MapStepper(U, bath, plan)(rho)


Observer = Callable[[int, DensityMatrix], dict]


@dataclass
class TimeSeries:
    """Observer output per recorded step; ``rows[i]['step'] == i``."""

    rows: list = field(default_factory=list)
    frames: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows])


def evolve(
    initial,
    U: UnitaryPropagator,
    bath: BathParams,
    plan: DissipatorPlan,
    steps: int,
    observers: Optional[Sequence[Observer]] = None,
    frame_steps: Sequence[int] = (),
    frame_fn: Optional[Callable[[DensityMatrix], object]] = None,
) -> TimeSeries:
    """Iterate the composed map, recording observers at steps 0..``steps``.

    ``initial`` is a pure :class:`StateVector` or a :class:`DensityMatrix`.
    The default observers record purity, trace error, the minimum
    eigenvalue and, for pure initial states, the fidelity.
    """
    from .observables import default_observers

    if steps < 0:
        raise ValueError("steps must be >= 0")
    psi = initial if isinstance(initial, StateVector) else None
    rho = initial.projector() if psi is not None else initial
    if observers is None:
        observers = default_observers(psi)
    stepper = MapStepper(U, bath, plan)
    wanted = set(frame_steps)
    series = TimeSeries()
    r = rho.matrix("momentum")
    for t in range(steps + 1):
        if t > 0:
            r = stepper.step_momentum(r)
        current = DensityMatrix(r, "momentum", U.space)
        row = {"step": t}
        for obs in observers:
            try:
                row.update(obs(t, current))
            except Exception as exc:
                raise ObserverError(f"observer {getattr(obs, '__name__', obs)!r} failed at step {t}: {exc}") from exc
        series.rows.append(row)
        if t in wanted and frame_fn is not None:
            series.frames[t] = frame_fn(current)
    return series
