"""Quantum baker propagator, its spectrum, and orbit-localized states.

Periodic orbit modes (POMs) are phased sums of coherent states on the orbit
points; scar functions are POMs averaged over a cosine-windowed stretch of
the unitary dynamics, which narrows their quasi-energy spread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg

from .classical import LYAPUNOV, PeriodicOrbit
from .errors import ConvergenceFailure, DegenerateNorm, OddDimension
from .torus import StateVector, TorusSpace, _coherent_amplitudes, _kernel, position_state, momentum_state

RESIDUAL_TOL = 1e-10
NORM_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class UnitaryPropagator:
    matrix: np.ndarray  # position basis
    space: TorusSpace

    def apply(self, psi: StateVector, power: int = 1) -> StateVector:
        v = psi.vector("position")
        M = self.matrix if power >= 0 else self.matrix.conj().T
        for _ in range(abs(power)):
            v = M @ v
        return StateVector(v, "position", self.space)

    def unitarity_error(self) -> float:
        U = self.matrix
        return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


def build_baker(space: TorusSpace) -> UnitaryPropagator:
    """``U = G_N^dagger . blockdiag(G_{N/2}, G_{N/2})`` in the position basis."""
    N = space.N
    if N % 2:
        raise OddDimension(f"the baker propagator needs even N, got {N}")
    GN = _kernel(N, space.chi_q, space.chi_p)
    Gh = _kernel(N // 2, space.chi_q, space.chi_p)
    U = GN.conj().T @ scipy.linalg.block_diag(Gh, Gh)
    return UnitaryPropagator(U, space)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    phases: np.ndarray  # ascending in [0, 2 pi)
    vectors: np.ndarray  # columns, position basis
    space: TorusSpace

    def __len__(self):
        return len(self.phases)

    def eigenstate(self, n: int) -> StateVector:
        return StateVector(self.vectors[:, n], "position", self.space)

    def overlaps(self, target: StateVector) -> np.ndarray:
        return np.abs(self.vectors.conj().T @ target.vector("position")) ** 2

    def reconstruct(self) -> np.ndarray:
        V = self.vectors
        return (V * np.exp(1j * self.phases)) @ V.conj().T


def spectral_decomposition(U: UnitaryPropagator) -> SpectralDecomposition:
    """Eigenphases and orthonormal eigenvectors of a unitary.

    A complex Schur form of a normal matrix is diagonal, so its unitary
    factor gives orthonormal eigenvectors even inside degenerate clusters.
    """
    M = U.matrix
    T, Z = scipy.linalg.schur(M, output="complex")
    lam = np.diag(T)
    phases = np.mod(np.angle(lam), 2 * np.pi)
    order = np.argsort(phases, kind="stable")
    phases, Z = phases[order], Z[:, order]
    resid = np.linalg.norm(M @ Z - Z * np.exp(1j * phases), axis=0)
    worst = float(resid.max())
    if worst > RESIDUAL_TOL:
        raise ConvergenceFailure(f"eigenvector residual {worst:.3e} exceeds {RESIDUAL_TOL}", worst)
    return SpectralDecomposition(phases, Z, U.space)


def ehrenfest_steps(space: TorusSpace) -> int:
    """Map steps up to the Ehrenfest time ``ln N / ln 2``, floored."""
    if space.N < 2:
        raise ValueError("ehrenfest_steps needs N >= 2")
    # exact for powers of two, where the float ratio may undershoot
    return space.N.bit_length() - 1 if space.N & (space.N - 1) == 0 else int(math.log(space.N) / LYAPUNOV)


QuasienergyMode = Literal["paper-literal", "bohr-sommerfeld"]


def quasienergy(orbit: PeriodicOrbit, space: TorusSpace, mode: QuasienergyMode = "paper-literal", m: int = 0) -> float:
    """Phase per map step attached to an orbit.

    ``paper-literal`` uses ``S/hbar = 2 pi N S``; ``bohr-sommerfeld`` spreads
    the quantized action ``2 pi (N S + m)`` over the L steps of the orbit.
    """
    S = orbit.action
    if mode == "paper-literal":
        return 2 * np.pi * space.N * S
    if mode == "bohr-sommerfeld":
        return 2 * np.pi * (space.N * S + m) / orbit.period
    raise ValueError(f"unknown quasienergy mode {mode!r}")


@dataclass(frozen=True)
class ScarParams:
    orbit: PeriodicOrbit
    T: int
    quasienergy: float
    m: int = 0

    @classmethod
    def from_mode(cls, orbit, space, T, mode: QuasienergyMode = "paper-literal", m: int = 0):
        return cls(orbit, T, quasienergy(orbit, space, mode, m), m)

    def validate(self, space: TorusSpace) -> None:
        if self.T < 0:
            raise ValueError("scar half-width T must be >= 0")
        if self.T > space.N:
            raise ValueError(f"T={self.T} exceeds the Heisenberg guard N={space.N}")


def _normalize(v: np.ndarray, space: TorusSpace, what: str) -> StateVector:
    n = np.linalg.norm(v)
    if n < NORM_FLOOR:
        raise DegenerateNorm(f"{what} has norm {n:.3e} before normalization")
    return StateVector(v / n, "position", space)


def build_pom(space: TorusSpace, orbit: PeriodicOrbit, quasienergy: float) -> StateVector:
    """Periodic orbit mode: coherent states on the orbit with accumulated action phases."""
    A = np.asarray(orbit.partial_actions)
    j = np.arange(orbit.period)
    weights = np.exp(1j * (2 * np.pi * space.N * A - j * quasienergy))
    q = [x.q for x in orbit.points]
    p = [x.p for x in orbit.points]
    C = _coherent_amplitudes(space, q, p)
    C /= np.linalg.norm(C, axis=1, keepdims=True)
    return _normalize(weights @ C, space, "POM")


def build_scar(space: TorusSpace, orbit: PeriodicOrbit, params: ScarParams, U: UnitaryPropagator) -> StateVector:
    """Cosine-windowed dynamical average of the orbit's POM over ``|l| <= T`` steps."""
    params.validate(space)
    pom = build_pom(space, orbit, params.quasienergy)
    T = params.T
    if T == 0:
        return pom
    v0 = pom.amplitudes
    total = v0.astype(complex).copy()
    fwd, bwd = v0, v0
    Ud = U.matrix.conj().T
    for l in range(1, T + 1):
        fwd = U.matrix @ fwd
        bwd = Ud @ bwd
        w = math.cos(math.pi * l / (2 * T))
        total += w * (np.exp(1j * params.quasienergy * l) * fwd + np.exp(-1j * params.quasienergy * l) * bwd)
    return _normalize(total, space, "scar function")


def quasienergy_dispersion(psi: StateVector, U: UnitaryPropagator) -> float:
    """``1 - |<psi|U|psi>|^2``; zero exactly for eigenstates."""
    v = psi.vector("position")
    return float(1.0 - abs(np.vdot(v, U.matrix @ v)) ** 2)


def select_eigenstate(dec: SpectralDecomposition, target: StateVector) -> tuple[StateVector, float, int]:
    """Eigenvector with the largest overlap with ``target`` (lowest index on ties)."""
    ov = dec.overlaps(target)
    n = int(np.argmax(ov))
    return dec.eigenstate(n), float(ov[n]), n


def orbit_basis_state(space: TorusSpace, orbit: PeriodicOrbit, kind: str, point_index: int = 0) -> StateVector:
    """Position or momentum eigenstate nearest to a point of the orbit."""
    if not 0 <= point_index < orbit.period:
        raise ValueError(f"point_index {point_index} outside orbit of period {orbit.period}")
    x = orbit.points[point_index]
    if kind == "position":
        return position_state(space, _nearest_index(space.N * x.q - space.chi_q, space.N))
    if kind == "momentum":
        return momentum_state(space, _nearest_index(space.N * x.p - space.chi_p, space.N))
    raise ValueError(f"kind must be 'position' or 'momentum', got {kind!r}")


def _nearest_index(x: float, N: int) -> int:
    # half-up rounding, then wrap onto the grid
    return int(math.floor(x + 0.5)) % N


def write_state_csv(psi: StateVector, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# basis={psi.basis} N={psi.space.N} chi_q={psi.space.chi_q!r} chi_p={psi.space.chi_p!r}\n")
        fh.write("re,im\n")
        for a in psi.amplitudes:
            fh.write(f"{a.real:.17g},{a.imag:.17g}\n")


def read_state_csv(path) -> StateVector:
    with open(path) as fh:
        meta = dict(item.split("=") for item in fh.readline()[1:].split())
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    space = TorusSpace(int(meta["N"]), float(meta["chi_q"]), float(meta["chi_p"]))
    return StateVector(data[:, 0] + 1j * data[:, 1], meta["basis"], space)
