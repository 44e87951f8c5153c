"""Finite Hilbert space of a quantized torus.

Position and momentum grids are ``q_j = (j + chi_q)/N`` and
``p_k = (k + chi_p)/N``. Amplitude vectors are plain ``numpy`` arrays; the
``StateVector``/``DensityMatrix`` wrappers carry the basis tag so that the
bookkeeping between the two representations stays explicit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Union

import numpy as np

from .classical import PhaseSpacePoint
from .errors import BasisMismatch, IndexOutOfRange

Basis = Literal["position", "momentum"]
NORM_TOL = 1e-12
IMAGE_SHELLS = 2


@dataclass(frozen=True)
class TorusSpace:
    N: int
    chi_q: float = 0.5
    chi_p: float = 0.5

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.N}")
        for name in ("chi_q", "chi_p"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")

    @property
    def hbar(self) -> float:
        return 1.0 / (2.0 * np.pi * self.N)

    @property
    def q_grid(self) -> np.ndarray:
        return (np.arange(self.N) + self.chi_q) / self.N

    @property
    def p_grid(self) -> np.ndarray:
        return (np.arange(self.N) + self.chi_p) / self.N

    def fourier(self) -> np.ndarray:
        return fourier_kernel(self)


def fourier_kernel(space: TorusSpace) -> np.ndarray:
    """Matrix ``G[k, j] = <p_k|q_j>`` mapping position to momentum amplitudes."""
    return _kernel(space.N, space.chi_q, space.chi_p).copy()


@lru_cache(maxsize=16)
def _kernel(N, chi_q, chi_p):
    j = np.arange(N) + chi_q
    k = np.arange(N) + chi_p
    G = np.exp(-2j * np.pi * np.outer(k, j) / N) / np.sqrt(N)
    G.setflags(write=False)
    return G


def _to_basis(data: np.ndarray, space: TorusSpace, src: Basis, dst: Basis) -> np.ndarray:
    if src == dst:
        return data
    G = _kernel(space.N, space.chi_q, space.chi_p)
    M = G if dst == "momentum" else G.conj().T
    if data.ndim == 1:
        return M @ data
    return M @ data @ M.conj().T


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    basis: Basis
    space: TorusSpace

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (self.space.N,):
            raise ValueError(f"expected {self.space.N} amplitudes, got shape {amp.shape}")
        if self.basis not in ("position", "momentum"):
            raise ValueError(f"unknown basis {self.basis!r}")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def normalized(cls, amplitudes, basis: Basis, space: TorusSpace) -> "StateVector":
        amp = np.asarray(amplitudes, dtype=complex)
        return cls(amp / np.linalg.norm(amp), basis, space)

    def to(self, basis: Basis) -> "StateVector":
        return StateVector(_to_basis(self.amplitudes, self.space, self.basis, basis), basis, self.space)

    def vector(self, basis: Basis = "position") -> np.ndarray:
        return self.to(basis).amplitudes

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.vector(self.basis)))

    def projector(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(np.outer(a, a.conj()), self.basis, self.space)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray
    basis: Basis
    space: TorusSpace

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        if rho.shape != (self.space.N, self.space.N):
            raise ValueError(f"expected {self.space.N}x{self.space.N} matrix, got {rho.shape}")
        if self.basis not in ("position", "momentum"):
            raise ValueError(f"unknown basis {self.basis!r}")
        object.__setattr__(self, "entries", rho)

    @classmethod
    def maximally_mixed(cls, space: TorusSpace, basis: Basis = "position") -> "DensityMatrix":
        return cls(np.eye(space.N, dtype=complex) / space.N, basis, space)

    def to(self, basis: Basis) -> "DensityMatrix":
        return DensityMatrix(_to_basis(self.entries, self.space, self.basis, basis), basis, self.space)

    def matrix(self, basis: Basis = "position") -> np.ndarray:
        return self.to(basis).entries

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue of the Hermitian part; a positivity diagnostic."""
        h = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.linalg.eigvalsh(h)[0])


State = Union[StateVector, DensityMatrix]


def _check_index(space: TorusSpace, i: int) -> int:
    if int(i) != i or not 0 <= i < space.N:
        raise IndexOutOfRange(f"index {i} outside [0, {space.N})")
    return int(i)


def position_state(space: TorusSpace, j: int) -> StateVector:
    """``|q_j>``; its eigenvalue is ``space.q_grid[j]``."""
    amp = np.zeros(space.N, dtype=complex)
    amp[_check_index(space, j)] = 1.0
    return StateVector(amp, "position", space)


def momentum_state(space: TorusSpace, k: int) -> StateVector:
    """``|p_k>``; its eigenvalue is ``space.p_grid[k]``."""
    amp = np.zeros(space.N, dtype=complex)
    amp[_check_index(space, k)] = 1.0
    return StateVector(amp, "momentum", space)


def _coherent_amplitudes(space: TorusSpace, q, p, shells: int = IMAGE_SHELLS) -> np.ndarray:
    """Unnormalized periodized Gaussians, one row per (q, p) pair.

    ``q`` and ``p`` are broadcast 1-d arrays; images of the plane coherent
    state at ``y + m`` carry the boundary phase ``exp(-2 pi i chi_p m)``.
    """
    N = space.N
    q = np.atleast_1d(np.asarray(q, dtype=float))[:, None]
    p = np.atleast_1d(np.asarray(p, dtype=float))[:, None]
    y = space.q_grid[None, :]
    out = np.zeros((q.shape[0], N), dtype=complex)
    for m in range(-shells, shells + 1):
        d = y + m - q
        out += np.exp(
            -np.pi * N * d**2 + 2j * np.pi * N * p * (y + m - q / 2) - 2j * np.pi * space.chi_p * m
        )
    return out * (2.0 * N) ** 0.25


def coherent_state(space: TorusSpace, x: PhaseSpacePoint, shells: int = IMAGE_SHELLS) -> StateVector:
    """Torus coherent state centred at ``x`` with position variance 1/(4 pi N)."""
    amp = _coherent_amplitudes(space, x.q, x.p, shells)[0]
    return StateVector.normalized(amp, "position", space)


@dataclass(frozen=True, eq=False)
class HusimiField:
    """Husimi values on a cell-centred grid; ``values[i_p, i_q]``."""

    values: np.ndarray
    N: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def q_centers(self) -> np.ndarray:
        nq = self.values.shape[1]
        return (np.arange(nq) + 0.5) / nq

    @property
    def p_centers(self) -> np.ndarray:
        n_p = self.values.shape[0]
        return (np.arange(n_p) + 0.5) / n_p

    def total(self) -> float:
        """Riemann-sum estimate of the trace: N times the cell mean."""
        return float(self.N * self.values.mean())

    def argmax(self) -> tuple[float, float]:
        ip, iq = np.unravel_index(np.argmax(self.values), self.values.shape)
        return float(self.q_centers[iq]), float(self.p_centers[ip])


def coherent_grid(space: TorusSpace, nq: int, n_p: int) -> np.ndarray:
    """Normalized coherent states for every grid cell, shape ``(n_p*nq, N)``."""
    qc = (np.arange(nq) + 0.5) / nq
    pc = (np.arange(n_p) + 0.5) / n_p
    P, Q = np.meshgrid(pc, qc, indexing="ij")
    C = _coherent_amplitudes(space, Q.ravel(), P.ravel())
    return C / np.linalg.norm(C, axis=1, keepdims=True)


def husimi(state: State, grid: tuple[int, int] = (128, 128), coherent=None) -> HusimiField:
    """Coherent-state diagonal ``<c(q,p)|rho|c(q,p)>`` on an ``nq x np`` grid.

    ``coherent`` may pass a precomputed :func:`coherent_grid` to amortize it
    across frames.
    """
    nq, n_p = grid
    if nq < 2 or n_p < 2:
        raise ValueError("husimi grid needs at least 2 cells per axis")
    space = state.space
    C = coherent_grid(space, nq, n_p) if coherent is None else coherent
    if isinstance(state, StateVector):
        vals = np.abs(C.conj() @ state.vector("position")) ** 2
    else:
        rho = state.matrix("position")
        vals = np.einsum("ij,ij->i", C.conj(), C @ rho.T).real
    return HusimiField(np.clip(vals, 0.0, None).reshape(n_p, nq), space.N)


def write_husimi_csv(field: HusimiField, path) -> None:
    """Plain-text matrix, one row per p value ascending."""
    with open(path, "w", newline="\n") as fh:
        for row in field.values:
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")


def read_husimi_csv(path, N: int) -> HusimiField:
    return HusimiField(np.loadtxt(path, delimiter=",", ndmin=2), N)


def write_husimi_pgm(field: HusimiField, path) -> None:
    """16-bit binary PGM, rows ordered p descending, min/max in a comment."""
    v = field.values
    lo, hi = float(v.min()), float(v.max())
    scale = (v - lo) / (hi - lo) if hi > lo else np.zeros_like(v)
    img = np.rint(scale[::-1] * 65535).astype(">u2")
    n_p, nq = v.shape
    header = f"P5\n# min={lo!r} max={hi!r} N={field.N}\n{nq} {n_p}\n65535\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(img.tobytes())


def read_husimi_pgm(path) -> HusimiField:
    """Inverse of :func:`write_husimi_pgm`, de-scaled with the recorded min/max."""
    with open(path, "rb") as fh:
        raw = fh.read()
    tokens, meta, pos = [], {}, 0
    while len(tokens) < 4:
        end = raw.index(b"\n", pos)
        line = raw[pos:end].decode("ascii")
        pos = end + 1
        if line.startswith("#"):
            for item in line[1:].split():
                key, val = item.split("=")
                meta[key] = float(val)
            continue
        tokens.extend(line.split())
    if tokens[0] != "P5":
        raise ValueError("not a binary PGM")
    nq, n_p, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    img = np.frombuffer(raw[pos:], dtype=">u2", count=nq * n_p).reshape(n_p, nq)[::-1]
    lo, hi = meta["min"], meta["max"]
    values = lo + img.astype(float) / maxval * (hi - lo)
    return HusimiField(values, int(meta["N"]))
