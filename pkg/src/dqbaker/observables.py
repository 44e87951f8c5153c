"""Scalar diagnostics of evolved density matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GridMismatch, NegativeForm
from .torus import DensityMatrix, HusimiField, StateVector

CLIP = 1e-12


@dataclass(frozen=True)
class ObservableRecord:
    step: int
    purity: float
    fidelity: float
    trace_error: float
    min_eig: Optional[float] = None


def purity(rho: DensityMatrix) -> float:
    """``tr(rho^2)`` as the squared Frobenius norm."""
    r = rho.entries
    return float(np.vdot(r, r).real)


def fidelity(psi: StateVector, rho: DensityMatrix) -> float:
    """``sqrt(<psi|rho|psi>)`` for a pure reference state."""
    v = psi.vector(rho.basis)
    form = float(np.vdot(v, rho.entries @ v).real)
    if form < -CLIP:
        raise NegativeForm(f"<psi|rho|psi> = {form:.3e} < 0: density matrix lost positivity")
    return float(np.sqrt(max(form, 0.0)))


def husimi_l1_distance(a: HusimiField, b: HusimiField) -> float:
    """Total-variation distance between two fields normalized to unit sum."""
    if a.values.shape != b.values.shape:
        raise GridMismatch(f"grids differ: {a.values.shape} vs {b.values.shape}")
    pa = a.values / a.values.sum()
    pb = b.values / b.values.sum()
    return float(0.5 * np.abs(pa - pb).sum())


def default_observers(psi: Optional[StateVector] = None, diagnostics: bool = True):
    def core(t, rho):
        row = {"purity": purity(rho), "trace_error": abs(np.trace(rho.entries).real - 1.0)}
        row["fidelity"] = fidelity(psi, rho) if psi is not None else float("nan")
        return row

    def positivity(t, rho):
        return {"min_eig": rho.min_eigenvalue()}

    return [core, positivity] if diagnostics else [core]
