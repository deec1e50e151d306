"""Speed limits for mixed states through purification.

A density matrix ``rho = sum_i p_i |phi_i><phi_i|`` is lifted to
``sum_i sqrt(p_i) |phi_i> (x) |a_i>`` with a fixed computational ancilla
basis. Differentiating the lifted curve needs a gauge for the eigenvectors;
the one used here is parallel transport: eigenbranches are followed by
maximal overlap, and each branch (or degenerate block, via orthogonal
Procrustes) is rotated so its overlap with the previous sample is
Hermitian positive. Speeds and bounds depend on this choice; it is recorded
in every report's metadata.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import BOUND_SLACK, BoundReport, PureState, Trajectory, qsl_report

GAUGE = "parallel-transport"
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
NEGATIVE_TOL = 1e-10
CLAMP_BELOW = 1e-12
DEGENERATE_TOL = 1e-9
AMBIGUITY_TOL = 1e-6


class BranchMatchingError(ValueError):
    """Eigenbranches could not be matched unambiguously between samples."""


def validate_density(rho, index: int | None = None) -> np.ndarray:
    where = "" if index is None else f"sample {index}: "
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"{where}density matrix must be square, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValueError(f"{where}density matrix has non-finite entries")
    herm_err = np.max(np.abs(rho - rho.conj().T))
    if herm_err > HERMITIAN_TOL:
        raise ValueError(f"{where}density matrix is not Hermitian (deviation {herm_err:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"{where}density matrix has trace {tr:.12g}, expected 1")
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if evals[0] < -NEGATIVE_TOL:
        raise ValueError(f"{where}density matrix has negative eigenvalue {evals[0]:.3e}")
    return rho


@dataclass(frozen=True)
class DensityTrajectory:
    samples: np.ndarray
    dt: float
    hbar: float = 1.0

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)
        if s.ndim != 3 or s.shape[1] != s.shape[2]:
            raise ValueError(f"samples must have shape (n, dim, dim), got {s.shape}")
        if s.shape[0] < 3:
            raise ValueError(f"a density trajectory needs at least 3 samples, got {s.shape[0]}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be > 0, got {self.hbar}")
        for k, rho in enumerate(s):
            validate_density(rho, k)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


def _spectrum(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending, clamped, renormalized) and eigenvectors as columns."""
    p, V = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    order = np.argsort(-p, kind="stable")
    p, V = p[order], V[:, order]
    p = np.where(p < CLAMP_BELOW, 0.0, p)
    p = p / p.sum()
    return p, V


def _canonical_phases(V: np.ndarray) -> np.ndarray:
    # Largest-modulus component of each eigenvector made real and positive.
    idx = np.argmax(np.abs(V) > (1.0 - 1e-12) * np.max(np.abs(V), axis=0), axis=0)
    lead = V[idx, np.arange(V.shape[1])]
    return V * (np.conj(lead) / np.abs(lead))


def _clusters(p: np.ndarray) -> list[list[int]]:
    groups = [[0]]
    for i in range(1, p.size):
        if abs(p[i] - p[groups[-1][-1]]) <= DEGENERATE_TOL:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _assemble(p: np.ndarray, frame: np.ndarray) -> np.ndarray:
    # |Psi> = sum_i sqrt(p_i) |phi_i> (x) |a_i>, flattened system-major.
    return (frame * np.sqrt(p)[None, :]).reshape(-1)


def purify(rho) -> PureState:
    """Purification with eigenvalues in descending order on ancilla states ``a_0, a_1, ...``."""
    rho = validate_density(rho)
    p, V = _spectrum(rho)
    return PureState(_assemble(p, _canonical_phases(V)))


def reduced_state(psi, dim: int) -> np.ndarray:
    """Partial trace over the ancilla of a system-major purification."""
    amps = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=complex)
    M = amps.reshape(dim, -1)
    return M @ M.conj().T


def _align(prev_frame: np.ndarray, p: np.ndarray, V: np.ndarray, index: int) -> tuple[np.ndarray, np.ndarray]:
    """Order and rotate the new eigenbasis to continue the previous branches."""
    dim = V.shape[0]
    groups = _clusters(p)
    # weight[j, c]: squared overlap of old branch j with new eigenspace c
    weight = np.empty((dim, len(groups)))
    for c, cols in enumerate(groups):
        weight[:, c] = np.sum(np.abs(V[:, cols].conj().T @ prev_frame) ** 2, axis=0)
    for j in range(dim):
        top = np.sort(weight[j])[::-1]
        if top.size > 1 and top[0] - top[1] < AMBIGUITY_TOL:
            raise BranchMatchingError(
                f"ambiguous eigenbranch matching at sample {index}: branch {j} overlaps "
                f"two eigenspaces equally ({top[0]:.8f} vs {top[1]:.8f})"
            )
    # One slot per eigenvector, so degenerate blocks absorb as many branches as their size.
    slot_group = np.concatenate([[c] * len(cols) for c, cols in enumerate(groups)])
    rows, slots = linear_sum_assignment(-weight[:, slot_group])
    assigned = {c: [] for c in range(len(groups))}
    for j, s in zip(rows, slots):
        assigned[slot_group[s]].append(j)

    frame = np.empty_like(V)
    probs = np.empty_like(p)
    for c, cols in enumerate(groups):
        branches = sorted(assigned[c])
        block = V[:, cols]
        # Orthogonal Procrustes: the rotation R within the block maximizing
        # Re tr(F^dag block R), which makes F^dag (block R) Hermitian positive.
        U, _, Wh = np.linalg.svd(block.conj().T @ prev_frame[:, branches])
        frame[:, branches] = block @ (U @ Wh)
        probs[branches] = p[cols]
    return probs, frame


def purified_trajectory(rhos: DensityTrajectory, continuity: float | None = None) -> Trajectory:
    """Continuous purified curve of a density-matrix trajectory (parallel-transport gauge)."""
    p, V = _spectrum(rhos.samples[0])
    frame = _canonical_phases(V)
    out = np.empty((len(rhos), rhos.dim * rhos.dim), dtype=complex)
    out[0] = _assemble(p, frame)
    for k in range(1, len(rhos)):
        if np.array_equal(rhos.samples[k], rhos.samples[k - 1]):
            # Repeated sample: keep the frame so the curve stays exactly still.
            out[k] = out[k - 1]
            continue
        p_new, V_new = _spectrum(rhos.samples[k])
        p, frame = _align(frame, p_new, V_new, k)
        out[k] = _assemble(p, frame)
    kwargs = {} if continuity is None else {"continuity": continuity}
    return Trajectory(out, rhos.dt, rhos.hbar, **kwargs)


def mixed_qsl(rhos: DensityTrajectory, tolerance: float = BOUND_SLACK) -> BoundReport:
    """Speed-limit bound for a density-matrix trajectory via its purification."""
    report = qsl_report(purified_trajectory(rhos), tolerance)
    report.meta.update({"purification_gauge": GAUGE, "ancilla_basis": "computational"})
    return report
