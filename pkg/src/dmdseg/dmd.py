"""SVD-based dynamic mode decomposition.

Given snapshot matrices P1 = [x_1 .. x_{N-1}] and P2 = [x_2 .. x_N], the
unknown propagator A with P2 ~ A P1 is projected onto the left singular
vectors of P1::

    P1 = U S V*          (thin SVD, truncated)
    H  = U* P2 V S^-1    (r x r reduced operator)
    H w = s w            (eigenpairs of H)
    Psi = P2 V S^-1 w    (dynamic modes)

Mode ``j`` evolves as ``s_j**k`` over frames, i.e. with continuous-time
rate ``ln(s_j) / delta_t``.
"""
from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NumericalError, ValidationError
from .snapshots import SnapshotPair, split_snapshots

logger = logging.getLogger(__name__)

DEFAULT_REL_CUTOFF = 1e-10
EIG_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class ThinSvd:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        return self.sigma.shape[0]


@dataclass(frozen=True)
class DmdResult:
    eigenvalues: np.ndarray
    modes: np.ndarray
    frequencies: np.ndarray
    amplitudes: np.ndarray
    delta_t: float
    n_frames: int
    singular_values: np.ndarray

    @property
    def rank(self) -> int:
        return self.eigenvalues.shape[0]


def optimal_rank(sigma: np.ndarray, shape: tuple[int, int]) -> int:
    """Optimal hard-threshold rank for a matrix with unknown white noise level.

    Uses the approximation ``omega(beta) = 0.56 beta^3 - 0.95 beta^2 +
    1.82 beta + 1.43`` of Gavish and Donoho (2014), thresholding at
    ``omega(beta) * median(sigma)``.  Always returns at least 1.
    """
    m, n = shape
    beta = min(m, n) / max(m, n)
    omega = 0.56 * beta**3 - 0.95 * beta**2 + 1.82 * beta + 1.43
    tau = omega * np.median(sigma)
    return max(1, int(np.sum(sigma > tau)))


def thin_svd(p1, rel_cutoff: float = DEFAULT_REL_CUTOFF, rank: int | str | None = None) -> ThinSvd:
    """Truncated SVD of the first snapshot matrix.

    Singular triplets with ``sigma_i >= rel_cutoff * sigma_1`` are kept.
    ``rank`` optionally truncates further: an integer caps the rank, and
    ``"auto"`` applies :func:`optimal_rank`, which suits noisy sequences
    where the trailing singular values only carry noise.
    """
    p1 = np.asarray(p1, dtype=np.float64)
    if p1.ndim != 2 or p1.size == 0:
        raise ValidationError(f"snapshot matrix must be a nonempty 2-D array, got shape {p1.shape}")
    if not 0 <= rel_cutoff < 1:
        raise ValidationError(f"rel_cutoff must lie in [0, 1), got {rel_cutoff}")
    if not np.all(np.isfinite(p1)):
        raise ValidationError("snapshot matrix contains non-finite values")

    u, s, vt = np.linalg.svd(p1, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise NumericalError("rank zero: degenerate sequence")
    r = int(np.sum(s >= rel_cutoff * s[0]))
    # exact zeros never survive, even with rel_cutoff == 0
    r = min(r, int(np.sum(s > 0)))
    if rank == "auto":
        r = min(r, optimal_rank(s, p1.shape))
    elif rank is not None:
        if isinstance(rank, bool) or not isinstance(rank, (int, np.integer)) or rank < 1:
            raise ValidationError(f"rank must be a positive integer, 'auto' or None, got {rank!r}")
        r = min(r, int(rank))
    return ThinSvd(u[:, :r], s[:r].copy(), vt[:r].T.copy())


def compute_h_tilde(svd: ThinSvd, p2) -> np.ndarray:
    """Reduced operator ``U* P2 V S^-1`` (real for real data)."""
    p2 = np.asarray(p2, dtype=np.float64)
    if p2.ndim != 2 or p2.shape[0] != svd.u.shape[0] or p2.shape[1] != svd.v.shape[0]:
        raise ValidationError(
            f"P2 shape {p2.shape} does not match the SVD of a {svd.u.shape[0]}x{svd.v.shape[0]} matrix"
        )
    return (svd.u.T @ p2 @ svd.v) / svd.sigma


def eig_small(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and unit-norm eigenvectors of a small dense matrix.

    Backed by LAPACK ``geev`` (Hessenberg reduction plus shifted QR).  Each
    pair is checked against ``||H w - s w|| <= 1e-8 ||H||``.
    """
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 1:
        raise ValidationError(f"eig_small needs a nonempty square matrix, got shape {h.shape}")
    try:
        vals, vecs = np.linalg.eig(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration did not converge: {exc}") from None
    vals = vals.astype(np.complex128)
    vecs = vecs.astype(np.complex128)
    norms = np.linalg.norm(vecs, axis=0)
    vecs = vecs / np.where(norms == 0, 1.0, norms)

    scale = np.linalg.norm(h, 2)
    residual = np.linalg.norm(h @ vecs - vecs * vals, axis=0)
    worst = int(np.argmax(residual))
    if residual[worst] > EIG_RESIDUAL_TOL * max(scale, np.finfo(float).tiny):
        raise NumericalError(
            f"eigenpair {worst} residual {residual[worst]:.3e} exceeds {EIG_RESIDUAL_TOL:g} * ||H|| = "
            f"{EIG_RESIDUAL_TOL * scale:.3e}"
        )
    return vals, vecs


def compute_modes(p2, svd: ThinSvd, omega, normalize: bool = True) -> np.ndarray:
    """Dynamic modes ``P2 V S^-1 omega``, scaled to unit Euclidean norm by default."""
    p2 = np.asarray(p2, dtype=np.float64)
    omega = np.asarray(omega)
    if p2.shape[1] != svd.v.shape[0] or omega.shape[0] != svd.rank:
        raise ValidationError(
            f"cannot form modes from P2 {p2.shape}, V {svd.v.shape} and eigenvectors {omega.shape}"
        )
    modes = (p2 @ (svd.v / svd.sigma)) @ omega
    if normalize:
        norms = np.linalg.norm(modes, axis=0)
        modes = modes / np.where(norms == 0, 1.0, norms)
    return modes


def compute_frequencies(eigenvalues, delta_t: float) -> np.ndarray:
    """Continuous-time rates ``ln(s) / delta_t`` on the principal branch.

    Zero eigenvalues have no logarithm; their entries are NaN.
    """
    if not delta_t > 0:
        raise ValidationError(f"delta_t must be positive, got {delta_t}")
    eig = np.asarray(eigenvalues, dtype=np.complex128)
    out = np.full(eig.shape, np.nan + 1j * np.nan, dtype=np.complex128)
    nz = eig != 0
    out[nz] = np.log(eig[nz]) / delta_t
    return out


def vandermonde(eigenvalues, f: int) -> np.ndarray:
    """Temporal matrix with entry (j, k) = s_j**k for k = 0..f."""
    if f < 0:
        raise ValidationError(f"f must be nonnegative, got {f}")
    eig = np.asarray(eigenvalues, dtype=np.complex128)
    return eig[:, np.newaxis] ** np.arange(f + 1)


def compute_amplitudes(modes, first_frame) -> np.ndarray:
    """Least-squares amplitudes b with ``modes @ b ~ first_frame``.

    A rank-deficient mode matrix yields the minimum-norm solution and a
    RuntimeWarning.
    """
    modes = np.asarray(modes)
    if modes.ndim != 2 or modes.shape[1] == 0:
        raise ValidationError("amplitudes need a nonempty mode matrix")
    x = np.asarray(first_frame, dtype=np.complex128)
    if x.shape != (modes.shape[0],):
        raise ValidationError(f"first frame has shape {x.shape}, modes have {modes.shape[0]} rows")
    b, _, rank, _ = np.linalg.lstsq(modes, x, rcond=None)
    if rank < modes.shape[1]:
        warnings.warn(
            f"mode matrix is rank deficient ({rank} < {modes.shape[1]}); using minimum-norm amplitudes",
            RuntimeWarning,
            stacklevel=2,
        )
    return b


def fit(x, delta_t: float = 1.0, rel_cutoff: float = DEFAULT_REL_CUTOFF,
        rank: int | str | None = None) -> DmdResult:
    """Run the full decomposition on a (mn, N) data matrix."""
    pair: SnapshotPair = split_snapshots(x)
    svd = thin_svd(pair.p1, rel_cutoff, rank)
    h = compute_h_tilde(svd, pair.p2)
    eigenvalues, omega = eig_small(h)
    modes = compute_modes(pair.p2, svd, omega)
    amplitudes = compute_amplitudes(modes, pair.p1[:, 0])
    frequencies = compute_frequencies(eigenvalues, delta_t)
    logger.debug("DMD: %d snapshots, rank %d", pair.p1.shape[1], svd.rank)
    return DmdResult(
        eigenvalues=eigenvalues,
        modes=modes,
        frequencies=frequencies,
        amplitudes=amplitudes,
        delta_t=float(delta_t),
        n_frames=pair.p1.shape[1] + 1,
        singular_values=svd.sigma,
    )


def reconstruct(result: DmdResult, mode_indices: Sequence[int] | None = None, f: int | None = None,
                return_imag: bool = False):
    """Rebuild frames 0..f from a subset of modes.

    ``Psi_sel @ diag(b_sel) @ vandermonde(s_sel, f)``; ``f`` defaults to
    ``n_frames - 1`` (the original time span) and larger values forecast.
    Only the real part is returned; with ``return_imag`` the relative size
    of the discarded imaginary part comes back as a second value.
    """
    if mode_indices is None:
        idx = np.arange(result.rank)
    else:
        idx = np.asarray(list(mode_indices), dtype=int)
        if idx.size == 0:
            raise ValidationError("reconstruction needs at least one mode")
        if idx.min() < 0 or idx.max() >= result.rank:
            raise ValidationError(f"mode indices must lie in 0..{result.rank - 1}")
    if f is None:
        f = result.n_frames - 1
    dynamics = vandermonde(result.eigenvalues[idx], f) * result.amplitudes[idx, np.newaxis]
    full = result.modes[:, idx] @ dynamics
    real = full.real.copy()
    denom = np.linalg.norm(full)
    imag = float(np.linalg.norm(full.imag) / denom) if denom > 0 else 0.0
    logger.debug("reconstruction imaginary residue %.3e", imag)
    if return_imag:
        return real, imag
    return real


SPECTRUM_COLUMNS = ("index", "re_sigma", "im_sigma", "abs_sigma", "phase", "re_mu", "im_mu", "amplitude_abs")


def write_spectrum_csv(result: DmdResult, path) -> None:
    """Dump eigenvalues, frequencies and amplitude magnitudes, one row per mode."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SPECTRUM_COLUMNS)
        for j, (s, mu, b) in enumerate(zip(result.eigenvalues, result.frequencies, result.amplitudes)):
            w.writerow([j] + [repr(float(v)) for v in (
                s.real, s.imag, abs(s), np.angle(s), mu.real, mu.imag, abs(b))])
