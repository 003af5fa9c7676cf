"""Exact exponential Gram matrices and observability constants.

The observation quadratic forms ``integral_I |trace|^2 dt`` are Hermitian
Gram matrices with closed-form entries.  Two-sided observability constants
are their extreme generalized eigenvalues against the (diagonal) energy
form.  For single-trace observation the merged frequency family has
clustered cross-branch pairs; chain clustering with Newton divided
differences provides a well-conditioned coordinate system for those.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import EpsilonUnderflow
from .signals import ExponentialSignal, exp_integral_matrix
from .spectral import Branch, PhysicalParams, spectrum_table

KERNEL_REL_TOL = 1e-14
COINCIDENT_TOL = 1e-12
EPSILON_FLOOR = 1e-14


@dataclass(frozen=True)
class ObservationWindow:
    t0: float
    t1: float

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("window must be non-degenerate: t1 > t0")

    @property
    def length(self) -> float:
        return self.t1 - self.t0


@dataclass(frozen=True)
class Chain:
    """Equivalence class of clustered frequencies; at most two members."""

    members: tuple  # ((label, freq), ...) sorted by frequency
    epsilon: float

    def __post_init__(self):
        if not 1 <= len(self.members) <= 2:
            raise ValueError("a chain has one or two members")


def cluster_chains(frequencies, epsilon: float) -> tuple[list[Chain], float]:
    """Transitive closure of |x - y| < epsilon over a labelled family.

    If any class collects more than two members, epsilon is halved until
    all classes have at most two; the final epsilon is returned alongside
    the chains.  Raises EpsilonUnderflow below 1e-14 (a genuine resonance).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    entries = sorted(frequencies, key=lambda lf: lf[1])
    while True:
        classes: list[list] = []
        for label, freq in entries:
            if classes and freq - classes[-1][-1][1] < epsilon:
                classes[-1].append((label, freq))
            else:
                classes.append([(label, freq)])
        if all(len(cls) <= 2 for cls in classes):
            return [Chain(tuple(cls), epsilon) for cls in classes], epsilon
        epsilon /= 2
        if epsilon < EPSILON_FLOOR:
            raise EpsilonUnderflow(
                "clustering tolerance underflow; run resonance_check")


def divided_diff_basis(chain: Chain) -> list[ExponentialSignal]:
    """Newton divided-difference functions of a chain.

    Singleton -> {e^{i w t}}; a separated pair -> {e^{i w1 t},
    (e^{i w1 t} - e^{i w2 t})/(w1 - w2)}; a coincident pair -> the analytic
    limit {e^{i w t}, t e^{i w t}}.
    """
    freqs = [f for _, f in chain.members]
    if len(freqs) == 1:
        return [ExponentialSignal(((1.0 + 0.0j, freqs[0], 0),))]
    w1, w2 = freqs
    if abs(w1 - w2) <= COINCIDENT_TOL:
        return [
            ExponentialSignal(((1.0 + 0.0j, w1, 0),)),
            ExponentialSignal(((1.0 + 0.0j, w1, 1),)),
        ]
    inv = 1.0 / (w1 - w2)
    return [
        ExponentialSignal(((1.0 + 0.0j, w1, 0),)),
        ExponentialSignal.from_terms([(inv, w1, 0), (-inv, w2, 0)]),
    ]


@dataclass
class GramMatrix:
    labels: list
    entries: np.ndarray
    window: ObservationWindow

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)

    def eigvals(self) -> np.ndarray:
        return scipy.linalg.eigvalsh(self.entries)


def exp_gram(basis: list[ExponentialSignal], weights, window: ObservationWindow,
             labels=None) -> GramMatrix:
    """Gram matrix of vector-valued signals b_m(t) W_m over the window.

    Entry (m, n) is ``<W_m, W_n> integral_I b_m conj(b_n) dt`` with all
    integrals in closed form; weights default to scalar 1.
    """
    if not basis:
        raise ValueError("basis must be nonempty")
    n = len(basis)
    G = np.empty((n, n), dtype=complex)
    for m in range(n):
        for j in range(m, n):
            val = basis[m].l2_inner(basis[j], window.t0, window.t1)
            if weights is not None:
                val *= np.vdot(np.asarray(weights[j]), np.asarray(weights[m]))
            G[m, j] = val
            G[j, m] = np.conj(val)
    # symmetrize away last-bit asymmetry
    G = (G + G.conj().T) / 2
    return GramMatrix(labels or list(range(n)), G, window)


def _trace_amplitudes(params: PhysicalParams, N: int, x0: float):
    """Per-coefficient trace amplitudes for the u and v channels, plus the
    frequency and energy-weight vectors, all flattened over (branch, k)."""
    table = spectrum_table(params, N)
    phase = np.exp(1j * table.ks * x0)
    u_amp = (table.z[:, :, 0] * phase).ravel()
    v_amp = (table.z[:, :, 1] * phase).ravel()
    omega = table.omega.ravel()
    ew = (2 * np.pi * table.norm2).ravel()
    labels = [(int(k), b) for b in (Branch.PLUS, Branch.MINUS) for k in table.ks]
    return u_amp, v_amp, omega, ew, labels


@dataclass(frozen=True)
class ObservabilityReport:
    alpha: float
    beta: float
    kernel_dim: int
    eigenvalues: np.ndarray = field(repr=False)
    kernel_vectors: np.ndarray = field(repr=False)
    labels: list = field(repr=False)


def observability_constants(params: PhysicalParams, N: int, x0: float,
                            window: ObservationWindow,
                            mode: str = "both") -> ObservabilityReport:
    """Extreme generalized eigenvalues of the observation form against the
    energy form.

    alpha is the smallest eigenvalue (floored at zero: the form is PSD and
    tiny negatives are roundoff), beta the largest; kernel_dim counts
    eigenvalues at or below the relative kernel threshold.  mode selects
    which traces are observed.
    """
    if mode not in ("both", "u_only", "v_only"):
        raise ValueError(f"unknown mode {mode!r}")
    u_amp, v_amp, omega, ew, labels = _trace_amplitudes(params, N, x0)
    base = exp_integral_matrix(omega[:, None] - omega[None, :],
                               window.t0, window.t1)
    O = np.zeros_like(base)
    if mode in ("both", "u_only"):
        O += np.outer(u_amp, np.conj(u_amp)) * base
    if mode in ("both", "v_only"):
        O += np.outer(v_amp, np.conj(v_amp)) * base
    O = (O + O.conj().T) / 2
    vals, vecs = scipy.linalg.eigh(O, np.diag(ew))
    beta = float(vals[-1])
    thresh = KERNEL_REL_TOL * beta
    kernel = vals <= thresh
    kernel_dim = int(np.sum(kernel))
    alpha = float(max(vals[0], 0.0))
    kernel_vecs = vecs[:, kernel]
    refined = _structural_kernel(u_amp, v_amp, omega, mode)
    if refined.shape[1] == kernel_dim:
        # the eigh vectors of a near-degenerate tiny cluster mix with the
        # adjacent almost-unobservable directions; the amplitude-map null
        # space is well conditioned and spans the same exact kernel
        kernel_vecs = refined
    return ObservabilityReport(alpha, beta, kernel_dim, vals,
                               kernel_vecs, labels)


def _structural_kernel(u_amp, v_amp, omega, mode) -> np.ndarray:
    """Orthonormal basis of the exact kernel of the observation form.

    A coefficient vector is unobserved iff the trace signal vanishes
    identically, i.e. the summed amplitude over each group of exactly
    coinciding frequencies is zero for every observed channel (complex
    exponentials with distinct frequencies are independent on any
    window)."""
    tol = 1e-9 * (1.0 + np.max(np.abs(omega)))
    order = np.argsort(omega)
    groups = []
    for idx in order:
        if groups and abs(omega[idx] - omega[groups[-1][0]]) <= tol:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    rows = []
    for g in groups:
        if mode in ("both", "u_only"):
            row = np.zeros(len(omega), dtype=complex)
            row[g] = np.conj(u_amp[g])
            rows.append(row)
        if mode in ("both", "v_only"):
            row = np.zeros(len(omega), dtype=complex)
            row[g] = np.conj(v_amp[g])
            rows.append(row)
    return scipy.linalg.null_space(np.array(rows))


def ingham_report(frequencies, window: ObservationWindow) -> tuple[float, float]:
    """(direct_const, inverse_const): extreme eigenvalues of the scalar
    exponential Gram of an arbitrary frequency family over the window."""
    freqs = np.asarray(sorted(frequencies), dtype=float)
    if len(np.unique(freqs)) != len(freqs):
        raise ValueError("frequencies must be distinct")
    G = exp_integral_matrix(freqs[:, None] - freqs[None, :],
                            window.t0, window.t1)
    G = (G + G.conj().T) / 2
    vals = scipy.linalg.eigvalsh(G)
    return float(vals[-1]), float(vals[0])


def default_chain_epsilon(params: PhysicalParams, N: int) -> float:
    """min(1, gamma_hat / 4) with gamma_hat the smallest same-branch gap."""
    table = spectrum_table(params, N)
    gamma = min(float(np.min(np.abs(np.diff(table.omega[0])))),
                float(np.min(np.abs(np.diff(table.omega[1])))))
    return min(1.0, gamma / 4)


def divided_difference_constants(params: PhysicalParams, N: int,
                                 window: ObservationWindow,
                                 epsilon: float | None = None):
    """Riesz bounds of the merged frequency family in divided-difference
    coordinates: extreme eigenvalues of the Gram of the Newton basis built
    over the clustered chains."""
    table = spectrum_table(params, N)
    entries = [((int(k), b), float(table.omega[b, k + N]))
               for b in (Branch.PLUS, Branch.MINUS)
               for k in table.ks]
    # the structural k=0 duplicate is one family element, not a cluster
    seen = set()
    unique = []
    for label, f in entries:
        if f in seen:
            continue
        seen.add(f)
        unique.append((label, f))
    if epsilon is None:
        epsilon = default_chain_epsilon(params, N)
    chains, eps = cluster_chains(unique, epsilon)
    basis = [sig for ch in chains for sig in divided_diff_basis(ch)]
    gm = exp_gram(basis, None, window)
    vals = gm.eigvals()
    return float(vals[0]), float(vals[-1]), eps
