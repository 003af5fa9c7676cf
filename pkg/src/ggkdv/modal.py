"""States in the eigenbasis and their free, forced and adjoint evolution.

A state is stored as the complex coefficient array c[branch, k+N] of the
expansion ``(u,v)(x) = sum_k (c_k^+ Z_k^+ + c_k^- Z_k^-) e^{ikx}``.  Free
evolution is a diagonal phase, Dirac-forced evolution integrates Duhamel
terms in closed form, and pointwise traces come out as exponential sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AliasError
from .signals import ExponentialSignal, exp_integral_matrix, exp_poly_integral
from .spectral import PhysicalParams, spectrum_table

REAL_FIELD_TOL = 1e-12


@dataclass
class ModalState:
    """Coefficients c_k^{+-} of a truncated state, shape (2, 2N+1)."""

    N: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (2, 2 * self.N + 1):
            raise ValueError("coefficient array must have shape (2, 2N+1)")

    @staticmethod
    def zeros(N: int) -> "ModalState":
        return ModalState(N, np.zeros((2, 2 * N + 1), dtype=complex))

    @staticmethod
    def random(N: int, rng: np.random.Generator, real_field: bool = False) -> "ModalState":
        c = rng.standard_normal((2, 2 * N + 1)) + 1j * rng.standard_normal((2, 2 * N + 1))
        if real_field:
            c = (c + np.conj(c[:, ::-1])) / 2
        return ModalState(N, c)

    def copy(self) -> "ModalState":
        return ModalState(self.N, self.coeffs.copy())

    def __add__(self, other: "ModalState") -> "ModalState":
        return ModalState(self.N, self.coeffs + other.coeffs)

    def __sub__(self, other: "ModalState") -> "ModalState":
        return ModalState(self.N, self.coeffs - other.coeffs)

    def scaled(self, factor: complex) -> "ModalState":
        return ModalState(self.N, self.coeffs * factor)

    def is_real_field(self, tol: float = REAL_FIELD_TOL) -> bool:
        dev = np.abs(self.coeffs - np.conj(self.coeffs[:, ::-1]))
        return float(np.max(dev)) <= tol * max(1.0, float(np.max(np.abs(self.coeffs))))


@dataclass
class GridFunction:
    """(u, v) sampled at M uniform circle points x_j = 2 pi j / M."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=complex)
        self.v = np.asarray(self.v, dtype=complex)
        if self.u.shape != self.v.shape or self.u.ndim != 1:
            raise ValueError("u and v must be 1-d arrays of equal length")

    @property
    def M(self) -> int:
        return len(self.u)

    @property
    def x(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.M) / self.M


def _fourier_coeffs(samples: np.ndarray, N: int) -> np.ndarray:
    """Coefficients hat{w}_k, |k| <= N, of w(x) = sum hat{w}_k e^{ikx}."""
    M = len(samples)
    spec = np.fft.fft(samples) / M
    out = np.empty(2 * N + 1, dtype=complex)
    for k in range(-N, N + 1):
        out[k + N] = spec[k % M]
    return out


def project(params: PhysicalParams, N: int, fields: GridFunction) -> ModalState:
    """Discrete transform followed by the weighted eigen-decomposition."""
    if fields.M < 2 * N + 2:
        raise AliasError(f"need M >= {2 * N + 2} samples for truncation N={N}")
    table = spectrum_table(params, N)
    uv = np.stack([_fourier_coeffs(fields.u, N), _fourier_coeffs(fields.v, N)])
    w = params.weight
    # c^{+-} = <(u_k, v_k), Z^{+-}>_w / ||Z^{+-}||_w^2 with real Z
    coeffs = (table.z[:, :, 0] * uv[0] + w * table.z[:, :, 1] * uv[1]) / table.norm2
    return ModalState(N, coeffs)


def modal_uv(params: PhysicalParams, state: ModalState) -> np.ndarray:
    """Fourier coefficients (hat u_k, hat v_k), shape (2, 2N+1)."""
    table = spectrum_table(params, state.N)
    return np.einsum("bkj,bk->jk", table.z, state.coeffs)


def reconstruct(params: PhysicalParams, state: ModalState, M: int) -> GridFunction:
    """Inverse discrete transform of the modal expansion."""
    N = state.N
    if M < 2 * N + 2:
        raise AliasError(f"need M >= {2 * N + 2} samples for truncation N={N}")
    uv = modal_uv(params, state)
    spec_u = np.zeros(M, dtype=complex)
    spec_v = np.zeros(M, dtype=complex)
    for k in range(-N, N + 1):
        spec_u[k % M] = uv[0, k + N]
        spec_v[k % M] = uv[1, k + N]
    return GridFunction(np.fft.ifft(spec_u) * M, np.fft.ifft(spec_v) * M)


def evolve(params: PhysicalParams, state: ModalState, t: float) -> ModalState:
    """Free flow: diagonal phases e^{i omega t} in the eigenbasis."""
    table = spectrum_table(params, state.N)
    return ModalState(state.N, state.coeffs * np.exp(1j * table.omega * t))


def energy(params: PhysicalParams, state: ModalState) -> float:
    """The conserved quantity ``integral |u|^2 + (ac/d) |v|^2 dx``."""
    table = spectrum_table(params, state.N)
    return float(2 * np.pi * np.sum(np.abs(state.coeffs) ** 2 * table.norm2))


def h_norm(params: PhysicalParams, state: ModalState) -> float:
    return float(np.sqrt(energy(params, state)))


def u_mean(params: PhysicalParams, state: ModalState) -> complex:
    """``integral u dx`` = 2 pi * hat{u}_0; conserved when f is absent."""
    table = spectrum_table(params, state.N)
    col = state.N
    return 2 * np.pi * complex(
        state.coeffs[0, col] * table.z[0, col, 0]
        + state.coeffs[1, col] * table.z[1, col, 0]
    )


def v_mean(params: PhysicalParams, state: ModalState) -> complex:
    table = spectrum_table(params, state.N)
    col = state.N
    return 2 * np.pi * complex(
        state.coeffs[0, col] * table.z[0, col, 1]
        + state.coeffs[1, col] * table.z[1, col, 1]
    )


def _trace_signals(omega, amps) -> ExponentialSignal:
    return ExponentialSignal.from_terms(
        (amp, freq, 0) for amp, freq in zip(amps.ravel(), omega.ravel())
    )


def trace(params: PhysicalParams, state: ModalState, x0: float):
    """Pointwise traces (u(., x0), v(., x0)) as exponential sums.

    Terms with coinciding frequencies (the k=0 pair) merge by amplitude
    addition.
    """
    table = spectrum_table(params, state.N)
    phase = np.exp(1j * table.ks * x0)
    u_amp = state.coeffs * table.z[:, :, 0] * phase
    v_amp = state.coeffs * table.z[:, :, 1] * phase
    return _trace_signals(table.omega, u_amp), _trace_signals(table.omega, v_amp)


def adjoint_trace(params: PhysicalParams, state: ModalState, x0: float):
    """Traces of an adjoint-basis state: (phi(., x0), psi(., x0))."""
    table = spectrum_table(params, state.N)
    phase = np.exp(1j * table.ks * x0)
    p_amp = state.coeffs * table.zt[:, :, 0] * phase
    q_amp = state.coeffs * table.zt[:, :, 1] * phase
    return _trace_signals(table.omega, p_amp), _trace_signals(table.omega, q_amp)


def adjoint_evolve(params: PhysicalParams, state: ModalState, t: float) -> ModalState:
    """Free adjoint flow; the transposed symbol shares the frequencies, so
    this is the same diagonal phase in the adjoint eigenbasis."""
    return evolve(params, state, t)


def adjoint_modal_uv(params: PhysicalParams, state: ModalState) -> np.ndarray:
    """Fourier coefficients (hat phi_k, hat psi_k) of an adjoint-basis state."""
    table = spectrum_table(params, state.N)
    return np.einsum("bkj,bk->jk", table.zt, state.coeffs)


def adjoint_project_uv(params: PhysicalParams, N: int, uv: np.ndarray) -> ModalState:
    """Decompose Fourier coefficients onto the adjoint eigenbasis (dual
    weight d/(ac))."""
    table = spectrum_table(params, N)
    w = 1.0 / params.weight
    coeffs = (table.zt[:, :, 0] * uv[0] + w * table.zt[:, :, 1] * uv[1]) / table.adj_norm2
    return ModalState(N, coeffs)


def _duhamel_increment(table, signal: ExponentialSignal, chan_weight: np.ndarray,
                       x0: float, T: float) -> np.ndarray:
    """Closed-form ``integral_0^T e^{i omega (T-s)} p(s) ds`` accumulated per
    (branch, mode) for forcing component p from one control channel."""
    phase = np.exp(-1j * table.ks * x0)
    base = chan_weight * phase / (2 * np.pi * table.norm2)
    acc = np.zeros(table.omega.shape, dtype=complex)
    for amp, mu, deg in signal.terms:
        delta = mu - table.omega
        if deg == 0:
            integ = exp_integral_matrix(delta, 0.0, T)
        else:
            integ = np.array([
                [exp_poly_integral(dd, deg, 0.0, T) for dd in row]
                for row in delta
            ])
        acc += amp * base * integ
    return acc * np.exp(1j * table.omega * T)


def forced_evolve(params: PhysicalParams, N: int, state0: ModalState,
                  f: ExponentialSignal | None, g: ExponentialSignal | None,
                  x0: float, T: float) -> ModalState:
    """Evolution under Dirac forcings ``f(t) delta_{x0}`` (u-equation) and
    ``g(t) delta_{x0}`` (v-equation) over [0, T], T of either sign.

    Per mode the forcing is decomposed onto the eigenbasis and each Duhamel
    integral is evaluated in closed form, with a series fallback near
    resonance.  With both controls absent this reduces to the free flow.
    """
    if state0.N != N:
        raise ValueError("state truncation does not match N")
    table = spectrum_table(params, N)
    out = evolve(params, state0, T)
    w = params.weight
    if f:
        out.coeffs += _duhamel_increment(table, f, table.z[:, :, 0], x0, T)
    if g:
        out.coeffs += _duhamel_increment(table, g, w * table.z[:, :, 1], x0, T)
    return out
