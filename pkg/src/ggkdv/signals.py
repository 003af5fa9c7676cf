"""Finite exponential-polynomial sums in time and their exact integrals.

Traces, controls and Gram entries all live in the class

    s(t) = sum_j A_j * t^{d_j} * e^{i mu_j t},   d_j in {0, 1},

so every time integral in the pipeline has a closed form.  The only
numerical care needed is the near-resonant regime |mu - nu| -> 0, where
the closed forms cancel catastrophically; there we switch to a power
series that is exact in the limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Below this value of |i*z| * t_scale the antiderivative formulas lose
# digits to cancellation and the series expansion is used instead.
_SERIES_THRESHOLD = 0.5


def exp_poly_integral(z, m: int, t0: float, t1: float) -> complex:
    """Exact ``integral_{t0}^{t1} t^m e^{i z t} dt`` for complex z, m >= 0.

    Uses the antiderivative e^{wt} * sum_j (-1)^j m!/(m-j)! t^{m-j} / w^{j+1}
    with w = i z, switching to a power series in w when |w| * t_scale is
    small (this covers w = 0 exactly).
    """
    w = 1j * complex(z)
    t_scale = max(abs(t0), abs(t1), 1.0)
    if abs(w) * t_scale <= _SERIES_THRESHOLD:
        return _series_integral(w, m, t0, t1)

    def antideriv(t):
        acc = 0.0 + 0.0j
        coeff = 1.0
        for j in range(m + 1):
            acc += (-1) ** j * coeff * t ** (m - j) / w ** (j + 1)
            coeff *= m - j
        return np.exp(w * t) * acc

    return antideriv(t1) - antideriv(t0)


def _series_integral(w: complex, m: int, t0: float, t1: float) -> complex:
    # integral t^m e^{wt} = sum_j w^j/j! (t1^{m+j+1}-t0^{m+j+1})/(m+j+1)
    acc = 0.0 + 0.0j
    wj = 1.0 + 0.0j
    for j in range(40):
        p = m + j + 1
        term = wj * (t1**p - t0**p) / p
        acc += term
        if j > 3 and abs(term) <= 1e-18 * max(abs(acc), 1e-300):
            break
        wj *= w / (j + 1)
    return acc


def exp_integral_matrix(delta: np.ndarray, t0: float, t1: float) -> np.ndarray:
    """Vectorized ``integral_{t0}^{t1} e^{i delta t} dt`` over an array of
    real frequency differences."""
    delta = np.asarray(delta, dtype=float)
    out = np.empty(delta.shape, dtype=complex)
    t_scale = max(abs(t0), abs(t1), 1.0)
    small = np.abs(delta) * t_scale <= _SERIES_THRESHOLD
    d = delta[~small]
    out[~small] = (np.exp(1j * d * t1) - np.exp(1j * d * t0)) / (1j * d)
    if np.any(small):
        w = 1j * delta[small]
        acc = np.zeros(w.shape, dtype=complex)
        wj = np.ones(w.shape, dtype=complex)
        for j in range(40):
            p = j + 1
            acc += wj * (t1**p - t0**p) / p
            wj *= w / (j + 1)
        out[small] = acc
    return out


@dataclass(frozen=True)
class ExponentialSignal:
    """Finite sum of terms ``amp * t^degree * e^{i freq t}``."""

    terms: tuple[tuple[complex, float, int], ...] = ()

    @staticmethod
    def from_terms(terms) -> "ExponentialSignal":
        """Build a signal, merging duplicate (freq, degree) keys and
        dropping zero amplitudes."""
        merged: dict[tuple[float, int], complex] = {}
        for amp, freq, degree in terms:
            key = (float(freq), int(degree))
            merged[key] = merged.get(key, 0.0) + complex(amp)
        kept = tuple(
            (amp, freq, degree)
            for (freq, degree), amp in sorted(merged.items())
            if amp != 0.0
        )
        return ExponentialSignal(kept)

    @staticmethod
    def zero() -> "ExponentialSignal":
        return ExponentialSignal(())

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __add__(self, other: "ExponentialSignal") -> "ExponentialSignal":
        return ExponentialSignal.from_terms(self.terms + other.terms)

    def scaled(self, factor: complex) -> "ExponentialSignal":
        return ExponentialSignal(
            tuple((amp * factor, f, d) for amp, f, d in self.terms)
        )

    def conjugate(self) -> "ExponentialSignal":
        return ExponentialSignal.from_terms(
            (np.conj(amp), -f, d) for amp, f, d in self.terms
        )

    def evaluate(self, t):
        """Evaluate the signal at scalar or array times."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for amp, freq, degree in self.terms:
            out += amp * t**degree * np.exp(1j * freq * t)
        return out if out.shape else complex(out)

    def l2_inner(self, other: "ExponentialSignal", t0: float, t1: float) -> complex:
        """Hermitian inner product ``integral s(t) conj(o(t)) dt`` in closed form."""
        acc = 0.0 + 0.0j
        for a1, f1, d1 in self.terms:
            for a2, f2, d2 in other.terms:
                acc += a1 * np.conj(a2) * exp_poly_integral(f1 - f2, d1 + d2, t0, t1)
        return acc

    def l2_norm_sq(self, t0: float, t1: float) -> float:
        return float(np.real(self.l2_inner(self, t0, t1)))

    def bilinear_integral(self, other: "ExponentialSignal", t0: float, t1: float) -> complex:
        """Unconjugated ``integral s(t) o(t) dt`` in closed form (directed)."""
        acc = 0.0 + 0.0j
        for a1, f1, d1 in self.terms:
            for a2, f2, d2 in other.terms:
                acc += a1 * a2 * exp_poly_integral(f1 + f2, d1 + d2, t0, t1)
        return acc
