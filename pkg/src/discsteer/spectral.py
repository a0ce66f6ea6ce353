"""Radial Fourier-Bessel states, Sobolev norms, reference targets and couplings.

The normalised radial modes are ``m_k(r) = sqrt(2) J_0(j_{0,k} r) / |J_1(j_{0,k})|``
so that ``<m_k, m_l> = int_0^1 m_k m_l r dr = delta_{kl}``. All coefficient
sequences below are taken against this basis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bessel import QuadratureRule, ZeroTable, bessel_j, weighted_integral
from .errors import DomainError


@dataclass(frozen=True)
class RadialState:
    """Truncated coefficient vector of a radial wave function, modes 1..N."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=complex))

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def normalize(self) -> "RadialState":
        n = self.l2_norm()
        if n == 0:
            raise DomainError("cannot normalize the zero state")
        return RadialState(self.coeffs / n)

    def padded(self, n: int) -> np.ndarray:
        """Coefficients zero-extended (or truncated) to length n."""
        out = np.zeros(n, dtype=complex)
        m = min(n, self.n_modes)
        out[:m] = self.coeffs[:m]
        return out

    def to_json(self, path) -> None:
        pairs = [[float(c.real), float(c.imag)] for c in self.coeffs]
        with open(path, "w") as fh:
            json.dump(pairs, fh)

    @classmethod
    def from_json(cls, path) -> "RadialState":
        with open(path) as fh:
            pairs = json.load(fh)
        return cls(np.array([complex(re, im) for re, im in pairs]))


@dataclass(frozen=True)
class TargetParams:
    """Weights (theta2, theta3) of the three-mode reference state.

    Both must be positive with theta2 + theta3 < 1; the boundary is excluded
    because the linearisation degenerates there.
    """

    theta2: float
    theta3: float

    def __post_init__(self):
        if not (self.theta2 > 0 and self.theta3 > 0
                and self.theta2 + self.theta3 < 1):
            raise DomainError(
                f"(theta2, theta3)=({self.theta2}, {self.theta3}) must satisfy "
                "theta2, theta3 > 0 and theta2 + theta3 < 1")

    @property
    def theta1(self) -> float:
        return 1.0 - self.theta2 - self.theta3

    def weights(self) -> np.ndarray:
        """(sqrt(theta1), sqrt(theta2), sqrt(theta3))."""
        return np.sqrt([self.theta1, self.theta2, self.theta3])


def mode(k: int, r, table: ZeroTable):
    """Normalised radial eigenfunction m_k evaluated at r in [0, 1]."""
    z = table[(0, k)]
    return np.sqrt(2.0) * bessel_j(0, np.asarray(r, dtype=float) * z) / abs(bessel_j(1, z))


def hs_norm(state: RadialState, s: float, table: ZeroTable) -> float:
    """Spectral Sobolev norm (sum_k |j_{0,k}^s c_k|^2)^(1/2); s=0 is the L2 norm."""
    if s < 0:
        raise DomainError("s must be >= 0")
    j = table.row(0)[:state.n_modes]
    if state.n_modes > table.k_max:
        raise DomainError("state truncation exceeds zero table range")
    return float(np.sqrt(np.sum(np.abs(j ** s * state.coeffs) ** 2)))


def phi_sharp(params: TargetParams, n_modes: int = 3) -> RadialState:
    """Unit-norm reference state supported on modes 1..3."""
    c = np.zeros(n_modes, dtype=complex)
    c[:3] = params.weights()
    return RadialState(c)


def wave_packet(params: TargetParams, tau: float, table: ZeroTable,
                n_modes: int = 3) -> RadialState:
    """Free evolution of the reference state at time tau."""
    lam = table.lambdas(3)
    c = np.zeros(n_modes, dtype=complex)
    c[:3] = params.weights() * np.exp(-1j * lam * tau)
    return RadialState(c)


def coupling_closed_form(l: int, k: int, table: ZeroTable) -> float:
    """Off-diagonal coupling <r^2 m_l, m_k> in closed form.

    Equals sign(J_1(j_{0,l}) J_1(j_{0,k})) * 8 j_{0,l} j_{0,k} / (j_{0,k}^2 - j_{0,l}^2)^2.
    """
    if l == k:
        raise DomainError("diagonal couplings are handled by coupling_diagonal")
    jl = table[(0, l)]
    jk = table[(0, k)]
    sign = np.sign(bessel_j(1, jl)) * np.sign(bessel_j(1, jk))
    return float(sign * 8.0 * jl * jk / (jk ** 2 - jl ** 2) ** 2)


def coupling_diagonal(k: int, table: ZeroTable, rule: QuadratureRule) -> float:
    """Diagonal coupling <r^2 m_k, m_k> by quadrature; lies in (0, 1)."""
    z = table[(0, k)]
    scale = 2.0 / bessel_j(1, z) ** 2

    def integrand(r):
        return scale * r ** 2 * bessel_j(0, z * r) ** 2

    return float(np.real(weighted_integral(integrand, rule)))


def coupling_matrix(n: int, table: ZeroTable, rule: QuadratureRule) -> np.ndarray:
    """Symmetric n x n matrix M_{kl} = <r^2 m_l, m_k> (1-based mode indices)."""
    m = np.empty((n, n))
    for k in range(1, n + 1):
        m[k - 1, k - 1] = coupling_diagonal(k, table, rule)
        for l in range(1, k):
            v = coupling_closed_form(l, k, table)
            m[k - 1, l - 1] = v
            m[l - 1, k - 1] = v
    return m
