"""Spectral Galerkin simulation of the fixed-domain control systems.

The truncated dynamics are ``i c' = diag(lambda) c + w(t) M c + f(t)`` with
``lambda_k = j_{0,k}^2`` and M the symmetric coupling matrix of r^2 in the
normalised mode basis. Time stepping is trapezoidal (Crank-Nicolson), which is
exactly unitary for the homogeneous skew-adjoint generator.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .bessel import QuadratureRule, ZeroTable, gauss_legendre_rule
from .errors import AdmissibilityError, DomainError
from .spectral import RadialState, TargetParams, coupling_matrix

H10_MEAN_TOL = 1e-10


@dataclass(frozen=True)
class ControlSignal:
    """Real control sampled on a uniform grid over [0, T].

    Evaluation between samples is piecewise-linear unless an exact evaluator
    `fn` (and optionally its derivative `dfn`) is attached, in which case the
    samples are a view of `fn` on the grid and `fn` is used everywhere.
    """

    samples: np.ndarray
    T: float
    fn: object = field(default=None, repr=False, compare=False)
    dfn: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.samples.ndim != 1 or self.samples.size < 2:
            raise DomainError("a control signal needs at least two samples")
        if self.T <= 0:
            raise DomainError("horizon T must be positive")

    @classmethod
    def from_function(cls, fn, T: float, n_samples: int = 2049,
                      dfn=None) -> "ControlSignal":
        grid = np.linspace(0.0, T, n_samples)
        return cls(samples=np.real(fn(grid)), T=T, fn=fn, dfn=dfn)

    @classmethod
    def zero(cls, T: float, n_samples: int = 2049) -> "ControlSignal":
        return cls(samples=np.zeros(n_samples), T=T,
                   fn=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                   dfn=lambda t: np.zeros_like(np.asarray(t, dtype=float)))

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.samples.size)

    def __call__(self, t):
        if self.fn is not None:
            return np.real(self.fn(t))
        return np.interp(t, self.grid, self.samples)

    def derivative(self, t):
        """Derivative at t: exact if carried, otherwise central differences."""
        if self.dfn is not None:
            return np.real(self.dfn(t))
        d = np.gradient(self.samples, self.grid)
        return np.interp(t, self.grid, d)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def integral(self) -> float:
        """Time average of the signal over [0, T].

        With an exact evaluator attached, composite Gauss-Legendre panels are
        used so that highly oscillatory signals are resolved; the fixed sample
        grid only supports trapezoid accuracy.
        """
        if self.fn is not None:
            n_sub = max(64, 4 * (self.samples.size - 1))
            xg, wg = np.polynomial.legendre.leggauss(8)
            edges = np.linspace(0.0, self.T, n_sub + 1)
            mid = 0.5 * (edges[:-1] + edges[1:])
            half = 0.5 * np.diff(edges)
            ts = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
            wq = (half[:, None] * wg[None, :]).ravel()
            return float(np.sum(np.real(self.fn(ts)) * wq))
        return float(np.trapezoid(self.samples, self.grid))

    def is_h10_admissible(self) -> bool:
        """Endpoints vanish and the time average is (numerically) zero."""
        scale = max(self.max_abs(), 1e-300)
        ends_ok = abs(self.samples[0]) <= H10_MEAN_TOL * scale \
            and abs(self.samples[-1]) <= H10_MEAN_TOL * scale
        return ends_ok and abs(self.integral()) <= H10_MEAN_TOL * self.T * scale

    def __add__(self, other: "ControlSignal") -> "ControlSignal":
        if abs(self.T - other.T) > 1e-12 * max(self.T, other.T):
            raise DomainError("cannot add control signals with different horizons")
        n = max(self.samples.size, other.samples.size)
        grid = np.linspace(0.0, self.T, n)
        fn = dfn = None
        if self.fn is not None and other.fn is not None:
            a, b = self.fn, other.fn
            fn = lambda t: a(t) + b(t)
        if self.dfn is not None and other.dfn is not None:
            da, db = self.dfn, other.dfn
            dfn = lambda t: da(t) + db(t)
        return ControlSignal(samples=self(grid) + other(grid), T=self.T,
                             fn=fn, dfn=dfn)

    def __mul__(self, scalar: float) -> "ControlSignal":
        fn = dfn = None
        if self.fn is not None:
            f = self.fn
            fn = lambda t: scalar * f(t)
        if self.dfn is not None:
            df = self.dfn
            dfn = lambda t: scalar * df(t)
        return ControlSignal(samples=scalar * self.samples, T=self.T, fn=fn, dfn=dfn)

    __rmul__ = __mul__


@dataclass(frozen=True)
class GalerkinSystem:
    """Mode count, eigenvalues and coupling matrix of the truncated system."""

    N: int
    lambdas: np.ndarray
    M: np.ndarray

    @classmethod
    def build(cls, N: int, table: ZeroTable,
              rule: QuadratureRule | None = None) -> "GalerkinSystem":
        if table.k_max < N:
            raise DomainError(f"zero table covers k <= {table.k_max}, need {N}")
        if rule is None:
            rule = gauss_legendre_rule(256)
        return cls(N=N, lambdas=table.lambdas(N),
                   M=coupling_matrix(N, table, rule))


def free_evolution(state: RadialState, t: float, lambdas: np.ndarray) -> RadialState:
    """Phase rotation c_k -> exp(-i lambda_k t) c_k; exactly norm-preserving."""
    lam = np.asarray(lambdas)[:state.n_modes]
    if lam.size < state.n_modes:
        raise DomainError("not enough eigenvalues for the state truncation")
    return RadialState(state.coeffs * np.exp(-1j * lam * t))


@dataclass(frozen=True)
class SimulationResult:
    times: np.ndarray
    states: np.ndarray  # (steps+1, N) complex

    @property
    def final(self) -> RadialState:
        return RadialState(self.states[-1])

    def norm_drift(self) -> float:
        norms2 = np.sum(np.abs(self.states) ** 2, axis=1)
        return float(np.max(np.abs(norms2 - norms2[0])))


def simulate_bilinear(state0: RadialState, w: ControlSignal, sys: GalerkinSystem,
                      steps: int = 2 ** 14, forcing=None) -> SimulationResult:
    """Propagate i c' = diag(lambda) c + w(t) M c + f(t) by Crank-Nicolson.

    `forcing`, if given, maps an array of times to an (n_times, N) complex
    array of mode-coefficient forcing values. The potential coefficient and
    the forcing are both evaluated at step midpoints.
    """
    if steps < 2:
        raise DomainError("need at least 2 time steps")
    T = w.T
    wmax = w.max_abs()
    m_norm = float(np.linalg.norm(sys.M, 2))
    needed = 2.0 * T * max(sys.lambdas[-1], wmax * m_norm)
    if steps < needed:
        warnings.warn(f"steps={steps} below resolution heuristic {needed:.0f}; "
                      "endpoint accuracy may degrade", stacklevel=2)

    dt = T / steps
    times = np.linspace(0.0, T, steps + 1)
    t_mid = times[:-1] + dt / 2
    w_mid = np.atleast_1d(w(t_mid))
    f_mid = None if forcing is None else np.asarray(forcing(t_mid))

    c = state0.padded(sys.N)
    out = np.empty((steps + 1, sys.N), dtype=complex)
    out[0] = c
    eye = np.eye(sys.N)
    lam = np.diag(sys.lambdas)
    for n in range(steps):
        h = lam + w_mid[n] * sys.M
        rhs = (eye - 0.5j * dt * h) @ c
        if f_mid is not None:
            rhs = rhs - 1j * dt * f_mid[n]
        c = np.linalg.solve(eye + 0.5j * dt * h, rhs)
        out[n + 1] = c
    return SimulationResult(times=times, states=out)


def _oscillatory_nodes(T: float, omega_max: float):
    """Composite Gauss-Legendre nodes resolving phases up to omega_max."""
    n_sub = max(32, int(np.ceil(T * max(omega_max, 1.0) / 12.0)))
    x, wq = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(0.0, T, n_sub + 1)
    h = edges[1] - edges[0]
    nodes = (edges[:-1, None] + 0.5 * h * (x[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * h * wq, n_sub)
    return nodes, weights


def simulate_linearized(v: ControlSignal, params: TargetParams,
                        sys: GalerkinSystem) -> RadialState:
    """Endpoint of the system linearised around the free reference trajectory.

    Zero initial data is assumed; a nonzero initial state is handled by the
    caller through free-evolution superposition. Each mode endpoint is the
    explicit oscillatory integral of the control derivative against the three
    reference phases, evaluated by composite Gauss-Legendre quadrature.
    """
    if not v.is_h10_admissible():
        raise AdmissibilityError("control is not H^1_0-admissible")
    T = v.T
    lam = sys.lambdas
    nodes, weights = _oscillatory_nodes(T, float(lam[-1] - lam[0]))
    dv = np.atleast_1d(v.derivative(nodes))

    wts = params.weights()
    coeffs = np.zeros(sys.N, dtype=complex)
    for p in (1, 2, 3):
        # integrals int_0^T v'(s) exp(i (lambda_k - lambda_p) s) ds, all k
        phases = np.exp(1j * np.subtract.outer(lam, lam[p - 1])[:, None] * nodes[None, :])
        integrals = phases @ (weights * dv)
        coeffs += wts[p - 1] * sys.M[:, p - 1] * integrals
    coeffs *= -1j * np.exp(-1j * lam * T)
    return RadialState(coeffs)
