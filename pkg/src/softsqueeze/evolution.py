"""Integration of the evolution-matrix ODE and zone classification.

Two equations are solved here, both linear in the matrix u:

  forward:   du/dtau = L(tau) u,            u(tau0, tau0) = 1
  symmetric: du/dtau = L(tau) u + u L(tau), u(0, 0) = 1

with L(tau) = [[0, 1], [-beta(tau), 0]].  The symmetric (anticommutator)
form propagates u(tau, -tau) directly for profiles even in tau; its solution
is always equidiagonal with u11 = u22 = theta'(tau)/2 where theta = u12.

The default integrator is classical fixed-step RK4.  Fixed stepping keeps
runs bit-reproducible, which the scan machinery relies on; determinant drift
is checked after every run and never silently corrected, since it is the
accuracy diagnostic.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import BetaProfile, CanonicalState, SymplecticMatrix2


class IntegrationError(RuntimeError):
    """Raised when an integration cannot meet its accuracy contract."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Numerical settings shared by all integrations.

    method: "rk4" (fixed step, default) or "adaptive" (scipy DOP853).
    steps:  number of RK4 steps per requested interval.
    det_tol: allowed |det - 1| drift of the result.
    """

    method: str = "rk4"
    steps: int = 20000
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 10_000_000
    det_tol: float = 1e-9

    def __post_init__(self):
        if self.method not in ("rk4", "adaptive"):
            raise ValueError(f"unknown method '{self.method}'")
        if self.steps <= 0 or self.max_steps <= 0:
            raise ValueError("step counts must be positive")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")


DEFAULT_CONFIG = IntegratorConfig()


@dataclass(frozen=True)
class ZoneReport:
    """Stability classification of an evolution matrix by its trace."""

    gamma: float
    zone: str  # "I" | "II" | "III"
    lam_plus: complex
    lam_minus: complex
    a_plus: Optional[tuple] = None  # left row eigenvectors, zone III only
    a_minus: Optional[tuple] = None


def _sample_beta(profile: BetaProfile, t0: float, t1: float, steps: int) -> list:
    """beta at the 2*steps+1 nodes and midpoints of the RK4 grid."""
    taus = np.linspace(t0, t1, 2 * steps + 1)
    return profile.beta_array(taus).tolist()


def _rk4_forward(betas: list, h: float) -> tuple:
    """Fixed-step RK4 for du/dtau = L(tau) u from the identity.

    betas holds beta at nodes and midpoints alternately (2n+1 values for n
    steps).  Runs on plain floats; the hot loop is cheap enough in Python
    for the step counts used here.
    """
    u11, u12, u21, u22 = 1.0, 0.0, 0.0, 1.0
    half = 0.5 * h
    sixth = h / 6.0
    n = (len(betas) - 1) // 2
    for i in range(n):
        b1 = betas[2 * i]
        b2 = betas[2 * i + 1]
        b3 = betas[2 * i + 2]

        k1_11 = u21
        k1_12 = u22
        k1_21 = -b1 * u11
        k1_22 = -b1 * u12

        v11 = u11 + half * k1_11
        v12 = u12 + half * k1_12
        v21 = u21 + half * k1_21
        v22 = u22 + half * k1_22
        k2_11 = v21
        k2_12 = v22
        k2_21 = -b2 * v11
        k2_22 = -b2 * v12

        v11 = u11 + half * k2_11
        v12 = u12 + half * k2_12
        v21 = u21 + half * k2_21
        v22 = u22 + half * k2_22
        k3_11 = v21
        k3_12 = v22
        k3_21 = -b2 * v11
        k3_22 = -b2 * v12

        v11 = u11 + h * k3_11
        v12 = u12 + h * k3_12
        v21 = u21 + h * k3_21
        v22 = u22 + h * k3_22
        k4_11 = v21
        k4_12 = v22
        k4_21 = -b3 * v11
        k4_22 = -b3 * v12

        u11 += sixth * (k1_11 + 2.0 * (k2_11 + k3_11) + k4_11)
        u12 += sixth * (k1_12 + 2.0 * (k2_12 + k3_12) + k4_12)
        u21 += sixth * (k1_21 + 2.0 * (k2_21 + k3_21) + k4_21)
        u22 += sixth * (k1_22 + 2.0 * (k2_22 + k3_22) + k4_22)
    return u11, u12, u21, u22


def _rk4_anticommutator(betas: list, h: float) -> tuple:
    """Fixed-step RK4 for du/dtau = L u + u L from the identity.

    Componentwise: du11 = du22 = u21 - b u12, du12 = u11 + u22,
    du21 = -b (u11 + u22).
    """
    u11, u12, u21, u22 = 1.0, 0.0, 0.0, 1.0
    half = 0.5 * h
    sixth = h / 6.0
    n = (len(betas) - 1) // 2
    for i in range(n):
        b1 = betas[2 * i]
        b2 = betas[2 * i + 1]
        b3 = betas[2 * i + 2]

        k1_d = u21 - b1 * u12
        k1_12 = u11 + u22
        k1_21 = -b1 * (u11 + u22)

        v11 = u11 + half * k1_d
        v12 = u12 + half * k1_12
        v21 = u21 + half * k1_21
        v22 = u22 + half * k1_d
        k2_d = v21 - b2 * v12
        k2_12 = v11 + v22
        k2_21 = -b2 * (v11 + v22)

        v11 = u11 + half * k2_d
        v12 = u12 + half * k2_12
        v21 = u21 + half * k2_21
        v22 = u22 + half * k2_d
        k3_d = v21 - b2 * v12
        k3_12 = v11 + v22
        k3_21 = -b2 * (v11 + v22)

        v11 = u11 + h * k3_d
        v12 = u12 + h * k3_12
        v21 = u21 + h * k3_21
        v22 = u22 + h * k3_d
        k4_d = v21 - b3 * v12
        k4_12 = v11 + v22
        k4_21 = -b3 * (v11 + v22)

        d = sixth * (k1_d + 2.0 * (k2_d + k3_d) + k4_d)
        u11 += d
        u12 += sixth * (k1_12 + 2.0 * (k2_12 + k3_12) + k4_12)
        u21 += sixth * (k1_21 + 2.0 * (k2_21 + k3_21) + k4_21)
        u22 += d
    return u11, u12, u21, u22


def _adaptive_forward(profile, t0, t1, cfg) -> tuple:
    from scipy.integrate import solve_ivp

    def rhs(t, y):
        b = profile.beta(t)
        return (y[2], y[3], -b * y[0], -b * y[1])

    sol = solve_ivp(
        rhs, (t0, t1), (1.0, 0.0, 0.0, 1.0),
        method="DOP853", rtol=cfg.rtol, atol=cfg.atol,
    )
    if not sol.success:
        raise IntegrationError(f"adaptive integration failed: {sol.message}")
    return tuple(sol.y[:, -1])


def _adaptive_anticommutator(profile, tau, cfg) -> tuple:
    from scipy.integrate import solve_ivp

    def rhs(t, y):
        b = profile.beta(t)
        s = y[0] + y[3]
        return (y[2] - b * y[1], s, -b * s, y[2] - b * y[1])

    sol = solve_ivp(
        rhs, (0.0, tau), (1.0, 0.0, 0.0, 1.0),
        method="DOP853", rtol=cfg.rtol, atol=cfg.atol,
    )
    if not sol.success:
        raise IntegrationError(f"adaptive integration failed: {sol.message}")
    return tuple(sol.y[:, -1])


def _check_det(entries: tuple, cfg: IntegratorConfig, what: str) -> SymplecticMatrix2:
    u = SymplecticMatrix2(*entries)
    drift = abs(u.det - 1.0)
    if not drift <= cfg.det_tol:
        raise IntegrationError(
            f"{what}: determinant drift {drift:.3e} exceeds {cfg.det_tol:.1e}; "
            "refine the step or tolerances"
        )
    return u


def integrate(
    profile: BetaProfile,
    tau0: float,
    tau1: float,
    cfg: IntegratorConfig = DEFAULT_CONFIG,
) -> SymplecticMatrix2:
    """Evolution matrix u(tau1, tau0) for q'' + beta(tau) q = 0."""
    if tau1 < tau0:
        raise ValueError(f"need tau1 >= tau0, got [{tau0}, {tau1}]")
    profile.check_interval(tau0, tau1)
    if tau1 == tau0:
        return SymplecticMatrix2.identity()
    if cfg.method == "adaptive":
        entries = _adaptive_forward(profile, tau0, tau1, cfg)
    else:
        h = (tau1 - tau0) / cfg.steps
        betas = _sample_beta(profile, tau0, tau1, cfg.steps)
        entries = _rk4_forward(betas, h)
    return _check_det(entries, cfg, f"integrate over [{tau0}, {tau1}]")


def check_symmetry(profile: BetaProfile, tau: float, n: int = 33, tol: float = 1e-9) -> float:
    """Max |beta(s) - beta(-s)| over a sample grid; raises if above tol."""
    s = np.linspace(0.0, tau, n)
    diff = float(np.max(np.abs(profile.beta_array(s) - profile.beta_array(-s))))
    if diff > tol:
        raise ValueError(
            f"profile is not symmetric about 0: max |beta(s) - beta(-s)| = {diff:.3e}"
        )
    return diff


def integrate_symmetric(
    profile: BetaProfile,
    tau: float,
    cfg: IntegratorConfig = DEFAULT_CONFIG,
) -> SymplecticMatrix2:
    """u(tau, -tau) via the anticommutator form, for beta even in tau.

    The result is equidiagonal: u11 = u22 = theta'(tau)/2 with theta = u12.
    """
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    profile.check_interval(-tau, tau)
    check_symmetry(profile, tau)
    if tau == 0.0:
        return SymplecticMatrix2.identity()
    if cfg.method == "adaptive":
        entries = _adaptive_anticommutator(profile, tau, cfg)
    else:
        h = tau / cfg.steps
        betas = _sample_beta(profile, 0.0, tau, cfg.steps)
        entries = _rk4_anticommutator(betas, h)
    return _check_det(entries, cfg, f"symmetric integrate to tau = {tau}")


def monodromy(
    profile: BetaProfile,
    tau0: float,
    period: float,
    cfg: IntegratorConfig = DEFAULT_CONFIG,
) -> SymplecticMatrix2:
    """One-period evolution matrix u(tau0 + period, tau0).

    The profile must actually be periodic with the given period; this is
    verified structurally for constant/Mathieu profiles and by sampling
    otherwise.
    """
    if period <= 0:
        raise ValueError(f"period must be positive, got {period}")
    _verify_periodic(profile, tau0, period)
    return integrate(profile, tau0, tau0 + period, cfg)


def _verify_periodic(profile: BetaProfile, tau0: float, period: float, tol: float = 1e-9):
    from .core import ConstantBeta, MathieuBeta

    if isinstance(profile, ConstantBeta):
        return
    if isinstance(profile, MathieuBeta):
        k = period / (2.0 * math.pi)
        if abs(k - round(k)) > 1e-12 or round(k) == 0:
            raise ValueError(
                f"Mathieu profile has period 2*pi; {period} is not a multiple"
            )
        return
    lo, hi = profile.domain()
    if tau0 < lo or tau0 + 2.0 * period > hi:
        raise ValueError(
            "cannot verify periodicity: domain does not cover one extra period"
        )
    s = np.linspace(tau0, tau0 + period, 17)
    diff = float(np.max(np.abs(profile.beta_array(s + period) - profile.beta_array(s))))
    if diff > tol:
        raise ValueError(f"profile not periodic with period {period}: residual {diff:.3e}")


def classify(
    u: SymplecticMatrix2,
    threshold_band: float = 1e-9,
    det_tol: float = 1e-6,
) -> ZoneReport:
    """Zone classification by the trace Gamma.

    zone I   |Gamma| < 2          stable; eigenvalues on the unit circle
    zone II  |Gamma| = 2 (band)   threshold
    zone III |Gamma| > 2          real reciprocal pair, squeezing axes a+-

    In zone III the left row eigenvectors are returned normalized so that
    a+ has unit Euclidean norm with its first nonzero component positive and
    a- is scaled to make the symplectic pairing a+ J a-^T equal 1.
    """
    err = abs(u.det - 1.0)
    if not err <= det_tol:
        raise ValueError(
            f"classify needs a symplectic matrix: |det - 1| = {err:.3e} > {det_tol:.1e}"
        )
    gamma = u.trace
    if abs(abs(gamma) - 2.0) <= threshold_band:
        lam = 1.0 if gamma > 0 else -1.0
        return ZoneReport(gamma=gamma, zone="II", lam_plus=complex(lam), lam_minus=complex(lam))
    if abs(gamma) < 2.0:
        root = cmath.sqrt(complex(gamma * gamma - 4.0))
        lam_p = (gamma + root) / 2.0
        lam_m = (gamma - root) / 2.0
        return ZoneReport(gamma=gamma, zone="I", lam_plus=lam_p, lam_minus=lam_m)
    root = math.sqrt(gamma * gamma - 4.0)
    lam_p = (gamma + root) / 2.0
    lam_m = (gamma - root) / 2.0
    a_p = _left_eigenvector(u, lam_p)
    a_m = _left_eigenvector(u, lam_m)
    a_p, a_m = _normalize_axes(a_p, a_m)
    return ZoneReport(
        gamma=gamma, zone="III",
        lam_plus=complex(lam_p), lam_minus=complex(lam_m),
        a_plus=a_p, a_minus=a_m,
    )


def _left_eigenvector(u: SymplecticMatrix2, lam: float) -> tuple:
    """Row vector a with a u = lam a."""
    cand1 = (u.u21, lam - u.u11)
    cand2 = (lam - u.u22, u.u12)
    n1 = math.hypot(*cand1)
    n2 = math.hypot(*cand2)
    a = cand1 if n1 >= n2 else cand2
    if max(n1, n2) == 0.0:
        # u is lam * identity; any row vector works
        a = (1.0, 0.0)
    return a


def _normalize_axes(a_p: tuple, a_m: tuple) -> tuple:
    # a+ to unit norm, first nonzero component positive
    norm = math.hypot(*a_p)
    a_p = (a_p[0] / norm, a_p[1] / norm)
    lead = a_p[0] if a_p[0] != 0.0 else a_p[1]
    if lead < 0:
        a_p = (-a_p[0], -a_p[1])
    # a- scaled so that a+ J a-^T = 1 with J = [[0, 1], [-1, 0]]
    pairing = a_p[0] * a_m[1] - a_p[1] * a_m[0]
    if pairing == 0.0:
        raise ValueError("degenerate eigenvector pair; cannot normalize axes")
    a_m = (a_m[0] / pairing, a_m[1] / pairing)
    return a_p, a_m


def apply_to_state(u: SymplecticMatrix2, s: CanonicalState) -> CanonicalState:
    """(q', p')^T = u (q, p)^T."""
    return CanonicalState(
        q=u.u11 * s.q + u.u12 * s.p,
        p=u.u21 * s.q + u.u22 * s.p,
    )


def integrate_path(
    profile: BetaProfile,
    taus,
    cfg: IntegratorConfig = DEFAULT_CONFIG,
) -> list:
    """Cumulative matrices u(tau_i, taus[0]) along an increasing grid.

    Step size is allocated so the whole span uses about cfg.steps RK4 steps,
    with a floor per segment; segment matrices are composed left to right.
    """
    taus = [float(t) for t in taus]
    if len(taus) < 2:
        raise ValueError("need at least two grid points")
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError("tau grid must be strictly increasing")
    profile.check_interval(taus[0], taus[-1])
    span = taus[-1] - taus[0]
    out = [SymplecticMatrix2.identity()]
    acc = out[0]
    for a, b in zip(taus, taus[1:]):
        if cfg.method == "adaptive":
            seg = integrate(profile, a, b, cfg)
        else:
            n = max(int(math.ceil((b - a) / span * cfg.steps)), 8)
            seg_cfg = IntegratorConfig(
                method="rk4", steps=n, rtol=cfg.rtol, atol=cfg.atol,
                max_steps=cfg.max_steps, det_tol=cfg.det_tol,
            )
            seg = integrate(profile, a, b, seg_cfg)
        acc = seg @ acc
        out.append(acc)
    return out


# ---------------------------------------------------------------------------
# Vectorized fixed-step engine for Mathieu-type parameter sweeps.


def mathieu_batch(
    beta0,
    beta1,
    tau0: float,
    tau1: float,
    steps: int = 20000,
    phase=None,
):
    """RK4 monodromy entries for many (beta0, beta1) pairs at once.

    All cases share the tau grid, so cos(tau) is precomputed once; the
    per-step arithmetic is the same expression sequence as the scalar
    kernel.  Optional per-case phase shifts evaluate beta at tau + phase,
    which is how trace-vs-starting-point checks are vectorized.

    Returns four arrays (u11, u12, u21, u22) of the input shape.
    """
    beta0 = np.asarray(beta0, dtype=float)
    beta1 = np.asarray(beta1, dtype=float)
    shape = np.broadcast_shapes(beta0.shape, beta1.shape)
    beta0 = np.broadcast_to(beta0, shape).ravel()
    beta1 = np.broadcast_to(beta1, shape).ravel()
    ts = np.linspace(tau0, tau1, 2 * steps + 1)
    if phase is None:
        cos_t = np.cos(ts)

        def beta_of(j):
            return beta0 + (2.0 * cos_t[j]) * beta1
    else:
        phase = np.broadcast_to(np.asarray(phase, dtype=float), shape).ravel()

        def beta_of(j):
            return beta0 + 2.0 * beta1 * np.cos(ts[j] + phase)

    n = beta0.size
    u11 = np.ones(n)
    u12 = np.zeros(n)
    u21 = np.zeros(n)
    u22 = np.ones(n)
    h = (tau1 - tau0) / steps
    half = 0.5 * h
    sixth = h / 6.0
    for i in range(steps):
        b1 = beta_of(2 * i)
        b2 = beta_of(2 * i + 1)
        b3 = beta_of(2 * i + 2)

        k1_11 = u21
        k1_12 = u22
        k1_21 = -b1 * u11
        k1_22 = -b1 * u12

        v11 = u11 + half * k1_11
        v12 = u12 + half * k1_12
        v21 = u21 + half * k1_21
        v22 = u22 + half * k1_22
        k2_11 = v21
        k2_12 = v22
        k2_21 = -b2 * v11
        k2_22 = -b2 * v12

        v11 = u11 + half * k2_11
        v12 = u12 + half * k2_12
        v21 = u21 + half * k2_21
        v22 = u22 + half * k2_22
        k3_11 = v21
        k3_12 = v22
        k3_21 = -b2 * v11
        k3_22 = -b2 * v12

        v11 = u11 + h * k3_11
        v12 = u12 + h * k3_12
        v21 = u21 + h * k3_21
        v22 = u22 + h * k3_22
        k4_11 = v21
        k4_12 = v22
        k4_21 = -b3 * v11
        k4_22 = -b3 * v12

        u11 = u11 + sixth * (k1_11 + 2.0 * (k2_11 + k3_11) + k4_11)
        u12 = u12 + sixth * (k1_12 + 2.0 * (k2_12 + k3_12) + k4_12)
        u21 = u21 + sixth * (k1_21 + 2.0 * (k2_21 + k3_21) + k4_21)
        u22 = u22 + sixth * (k1_22 + 2.0 * (k2_22 + k3_22) + k4_22)
    return (
        u11.reshape(shape),
        u12.reshape(shape),
        u21.reshape(shape),
        u22.reshape(shape),
    )
