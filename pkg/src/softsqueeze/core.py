"""Value types and closed-form symplectic building blocks.

Everything in this module is exact arithmetic: 2x2 real matrices with unit
determinant, the scalar stiffness profiles beta(tau) that drive the
integrators, and the handful of closed-form evolution matrices (rotations,
free motion, squeezed Fourier maps) used as oracles elsewhere.  No numerical
integration happens here.

Conventions: the state is the column vector (q, p)^T, so row 1 of a matrix
acts on q and row 2 on p.  In particular u12 = 0 means the final position is
decoupled from the initial momentum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Determinant tolerances: closed forms are exact up to rounding, integrated
# matrices carry the integrator's drift.
ANALYTIC_DET_TOL = 1e-12
INTEGRATED_DET_TOL = 1e-9


@dataclass(frozen=True)
class SymplecticMatrix2:
    """2x2 real evolution matrix; row 1 maps q, row 2 maps p."""

    u11: float
    u12: float
    u21: float
    u22: float

    @property
    def det(self) -> float:
        return self.u11 * self.u22 - self.u12 * self.u21

    @property
    def trace(self) -> float:
        return self.u11 + self.u22

    def require_symplectic(self, tol: float = ANALYTIC_DET_TOL) -> "SymplecticMatrix2":
        """Return self if |det - 1| <= tol, else raise ValueError."""
        err = abs(self.det - 1.0)
        if not err <= tol:
            raise ValueError(
                f"matrix is not symplectic: |det - 1| = {err:.3e} exceeds {tol:.1e}"
            )
        return self

    def __matmul__(self, other: "SymplecticMatrix2") -> "SymplecticMatrix2":
        return SymplecticMatrix2(
            self.u11 * other.u11 + self.u12 * other.u21,
            self.u11 * other.u12 + self.u12 * other.u22,
            self.u21 * other.u11 + self.u22 * other.u21,
            self.u21 * other.u12 + self.u22 * other.u22,
        )

    def as_array(self) -> np.ndarray:
        return np.array([[self.u11, self.u12], [self.u21, self.u22]], dtype=float)

    @classmethod
    def from_array(cls, a) -> "SymplecticMatrix2":
        a = np.asarray(a, dtype=float)
        if a.shape != (2, 2):
            raise ValueError(f"expected a 2x2 array, got shape {a.shape}")
        return cls(float(a[0, 0]), float(a[0, 1]), float(a[1, 0]), float(a[1, 1]))

    @classmethod
    def identity(cls) -> "SymplecticMatrix2":
        return cls(1.0, 0.0, 0.0, 1.0)


@dataclass(frozen=True)
class CanonicalState:
    """Dimensionless canonical pair (q, p)."""

    q: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.p)):
            raise ValueError(f"canonical state must be finite, got ({self.q}, {self.p})")


def compose(u: SymplecticMatrix2, v: SymplecticMatrix2) -> SymplecticMatrix2:
    """Matrix product u @ v (v acts first)."""
    return u @ v


def rotation_matrix(kappa: float, dtau: float) -> SymplecticMatrix2:
    """Evolution over dtau at constant beta = kappa^2 > 0.

    [[cos(k t), sin(k t)/k], [-k sin(k t), cos(k t)]] with k = kappa,
    t = dtau.  Use free_motion for the kappa -> 0 limit.
    """
    if kappa <= 0.0:
        raise ValueError(f"kappa must be positive, got {kappa}; use free_motion for beta = 0")
    ang = kappa * dtau
    c = math.cos(ang)
    s = math.sin(ang)
    return SymplecticMatrix2(c, s / kappa, -kappa * s, c)


def free_motion(dtau: float) -> SymplecticMatrix2:
    """Evolution over dtau at beta = 0: shear [[1, dtau], [0, 1]]."""
    return SymplecticMatrix2(1.0, dtau, 0.0, 1.0)


def squeezed_fourier(b: float) -> SymplecticMatrix2:
    """Traceless exchange map [[0, b], [-1/b, 0]].

    b = 1 is the plain Fourier transform of phase space; general b swaps a
    scaled position for momentum.
    """
    if b == 0.0:
        raise ValueError("squeezed Fourier magnitude b must be nonzero")
    return SymplecticMatrix2(0.0, b, -1.0 / b, 0.0)


def squeeze_compose(kappa1: float, kappa2: float) -> SymplecticMatrix2:
    """Pure squeeze diag(lambda, 1/lambda), lambda = -kappa2/kappa1.

    Equals the product of the two quarter-period rotations F(1/kappa1) and
    F(1/kappa2); the closed form avoids the intermediate roundoff.
    """
    if kappa1 <= 0.0 or kappa2 <= 0.0:
        raise ValueError(f"kappas must be positive, got ({kappa1}, {kappa2})")
    lam = -kappa2 / kappa1
    return SymplecticMatrix2(lam, 0.0, 0.0, 1.0 / lam)


def is_equidiagonal(u: SymplecticMatrix2, tol: float = 1e-10) -> bool:
    """True if |u11 - u22| <= tol."""
    return abs(u.u11 - u.u22) <= tol


def symmetric_product(vs, tol: float = 1e-9) -> SymplecticMatrix2:
    """Toeplitz-symmetric product vn ... v1 v0 v1 ... vn.

    Every factor must itself be equidiagonal; the product of equidiagonal
    symplectic matrices arranged symmetrically is again equidiagonal, which
    is the algebraic backbone of the inverse pulse design.
    """
    vs = list(vs)
    if not vs:
        raise ValueError("symmetric_product needs at least one matrix")
    for i, v in enumerate(vs):
        if not is_equidiagonal(v, tol):
            raise ValueError(
                f"factor {i} is not equidiagonal: |u11 - u22| = {abs(v.u11 - v.u22):.3e}"
            )
    out = vs[0]
    for v in vs[1:]:
        out = v @ out @ v
    return out


# ---------------------------------------------------------------------------
# Stiffness profiles


class BetaProfile:
    """Scalar stiffness beta(tau) for q'' + beta(tau) q = 0.

    Subclasses provide `beta` (scalar), `beta_array` (vectorized) and a
    declared domain.  Profiles are immutable and cheap to share.
    """

    kind = "abstract"

    def beta(self, tau: float) -> float:
        raise NotImplementedError

    def beta_array(self, taus) -> np.ndarray:
        taus = np.asarray(taus, dtype=float)
        self._check_domain_array(taus)
        return np.array([self._beta_unchecked(float(t)) for t in taus])

    def _beta_unchecked(self, tau: float) -> float:
        return self.beta(tau)

    def domain(self):
        """(lo, hi) interval of validity; infinite for unbounded profiles."""
        return (-math.inf, math.inf)

    def _check_domain(self, tau: float):
        lo, hi = self.domain()
        # small slack for roundoff at interval ends
        slack = 1e-12 * max(1.0, abs(lo), abs(hi)) if math.isfinite(lo) else 0.0
        if tau < lo - slack or tau > hi + slack:
            raise ValueError(f"tau = {tau} outside profile domain [{lo}, {hi}]")

    def _check_domain_array(self, taus: np.ndarray):
        if taus.size == 0:
            return
        self._check_domain(float(taus.min()))
        self._check_domain(float(taus.max()))

    def check_interval(self, t0: float, t1: float):
        self._check_domain(t0)
        self._check_domain(t1)

    def to_json_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantBeta(BetaProfile):
    value: float
    kind = "constant"

    def beta(self, tau: float) -> float:
        return self.value

    def beta_array(self, taus) -> np.ndarray:
        taus = np.asarray(taus, dtype=float)
        return np.full(taus.shape, self.value)

    def to_json_dict(self) -> dict:
        return {"kind": "constant", "beta": self.value}


@dataclass(frozen=True)
class MathieuBeta(BetaProfile):
    """beta(tau) = beta0 + 2 beta1 cos(tau); 2pi-periodic by construction."""

    beta0: float
    beta1: float
    kind = "mathieu"

    def beta(self, tau: float) -> float:
        return self.beta0 + 2.0 * self.beta1 * math.cos(tau)

    def beta_array(self, taus) -> np.ndarray:
        taus = np.asarray(taus, dtype=float)
        return self.beta0 + 2.0 * self.beta1 * np.cos(taus)

    def to_json_dict(self) -> dict:
        return {"kind": "mathieu", "beta0": self.beta0, "beta1": self.beta1}


class SampledBeta(BetaProfile):
    """Spline interpolation through (tau, beta) samples.

    Cubic by default so that beta is twice differentiable, which downstream
    validity checks rely on.
    """

    kind = "sampled"

    def __init__(self, taus, values, order: int = 3):
        from scipy.interpolate import InterpolatedUnivariateSpline

        taus = np.asarray(taus, dtype=float)
        values = np.asarray(values, dtype=float)
        if taus.ndim != 1 or taus.shape != values.shape:
            raise ValueError("sampled profile needs matching 1-d tau and beta arrays")
        if taus.size < order + 1:
            raise ValueError(f"need at least {order + 1} samples for order {order}")
        if np.any(np.diff(taus) <= 0):
            raise ValueError("tau samples must be strictly increasing")
        self.taus = taus
        self.values = values
        self.order = int(order)
        self._spline = InterpolatedUnivariateSpline(taus, values, k=self.order)

    def beta(self, tau: float) -> float:
        self._check_domain(tau)
        return float(self._spline(tau))

    def beta_array(self, taus) -> np.ndarray:
        taus = np.asarray(taus, dtype=float)
        self._check_domain_array(taus)
        return self._spline(taus)

    def domain(self):
        return (float(self.taus[0]), float(self.taus[-1]))

    def to_json_dict(self) -> dict:
        return {
            "kind": "sampled",
            "tau": self.taus.tolist(),
            "beta": self.values.tolist(),
            "order": self.order,
        }


class CompositeBeta(BetaProfile):
    """Piecewise profile over contiguous, non-overlapping intervals.

    pieces: ordered list of (t0, t1, BetaProfile).  A boundary point belongs
    to the earlier piece.
    """

    kind = "composite"

    def __init__(self, pieces):
        pieces = [(float(t0), float(t1), prof) for (t0, t1, prof) in pieces]
        if not pieces:
            raise ValueError("composite profile needs at least one piece")
        for t0, t1, _ in pieces:
            if not t1 > t0:
                raise ValueError(f"piece interval [{t0}, {t1}] is not increasing")
        for (_, t1a, _), (t0b, _, _) in zip(pieces, pieces[1:]):
            if abs(t0b - t1a) > 1e-12 * max(1.0, abs(t1a)):
                raise ValueError(
                    f"pieces are not contiguous: gap between {t1a} and {t0b}"
                )
        for t0, t1, prof in pieces:
            prof.check_interval(t0, t1)
        self.pieces = pieces
        self._starts = np.array([t0 for t0, _, _ in pieces])

    def _piece_index(self, tau: float) -> int:
        # boundary points route to the earlier piece
        i = int(np.searchsorted(self._starts, tau, side="left")) - 1
        if tau == self._starts[0]:
            i = 0
        return min(max(i, 0), len(self.pieces) - 1)

    def beta(self, tau: float) -> float:
        self._check_domain(tau)
        _, _, prof = self.pieces[self._piece_index(tau)]
        return prof.beta(tau)

    def beta_array(self, taus) -> np.ndarray:
        taus = np.asarray(taus, dtype=float)
        self._check_domain_array(taus)
        out = np.empty(taus.shape)
        idx = np.searchsorted(self._starts, taus, side="left") - 1
        idx = np.clip(idx, 0, len(self.pieces) - 1)
        for k, (_, _, prof) in enumerate(self.pieces):
            mask = idx == k
            if np.any(mask):
                out[mask] = prof.beta_array(taus[mask])
        return out

    def domain(self):
        return (self.pieces[0][0], self.pieces[-1][1])

    def to_json_dict(self) -> dict:
        return {
            "kind": "composite",
            "pieces": [
                {"from": t0, "to": t1, "profile": prof.to_json_dict()}
                for t0, t1, prof in self.pieces
            ],
        }


def beta_eval(profile: BetaProfile, tau: float) -> float:
    """Evaluate beta(tau); raises ValueError outside the declared domain."""
    profile._check_domain(tau)
    return profile.beta(tau)


def profile_from_dict(d: dict) -> BetaProfile:
    """Build a BetaProfile from its JSON dict form (see profile docs in cli)."""
    if not isinstance(d, dict) or "kind" not in d:
        raise ValueError("profile JSON must be an object with a 'kind' field")
    kind = d["kind"]
    try:
        if kind == "constant":
            return ConstantBeta(float(d["beta"]))
        if kind == "mathieu":
            return MathieuBeta(float(d["beta0"]), float(d["beta1"]))
        if kind == "sampled":
            return SampledBeta(d["tau"], d["beta"], int(d.get("order", 3)))
        if kind == "composite":
            pieces = [
                (p["from"], p["to"], profile_from_dict(p["profile"]))
                for p in d["pieces"]
            ]
            return CompositeBeta(pieces)
        if kind == "theta":
            from .design import ThetaAnsatz, ThetaDerivedBeta

            ansatz = ThetaAnsatz.from_targets(float(d["b"]), float(d["beta0"]))
            return ThetaDerivedBeta(ansatz, offset=float(d.get("offset", 0.0)))
    except KeyError as exc:
        raise ValueError(f"profile JSON for kind '{kind}' missing field {exc}") from exc
    raise ValueError(f"unknown profile kind '{kind}'")


def profile_from_json(text: str) -> BetaProfile:
    import json

    return profile_from_dict(json.loads(text))
