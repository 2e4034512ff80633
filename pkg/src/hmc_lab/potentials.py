"""Potential-energy models and the built-in target families.

A model bundles the potential U with its gradient and (optionally) the
directional actions of the second and third derivative tensors.  All
evaluators are batched: positions live on the last axis, so ``u`` maps
``(..., d) -> (...)`` and ``grad`` maps ``(..., d) -> (..., d)``.  The
diagnostics rely on this to vectorise Monte Carlo sweeps.

Radially symmetric families are built from a scalar profile phi with
U(q) = phi(s), s = ||q||^2.  Chain rule, with <.,.> the dot product:

    grad U(q)          = 2 phi'(s) q
    D^2 U(q) v         = 2 phi'(s) v + 4 phi''(s) <q,v> q
    D^3 U(q)[v,w]      = 4 phi''(s) (<q,w> v + <q,v> w + <v,w> q)
                         + 8 phi'''(s) <q,v> <q,w> q
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import CapabilityError, ConfigurationError

VARIANTS = ("gaussian", "power", "homogeneous_perturbed", "double_well")


@dataclass(frozen=True)
class FamilyConfig:
    """Parameters selecting one member of the built-in families.

    variant    one of ``VARIANTS``
    dim        ambient dimension, >= 1
    precision  gaussian: diagonal of the precision matrix (scalar or per-axis)
    delta      power: shift inside (s + delta)^kappa, > 0
    kappa      power: exponent, in (1/2, 1]
    m          homogeneous_perturbed: growth exponent, in (1, 2]
    perturbation  homogeneous_perturbed: amplitude of the bounded wobble
    scale      double_well: overall factor of (s - 1)^2
    """

    variant: str
    dim: int
    precision: object = 1.0
    delta: float = 1.0
    kappa: float = 0.75
    m: float = 1.5
    perturbation: float = 0.5
    scale: float = 1.0

    def validate(self) -> list[str]:
        """Return a list of human-readable constraint violations (empty if ok)."""
        errs: list[str] = []
        if self.variant not in VARIANTS:
            errs.append(f"variant must be one of {VARIANTS}, got {self.variant!r}")
            return errs
        if not (isinstance(self.dim, (int, np.integer)) and self.dim >= 1):
            errs.append(f"dim must be an integer >= 1, got {self.dim!r}")
        if self.variant == "gaussian":
            prec = np.atleast_1d(np.asarray(self.precision, dtype=float))
            if prec.ndim != 1 or (prec.size not in (1, self.dim)):
                errs.append("gaussian.precision must be a scalar or a length-dim list")
            elif not np.all(prec > 0):
                errs.append("gaussian.precision entries must be > 0")
        elif self.variant == "power":
            if not self.delta > 0:
                errs.append("power.delta must be > 0")
            if not (0.5 < self.kappa <= 1.0):
                errs.append("power.kappa must lie in (0.5, 1]")
        elif self.variant == "homogeneous_perturbed":
            if not (1.0 < self.m <= 2.0):
                errs.append("homogeneous_perturbed.m must lie in (1, 2]")
            if self.perturbation < 0:
                errs.append("homogeneous_perturbed.perturbation must be >= 0")
        elif self.variant == "double_well":
            if not self.scale > 0:
                errs.append("double_well.scale must be > 0")
        return errs


@dataclass(frozen=True)
class PotentialModel:
    """A potential with batched derivative evaluators.

    ``hess_dir(q, v)`` returns D^2 U(q) v and ``third_dir(q, v, w)`` returns
    D^3 U(q)[v, w]; both may be None for models defined only through ``u``
    and ``grad``.  ``growth_exponent`` records the polynomial growth order
    of U when known (used to validate tail-regime preconditions).
    """

    dim: int
    u: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    hess_dir: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    third_dir: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]] = None
    family_tag: str = "custom"
    growth_exponent: Optional[float] = None
    # radii where a piecewise definition changes branch; derivatives are
    # continuous there but not smooth, so quadrature rules should split
    kink_radii: tuple[float, ...] = ()
    config: Optional[FamilyConfig] = field(default=None, repr=False)

    def require_hess(self) -> Callable:
        if self.hess_dir is None:
            raise CapabilityError(
                f"model {self.family_tag!r} has no Hessian-action evaluator"
            )
        return self.hess_dir

    def require_third(self) -> Callable:
        if self.third_dir is None:
            raise CapabilityError(
                f"model {self.family_tag!r} has no third-derivative evaluator"
            )
        return self.third_dir


# ---------------------------------------------------------------------------
# radial profiles


@dataclass(frozen=True)
class RadialProfile:
    """phi and its first three derivatives as batched functions of s = ||q||^2."""

    value: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    d3: Callable[[np.ndarray], np.ndarray]


def radial_model(
    profile: RadialProfile,
    dim: int,
    tag: str,
    growth_exponent: Optional[float] = None,
    config: Optional[FamilyConfig] = None,
    kink_radii: tuple[float, ...] = (),
) -> PotentialModel:
    """Assemble a PotentialModel from a scalar radial profile."""

    def u(q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return profile.value(np.sum(q * q, axis=-1))

    def grad(q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        s = np.sum(q * q, axis=-1)
        return 2.0 * profile.d1(s)[..., None] * q

    def hess_dir(q: np.ndarray, v: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        q, v = np.broadcast_arrays(q, v)
        s = np.sum(q * q, axis=-1)
        qv = np.sum(q * v, axis=-1)
        return (
            2.0 * profile.d1(s)[..., None] * v
            + 4.0 * (profile.d2(s) * qv)[..., None] * q
        )

    def third_dir(q: np.ndarray, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        q, v, w = np.broadcast_arrays(q, v, w)
        s = np.sum(q * q, axis=-1)
        qv = np.sum(q * v, axis=-1)
        qw = np.sum(q * w, axis=-1)
        vw = np.sum(v * w, axis=-1)
        p2 = profile.d2(s)[..., None]
        p3 = profile.d3(s)[..., None]
        return 4.0 * p2 * (qw[..., None] * v + qv[..., None] * w + vw[..., None] * q) + (
            8.0 * (qv * qw)[..., None] * p3 * q
        )

    return PotentialModel(
        dim=dim,
        u=u,
        grad=grad,
        hess_dir=hess_dir,
        third_dir=third_dir,
        family_tag=tag,
        growth_exponent=growth_exponent,
        kink_radii=kink_radii,
        config=config,
    )


def _power_profile(delta: float, kappa: float) -> RadialProfile:
    """phi(s) = (s + delta)^kappa."""
    k = float(kappa)

    def value(s):
        return (s + delta) ** k

    def d1(s):
        return k * (s + delta) ** (k - 1.0)

    def d2(s):
        return k * (k - 1.0) * (s + delta) ** (k - 2.0)

    def d3(s):
        return k * (k - 1.0) * (k - 2.0) * (s + delta) ** (k - 3.0)

    return RadialProfile(value, d1, d2, d3)


def _double_well_profile(scale: float) -> RadialProfile:
    """phi(s) = scale * (s - 1)^2."""
    c = float(scale)
    return RadialProfile(
        value=lambda s: c * (s - 1.0) ** 2,
        d1=lambda s: 2.0 * c * (s - 1.0),
        d2=lambda s: np.full_like(np.asarray(s, dtype=float), 2.0 * c),
        d3=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
    )


# blend window (in radius) between the regularised core and the exactly
# homogeneous tail of the homogeneous_perturbed family
_BLEND_LO = 3.0
_BLEND_HI = 5.0


def _smoothstep7(u: np.ndarray):
    """C^3 step S on [0,1] with S(0)=0, S(1)=1 and three vanishing derivatives.

    Returns (S, S', S'', S''') evaluated elementwise; u is assumed clipped.
    """
    s0 = u**4 * (35.0 - 84.0 * u + 70.0 * u**2 - 20.0 * u**3)
    s1 = 140.0 * u**3 * (1.0 - u) ** 3
    s2 = 420.0 * u**2 * (1.0 - u) ** 2 * (1.0 - 2.0 * u)
    s3 = 840.0 * u * (1.0 - u) * (5.0 * u**2 - 5.0 * u + 1.0)
    return s0, s1, s2, s3


def _blend_coeffs(s: np.ndarray):
    """Blend weight c(s) = S((sqrt(s)-lo)/(hi-lo)) and its s-derivatives."""
    s = np.asarray(s, dtype=float)
    r = np.sqrt(np.maximum(s, 1e-300))
    w = _BLEND_HI - _BLEND_LO
    u = np.clip((r - _BLEND_LO) / w, 0.0, 1.0)
    s0, s1, s2, s3 = _smoothstep7(u)
    x1 = s1 / w  # chi'(r)
    x2 = s2 / w**2
    x3 = s3 / w**3
    inside = (r > _BLEND_LO) & (r < _BLEND_HI)
    x1 = np.where(inside, x1, 0.0)
    x2 = np.where(inside, x2, 0.0)
    x3 = np.where(inside, x3, 0.0)
    # derivatives of c(s) = chi(sqrt(s)) via r = sqrt(s)
    c0 = s0
    c1 = x1 / (2.0 * r)
    c2 = x2 / (4.0 * r**2) - x1 / (4.0 * r**3)
    c3 = x3 / (8.0 * r**3) - 3.0 * x2 / (8.0 * r**4) + 3.0 * x1 / (8.0 * r**5)
    return c0, c1, c2, c3


def _homogeneous_profile(m: float, eps: float) -> RadialProfile:
    """Exactly m-homogeneous tail with a smooth core and a bounded wobble.

    phi0(s) = (1-c(s)) (s+1)^{m/2} + c(s) s^{m/2} equals ||q||^m outside the
    blend window, so the tail growth exponent is exact.  The perturbation
    eps*sin(log(1+s)) has derivatives decaying like 1/s^k, keeping every
    regularity ratio bounded while breaking exact homogeneity.
    """
    p = 0.5 * float(m)
    e = float(eps)

    def parts(s):
        s = np.asarray(s, dtype=float)
        c0, c1, c2, c3 = _blend_coeffs(s)
        a0 = (s + 1.0) ** p
        a1 = p * (s + 1.0) ** (p - 1.0)
        a2 = p * (p - 1.0) * (s + 1.0) ** (p - 2.0)
        a3 = p * (p - 1.0) * (p - 2.0) * (s + 1.0) ** (p - 3.0)
        # b-branch only matters where c > 0, i.e. s > _BLEND_LO^2; guard s=0
        sg = np.maximum(s, 1e-300)
        b0 = np.where(c0 > 0.0, sg**p, 0.0)
        b1 = np.where(c0 > 0.0, p * sg ** (p - 1.0), 0.0)
        b2 = np.where(c0 > 0.0, p * (p - 1.0) * sg ** (p - 2.0), 0.0)
        b3 = np.where(c0 > 0.0, p * (p - 1.0) * (p - 2.0) * sg ** (p - 3.0), 0.0)
        return c0, c1, c2, c3, a0, a1, a2, a3, b0, b1, b2, b3

    def wobble(s):
        s = np.asarray(s, dtype=float)
        t = np.log1p(s)
        den = 1.0 + s
        g0 = e * np.sin(t)
        g1 = e * np.cos(t) / den
        g2 = -e * (np.sin(t) + np.cos(t)) / den**2
        g3 = e * (np.cos(t) + 3.0 * np.sin(t)) / den**3
        return g0, g1, g2, g3

    def value(s):
        c0, _, _, _, a0, _, _, _, b0, _, _, _ = parts(s)
        g0, _, _, _ = wobble(s)
        return a0 + c0 * (b0 - a0) + g0

    def d1(s):
        c0, c1, _, _, a0, a1, _, _, b0, b1, _, _ = parts(s)
        _, g1, _, _ = wobble(s)
        return a1 + c1 * (b0 - a0) + c0 * (b1 - a1) + g1

    def d2(s):
        c0, c1, c2, _, a0, a1, a2, _, b0, b1, b2, _ = parts(s)
        _, _, g2, _ = wobble(s)
        return a2 + c2 * (b0 - a0) + 2.0 * c1 * (b1 - a1) + c0 * (b2 - a2) + g2

    def d3(s):
        c0, c1, c2, c3, a0, a1, a2, a3, b0, b1, b2, b3 = parts(s)
        _, _, _, g3 = wobble(s)
        return (
            a3
            + c3 * (b0 - a0)
            + 3.0 * c2 * (b1 - a1)
            + 3.0 * c1 * (b2 - a2)
            + c0 * (b3 - a3)
            + g3
        )

    return RadialProfile(value, d1, d2, d3)


# ---------------------------------------------------------------------------
# constructors


def build_family(cfg: FamilyConfig) -> PotentialModel:
    """Instantiate a built-in family; raises ConfigurationError on bad params."""
    errs = cfg.validate()
    if errs:
        raise ConfigurationError("; ".join(errs))

    if cfg.variant == "gaussian":
        prec = np.atleast_1d(np.asarray(cfg.precision, dtype=float))
        if prec.size == 1:
            prec = np.full(cfg.dim, prec[0])

        def u(q):
            q = np.asarray(q, dtype=float)
            return 0.5 * np.sum(prec * q * q, axis=-1)

        def grad(q):
            return prec * np.asarray(q, dtype=float)

        def hess_dir(q, v):
            v = np.asarray(v, dtype=float)
            shape = np.broadcast_shapes(np.shape(q), v.shape)
            return np.broadcast_to(prec * v, shape)

        def third_dir(q, v, w):
            shape = np.broadcast_shapes(np.shape(q), np.shape(v), np.shape(w))
            return np.zeros(shape)

        return PotentialModel(
            dim=cfg.dim,
            u=u,
            grad=grad,
            hess_dir=hess_dir,
            third_dir=third_dir,
            family_tag="gaussian",
            growth_exponent=2.0,
            config=cfg,
        )

    if cfg.variant == "power":
        profile = _power_profile(cfg.delta, cfg.kappa)
        return radial_model(
            profile, cfg.dim, "power", growth_exponent=2.0 * cfg.kappa, config=cfg
        )

    if cfg.variant == "homogeneous_perturbed":
        profile = _homogeneous_profile(cfg.m, cfg.perturbation)
        return radial_model(
            profile,
            cfg.dim,
            "homogeneous_perturbed",
            growth_exponent=cfg.m,
            config=cfg,
            kink_radii=(_BLEND_LO, _BLEND_HI),
        )

    if cfg.variant == "double_well":
        profile = _double_well_profile(cfg.scale)
        return radial_model(
            profile, cfg.dim, "double_well", growth_exponent=4.0, config=cfg
        )

    raise ConfigurationError(f"unknown variant {cfg.variant!r}")


def free_particle(dim: int) -> PotentialModel:
    """Constant potential (zero force); useful as an analytic control case."""

    def u(q):
        q = np.asarray(q, dtype=float)
        return np.zeros(q.shape[:-1])

    def grad(q):
        return np.zeros_like(np.asarray(q, dtype=float))

    def hess_dir(q, v):
        shape = np.broadcast_shapes(np.shape(q), np.shape(v))
        return np.zeros(shape)

    def third_dir(q, v, w):
        shape = np.broadcast_shapes(np.shape(q), np.shape(v), np.shape(w))
        return np.zeros(shape)

    return PotentialModel(
        dim=dim,
        u=u,
        grad=grad,
        hess_dir=hess_dir,
        third_dir=third_dir,
        family_tag="free",
        growth_exponent=None,
    )


# ---------------------------------------------------------------------------
# finite differences (oracle-grade fallbacks)


def finite_diff_grad(model: PotentialModel, q: np.ndarray, step: float | None = None) -> np.ndarray:
    """Central-difference gradient of model.u at a single point q."""
    q = np.asarray(q, dtype=float)
    if step is None:
        step = 1e-5 * (1.0 + float(np.linalg.norm(q)))
    d = q.shape[-1]
    out = np.empty(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = step
        out[i] = (float(model.u(q + e)) - float(model.u(q - e))) / (2.0 * step)
    return out


def finite_diff_hess_dir(
    model: PotentialModel, q: np.ndarray, v: np.ndarray, step: float | None = None
) -> np.ndarray:
    """Central-difference directional Hessian action D^2 U(q) v from the gradient."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        return np.zeros_like(q)
    if step is None:
        step = 1e-4 * (1.0 + float(np.linalg.norm(q)))
    t = step / nv
    return (model.grad(q + t * v) - model.grad(q - t * v)) / (2.0 * t)


def with_fd_derivatives(model: PotentialModel) -> PotentialModel:
    """Fill missing hess_dir/third_dir with finite-difference fallbacks."""
    hess = model.hess_dir
    if hess is None:
        def hess(q, v, _m=model):
            return finite_diff_hess_dir(_m, q, v)

    third = model.third_dir
    if third is None:
        def third(q, v, w, _h=hess):
            q = np.asarray(q, dtype=float)
            w = np.asarray(w, dtype=float)
            nw = float(np.linalg.norm(w))
            if nw == 0.0:
                return np.zeros_like(q)
            t = 1e-4 * (1.0 + float(np.linalg.norm(q))) / nw
            return (_h(q + t * w, v) - _h(q - t * w, v)) / (2.0 * t)

    return PotentialModel(
        dim=model.dim,
        u=model.u,
        grad=model.grad,
        hess_dir=hess,
        third_dir=third,
        family_tag=model.family_tag,
        growth_exponent=model.growth_exponent,
        config=model.config,
    )
