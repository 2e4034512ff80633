"""Empirical probes of the regularity and tail-shape conditions.

Real analytic conditions quantify over all of space; these probes test
them on spheres of logarithmically spaced radii and decide boundedness
with a simple rule: a per-radius ratio family counts as bounded when its
maximum over the upper half of the radius grid stays within a factor 1.5
of its value at the median radius.  A genuinely growing ratio (any
positive power of the radius) blows through that margin immediately on a
log grid, while a ratio converging to a constant sits well inside it.

Probed conditions:

  a1: (i)  gradient Lipschitz quotients  ||gU(q) - gU(q~)|| / ||q - q~||
      (ii) gradient growth               ||gU(q)|| / (1 + ||q||^beta)

  a2, for a growth exponent m in (1, 2]:
      (i)   k-th derivative bound, k = 2, 3:
            ||D^k U(q) dirs|| / (||q|| + 1)^(m-k)
      (ii)  curvature alignment  D^2 U(q)[gU, gU] >= A2 ||q||^(3m-4)
            at large radii (reported with the smallest empirically
            sufficient radius)
      (iii) radial coercivity    <gU(q), q> >= A3 ||q||^m - A4
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CapabilityError
from .potentials import PotentialModel, with_fd_derivatives
from .rng import make_rng, sphere_directions

DEFAULT_RADII = (1.0, 10.0, 100.0, 1000.0, 10000.0)
_RATIO_MARGIN = 1.5
_ATOL = 1e-12


@dataclass(frozen=True)
class ConditionResult:
    """Outcome of one probed inequality.

    ``constant`` is the fitted constant: the global worst ratio when the
    condition passes (an empirically valid choice), or the median-radius
    reference level when it fails (no valid constant exists).
    """

    condition: str
    passed: bool
    constant: float
    witness: Optional[np.ndarray]
    radii: tuple[float, ...]
    ratios: tuple[float, ...]
    note: str = ""


@dataclass(frozen=True)
class AssumptionReport:
    assumption: str
    parameter: float
    passed: bool
    conditions: tuple[ConditionResult, ...]
    sample_spec: dict = field(default_factory=dict)

    def condition(self, name: str) -> ConditionResult:
        for c in self.conditions:
            if c.condition == name:
                return c
        raise KeyError(name)


def _bounded_ratio_verdict(radii: np.ndarray, ratios: np.ndarray) -> tuple[bool, float]:
    """Apply the bounded-ratio rule; returns (passed, fitted constant)."""
    order = np.argsort(radii)
    r_sorted = ratios[order]
    med_idx = len(r_sorted) // 2
    ref = r_sorted[med_idx]
    top = r_sorted[med_idx + 1 :] if med_idx + 1 < len(r_sorted) else r_sorted[-1:]
    passed = bool(np.max(top) <= _RATIO_MARGIN * ref + _ATOL)
    constant = float(np.max(r_sorted)) if passed else float(ref)
    return passed, constant


def check_a1(
    model: PotentialModel,
    beta: float,
    radii=DEFAULT_RADII,
    n_samples: int = 64,
    seed: int = 0,
) -> AssumptionReport:
    """Probe gradient Lipschitz continuity and polynomial gradient growth."""
    rng = make_rng(seed)
    radii_arr = np.asarray(sorted(radii), dtype=float)
    d = model.dim

    lip_ratios, lip_witness = [], []
    grow_ratios, grow_witness = [], []
    for r in radii_arr:
        qs = r * sphere_directions(rng, n_samples, d)
        eps = 1e-3 * (1.0 + r)
        qt = qs + eps * sphere_directions(rng, n_samples, d)
        diff = np.linalg.norm(model.grad(qs) - model.grad(qt), axis=-1)
        sep = np.linalg.norm(qs - qt, axis=-1)
        quo = diff / sep
        i = int(np.argmax(quo))
        lip_ratios.append(float(quo[i]))
        lip_witness.append(qs[i].copy())

        gn = np.linalg.norm(model.grad(qs), axis=-1) / (1.0 + r**beta)
        i = int(np.argmax(gn))
        grow_ratios.append(float(gn[i]))
        grow_witness.append(qs[i].copy())

    conditions = []
    for name, ratios, wits in (
        ("grad_lipschitz", lip_ratios, lip_witness),
        ("grad_growth", grow_ratios, grow_witness),
    ):
        ratios_arr = np.asarray(ratios)
        passed, constant = _bounded_ratio_verdict(radii_arr, ratios_arr)
        worst = wits[int(np.argmax(ratios_arr))]
        conditions.append(
            ConditionResult(
                condition=name,
                passed=passed,
                constant=constant,
                witness=worst,
                radii=tuple(radii_arr),
                ratios=tuple(ratios_arr),
            )
        )

    return AssumptionReport(
        assumption="a1",
        parameter=float(beta),
        passed=all(c.passed for c in conditions),
        conditions=tuple(conditions),
        sample_spec={"radii": list(map(float, radii_arr)), "n_samples": n_samples, "seed": seed},
    )


def check_a2(
    model: PotentialModel,
    m: float,
    radii=DEFAULT_RADII,
    n_samples: int = 64,
    seed: int = 0,
    allow_fd: bool = True,
) -> AssumptionReport:
    """Probe the m-growth derivative bounds, curvature alignment and coercivity."""
    if model.hess_dir is None or model.third_dir is None:
        if not allow_fd:
            raise CapabilityError(
                f"model {model.family_tag!r} lacks derivative evaluators and allow_fd=False"
            )
        model = with_fd_derivatives(model)

    rng = make_rng(seed)
    radii_arr = np.asarray(sorted(radii), dtype=float)
    d = model.dim
    r_max = radii_arr[-1]
    top_mask = radii_arr >= 0.5 * r_max

    d2_ratios, d2_wit = [], []
    d3_ratios, d3_wit = [], []
    curv_min, curv_wit = [], []
    coer_ratios, coer_all = [], []  # per-radius min ratio; raw values for A4
    coer_wit = []
    for r in radii_arr:
        qs = r * sphere_directions(rng, n_samples, d)
        v = sphere_directions(rng, n_samples, d)
        w = sphere_directions(rng, n_samples, d)

        hv = np.linalg.norm(model.hess_dir(qs, v), axis=-1) / (r + 1.0) ** (m - 2.0)
        i = int(np.argmax(hv))
        d2_ratios.append(float(hv[i]))
        d2_wit.append(qs[i].copy())

        tv = np.linalg.norm(model.third_dir(qs, v, w), axis=-1) / (r + 1.0) ** (m - 3.0)
        i = int(np.argmax(tv))
        d3_ratios.append(float(tv[i]))
        d3_wit.append(qs[i].copy())

        g = model.grad(qs)
        curv = np.sum(model.hess_dir(qs, g) * g, axis=-1) / r ** (3.0 * m - 4.0)
        i = int(np.argmin(curv))
        curv_min.append(float(curv[i]))
        curv_wit.append(qs[i].copy())

        radial = np.sum(g * qs, axis=-1)
        ratio = radial / r**m
        i = int(np.argmin(ratio))
        coer_ratios.append(float(ratio[i]))
        coer_wit.append(qs[i].copy())
        coer_all.append((r, radial))

    conditions = []
    for name, ratios, wits in (("d2_growth", d2_ratios, d2_wit), ("d3_growth", d3_ratios, d3_wit)):
        ratios_arr = np.asarray(ratios)
        passed, constant = _bounded_ratio_verdict(radii_arr, ratios_arr)
        conditions.append(
            ConditionResult(
                condition=name,
                passed=passed,
                constant=constant,
                witness=wits[int(np.argmax(ratios_arr))],
                radii=tuple(radii_arr),
                ratios=tuple(ratios_arr),
            )
        )

    # (ii): positivity of the aligned curvature at large radii; also record
    # the smallest grid radius from which every larger radius passes
    curv_arr = np.asarray(curv_min)
    top_vals = curv_arr[top_mask]
    curv_passed = bool(np.all(top_vals > 0.0))
    a2_hat = float(np.min(top_vals))
    ok_from = None
    for j in range(len(radii_arr)):
        if np.all(curv_arr[j:] > 0.0):
            ok_from = float(radii_arr[j])
            break
    worst_j = int(np.argmin(np.where(top_mask, curv_arr, np.inf)))
    conditions.append(
        ConditionResult(
            condition="curvature_lower",
            passed=curv_passed,
            constant=a2_hat,
            witness=curv_wit[worst_j],
            radii=tuple(radii_arr),
            ratios=tuple(curv_arr),
            note=f"holds empirically from radius {ok_from}" if ok_from is not None else "no radius on the grid from which positivity holds",
        )
    )

    # (iii): A3 from the upper half of the grid, then the smallest offset A4
    # making the inequality hold at every sampled point
    coer_arr = np.asarray(coer_ratios)
    a3_hat = float(np.min(coer_arr[top_mask]))
    coer_passed = a3_hat > 0.0
    deficit = 0.0
    for r, radial in coer_all:
        deficit = max(deficit, float(np.max(a3_hat * r**m - radial)))
    a4_hat = max(0.0, deficit)
    worst_j = int(np.argmin(coer_arr))
    conditions.append(
        ConditionResult(
            condition="radial_coercivity",
            passed=coer_passed,
            constant=a3_hat,
            witness=coer_wit[worst_j],
            radii=tuple(radii_arr),
            ratios=tuple(coer_arr),
            note=f"offset_constant={a4_hat!r}",
        )
    )

    report = AssumptionReport(
        assumption="a2",
        parameter=float(m),
        passed=all(c.passed for c in conditions),
        conditions=tuple(conditions),
        sample_spec={"radii": list(map(float, radii_arr)), "n_samples": n_samples, "seed": seed},
    )
    return report
