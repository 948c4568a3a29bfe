"""Dissipativity criteria for one-dimensional extension problems.

Each criterion compares the imaginary part of the extension vector's
diagonal matrix element against a square-root-form expression and returns
an auditable :class:`Verdict` carrying both sides separately.  Which
criterion applies is a property of the scenario:

* ``ran_vf_5_1``   -- deviation given as the large extension applied to a
  generator ``phi`` (half-line scenario),
* ``strict_pos_5_3`` -- strictly positive imaginary part, using the skew
  projection onto the adjoint kernel (inverse-square interval scenario),
* ``unique_ext_5_8`` -- coinciding small and large extensions (first-order
  interval scenario),
* ``bounded_v_6_3``  -- bounded imaginary part (Schroedinger scenario),
* ``general_4_4``    -- the master inequality, with the isometry factor
  realized through a discrete square-root pair on a finite test span.

Membership preconditions are checked first; a failing membership forces a
non-dissipative verdict, and when both memberships fail for a part whose
two extensions differ, no criterion applies and the verdict is returned as
``outside_theory`` with the decision left undetermined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import forms
from .analytic import AnalyticFunction, DivergentIntegralError, Term
from .catalog import ExtensionProblem, MultiplicationPerturbation, RankOnePerturbation
from .grid import GridFunction, differentiate, integrate

__all__ = [
    "CriteriaError",
    "SupportViolationError",
    "MARGIN_TOL",
    "FAIL_V_NOT_IN_DK",
    "FAIL_L_NOT_IN_RANVF",
    "FAIL_DOMAIN_NOT_IN_DSSTAR",
    "Verdict",
    "necessity_checks",
    "general_lhs",
    "verdict_general",
    "verdict_ran_vf",
    "verdict_strict_pos",
    "verdict_unique_ext",
    "verdict_bounded_v",
    "semibound_estimate",
    "maximality_count",
    "decide",
]

MARGIN_TOL = 1e-12

FAIL_V_NOT_IN_DK = "v_not_in_DK"
FAIL_L_NOT_IN_RANVF = "L_not_in_ranVF"
FAIL_DOMAIN_NOT_IN_DSSTAR = "domain_not_in_DSstar"

CRITERION_GENERAL = "general_4_4"
CRITERION_RAN_VF = "ran_vf_5_1"
CRITERION_STRICT_POS = "strict_pos_5_3"
CRITERION_UNIQUE_EXT = "unique_ext_5_8"
CRITERION_BOUNDED_V = "bounded_v_6_3"
CRITERION_OUTSIDE = "outside_theory"


class CriteriaError(Exception):
    """Criterion applied outside its precondition."""


class SupportViolationError(CriteriaError):
    """Deviation supported outside the bounded multiplier's support."""


@dataclass(frozen=True)
class Verdict:
    """Decision record: ``dissipative`` iff ``margin >= -1e-12`` and no
    membership failure; ``None`` when the inputs fall outside every
    criterion's reach."""

    criterion: str
    lhs: float
    rhs: float
    margin: float
    dissipative: bool | None
    necessity_failures: tuple[str, ...] = ()

    @staticmethod
    def from_sides(criterion: str, lhs: float, rhs: float) -> "Verdict":
        margin = lhs - rhs
        return Verdict(criterion, lhs, rhs, margin, bool(margin >= -MARGIN_TOL))

    @staticmethod
    def failure(criterion: str, failures: tuple[str, ...]) -> "Verdict":
        return Verdict(criterion, math.nan, math.nan, math.nan, False, failures)

    @staticmethod
    def outside_theory(failures: tuple[str, ...]) -> "Verdict":
        return Verdict(CRITERION_OUTSIDE, math.nan, math.nan, math.nan, None, failures)


# ---------------------------------------------------------------------------
# shared evaluation helpers


def _domain_hi(problem: ExtensionProblem) -> float:
    return math.inf if problem.grid.is_halfline else problem.grid.length


def _im_inner(f: GridFunction, g: GridFunction, hi: float) -> float:
    if f.analytic is not None and g.analytic is not None:
        return float((f.analytic.conj() * g.analytic).integral(0.0, hi).imag)
    return float(integrate(f, g).imag)


def _im_action(problem: ExtensionProblem) -> float:
    """``Im <v, action v>`` for the unbounded part of the maximal action.

    A real half-line potential W contributes nothing to the imaginary part,
    so only the principal differential expression enters.
    """
    v = problem.v
    hi = _domain_hi(problem)
    if v.analytic is not None:
        act = problem.action_on(v.analytic)
        return float((v.analytic.conj() * act).integral(0.0, hi).imag)
    dd = differentiate(differentiate(v))
    x = v.grid.nodes
    if problem.scenario in ("potsdam", "halfline_schrodinger"):
        factor = -1.0j if problem.scenario == "potsdam" else -1.0
        act_vals = factor * dd.values
    elif problem.scenario == "shirley":
        act_vals = -1.0j * dd.values - problem.gamma * v.values / x**2
    else:
        act_vals = 1.0j * differentiate(v).values + 1.0j * problem.gamma * v.values / x
    return float(np.sum(v.grid.weights * np.conj(v.values) * act_vals).imag)


def _bounded_part(problem: ExtensionProblem) -> float:
    """``<v, V v>`` of the bounded imaginary part (Schroedinger scenario)."""
    if problem.scenario != "halfline_schrodinger":
        return 0.0
    return forms.friedrichs_form_sq(problem.spec, problem.v)


def _lv_function(problem: ExtensionProblem) -> GridFunction | None:
    """The deviation ``Lv`` as a grid function (None when the map is zero)."""
    if problem.lv is not None:
        return problem.lv
    phi = problem.phi
    if phi is None:
        return None
    if phi.analytic is not None and not phi.analytic.terms:
        return None
    spec = problem.spec
    if spec.is_laplacian:
        if phi.analytic is not None:
            return GridFunction.from_analytic(
                phi.grid, phi.analytic.derivative().derivative() * (-1.0)
            )
        dd = differentiate(differentiate(phi))
        return GridFunction(phi.grid, -dd.values)
    if spec.family == "multiplication":
        if phi.analytic is not None and spec.weight.analytic is not None:
            return GridFunction.from_analytic(phi.grid, spec.weight.analytic * phi.analytic)
        return GridFunction(phi.grid, spec.weight.values.real * phi.values)
    raise CriteriaError("deviation generator unsupported for this family")


def _quarter_inv_form(problem: ExtensionProblem) -> float:
    """``(1/4) ||V_F^{-1/2} Lv||^2`` from whichever deviation data is present."""
    if problem.phi is not None and (problem.phi.analytic is None or problem.phi.analytic.terms):
        return 0.25 * forms.friedrichs_form_sq(problem.spec, problem.phi)
    lv = _lv_function(problem)
    if lv is None:
        return 0.0
    return 0.25 * forms.vf_solve(problem.spec, lv).inv_form


# ---------------------------------------------------------------------------
# membership preconditions


def necessity_checks(problem: ExtensionProblem) -> list[str]:
    """Membership failures of the extension data (empty list = all pass).

    Checks ``v`` against the small square-root form domain, the deviation
    against the large square-root range, and (bounded scenarios) ``v``
    against the maximal domain of the symmetric part.
    """
    failures: list[str] = []
    spec = problem.spec
    try:
        forms.krein_form_sq(spec, problem.v)
    except forms.DomainError:
        failures.append(FAIL_V_NOT_IN_DK)
    lv = problem.lv
    if lv is not None and float(np.max(np.abs(lv.values))) > 0.0:
        if isinstance(problem.perturbation, MultiplicationPerturbation):
            if not forms.support_violation(problem.perturbation.v, lv):
                try:
                    forms.mult_inverse_norm_sq(problem.perturbation.v, lv)
                except forms.RangeError:
                    failures.append(FAIL_L_NOT_IN_RANVF)
        else:
            _, diverged = forms.sqrt_scale_inv_form(spec, lv)
            if diverged:
                failures.append(FAIL_L_NOT_IN_RANVF)
    if problem.scenario == "halfline_schrodinger" and problem.v.analytic is not None:
        try:
            dd = problem.v.analytic.derivative().derivative()
            (dd.conj() * dd).integral(0.0, math.inf)
        except DivergentIntegralError:
            failures.append(FAIL_DOMAIN_NOT_IN_DSSTAR)
        except Exception:
            pass
    return failures


def _gate(problem: ExtensionProblem, criterion: str) -> Verdict | None:
    failures = tuple(necessity_checks(problem))
    if not failures:
        return None
    both = FAIL_V_NOT_IN_DK in failures and FAIL_L_NOT_IN_RANVF in failures
    if both and not problem.spec.friedrichs_equals_krein:
        # open case: neither membership holds and the extensions differ
        return Verdict.outside_theory(failures)
    return Verdict.failure(criterion, failures)


# ---------------------------------------------------------------------------
# criteria


def verdict_ran_vf(problem: ExtensionProblem) -> Verdict:
    """Criterion for deviations ``Lv = V_F phi`` (no isometry factor needed).

    lhs: ``Im<v, action v> + Im<v, V_F phi>``;
    rhs: ``(1/4) || K-sqrt of (phi + 2iv) ||^2`` via the polarized small form.
    """
    if problem.phi is None:
        raise CriteriaError("criterion needs the deviation generator phi")
    gate = _gate(problem, CRITERION_RAN_VF)
    if gate is not None:
        return gate
    spec = problem.spec
    v, phi = problem.v, problem.phi
    hi = _domain_hi(problem)
    lhs = _im_action(problem)
    lv = _lv_function(problem)
    if lv is not None:
        lhs += _im_inner(v, lv, hi)
    kpp = forms.krein_form_sq(spec, phi) if (phi.analytic is None or phi.analytic.terms) else 0.0
    kvv = forms.krein_form_sq(spec, v)
    kpv = forms.krein_form(spec, phi, v) if (phi.analytic is None or phi.analytic.terms) else 0.0
    rhs = 0.25 * kpp + kvv - complex(kpv).imag
    return Verdict.from_sides(CRITERION_RAN_VF, lhs, rhs)


def verdict_strict_pos(problem: ExtensionProblem) -> Verdict:
    """Criterion for strictly positive imaginary parts.

    lhs: ``Im<v, action v> + Im<Pv, Lv>`` with P the skew projection onto
    the adjoint kernel; rhs: ``(1/4)||V_F^{-1/2} Lv||^2 + ||V_K^{1/2} v||^2``.
    """
    if not (problem.spec.strict_lower_bound > 0.0):
        raise CriteriaError("criterion needs a strictly positive imaginary part")
    gate = _gate(problem, CRITERION_STRICT_POS)
    if gate is not None:
        return gate
    spec = problem.spec
    v = problem.v
    hi = _domain_hi(problem)
    lhs = _im_action(problem)
    lv = _lv_function(problem)
    if lv is not None:
        pv = forms.projection_P(spec, v)
        lhs += _im_inner(pv, lv, hi)
    rhs = _quarter_inv_form(problem) + forms.krein_form_sq(spec, v)
    return Verdict.from_sides(CRITERION_STRICT_POS, lhs, rhs)


def verdict_unique_ext(problem: ExtensionProblem) -> Verdict:
    """Criterion when the small and large extensions coincide.

    lhs: ``Im<v, action v>``; rhs: ``(1/4)||V^{-1/2} Lv||^2 + ||V^{1/2} v||^2``.
    Since the rhs dominates the zero-deviation rhs, a failing proper
    extension rules out every deviation on the same domain.
    """
    if not problem.spec.friedrichs_equals_krein:
        raise CriteriaError("criterion needs coinciding extensions")
    gate = _gate(problem, CRITERION_UNIQUE_EXT)
    if gate is not None:
        return gate
    lhs = _im_action(problem)
    rhs = _quarter_inv_form(problem) + forms.krein_form_sq(problem.spec, problem.v)
    return Verdict.from_sides(CRITERION_UNIQUE_EXT, lhs, rhs)


def verdict_bounded_v(problem: ExtensionProblem) -> Verdict:
    """Criterion for bounded imaginary parts.

    lhs: ``Im<v, S* v>`` (the boundary form of the symmetric part);
    rhs: ``(1/4)||V^{-1/2} Lv||^2`` in the bounded part's metric.
    """
    pert = problem.perturbation
    if pert is None:
        raise CriteriaError("criterion needs a bounded perturbation")
    if isinstance(pert, MultiplicationPerturbation) and forms.support_violation(pert.v, pert.k):
        raise SupportViolationError(
            "deviation carries mass outside the multiplier support"
        )
    gate = _gate(problem, CRITERION_BOUNDED_V)
    if gate is not None:
        return gate
    lhs = _im_action(problem)
    if isinstance(pert, RankOnePerturbation):
        rhs = 0.25 * abs(pert.lam) ** 2 / pert.alpha
    else:
        rhs = 0.25 * forms.mult_inverse_norm_sq(pert.v, pert.k)
    return Verdict.from_sides(CRITERION_BOUNDED_V, lhs, rhs)


def general_lhs(problem: ExtensionProblem) -> float:
    """``Im <v, (action + L) v>`` including any bounded imaginary part."""
    hi = _domain_hi(problem)
    lhs = _im_action(problem) + _bounded_part(problem)
    lv = _lv_function(problem)
    if lv is not None:
        lhs += _im_inner(problem.v, lv, hi)
    return lhs


def verdict_general(
    problem: ExtensionProblem,
    basis: list[GridFunction] | None = None,
    basis_dim: int = 24,
) -> Verdict:
    """Master criterion through a discrete square-root pair surrogate.

    The rhs norm is expanded into the inverse form, the small form of ``v``
    and a cross term; on the test span the isometry factor maps large-form
    square roots to small-form square roots, which turns the cross term
    into the polarized small form of the span-projected deviation generator
    against ``v``.  Accuracy improves with ``basis_dim``.
    """
    gate = _gate(problem, CRITERION_GENERAL)
    if gate is not None:
        return gate
    spec = problem.spec
    v = problem.v
    lhs = general_lhs(problem)
    lv = _lv_function(problem)
    kvv = forms.krein_form_sq(spec, v)
    if lv is None:
        return Verdict.from_sides(CRITERION_GENERAL, lhs, kvv)
    if problem.phi is not None and (problem.phi.analytic is None or problem.phi.analytic.terms):
        phi = problem.phi
        quarter = 0.25 * forms.friedrichs_form_sq(spec, phi)
    else:
        sol = forms.vf_solve(spec, lv)
        phi, quarter = sol.u, 0.25 * sol.inv_form
    if basis is None:
        basis = _default_span(problem, basis_dim)
    pair = forms.discrete_sqrt_pair(spec, basis)
    if float(np.max(np.abs(pair.isometry))) > 1.0 + 1e-6:
        raise CriteriaError("discrete isometry factor exceeds the contraction bound")
    m = len(basis)
    fmat = np.empty((m, m), dtype=complex)
    rhs_vec = np.empty(m, dtype=complex)
    for i in range(m):
        rhs_vec[i] = forms.friedrichs_form(spec, basis[i], phi)
        for j in range(m):
            fmat[i, j] = forms.friedrichs_form(spec, basis[i], basis[j])
    coeff = _solve_psd(0.5 * (fmat + fmat.conj().T), rhs_vec)
    cross = sum(
        np.conj(coeff[j]) * forms.krein_form(spec, basis[j], v) for j in range(m)
    )
    rhs = quarter + kvv - complex(cross).imag
    return Verdict.from_sides(CRITERION_GENERAL, lhs, rhs)


def _solve_psd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    from . import eigenh

    w, q = eigenh.eigh(a)
    wmax = float(np.max(np.abs(w))) if len(w) else 0.0
    inv = np.where(w > 1e-12 * max(wmax, 1e-300), 1.0 / np.maximum(w, 1e-300), 0.0)
    return q @ (inv * (q.conj().T @ b))


def _default_span(problem: ExtensionProblem, dim: int) -> list[GridFunction]:
    grid = problem.grid
    if problem.spec.family == "dirichlet_laplacian_interval":
        out = []
        b = grid.length
        for k in range(1, dim + 1):
            mu = 1j * math.pi * k / b
            fn = AnalyticFunction((Term(-0.5j, 0.0, mu), Term(0.5j, 0.0, -mu)))
            out.append(GridFunction.from_analytic(grid, fn))
        return out
    bumps = forms.bump_family(grid.length, dim, lo=grid.offset)
    return [GridFunction.from_values(grid, b(grid.nodes)) for b in bumps]


# ---------------------------------------------------------------------------
# auxiliary counters


def semibound_estimate(eps: float, l_norm: float) -> float:
    """Lower bound ``-||L||^2/(4 eps)`` for the deviated symmetric part."""
    if eps <= 0.0:
        raise CriteriaError("strict positivity constant must be positive")
    if l_norm < 0.0:
        raise CriteriaError("operator norm cannot be negative")
    return -(l_norm**2) / (4.0 * eps)


def maximality_count(added_dim: int, defect_dim: int) -> bool:
    """Maximality test: the added dimension must exhaust the defect count."""
    if added_dim < 0 or defect_dim < 0:
        raise CriteriaError("dimensions must be non-negative")
    if not math.isfinite(defect_dim):
        raise CriteriaError("defect dimension must be finite")
    return added_dim == defect_dim


# ---------------------------------------------------------------------------
# dispatch


def decide(problem: ExtensionProblem) -> Verdict:
    """Route a problem to its scenario's criterion."""
    if problem.scenario == "halfline_schrodinger":
        return verdict_bounded_v(problem)
    if problem.spec.friedrichs_equals_krein:
        return verdict_unique_ext(problem)
    if problem.scenario == "shirley":
        return verdict_strict_pos(problem)
    if problem.phi is not None:
        return verdict_ran_vf(problem)
    return verdict_general(problem)
