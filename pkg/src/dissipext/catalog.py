"""Worked extension scenarios with exact basis functions and reference verdicts.

Four families of one-dimensional dual pairs are built here:

* ``potsdam`` -- half-line first-kind operator ``-i f'' + W f`` on a
  double-zero domain; extension vectors combine the two decaying
  exponentials ``exp(-(1 +- i) x / sqrt(2))``.
* ``shirley`` -- interval operator ``-i f'' - gamma f / x^2`` with
  ``gamma >= sqrt(3)``; extension vectors combine ``x^omega`` and
  ``x^{conj(omega)+2}`` with ``omega = (1 + sqrt(1 + 4 i gamma)) / 2``.
* ``konzert`` -- interval operator ``i f' + i gamma f / x`` with
  ``0 < gamma < 1/2``; the single admissible extension vector is
  ``x^{gamma+1}``.
* ``halfline_schrodinger`` -- ``-f''`` with boundary parameter ``h`` plus a
  bounded rank-one or multiplication perturbation of the imaginary part.

Every builder samples the extension vector from its analytic formula (exact
traces, no extrapolation) and records the scenario's closed-form reference
margin next to the criteria-module evaluation path.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import forms
from .analytic import AnalyticFunction, Term
from .grid import (
    DEFAULT_HALFLINE_R,
    Grid,
    GridFunction,
    decay_certificate,
    make_grid,
)

__all__ = [
    "CatalogError",
    "RHO_INF",
    "is_inf",
    "RankOnePerturbation",
    "MultiplicationPerturbation",
    "ExtensionProblem",
    "build_potsdam",
    "build_shirley",
    "build_konzert",
    "build_halfline_schrodinger",
    "support_violation",
    "mult_inverse_norm_sq",
    "split_dual_pair",
    "shirley_margin_exact",
    "SHIRLEY_GAMMA_MIN",
    "KONZERT_GAMMA_RANGE",
]

SHIRLEY_GAMMA_MIN = math.sqrt(3.0)
KONZERT_GAMMA_RANGE = (0.0, 0.5)

#: boundary parameter at infinity; its imaginary part counts as 0 by convention
RHO_INF = complex(math.inf, 0.0)


def is_inf(rho: complex | None) -> bool:
    return rho is not None and math.isinf(rho.real)


class CatalogError(Exception):
    """Invalid scenario parameters or basis construction failure."""


@dataclass(frozen=True)
class RankOnePerturbation:
    """Bounded imaginary part ``alpha |phi><phi|`` with deviation ``lambda phi``."""

    alpha: float
    phi: GridFunction
    lam: complex


@dataclass(frozen=True)
class MultiplicationPerturbation:
    """Bounded imaginary part ``V(x)`` with deviation function ``k``."""

    v: GridFunction
    k: GridFunction


@dataclass(frozen=True, eq=False)
class ExtensionProblem:
    """One extension of a dual pair, ready for the criteria and the oracle.

    ``v`` spans the added one-dimensional space; the deviation from the
    maximal action is either ``V_F phi`` (``phi`` set) or the explicit
    function ``lv``.  ``reference_margin`` stores the scenario's closed-form
    decision margin for cross-checking.
    """

    scenario: str
    spec: forms.ImaginaryPartSpec
    grid: Grid
    v: GridFunction
    rho: complex | None = None
    phi: GridFunction | None = None
    lv: GridFunction | None = None
    gamma: float | None = None
    h: complex | None = None
    perturbation: RankOnePerturbation | MultiplicationPerturbation | None = None
    w_potential: GridFunction | None = None
    maximally_dissipative: bool | None = None
    reference_margin: float | None = None
    reference_dissipative: bool | None = None

    def action_on(self, fn: AnalyticFunction) -> AnalyticFunction:
        """Unbounded part of the maximal action on an analytic function.

        The real half-line potential ``W`` and the bounded imaginary parts
        of the Schroedinger scenario are added separately by callers that
        hold the sampled data.
        """
        if self.scenario in ("potsdam", "shirley", "halfline_schrodinger"):
            out = fn.derivative().derivative() * (-1.0j if self.scenario != "halfline_schrodinger" else -1.0)
            if self.scenario == "shirley":
                out = out - self.gamma * (fn * AnalyticFunction((Term(1.0, -2.0),)))
            return out
        # konzert: i f' + i gamma f / x
        return 1.0j * fn.derivative() + 1.0j * self.gamma * (fn * AnalyticFunction((Term(1.0, -1.0),)))


# ---------------------------------------------------------------------------
# potsdam: -i f'' + W on the half-line


def _halfline_defect_basis() -> tuple[AnalyticFunction, AnalyticFunction]:
    """Solve for the trace-normalized combinations of the decaying kernel basis.

    Returns ``(sigma, tau)`` with ``sigma(0)=tau'(0)=1`` and
    ``sigma'(0)=tau(0)=0``; the 2x2 trace system must be uniquely solvable,
    which is asserted through its determinant.
    """
    mu_p = -(1.0 + 1.0j) / math.sqrt(2.0)
    mu_m = -(1.0 - 1.0j) / math.sqrt(2.0)
    det = mu_m - mu_p
    if abs(det) < 1e-12:
        raise CatalogError("defect basis trace system is singular")

    def combo(val0: complex, der0: complex) -> AnalyticFunction:
        a = (val0 * mu_m - der0) / det
        b = (der0 - val0 * mu_p) / det
        return AnalyticFunction((Term(a, 0.0, mu_p), Term(b, 0.0, mu_m)))

    return combo(1.0, 0.0), combo(0.0, 1.0)


def _require_dirichlet(phi: GridFunction, name: str) -> None:
    t = phi.traces
    val0 = t.value0 if t is not None else None
    if val0 is None or abs(val0) > 1e-8 * (1.0 + float(np.max(np.abs(phi.values)))):
        raise CatalogError(f"{name} must vanish at 0")


def build_potsdam(
    w: AnalyticFunction | None,
    rho: complex,
    phi: AnalyticFunction | None,
    *,
    n: int = 512,
    r: float = DEFAULT_HALFLINE_R,
) -> ExtensionProblem:
    """Half-line scenario with potential ``W`` and deviation ``V_F phi``."""
    grid = make_grid("halfline", n, length=r)
    sigma, tau = _halfline_defect_basis()
    zeta = tau if is_inf(rho) else sigma + rho * tau
    vf = GridFunction.from_analytic(grid, zeta)
    if not decay_certificate(vf):
        raise CatalogError("extension vector has not decayed by the truncation radius")
    phi_fn = phi if phi is not None else AnalyticFunction(())
    phig = GridFunction.from_analytic(grid, phi_fn)
    if phi is not None:
        if not phi_fn.decays_at_infinity() or not decay_certificate(phig):
            raise CatalogError("phi must have decayed by the truncation radius")
        _require_dirichlet(phig, "phi")
    wg = GridFunction.from_analytic(grid, w) if w is not None else None
    if wg is not None:
        if float(np.max(np.abs(wg.values.imag))) > 1e-10:
            raise CatalogError("potential W must be real-valued")
        if not math.isfinite(wg.norm_sq()):
            raise CatalogError("potential W must be square-integrable")
    dphi = phi_fn.derivative()
    norm_dphi_sq = float((dphi.conj() * dphi).integral(0.0, math.inf).real)
    if is_inf(rho):
        margin = -0.25 * norm_dphi_sq
    else:
        margin = rho.real - 0.25 * norm_dphi_sq + float(dphi.value_at_zero().imag)
    return ExtensionProblem(
        scenario="potsdam",
        spec=forms.dirichlet_laplacian_halfline(),
        grid=grid,
        v=vf,
        rho=rho,
        phi=phig,
        w_potential=wg,
        reference_margin=margin,
        reference_dissipative=margin >= -1e-12,
    )


# ---------------------------------------------------------------------------
# shirley: -i f'' - gamma/x^2 on the unit interval


def _shirley_vector(gamma: float, rho: complex) -> AnalyticFunction:
    omega = (1.0 + cmath.sqrt(1.0 + 4.0j * gamma)) / 2.0
    den = 2.0 + omega.conjugate() - omega
    lead = AnalyticFunction(
        (
            Term((2.0 + omega.conjugate()) / den, omega),
            Term(-omega / den, omega.conjugate() + 2.0),
        )
    )
    if is_inf(rho):
        return lead
    slope = AnalyticFunction(
        (Term(-1.0 / den, omega), Term(1.0 / den, omega.conjugate() + 2.0))
    )
    return rho * lead + slope


def build_shirley(
    gamma: float,
    rho: complex,
    phi: AnalyticFunction | None,
    *,
    n: int = 512,
    offset: float = 1e-6,
) -> ExtensionProblem:
    """Interval scenario with the inverse-square potential and ``V_F phi``."""
    if gamma < SHIRLEY_GAMMA_MIN - 1e-12:
        raise CatalogError(
            f"gamma must be at least sqrt(3) to keep one extension direction, got {gamma}"
        )
    if not offset > 0.0:
        raise CatalogError("the inverse-square potential needs an offset grid")
    grid = make_grid("interval", n, offset=offset)
    xi = _shirley_vector(gamma, rho)
    vf = GridFunction.from_analytic(grid, xi)
    phi_fn = phi if phi is not None else AnalyticFunction(())
    phig = GridFunction.from_analytic(grid, phi_fn)
    if phi is not None:
        t = phig.traces
        scale = 1.0 + float(np.max(np.abs(phig.values)))
        if abs(t.value0) > 1e-8 * scale or abs(t.value_b) > 1e-8 * scale:
            raise CatalogError("phi must vanish at both endpoints")
    dphi = phi_fn.derivative()
    norm_dphi_sq = float((dphi.conj() * dphi).integral(0.0, 1.0).real)
    dphi1 = complex(dphi(np.asarray(1.0))) if phi is not None else 0.0
    if is_inf(rho):
        margin = 1.0 - (0.25 * norm_dphi_sq + complex(dphi1).imag)
    else:
        margin = (abs(rho) ** 2 - rho.real) - (
            0.25 * norm_dphi_sq + (rho.conjugate() * dphi1).imag
        )
    return ExtensionProblem(
        scenario="shirley",
        spec=forms.dirichlet_laplacian_interval(),
        grid=grid,
        v=vf,
        rho=rho,
        phi=phig,
        gamma=float(gamma),
        reference_margin=float(margin),
        reference_dissipative=margin >= -1e-12,
    )


def shirley_margin_exact(
    rho_re: Fraction, rho_im: Fraction, phi_poly: tuple[Fraction, ...]
) -> Fraction:
    """Decision margin of the interval scenario in exact rational arithmetic.

    ``phi_poly`` holds polynomial coefficients (constant first) of a deviation
    generator with rational coefficients vanishing at 0 and 1; the margin of
    the finite-``rho`` criterion is a rational number in that case.
    """
    dcoef = [Fraction(k) * c for k, c in enumerate(phi_poly)][1:]
    # || phi' ||^2 = int_0^1 (sum d_j x^j)^2 dx with real rational d
    norm_sq = Fraction(0)
    for i, di in enumerate(dcoef):
        for j, dj in enumerate(dcoef):
            norm_sq += di * dj / (i + j + 1)
    dphi1 = sum(dcoef)
    # Im(conj(rho) * phi'(1)) = -rho_im * phi'(1) for real phi'
    lhs = rho_re * rho_re + rho_im * rho_im - rho_re
    rhs = Fraction(1, 4) * norm_sq - rho_im * dphi1
    return lhs - rhs


# ---------------------------------------------------------------------------
# konzert: i f' + i gamma/x on the unit interval


def build_konzert(
    gamma: float,
    ell: AnalyticFunction | None,
    *,
    n: int = 512,
    offset: float = 1e-6,
) -> ExtensionProblem:
    """Interval first-order scenario; deviation is an explicit L^2 function."""
    lo, hi = KONZERT_GAMMA_RANGE
    if not (lo < gamma < hi):
        raise CatalogError(f"gamma must lie in (0, 1/2), got {gamma}")
    if not offset > 0.0:
        raise CatalogError("the inverse-first-power potential needs an offset grid")
    grid = make_grid("interval", n, offset=offset)
    weight = GridFunction.from_analytic(grid, AnalyticFunction((Term(gamma, -1.0),)))
    spec = forms.multiplication(weight, strict_lower_bound=gamma)
    v = GridFunction.from_analytic(grid, AnalyticFunction((Term(1.0, gamma + 1.0),)))
    ell_fn = ell if ell is not None else AnalyticFunction(())
    ellg = GridFunction.from_analytic(grid, ell_fn)
    xw = AnalyticFunction((Term(1.0, 1.0),))
    weighted = float((ell_fn.conj() * xw * ell_fn).integral(0.0, 1.0).real)
    margin = 0.5 - weighted / (4.0 * gamma)
    return ExtensionProblem(
        scenario="konzert",
        spec=spec,
        grid=grid,
        v=v,
        lv=ellg,
        gamma=float(gamma),
        maximally_dissipative=True,  # one added dimension against defect one
        reference_margin=margin,
        reference_dissipative=margin >= -1e-12,
    )


# ---------------------------------------------------------------------------
# halfline Schroedinger with bounded imaginary part


def _to_grid(gf: GridFunction, grid: Grid) -> GridFunction:
    if gf.grid.n == grid.n and gf.grid.length == grid.length and gf.grid.offset == grid.offset:
        return gf
    if gf.analytic is None:
        raise CatalogError("perturbation data on a foreign grid needs an analytic form")
    return GridFunction.from_analytic(grid, gf.analytic)


def _resample_perturbation(pert, grid: Grid):
    if isinstance(pert, RankOnePerturbation):
        return RankOnePerturbation(pert.alpha, _to_grid(pert.phi, grid), pert.lam)
    return MultiplicationPerturbation(_to_grid(pert.v, grid), _to_grid(pert.k, grid))


def _schrodinger_vector(h: complex) -> AnalyticFunction:
    mu_p = -(1.0 + 1.0j) / math.sqrt(2.0)
    mu_m = -(1.0 - 1.0j) / math.sqrt(2.0)
    det = mu_m - mu_p
    if is_inf(h):
        val0, der0 = 0.0, 1.0
    else:
        val0, der0 = 1.0, h
    a = (val0 * mu_m - der0) / det
    b = (der0 - val0 * mu_p) / det
    return AnalyticFunction((Term(a, 0.0, mu_p), Term(b, 0.0, mu_m)))


def build_halfline_schrodinger(
    h: complex,
    perturbation: RankOnePerturbation | MultiplicationPerturbation,
    *,
    n: int = 512,
    r: float = DEFAULT_HALFLINE_R,
) -> ExtensionProblem:
    """Bounded-imaginary-part scenario ``-f'' + i V`` with boundary parameter h.

    ``Im h >= 0`` is required (with ``h = inf`` the selfadjoint boundary
    condition, whose imaginary part counts as 0); for negative imaginary
    part no bounded non-negative imaginary part can restore dissipativity,
    so such inputs are rejected outright.
    """
    if not is_inf(h) and h.imag < 0.0:
        raise CatalogError("Im h < 0 is not a dissipative boundary condition")
    grid = make_grid("halfline", n, length=r)
    eta = GridFunction.from_analytic(grid, _schrodinger_vector(h))
    if not decay_certificate(eta):
        raise CatalogError("boundary vector has not decayed by the truncation radius")
    im_h = 0.0 if is_inf(h) else h.imag
    perturbation = _resample_perturbation(perturbation, grid)
    if isinstance(perturbation, RankOnePerturbation):
        if perturbation.alpha <= 0:
            raise CatalogError("rank-one strength alpha must be positive")
        spec = forms.rank_one(perturbation.alpha, perturbation.phi)
        lam = perturbation.lam
        ptr = perturbation.phi.traces
        lv = GridFunction(
            grid,
            lam * perturbation.phi.values,
            None
            if ptr is None
            else type(ptr)(lam * ptr.value0, lam * ptr.deriv0, lam * ptr.value_b, lam * ptr.deriv_b),
            None if perturbation.phi.analytic is None else lam * perturbation.phi.analytic,
        )
        margin = im_h - abs(perturbation.lam) ** 2 / (4.0 * perturbation.alpha)
    else:
        vg = perturbation.v
        if float(np.min(vg.values.real)) < -1e-12:
            raise CatalogError("multiplication imaginary part must be non-negative")
        spec = forms.multiplication(vg)
        lv = perturbation.k
        margin = None  # support violations surface when the criterion runs
        try:
            margin = im_h - 0.25 * forms.mult_inverse_norm_sq(vg, perturbation.k)
        except forms.FormsError:
            margin = None
    return ExtensionProblem(
        scenario="halfline_schrodinger",
        spec=spec,
        grid=grid,
        v=eta,
        h=h,
        lv=lv,
        perturbation=perturbation,
        reference_margin=margin,
        reference_dissipative=None if margin is None else margin >= -1e-12,
    )


support_violation = forms.support_violation
mult_inverse_norm_sq = forms.mult_inverse_norm_sq


# ---------------------------------------------------------------------------
# splitting a discrete dual pair into symmetric and non-negative parts


def split_dual_pair(m_op, m_tilde):
    """Split a discrete dual pair into its symmetric and non-negative parts.

    Both operands are :class:`~dissipext.oracle.DiscreteOperator` instances
    sharing basis and Gram matrix; the adjoint relation ``<f, Ãg> = <Af, g>``
    must hold on the basis.  Returns ``(S, V)`` DiscreteOperators with ``S``
    Hermitian and ``V`` positive semidefinite in the Gram metric.
    """
    from . import eigenh
    from .oracle import DiscreteOperator

    if m_op.matrix.shape != m_tilde.matrix.shape:
        raise CatalogError("dual pair matrices must share their basis")
    if np.max(np.abs(m_op.gram - m_tilde.gram)) > 1e-12 * (1 + np.max(np.abs(m_op.gram))):
        raise CatalogError("dual pair matrices must share their Gram matrix")
    scale = max(1.0, float(np.max(np.abs(m_op.matrix))))
    if np.max(np.abs(m_tilde.matrix - m_op.matrix.conj().T)) > 1e-8 * scale:
        raise CatalogError("operands fail the dual-pair adjoint test")
    s = 0.5 * (m_op.matrix + m_tilde.matrix)
    v = (m_op.matrix - m_tilde.matrix) / 2.0j
    v = 0.5 * (v + v.conj().T)
    w, _ = eigenh.pencil_eigh(v, m_op.gram)
    if float(np.min(w)) < -1e-8 * max(1.0, float(np.max(np.abs(w)))):
        raise CatalogError("imaginary part is indefinite beyond tolerance")
    return (
        DiscreteOperator(m_op.basis, s, m_op.gram),
        DiscreteOperator(m_op.basis, v, m_op.gram),
    )
