import math

import numpy as np
import pytest

from dissipext import catalog, criteria, oracle
from dissipext.analytic import AnalyticFunction, Term, constant, exponential, indicator
from dissipext.grid import GridFunction, make_grid
from dissipext.oracle import _spline_space


def _konzert(c):
    return catalog.build_konzert(0.25, constant(c) if c else None)


# ---------------------------------------------------------------------------
# assembly structure


def test_konzert_hermitian_block_is_multiplication_matrix():
    # the first-order action contributes a boundary-free symmetric part on
    # vanishing-trace elements, so the imaginary part reduces to the
    # weighted multiplication matrix
    prob = _konzert(1.0)
    op = oracle.assemble_discrete(prob, 64)
    h = oracle.hermitian_part(op)
    nb = op.v_index
    sp = _spline_space(prob.grid.offset, 1.0, 64, 2)
    xs, ws = sp.all_quad_points()
    val, _, _ = sp.sample_basis()
    mult = (val * (ws * 0.25 / xs)) @ val.T
    assert np.max(np.abs(h[:nb, :nb] - mult)) < 1e-12


def test_shirley_hermitian_block_is_stiffness(shirley_instance):
    op = oracle.assemble_discrete(shirley_instance, 64)
    h = oracle.hermitian_part(op)
    nb = op.v_index
    sp = _spline_space(shirley_instance.grid.offset, 1.0, 64, 2)
    xs, ws = sp.all_quad_points()
    _, d1, _ = sp.sample_basis()
    stiff = (d1 * ws) @ d1.T
    assert np.max(np.abs(h[:nb, :nb] - stiff)) < 1e-10 * np.max(np.abs(stiff))


def test_hermitian_part_exact():
    op = oracle.assemble_discrete(_konzert(1.2), 64)
    h = oracle.hermitian_part(op)
    assert np.max(np.abs(h - h.conj().T)) == 0.0


def test_gram_positive_definite():
    op = oracle.assemble_discrete(_konzert(0.0), 64)
    w = np.linalg.eigvalsh(op.gram)
    assert float(w.min()) > 0.0


@pytest.mark.parametrize("builder,kwargs", [
    ("konzert", {}),
    ("shirley", {}),
    ("potsdam", {}),
    ("schrodinger_rank1", {}),
    ("schrodinger_mult", {}),
])
def test_v_column_matches_criteria_lhs(builder, kwargs, shirley_instance, rank_one_direction):
    grid = make_grid("halfline", 512)
    probs = {
        "konzert": _konzert(1.2),
        "shirley": shirley_instance,
        "potsdam": catalog.build_potsdam(
            exponential(0.5, -1.0), -1.2 + 0j, AnalyticFunction((Term(1j, 1.0, -1.0),))
        ),
        "schrodinger_rank1": catalog.build_halfline_schrodinger(
            1j, catalog.RankOnePerturbation(1.0, rank_one_direction, 2.4)
        ),
        "schrodinger_mult": catalog.build_halfline_schrodinger(
            1 + 1j,
            catalog.MultiplicationPerturbation(
                GridFunction.from_analytic(grid, indicator(0.0, 1.0)),
                GridFunction.from_analytic(grid, 2.2 * indicator(0.0, 1.0)),
            ),
        ),
    }
    prob = probs[builder]
    op = oracle.assemble_discrete(prob, 128, quad_subdiv=4)
    lhs = criteria.general_lhs(prob)
    assert abs(op.matrix[op.v_index, op.v_index].imag - lhs) < 1e-8


def test_assembly_needs_analytic_vector():
    prob = _konzert(1.0)
    import dataclasses

    sampled = dataclasses.replace(prob, v=GridFunction.from_values(prob.grid, prob.v.values))
    with pytest.raises(oracle.OracleError):
        oracle.assemble_discrete(sampled, 64)


# ---------------------------------------------------------------------------
# pencil probe


def test_pencil_min_eig_examples():
    g = np.eye(2, dtype=complex)
    lam, _ = oracle.pencil_min_eig(g.copy(), g)
    assert lam == pytest.approx(1.0)
    lam, _ = oracle.pencil_min_eig(np.diag([-1.0, 2.0]).astype(complex), g)
    assert lam == pytest.approx(-1.0)


def test_pencil_min_eig_residual_contract():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((50, 50)) + 1j * rng.standard_normal((50, 50))
    h = 0.5 * (a + a.conj().T)
    b = rng.standard_normal((50, 50)) + 1j * rng.standard_normal((50, 50))
    g = b @ b.conj().T + 50 * np.eye(50)
    lam, x = oracle.pencil_min_eig(h, g)
    ref = np.min(np.linalg.eigvals(np.linalg.solve(g, h)).real)
    assert lam == pytest.approx(ref, abs=1e-9 * max(1, abs(ref)))
    assert np.linalg.norm(h @ x - lam * (g @ x)) <= 1e-9 * np.linalg.norm(h, 2) * np.linalg.norm(x)


def test_pencil_min_eig_rejects_bad_inputs():
    with pytest.raises(oracle.OracleError):
        oracle.pencil_min_eig(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2))
    with pytest.raises(oracle.OracleError):
        oracle.pencil_min_eig(np.eye(2), np.diag([1.0, -1.0]))


# ---------------------------------------------------------------------------
# mesh studies


def test_variational_monotonicity_nested_meshes():
    # dyadically nested knot refinements can only lower the infimum
    prob = _konzert(1.2)
    mus = []
    n0 = 61  # m = 64 knot intervals; next level doubles them
    for n in (n0, 2 * (n0 + 3) - 3, 4 * (n0 + 3) - 3):
        op = oracle.assemble_discrete(prob, n)
        mu, _ = oracle.pencil_min_eig(oracle.hermitian_part(op), op.gram)
        mus.append(mu)
    assert mus[1] <= mus[0] + 1e-10
    assert mus[2] <= mus[1] + 1e-10


def test_cross_validate_konzert_nondissipative():
    # analytic margin -0.22: the discrete infimum is decisively negative
    prob = _konzert(1.2)
    verdict = criteria.decide(prob)
    report = oracle.cross_validate(prob, verdict)
    assert all(mu < -1e-3 for mu in report.infima[1:])
    assert report.agree is True
    assert not report.resolution_limited


def test_cross_validate_shirley_dissipative(shirley_instance):
    verdict = criteria.decide(shirley_instance)
    report = oracle.cross_validate(shirley_instance, verdict)
    assert all(mu >= -1e-6 for mu in report.infima)
    assert report.agree is True


def test_cross_validate_proper_selfadjoint_boundaries():
    # zero deviation with a symmetric-plus-positive action stays non-negative
    k0 = _konzert(0.0)
    rep = oracle.cross_validate(k0, criteria.decide(k0))
    assert all(mu >= -1e-6 for mu in rep.infima)
    pinf = catalog.build_potsdam(None, catalog.RHO_INF, None)
    repp = oracle.cross_validate(pinf, criteria.decide(pinf))
    assert all(mu >= -1e-6 for mu in repp.infima)
    assert repp.agree is True


def test_cross_validate_resolution_limited_flag():
    prob = _konzert(1.0)  # margin exactly 0
    verdict = criteria.decide(prob)
    report = oracle.cross_validate(prob, verdict, meshes=(64, 128))
    assert report.resolution_limited is True


def test_cross_validate_requires_increasing_meshes():
    prob = _konzert(1.0)
    with pytest.raises(oracle.OracleError):
        oracle.cross_validate(prob, criteria.decide(prob), meshes=(128, 64))


def test_report_records_asymmetry_note():
    prob = _konzert(1.2)
    report = oracle.cross_validate(prob, criteria.decide(prob), meshes=(64, 128))
    assert "certifies non-dissipativity" in report.note
    assert "evidence" in report.note


def test_semibound_oracle_bound(rank_one_direction):
    # discrete infimum of the deviated symmetric part alone respects the
    # lower bound -||L||^2 / (4 eps)
    rng = np.random.default_rng(3)
    for _ in range(5):
        h = complex(rng.uniform(-1, 1), rng.uniform(0.3, 2.0))
        lam = complex(rng.normal(), rng.normal())
        prob = catalog.build_halfline_schrodinger(
            h, catalog.RankOnePerturbation(1.0, rank_one_direction, lam)
        )
        op = oracle.assemble_discrete(prob, 128, include_bounded_v=False)
        mu, _ = oracle.pencil_min_eig(oracle.hermitian_part(op), op.gram)
        norm_v_sq = prob.v.norm_sq()
        eps = h.imag / norm_v_sq
        l_norm = math.sqrt(abs(lam) ** 2 / norm_v_sq)
        bound = criteria.semibound_estimate(eps, l_norm)
        assert mu >= bound - 1e-6
