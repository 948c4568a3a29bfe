import numpy as np
import pytest

from dissipext import eigenh


def _random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)


def _random_spd(rng, n):
    b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return b @ b.conj().T + n * np.eye(n)


def test_cholesky_against_numpy():
    rng = np.random.default_rng(0)
    g = _random_spd(rng, 17)
    l = eigenh.cholesky(g)
    assert np.max(np.abs(l @ l.conj().T - g)) < 1e-11


def test_cholesky_rejects_indefinite():
    with pytest.raises(eigenh.NotPositiveDefiniteError):
        eigenh.cholesky(np.diag([1.0, -1.0]).astype(complex))


def test_triangular_solves():
    rng = np.random.default_rng(1)
    g = _random_spd(rng, 9)
    l = eigenh.cholesky(g)
    b = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    x = eigenh.solve_lower(l, b)
    assert np.max(np.abs(l @ x - b)) < 1e-12 * np.max(np.abs(b))
    y = eigenh.solve_upper(l.conj().T, b)
    assert np.max(np.abs(l.conj().T @ y - b)) < 1e-12 * np.max(np.abs(b))


@pytest.mark.parametrize("n", [1, 2, 3, 8, 33, 90])
def test_eigh_matches_numpy(n):
    rng = np.random.default_rng(n)
    h = _random_hermitian(rng, n)
    w, v = eigenh.eigh(h)
    w_ref = np.linalg.eigvalsh(h)
    scale = max(1.0, float(np.max(np.abs(w_ref))))
    assert np.max(np.abs(w - w_ref)) < 1e-12 * scale
    assert np.max(np.abs(h @ v - v * w[None, :])) < 1e-11 * scale
    assert np.max(np.abs(v.conj().T @ v - np.eye(n))) < 1e-12 * n


def test_eigh_rank_deficient():
    # low-rank matrices exercise the absolute deflation floor
    rng = np.random.default_rng(5)
    u = rng.standard_normal((40, 2)) + 1j * rng.standard_normal((40, 2))
    h = u @ u.conj().T
    w, v = eigenh.eigh(h)
    assert np.max(np.abs(w - np.linalg.eigvalsh(h))) < 1e-12 * np.max(w)


def test_pencil_trivial_examples():
    g = np.eye(2, dtype=complex)
    lam, _ = eigenh.pencil_extreme(g.copy(), g, "min")
    assert lam == pytest.approx(1.0)
    h = np.diag([-1.0, 2.0]).astype(complex)
    lam, x = eigenh.pencil_extreme(h, g, "min")
    assert lam == pytest.approx(-1.0)
    assert abs(abs(x[0]) - 1.0) < 1e-12


def test_pencil_random_50_self_consistency():
    # agree with the eigenvalues of the symmetric-reduced matrix
    rng = np.random.default_rng(50)
    h = _random_hermitian(rng, 50)
    g = _random_spd(rng, 50)
    lam, x = eigenh.pencil_extreme(h, g, "min")
    l = np.linalg.cholesky(g)
    c = np.linalg.solve(l, np.linalg.solve(l, h).conj().T).conj().T
    w_ref = np.linalg.eigvalsh(0.5 * (c + c.conj().T))
    assert abs(lam - w_ref[0]) < 1e-9 * max(1.0, abs(w_ref[0]))
    resid = np.linalg.norm(h @ x - lam * (g @ x))
    assert resid <= 1e-9 * np.linalg.norm(h, 2) * np.linalg.norm(x)


def test_pencil_unitary_invariance():
    rng = np.random.default_rng(8)
    n = 24
    h = _random_hermitian(rng, n)
    g = _random_spd(rng, n)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    lam1, _ = eigenh.pencil_extreme(h, g, "min")
    lam2, _ = eigenh.pencil_extreme(q.conj().T @ h @ q, q.conj().T @ g @ q, "min")
    assert abs(lam1 - lam2) < 1e-10 * max(1.0, abs(lam1))


def test_pencil_rayleigh_quotient_matches():
    rng = np.random.default_rng(13)
    h = _random_hermitian(rng, 31)
    g = _random_spd(rng, 31)
    lam, x = eigenh.pencil_extreme(h, g, "min")
    rayleigh = float(np.vdot(x, h @ x).real / np.vdot(x, g @ x).real)
    assert abs(rayleigh - lam) < 1e-10 * max(1.0, abs(lam))


def test_pencil_max_side():
    rng = np.random.default_rng(21)
    h = _random_hermitian(rng, 19)
    g = _random_spd(rng, 19)
    lam, _ = eigenh.pencil_extreme(h, g, "max")
    ref = np.max(np.linalg.eigvals(np.linalg.solve(g, h)).real)
    assert abs(lam - ref) < 1e-9 * max(1.0, abs(ref))


def test_pencil_eigh_full():
    rng = np.random.default_rng(34)
    h = _random_hermitian(rng, 12)
    g = _random_spd(rng, 12)
    w, x = eigenh.pencil_eigh(h, g)
    ref = np.sort(np.linalg.eigvals(np.linalg.solve(g, h)).real)
    assert np.max(np.abs(w - ref)) < 1e-9
    resid = np.max(np.abs(h @ x - (g @ x) * w[None, :]))
    assert resid < 1e-9
