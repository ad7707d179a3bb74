import numpy as np
import pytest

from qotto.algebra import SQRT2, FieldPoint, build_basis, commutator, energy_eigensystem, hamiltonian, inner, mixing_amplitudes
from qotto.errors import DegenerateField


def test_basis_orthonormal_and_hermitian():
    ops = list(build_basis())
    gram = np.array([[inner(a, b) for b in ops] for a in ops])
    assert np.allclose(gram, np.eye(5), atol=1e-15)
    for op in ops:
        assert np.allclose(op, op.conj().T)
        assert abs(np.trace(op)) < 1e-15


def test_basis_matrices_literal():
    # ordering (uu, ud, du, dd)
    b = build_basis()
    s = 1 / SQRT2
    assert np.allclose(np.diag(b.B1), [s, 0, 0, -s])
    assert np.allclose(np.diag(b.B4), [0, s, -s, 0])
    assert np.allclose(np.diag(b.B5), [0.5, -0.5, -0.5, 0.5])
    assert b.B2[0, 3] == b.B2[3, 0] == s
    assert b.B3[0, 3] == -1j * s and b.B3[3, 0] == 1j * s


def test_su2_closure():
    b = build_basis()
    for x, y, z in ((b.B1, b.B2, b.B3), (b.B2, b.B3, b.B1), (b.B3, b.B1, b.B2)):
        assert np.allclose(commutator(x, y), 1j * SQRT2 * z, atol=1e-15)
    for k in (1, 2, 3):
        assert np.allclose(commutator(b[k], b.B4), 0)
        assert np.allclose(commutator(b[k], b.B5), 0)


def test_basis_is_read_only():
    with pytest.raises(ValueError):
        build_basis().B1[0, 0] = 1.0


@pytest.mark.parametrize("w,j", [(5.382, 2.0), (12.717, 2.0), (3.0, -1.5), (0.5, 0.0), (0.0, 1.0)])
def test_energy_eigensystem(w, j):
    fp = FieldPoint(w, j)
    vals, c = energy_eigensystem(fp)
    assert np.allclose(c @ c, np.eye(4), atol=1e-15)
    assert np.allclose(c, c.T)
    assert np.allclose(c @ hamiltonian(fp) @ c, np.diag(vals), atol=1e-13)
    om = np.hypot(w, j)
    assert np.allclose(vals, [-om / SQRT2, 0, 0, om / SQRT2])
    assert fp.gap == pytest.approx(om / SQRT2)


def test_mixing_amplitudes():
    mu, chi = mixing_amplitudes(FieldPoint(3.0, 4.0))
    assert mu == pytest.approx(np.sqrt(0.5 * (5 - 3) / 5))
    assert chi == pytest.approx(np.sqrt(0.5 * (5 + 3) / 5))
    mu_neg, _ = mixing_amplitudes(FieldPoint(3.0, -4.0))
    assert mu_neg == pytest.approx(-mu)


def test_degenerate_field():
    with pytest.raises(DegenerateField):
        energy_eigensystem(FieldPoint(0.0, 0.0))
    with pytest.raises(DegenerateField):
        FieldPoint(0.0, 0.0).direction()
