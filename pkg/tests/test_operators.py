import numpy as np
import pytest

import framelyap.operators as ops
from framelyap.errors import NonHermitianInput
from framelyap.operators import (
    HermitianOp,
    is_psd,
    loewner_leq,
    min_eigenvalue,
    operator_norm,
    spectrum_csv,
)


def test_symmetrizes_roundoff_asymmetry():
    m = np.array([[1.0, 2.0 + 1e-13], [2.0, 3.0]])
    h = HermitianOp(m)
    assert np.allclose(h.matrix, h.matrix.conj().T)


def test_rejects_genuinely_nonhermitian():
    with pytest.raises(NonHermitianInput):
        HermitianOp(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_operator_norm_matches_numpy():
    rng = np.random.default_rng(3)
    for _ in range(5):
        m = rng.standard_normal((9, 9))
        h = HermitianOp((m + m.T) / 2)
        ref = np.max(np.abs(np.linalg.eigvalsh(h.matrix)))
        assert operator_norm(h) == pytest.approx(ref, abs=1e-12)


def test_power_iteration_agrees_with_dense(monkeypatch):
    rng = np.random.default_rng(7)
    m = rng.standard_normal((40, 40))
    h = HermitianOp((m + m.T) / 2)
    dense = operator_norm(h)
    monkeypatch.setattr(ops, "DENSE_EIG_LIMIT", 8)
    powered = operator_norm(h)
    assert powered == pytest.approx(dense, rel=1e-9)


def test_norm_of_negative_definite():
    h = HermitianOp(np.diag([-3.0, -1.0, -0.5]))
    assert operator_norm(h) == pytest.approx(3.0)
    assert min_eigenvalue(h) == pytest.approx(-3.0)
    assert not is_psd(h)


def test_loewner_order():
    a = HermitianOp(np.diag([1.0, 2.0]))
    b = HermitianOp(np.diag([1.0, 3.0]))
    assert loewner_leq(a, b)
    assert not loewner_leq(b, a)


def test_arithmetic_and_zero():
    a = HermitianOp(np.diag([1.0, 2.0]))
    z = HermitianOp.zero(2)
    assert operator_norm(a - a) == 0.0
    assert operator_norm(a + z - a) == 0.0
    assert operator_norm(0.5 * a) == pytest.approx(1.0)


def test_spectrum_csv_is_sorted():
    h = HermitianOp(np.diag([2.0, -1.0, 0.5]))
    rows = spectrum_csv(h).strip().splitlines()
    vals = [float(r.split(",")[-1]) for r in rows[1:]]
    assert vals == sorted(vals)


def test_json_round_trip():
    h = HermitianOp(np.array([[1.0, 0.5], [0.5, 2.0]]))
    again = HermitianOp.from_json(h.to_json())
    assert np.allclose(again.matrix, h.matrix)
