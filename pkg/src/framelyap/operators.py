"""Hermitian matrix backbone: operator norms, PSD checks, Loewner order."""

from __future__ import annotations

import json

import numpy as np

from .errors import DimensionMismatch, NonHermitianInput

HERMITIAN_RTOL = 1e-12
DENSE_EIG_LIMIT = 512
POWER_ITER_TOL = 1e-12
POWER_ITER_MAX = 10_000


class HermitianOp:
    """A d x d Hermitian matrix, symmetrized on construction.

    Assembly of sums like sum mu * psi psi* drifts slightly off Hermitian
    symmetry in floating point; we symmetrize and record the violation,
    refusing inputs whose asymmetry exceeds tolerance.
    """

    __slots__ = ("matrix", "asymmetry")

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
        dev = np.linalg.norm(m - m.conj().T)
        scale = max(np.linalg.norm(m), 1.0)
        if dev > 1e-8 * scale:
            raise NonHermitianInput(f"asymmetry {dev:.3e} exceeds tolerance for scale {scale:.3e}")
        self.matrix = (m + m.conj().T) / 2.0
        self.matrix.setflags(write=False)
        self.asymmetry = float(dev)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def zero(cls, d: int) -> "HermitianOp":
        return cls(np.zeros((d, d)))

    def __add__(self, other):
        return HermitianOp(self.matrix + other.matrix)

    def __sub__(self, other):
        return HermitianOp(self.matrix - other.matrix)

    def __mul__(self, a):
        return HermitianOp(self.matrix * float(a))

    __rmul__ = __mul__

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def to_json(self) -> str:
        return json.dumps([[[v.real, v.imag] for v in row] for row in self.matrix])

    @classmethod
    def from_json(cls, text: str) -> "HermitianOp":
        data = json.loads(text)
        return cls(np.array([[complex(re, im) for re, im in row] for row in data]))

    def __repr__(self):
        return f"HermitianOp(dim={self.dim})"


def _as_matrix(h) -> np.ndarray:
    return h.matrix if isinstance(h, HermitianOp) else np.asarray(h, dtype=complex)


def operator_norm(h) -> float:
    """Spectral norm (max |eigenvalue|) of a Hermitian matrix.

    Dense eigensolve up to DENSE_EIG_LIMIT; shifted power iteration above.
    """
    m = _as_matrix(h)
    d = m.shape[0]
    if d == 0:
        return 0.0
    if d <= DENSE_EIG_LIMIT:
        w = np.linalg.eigvalsh(m)
        return float(max(abs(w[0]), abs(w[-1])))
    return _power_norm(m)


def _power_norm(m: np.ndarray) -> float:
    # power iteration on m gives the dominant |eigenvalue|; a Gershgorin
    # shift then separates the other spectral edge.
    rng = np.random.default_rng(0)
    lam = _power_iterate(m, rng)
    shift = lam + 1.0
    lam_low = _power_iterate(m - shift * np.eye(m.shape[0]), rng) - shift
    return float(max(lam, abs(lam_low)))


def _power_iterate(m: np.ndarray, rng) -> float:
    v = rng.standard_normal(m.shape[0]) + 1j * rng.standard_normal(m.shape[0])
    v /= np.linalg.norm(v)
    lam_prev = 0.0
    for _ in range(POWER_ITER_MAX):
        w = m @ v
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
        if abs(lam - lam_prev) <= POWER_ITER_TOL * lam:
            break
        lam_prev = lam
    return lam


def min_eigenvalue(h) -> float:
    m = _as_matrix(h)
    return float(np.linalg.eigvalsh(m)[0]) if m.shape[0] else 0.0


def is_psd(h, tol: float = 0.0) -> bool:
    return min_eigenvalue(h) >= -tol


def loewner_leq(h_left, h_right, tol: float = 0.0) -> bool:
    """True iff h_right - h_left is PSD up to -tol on the smallest eigenvalue."""
    l, r = _as_matrix(h_left), _as_matrix(h_right)
    if l.shape != r.shape:
        raise DimensionMismatch(f"shapes {l.shape} and {r.shape} differ")
    return min_eigenvalue(r - l) >= -tol


def spectrum_csv(h) -> str:
    w = np.linalg.eigvalsh(_as_matrix(h))
    lines = ["index,eigenvalue"]
    lines += [f"{i},{float(v)!r}" for i, v in enumerate(w)]
    return "\n".join(lines) + "\n"
