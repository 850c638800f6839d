import numpy as np
import pytest

from framelyap.fixtures import moving_average_gen_frame, moving_average_pc_frame


@pytest.fixture(scope="session")
def ma_gen_512():
    return moving_average_gen_frame(512)


@pytest.fixture(scope="session")
def ma_pc_512():
    return moving_average_pc_frame(512, 512)


def dense_op(frame, kept):
    """Independent assembly of the partial frame operator, straight from the sum."""
    d = frame.dimension
    S = np.zeros((d, d), dtype=complex)
    for cid, k in kept.items():
        v = np.asarray(frame.vector(cid), dtype=complex)
        S += k * np.outer(v, v.conj())
    return S


def dense_norm(M):
    return float(np.max(np.abs(np.linalg.eigvalsh((M + M.conj().T) / 2))))
