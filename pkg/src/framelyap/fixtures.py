"""Named generators and reference fixtures used by the CLI and the test suite."""

from __future__ import annotations

import math

import numpy as np

from .frame_core import GenFrame, PCFrame
from .measure_space import MeasureSpace, canonicalize_to_interval


def moving_average_generator(d: int):
    """phi_t = indicator of [0,t] in L2[0,1], truncated to d step-function basis
    elements e_j = chi_bin_j / sqrt(dt). Entry j is the bin overlap with [0,t]."""
    dt = 1.0 / d
    j = np.arange(d)

    def gen(t: float) -> np.ndarray:
        return np.minimum(dt, np.maximum(0.0, t - j * dt)) / math.sqrt(dt)

    return gen


def moving_average_variation(a: float, b: float) -> float:
    # ||phi_t - phi_s|| <= sqrt(|t - s|): the difference is a truncation of chi_[s,t]
    return math.sqrt(b - a)


def moving_average_gen_frame(d: int = 512, n_cells: int = 1) -> GenFrame:
    return GenFrame.on_interval(
        moving_average_generator(d), d, total=1.0, n_cells=n_cells,
        variation_bound=moving_average_variation,
    )


def moving_average_pc_frame(d: int = 512, n_cells: int = 512) -> PCFrame:
    """Fixture F2: the moving-average generator sampled at cell midpoints on a
    uniform partition (the quantized, piecewise-constant form)."""
    gen = moving_average_generator(d)
    space = MeasureSpace.uniform(n_cells)
    layout = canonicalize_to_interval(space)
    values = {cid: gen((a + b) / 2) for cid, a, b in layout.entries}
    return PCFrame(space, values, d)


def fourier_generator(d: int):
    """Truncated character family: phi_t = (e^{2 pi i k t})_k / sqrt(d), k = 0..d-1."""
    k = np.arange(d)

    def gen(t: float) -> np.ndarray:
        return np.exp(2j * np.pi * k * t) / math.sqrt(d)

    return gen


def fourier_gen_frame(d: int = 16, n_cells: int = 1) -> GenFrame:
    return GenFrame.on_interval(fourier_generator(d), d, total=1.0, n_cells=n_cells)


def constant_gen_frame(d: int = 4, total: float = 1.0) -> GenFrame:
    v = np.zeros(d)
    v[0] = 1.0
    return GenFrame.on_interval(lambda t: v, d, total=total)


def parseval_two_cell_frame() -> PCFrame:
    """Fixture F1: two unit-measure cells with psi_1 = e_1, psi_2 = e_2."""
    space = MeasureSpace.from_measures([1.0, 1.0])
    values = {"c0": np.array([1.0, 0.0]), "c1": np.array([0.0, 1.0])}
    return PCFrame(space, values, 2)


def random_pc_frame(rng, d: int, n_cells: int, complex_entries: bool = False) -> PCFrame:
    measures = rng.uniform(0.1, 1.0, size=n_cells)
    space = MeasureSpace.from_measures(measures)
    values = {}
    for c in space.cells:
        v = rng.standard_normal(d)
        if complex_entries:
            v = v + 1j * rng.standard_normal(d)
        values[c.id] = v / math.sqrt(d)
    return PCFrame(space, values, d)


def named_gen_frame(name: str, d: int, n_cells: int = 1) -> GenFrame:
    if name == "moving-average":
        return moving_average_gen_frame(d, n_cells)
    if name == "fourier":
        return fourier_gen_frame(d, n_cells)
    if name == "constant":
        return constant_gen_frame(d)
    raise ValueError(f"unknown fixture {name!r}")
