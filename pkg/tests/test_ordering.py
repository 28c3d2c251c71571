import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmdseg import dmd
from dmdseg.dmd import DmdResult
from dmdseg.errors import ValidationError
from dmdseg.ordering import dedup_conjugates, mode_to_image, order_modes, select_mode


def fake_result(eig, modes=None):
    eig = np.asarray(eig, dtype=np.complex128)
    if modes is None:
        modes = np.eye(max(len(eig), 1), len(eig), dtype=np.complex128)
    return DmdResult(eig, modes, np.zeros_like(eig), np.ones_like(eig), 1.0, len(eig) + 1, np.ones(len(eig)))


def test_conjugate_dedup_and_sort():
    ordered = order_modes(fake_result([0.9, 0.5 + 0.5j, 0.5 - 0.5j]))
    np.testing.assert_allclose(ordered.eigenvalues, [0.9, 0.5 + 0.5j])
    assert ordered.entries[1].phase == pytest.approx(math.pi / 4)


def test_real_tie_break_by_modulus():
    ordered = order_modes(fake_result([0.2, 0.7, 1.0]))
    np.testing.assert_allclose(ordered.eigenvalues, [1.0, 0.7, 0.2])
    assert ordered.indices == [2, 1, 0]


def test_negative_real_sorts_last():
    ordered = order_modes(fake_result([-0.5, 0.1 + 0.9j, 0.1 - 0.9j, 0.95]))
    np.testing.assert_allclose(ordered.eigenvalues, [0.95, 0.1 + 0.9j, -0.5])


def test_unpaired_negative_imaginary_is_kept():
    keep = dedup_conjugates([0.3 - 0.4j, 0.5])
    assert keep == [0, 1]


def test_select_mode_bounds():
    ordered = order_modes(fake_result([1.0, 0.5]))
    np.testing.assert_array_equal(select_mode(ordered, 1), [1, 0])
    for k in (0, 3, -1):
        with pytest.raises(ValidationError, match="2 ordered modes available"):
            select_mode(ordered, k)


def test_select_first_mode_is_stationary():
    x = np.tile(np.array([1.0, 2.0, 3.0])[:, None], (1, 6))
    x = x + np.outer([0.0, 1.0, -1.0], 0.5 ** np.arange(6))
    ordered = order_modes(dmd.fit(x))
    assert ordered.entries[0].eigenvalue == pytest.approx(1.0)


def test_mode_to_image_modulus():
    np.testing.assert_array_equal(mode_to_image(np.array([-1.0, 2.0]), 2, 1), [[1, 2]])
    np.testing.assert_allclose(mode_to_image(1j * np.ones(2), 1, 2), [[1], [1]])


@given(st.floats(0, 2 * math.pi), st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_mode_image_phase_invariant(theta, seed):
    rng = np.random.default_rng(seed)
    col = rng.normal(size=12) + 1j * rng.normal(size=12)
    rotated = cmath.exp(1j * theta) * col
    np.testing.assert_allclose(mode_to_image(rotated, 4, 3), mode_to_image(col, 4, 3), rtol=1e-12)


def random_spectrum(rng, n_real, n_pairs):
    reals = list(rng.uniform(-1.2, 1.2, n_real))
    pairs = []
    for _ in range(n_pairs):
        z = complex(rng.uniform(-1.2, 1.2), rng.uniform(0.01, 1.2))
        pairs += [z, z.conjugate()]
    return np.array(reals + pairs, dtype=np.complex128)


@given(st.integers(0, 6), st.integers(0, 6), st.integers(0, 2**32 - 1))
@settings(max_examples=150, deadline=None)
def test_ordering_invariants(n_real, n_pairs, seed):
    if n_real + n_pairs == 0:
        return
    rng = np.random.default_rng(seed)
    eig = random_spectrum(rng, n_real, n_pairs)
    perm = rng.permutation(len(eig))
    eig = eig[perm]
    ordered = order_modes(fake_result(eig))
    assert len(ordered) == n_real + n_pairs
    phases = [e.phase for e in ordered.entries]
    assert phases == sorted(phases)
    assert all(e.eigenvalue.imag >= 0 for e in ordered.entries)
    np.testing.assert_allclose(phases, np.abs(np.angle(ordered.eigenvalues)))

    # canonical under permutation of the input modes
    perm2 = rng.permutation(len(eig))
    again = order_modes(fake_result(eig[perm2]))
    np.testing.assert_array_equal(again.eigenvalues, ordered.eigenvalues)
