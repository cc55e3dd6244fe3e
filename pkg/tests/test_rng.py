import numpy as np
import pytest
from scipy import stats

from optstop.mc import rng

# Philox4x32-10 known-answer vectors from the Random123 distribution
KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    ((0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344), (0xA4093822, 0x299F31D0),
     (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1)),
]


@pytest.mark.parametrize("counter,key,want", KAT)
def test_known_answers(counter, key, want):
    assert rng.philox_block(counter, key) == want


def test_uniforms_are_uniform():
    u = rng.uniforms(7, 0, 200_000)
    assert u.min() > 0 and u.max() < 1
    assert stats.kstest(u, "uniform").pvalue > 1e-3


def test_normals_are_standard():
    z = rng.normals(11, 3, 400_000)
    assert abs(z.mean()) < 5 / np.sqrt(z.size)
    assert abs(z.var() - 1) < 5 * np.sqrt(2 / z.size)
    assert stats.kstest(z, "norm").pvalue > 1e-3
    # the ziggurat tail layer
    assert np.mean(np.abs(z) > 3.442619855899) == pytest.approx(2 * stats.norm.sf(3.442619855899), rel=0.1)


def test_streams_and_paths_are_independent():
    a = rng.normals(5, 0, 50_000)
    b = rng.normals(5, 1, 50_000)
    c = rng.normals(5, 0, 50_000, stream=rng.STREAM_JUMP)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.02
    assert abs(np.corrcoef(a, c)[0, 1]) < 0.02
    assert not np.array_equal(rng.normals(6, 0, 10), a[:10])


def test_draws_are_pure_functions_of_their_coordinates():
    np.testing.assert_array_equal(rng.normals(5, 2, 100)[:10], rng.normals(5, 2, 10))
    np.testing.assert_array_equal(rng.uniforms(2**63 + 5, 9, 16), rng.uniforms(2**63 + 5, 9, 16))


def test_seed_range():
    with pytest.raises(ValueError):
        rng.split_seed(-1)
    with pytest.raises(ValueError):
        rng.split_seed(2**64)
