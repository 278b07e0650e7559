import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpslab import model
from cpslab.errors import MoveForbidden, TruncationExceeded
from cpslab.model import Configuration, FugacityProfile, Kernel, OccupancyRange, apply_move, move_rate


def test_apply_move_transfers_one_particle():
    assert apply_move(Configuration.of((1, 0)), 0, 1).occupancies == (0, 1)
    assert apply_move(Configuration.of((1, 1, 0)), 1, 2).occupancies == (1, 0, 1)


def test_apply_move_into_full_site_is_forbidden():
    with pytest.raises(MoveForbidden):
        apply_move(Configuration.of((2, 3), 3), 0, 1)


def test_apply_move_from_empty_site_is_forbidden():
    with pytest.raises(MoveForbidden):
        apply_move(Configuration.of((0, 0)), 0, 1)


def test_move_rate_examples():
    e = model.exclusion()
    p = Kernel.explicit(2, [(0, 1, 1.0)], require_irreducible=False)
    assert move_rate(e, p, Configuration.of((1, 0)), 0, 1) == 1.0
    assert move_rate(e, p, Configuration.of((1, 1)), 0, 1) == 0.0
    lzr = model.linear_zero_range(10)
    half = Kernel.explicit(2, [(0, 1, 0.5)], require_irreducible=False)
    assert move_rate(lzr, half, Configuration.of((3, 5), OccupancyRange.countable(10)), 0, 1) == pytest.approx(1.5, rel=1e-15)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_positive_rate_iff_move_allowed(N):
    b = model.partial_exclusion(N)
    p = Kernel.cycle(3, 1.0, 0.5)
    for occ in itertools.product(range(N + 1), repeat=3):
        eta = Configuration.of(occ, N)
        for x, y in itertools.permutations(range(3), 2):
            rate = move_rate(b, p, eta, x, y)
            try:
                moved = apply_move(eta, x, y)
                allowed = True
                assert moved.total == eta.total
            except MoveForbidden:
                allowed = False
            assert (rate > 0) == (allowed and p(x, y) > 0)


def test_rate_boundary_zeros():
    b = model.partial_exclusion(3)
    assert b(0, 1) == 0.0 and b(2, 3) == 0.0 and b(2, 1) > 0


def test_countable_rate_beyond_truncation_raises():
    b = model.linear_zero_range(20)
    with pytest.raises(TruncationExceeded):
        b(25, 0)


def test_misanthrope_rejects_zero_interior_rates():
    with pytest.raises(ValueError):
        model.misanthrope([0, 1, 0], [1, 1, 0])


@given(st.integers(2, 6), st.floats(0.1, 3), st.floats(0.1, 3))
def test_kernel_cp_matches_recomputation(M, r, l):
    for p in (Kernel.cycle(M, r, l), Kernel.line(M, r, l)):
        R = p.rates
        assert p.c_p == pytest.approx(float(np.max(R.sum(1) + R.sum(0))), rel=1e-14)


def test_kernel_requires_irreducibility():
    with pytest.raises(ValueError):
        Kernel.explicit(3, [(0, 1, 1.0), (1, 2, 1.0)])


def test_kernel_transpose():
    p = Kernel.asymmetric_cycle(4)
    assert p.transpose()(1, 0) == 1.0 and p.transpose()(0, 1) == 0.0


def test_profiles():
    assert np.allclose(FugacityProfile.geometric(2.0).values(4), [1, 2, 4, 8])
    assert np.allclose(FugacityProfile.polynomial(1.0, shift=0).values(3), [0, 1, 2])
    assert np.allclose(FugacityProfile.constant(3.0).reciprocal(6.0).values(3), [2, 2, 2])


def test_rate_to_dict_roundtrip_is_json():
    import json

    for b in (model.exclusion(), model.partial_exclusion(2, 1.5), model.zero_range([0, 1, 2], 30)):
        json.dumps(b.to_dict())
