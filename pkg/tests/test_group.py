import pytest
from hypothesis import given, settings, strategies as st

from larchkit import group
from larchkit.group import (
    G, P, Q, FixedBases, decode_point, hash_to_group, multiexp,
    mul_g, rand_scalar, scalar_from_bytes, scalar_to_bytes,
)

# NIST CAVP known-answer: 2G and the group order acting as identity.
_2G_X = 0x7CF27B188D034F7E8A52380304B51AC3C08969E277F21B35A60B48FC47669978
_2G_Y = 0x07775510DB8ED040293D9AC69F7430DBBA7DADE63CE982299E04B79D227873D1


def test_generator_on_curve():
    assert (G.y * G.y - (G.x ** 3 - 3 * G.x + group.B)) % P == 0


def test_double_known_answer():
    got = G + G
    assert (got.x, got.y) == (_2G_X, _2G_Y)
    assert G * 2 == got


def test_identity_laws():
    zero = G * 0
    assert zero.is_identity()
    assert zero + G == G
    assert G + zero == G
    assert (G * Q).is_identity()
    assert (G * 0 - G) + G == G * 0


def test_mul_matches_double_and_add():
    k = rand_scalar()
    acc = G * 0
    for bit in bin(k)[2:]:
        acc = acc + acc
        if bit == "1":
            acc = acc + G
    assert G * k == acc


def test_mul_g_matches_double_and_add():
    for _ in range(10):
        k = rand_scalar()
        acc = G * 0
        for bit in bin(k)[2:]:
            acc = acc + acc
            if bit == "1":
                acc = acc + G
        assert mul_g(k) == acc
    assert mul_g(0).is_identity()
    assert mul_g(Q - 1) == G * 0 - G


def test_encode_decode_roundtrip():
    for _ in range(20):
        p = G * rand_scalar(nonzero=True)
        enc = p.encode()
        assert len(enc) == 33 and enc[0] in (2, 3)
        assert decode_point(enc) == p


def test_decode_rejects_bad_input():
    with pytest.raises(ValueError):
        decode_point(b"\x02" + b"\x11" * 32)  # x not on curve
    with pytest.raises(ValueError):
        decode_point(b"\x05" + b"\x00" * 32)  # bad prefix
    with pytest.raises(ValueError):
        decode_point(b"\x02" + b"\x00" * 31)  # short
    with pytest.raises(ValueError):
        decode_point((P).to_bytes(33, "big"))  # x >= field prime


def test_identity_has_no_encoding():
    with pytest.raises(ValueError):
        (G * 0).encode()


def test_scalar_bytes_roundtrip():
    k = rand_scalar()
    assert scalar_from_bytes(scalar_to_bytes(k)) == k
    assert scalar_from_bytes(b"\xff" * 32) == (2 ** 256 - 1) % Q


def test_hash_to_group_deterministic_and_distinct():
    a = hash_to_group(b"alpha")
    b = hash_to_group(b"beta")
    assert a == hash_to_group(b"alpha")
    assert a != b
    assert not a.is_identity()
    # result is a real curve point
    decode_point(a.encode())


@settings(max_examples=15, deadline=None)
@given(st.integers(0, Q - 1), st.integers(0, Q - 1))
def test_scalar_mul_distributes(a, b):
    assert G * a + G * b == G * ((a + b) % Q)


def test_multiexp_matches_naive():
    points = [G * rand_scalar(nonzero=True) for _ in range(9)]
    scalars = [rand_scalar() for _ in range(9)]
    want = G * 0
    for p, s in zip(points, scalars):
        want = want + p * s
    assert multiexp(list(zip(points, scalars))) == want


def test_fixed_bases_reuse_and_checks():
    points = [G * rand_scalar(nonzero=True) for _ in range(5)]
    fb = FixedBases(points)
    scalars = [rand_scalar() for _ in range(5)]
    want = G * 0
    for p, s in zip(points, scalars):
        want = want + p * s
    assert fb.multiexp(scalars) == want
    # extra terms fold in
    extra_p = G * rand_scalar(nonzero=True)
    assert fb.multiexp(scalars, extra=[(extra_p, 3)]) == want + extra_p * 3
    with pytest.raises(ValueError):
        fb.multiexp(scalars[:-1])


def test_multiexp_handles_zero_scalars_and_identity():
    assert multiexp([(G, 0)]).is_identity()
    assert multiexp([]).is_identity()
    assert multiexp([(G * 0, 5), (G, 2)]) == G * 2
