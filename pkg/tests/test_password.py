import pytest

from larchkit import password
from larchkit.group import G, Q, rand_scalar


def _account():
    """Log evaluation key k/K, client ElGamal pair x/X, shared pad seed."""
    k = rand_scalar(nonzero=True)
    x = rand_scalar(nonzero=True)
    return k, G * k, x, G * x, b"\x07" * 32


def _register(k, site_id, legacy=None):
    point = password.register_point(site_id)
    gamma = password.register_eval(k, point)
    if legacy is None:
        k_id = password.fresh_kid()
    else:
        k_id = password.legacy_kid(password.legacy_element(legacy), gamma)
    return point, gamma, k_id


def _auth(k, K, x, X, pad_seed, slots, kids, index, version=1, context=b"t"):
    ct, pf1, pf2, r = password.make_auth(x, X, slots, pad_seed, version, index, context)
    beta = password.log_auth_eval(k, X, slots, pad_seed, version, ct, pf1, pf2, context)
    return password.finish_auth(kids[index], beta, K, x, r), ct


def test_auth_reproduces_registered_element():
    k, K, x, X, seed = _account()
    sites = ["github.com", "bank.example", "mail.example"]
    regs = [_register(k, s) for s in sites]
    slots = [p for p, _, _ in regs]
    kids = [kid for _, _, kid in regs]
    for i, (point, gamma, k_id) in enumerate(regs):
        want = password.registered_pw(k_id, gamma)
        got, _ = _auth(k, K, x, X, seed, slots, kids, i)
        assert got == want


def test_legacy_element_reproduced_exactly():
    k, K, x, X, seed = _account()
    point, gamma, k_id = _register(k, "old.example", legacy="hunter2")
    got, _ = _auth(k, K, x, X, seed, [point], [k_id], 0)
    assert got == password.legacy_element("hunter2")


def test_legacy_wrapper_roundtrip_and_tamper():
    el = password.legacy_element("correct horse battery staple")
    blob = password.wrap_legacy(el, "correct horse battery staple")
    assert password.unwrap_legacy(el, blob) == "correct horse battery staple"
    bad = bytearray(blob)
    bad[-1] ^= 1
    with pytest.raises(password.PwError):
        password.unwrap_legacy(el, bytes(bad))
    bad = bytearray(blob)
    bad[20] ^= 1
    with pytest.raises(password.PwError):
        password.unwrap_legacy(el, bytes(bad))
    with pytest.raises(password.PwError):
        password.unwrap_legacy(el, blob[:password._WRAP_MAC])
    with pytest.raises(password.PwError):
        password.unwrap_legacy(password.legacy_element("other"), blob)


def test_record_decrypts_to_site_point():
    k, K, x, X, seed = _account()
    regs = [_register(k, s) for s in ("a.example", "b.example")]
    slots = [p for p, _, _ in regs]
    kids = [kid for _, _, kid in regs]
    _, ct = _auth(k, K, x, X, seed, slots, kids, 1)
    assert password.decrypt_record(x, ct) == slots[1]
    with pytest.raises(password.PwError):
        password.decrypt_record(x, ct[:-1])


def test_log_rejects_unregistered_site():
    k, K, x, X, seed = _account()
    regs = [_register(k, s) for s in ("a.example", "b.example")]
    slots = [p for p, _, _ in regs]
    rogue = password.register_point("evil.example")
    ct, pf1, pf2, r = password.make_auth(
        x, X, slots + [rogue], seed, 1, 2, b"t"
    )
    with pytest.raises(password.PwError):
        password.log_auth_eval(k, X, slots, seed, 1, ct, pf1, pf2, b"t")


def test_log_rejects_mismatched_version_or_context():
    k, K, x, X, seed = _account()
    regs = [_register(k, s) for s in ("a.example", "b.example")]
    slots = [p for p, _, _ in regs]
    ct, pf1, pf2, r = password.make_auth(x, X, slots, seed, 1, 0, b"ctx")
    with pytest.raises(password.PwError):
        password.log_auth_eval(k, X, slots, seed, 2, ct, pf1, pf2, b"ctx")
    with pytest.raises(password.PwError):
        password.log_auth_eval(k, X, slots, seed, 1, ct, pf1, pf2, b"other")


def test_log_rejects_ciphertext_under_foreign_key():
    """pf2 pins the ciphertext to the account's own ElGamal key."""
    k, K, x, X, seed = _account()
    regs = [_register(k, s) for s in ("a.example", "b.example")]
    slots = [p for p, _, _ in regs]
    x2 = rand_scalar(nonzero=True)
    ct, pf1, pf2, r = password.make_auth(x2, G * x2, slots, seed, 1, 0, b"t")
    with pytest.raises(password.PwError):
        password.log_auth_eval(k, X, slots, seed, 1, ct, pf1, pf2, b"t")


def test_padding_is_deterministic_and_version_keyed():
    points = [password.register_point(s) for s in ("a", "b", "c")]
    seed = b"\x01" * 32
    p1 = password.padded_slots(points, seed, 1)
    p2 = password.padded_slots(points, seed, 1)
    assert p1 == p2 and len(p1) == 4
    p3 = password.padded_slots(points, seed, 2)
    assert p1[:3] == p3[:3] and p1[3] != p3[3]
    p4 = password.padded_slots(points, b"\x02" * 32, 1)
    assert p1[3] != p4[3]


def test_pad_length_powers():
    assert [password.pad_length(n) for n in (0, 1, 2, 3, 4, 5, 9)] == [
        2, 2, 2, 4, 4, 8, 16,
    ]


def test_auth_works_at_padded_sizes():
    k, K, x, X, seed = _account()
    regs = [_register(k, "site%d.example" % i) for i in range(5)]
    slots = [p for p, _, _ in regs]
    kids = [kid for _, _, kid in regs]
    got, _ = _auth(k, K, x, X, seed, slots, kids, 4)
    assert got == password.registered_pw(kids[4], regs[4][1])


def test_render_password_stable_and_bounded():
    el = password.legacy_element("x")
    s1 = password.render_password(el)
    assert s1 == password.render_password(el) and len(s1) == 20
    assert all(ch in password._ALPHABET for ch in s1)
    assert len(password.render_password(el, length=64)) == 64
    assert password.render_password(el) != password.render_password(
        password.legacy_element("y")
    )
    with pytest.raises(password.PwError):
        password.render_password(el, length=7)
    with pytest.raises(password.PwError):
        password.render_password(el, length=65)


def test_register_eval_refuses_identity():
    with pytest.raises(password.PwError):
        password.register_eval(3, G * 0)
