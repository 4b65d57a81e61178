import json
import os
import re
import time

import pytest

from larchkit import cli, totp
from larchkit.logservice.httpd import serve
from larchkit.logservice.service import LogService


@pytest.fixture
def env(tmp_path):
    """A running daemon plus CLI argument prefix pointing at it."""
    service = LogService(str(tmp_path / "log"), reps=20)
    srv = serve(("127.0.0.1", 0), service)
    url = "http://127.0.0.1:%d" % srv.server_address[1]
    vault = str(tmp_path / "vault.json")
    yield ["--log-url", url, "--vault", vault], service, tmp_path
    srv.shutdown()
    srv.server_close()


def _run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_enroll_and_reenroll(env, capsys):
    base, _, tmp_path = env
    code, out, _ = _run(base + ["enroll"], capsys)
    assert code == 0 and "enrolled account " in out
    assert (tmp_path / "vault.json").exists()
    code, _, err = _run(base + ["enroll"], capsys)
    assert code == cli.EX_PROTOCOL and "already enrolled" in err


def test_vault_holds_archive_key_server_does_not(env, capsys):
    base, service, tmp_path = env
    _run(base + ["enroll"], capsys)
    vault_text = (tmp_path / "vault.json").read_text()
    archive_k = json.loads(vault_text)["archive_k"]
    assert archive_k in vault_text
    server_state = open(os.path.join(service.data_dir, "state.json")).read()
    assert archive_k not in server_state


def test_fido2_register_auth_and_verify(env, capsys):
    base, _, _ = env
    _run(base + ["enroll"], capsys)
    code, out, _ = _run(
        base + ["register", "--mech", "fido2", "--rp", "gh", "--presigs", "3"],
        capsys)
    assert code == 0
    pk_hex = out.strip()
    assert re.fullmatch(r"[0-9a-f]{66}", pk_hex)

    chal = "ab" * 32
    code, out, _ = _run(
        base + ["auth", "--mech", "fido2", "--rp", "gh", "--challenge", chal],
        capsys)
    assert code == 0
    sig_hex = re.search(r"signature ([0-9a-f]{128})", out).group(1)
    assert "public key %s" % pk_hex in out

    code, out, _ = _run(
        base + ["verify-sig", "--rp", "gh", "--challenge", chal,
                "--signature", sig_hex], capsys)
    assert code == 0 and "valid" in out
    bad = sig_hex[:-2] + ("00" if sig_hex[-2:] != "00" else "01")
    code, _, err = _run(
        base + ["verify-sig", "--rp", "gh", "--challenge", chal,
                "--signature", bad], capsys)
    assert code == cli.EX_PROTOCOL and "does not verify" in err

    # challenge omitted: one is generated and printed
    code, out, _ = _run(base + ["auth", "--mech", "fido2", "--rp", "gh"], capsys)
    assert code == 0 and "challenge " in out


def test_replenish(env, capsys):
    base, _, _ = env
    _run(base + ["enroll"], capsys)
    _run(base + ["register", "--mech", "fido2", "--rp", "gh", "--presigs", "2"],
         capsys)
    code, out, _ = _run(base + ["replenish", "--rp", "gh", "--presigs", "2"],
                        capsys)
    assert code == 0 and "uploaded batch " in out


def test_usage_errors_exit_64(env, capsys):
    base, _, _ = env
    _run(base + ["enroll"], capsys)
    # argparse-level: unknown command, missing required flag
    with pytest.raises(SystemExit) as ei:
        cli.main(base + ["frobnicate"])
    assert ei.value.code == cli.EX_USAGE
    with pytest.raises(SystemExit) as ei:
        cli.main(base + ["register", "--rp", "x"])
    assert ei.value.code == cli.EX_USAGE
    capsys.readouterr()
    # handler-level: bad hex, wrong length, missing mech-specific arg
    code, _, err = _run(
        base + ["auth", "--mech", "fido2", "--rp", "gh", "--challenge", "zz"],
        capsys)
    assert code == cli.EX_USAGE and "hex" in err
    code, _, err = _run(
        base + ["auth", "--mech", "fido2", "--rp", "gh", "--challenge", "ab"],
        capsys)
    assert code == cli.EX_USAGE and "32 bytes" in err
    code, _, err = _run(base + ["register", "--mech", "totp", "--rp", "aws"],
                        capsys)
    assert code == cli.EX_USAGE and "--totp-key" in err
    code, _, err = _run(
        base + ["register", "--mech", "totp", "--rp", "aws",
                "--totp-key", "ab" * 40], capsys)
    assert code == cli.EX_USAGE and "1..32" in err
    code, _, err = _run(
        base + ["unregister", "--mech", "fido2", "--rp", "gh"], capsys)
    assert code == cli.EX_USAGE


@pytest.mark.slow
def test_totp_register_code_unregister(env, capsys):
    base, _, _ = env
    _run(base + ["enroll"], capsys)
    key16 = bytes(range(16))
    code, _, _ = _run(
        base + ["register", "--mech", "totp", "--rp", "aws",
                "--totp-key", key16.hex()], capsys)
    assert code == 0
    now = int(time.time())
    code, out, _ = _run(
        base + ["auth", "--mech", "totp", "--rp", "aws", "--time", str(now)],
        capsys)
    assert code == 0
    key = key16.ljust(totp.KEY_BYTES, b"\x00")
    assert int(out.strip()) == totp.totp_code(key, totp.time_step(now))
    code, out, _ = _run(base + ["unregister", "--mech", "totp", "--rp", "aws"],
                        capsys)
    assert code == 0 and "unregistered" in out


def test_pw_register_auth_and_import(env, capsys):
    base, _, _ = env
    _run(base + ["enroll"], capsys)
    code, out, _ = _run(base + ["register", "--mech", "pw", "--rp", "fresh.example"],
                        capsys)
    assert code == 0
    minted = out.strip()
    code, out, _ = _run(base + ["auth", "--mech", "pw", "--rp", "fresh.example"],
                        capsys)
    assert code == 0 and out.strip() == minted

    code, out, _ = _run(
        base + ["register", "--mech", "pw", "--rp", "old.example",
                "--import-pw", "hunter2"], capsys)
    assert code == 0 and out.strip() == "hunter2"
    code, out, _ = _run(base + ["auth", "--mech", "pw", "--rp", "old.example"],
                        capsys)
    assert code == 0 and out.strip() == "hunter2"

    # minted passwords differ between sites
    code, out, _ = _run(base + ["register", "--mech", "pw", "--rp", "b.example"],
                        capsys)
    assert out.strip() != minted


def test_audit_formats_and_flags_tampering(env, capsys):
    base, service, tmp_path = env
    _run(base + ["enroll"], capsys)
    code, out, _ = _run(base + ["audit"], capsys)
    assert code == 0
    assert out.splitlines()[0].startswith("mech")
    assert len(out.splitlines()) == 1  # header only while history is empty

    _run(base + ["register", "--mech", "pw", "--rp", "a.example"], capsys)
    _run(base + ["auth", "--mech", "pw", "--rp", "a.example"], capsys)
    code, out, _ = _run(base + ["audit"], capsys)
    assert code == 0
    assert re.search(r"pw\s+0\s+\d+\s+a\.example", out)

    code, out, _ = _run(base + ["audit", "--json"], capsys)
    assert code == 0
    report = json.loads(out)
    assert [e["rp"] for e in report["pw"]] == ["a.example"]

    # flip a ciphertext byte on disk; audit must warn with its own exit code
    path = os.path.join(service.data_dir, "records.bin")
    with open(path, "r+b") as f:
        f.seek(4 + 16 + 1 + 8 + 2)
        b = f.read(1)
        f.seek(-1, 1)
        f.write(bytes([b[0] ^ 1]))
    code, out, _ = _run(base + ["audit"], capsys)
    assert code == cli.EX_AUDIT and "TAMPERED seq=0" in out
    code, out, _ = _run(base + ["audit", "--json"], capsys)
    assert code == cli.EX_AUDIT


def test_auth_to_unregistered_rp_leaves_no_record(env, capsys):
    base, _, _ = env
    _run(base + ["enroll"], capsys)
    code, _, err = _run(base + ["auth", "--mech", "pw", "--rp", "nope.example"],
                        capsys)
    assert code == cli.EX_PROTOCOL
    code, out, _ = _run(base + ["audit", "--json"], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["pw"] == [] and report["tampered"] == []


def test_unreachable_log_exit_code(tmp_path, capsys):
    args = ["--log-url", "http://127.0.0.1:1", "--vault",
            str(tmp_path / "vault.json"), "enroll"]
    code, _, err = _run(args, capsys)
    assert code == cli.EX_PROTOCOL and "unreachable" in err


def test_unenrolled_vault_fails_cleanly(env, capsys):
    base, _, _ = env
    code, _, err = _run(base + ["auth", "--mech", "pw", "--rp", "x.example"],
                        capsys)
    assert code == cli.EX_PROTOCOL and "enroll" in err
