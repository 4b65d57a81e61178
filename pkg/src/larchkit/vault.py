"""Client-side secret storage.

A single JSON file holding the account's keys and per-site material, with
binary fields hex-encoded. Writes go through a temp file and atomic rename
with fsync; a sidecar .lock file is flock()ed around every load-modify-save
so concurrent invocations (or threads sharing one vault path) serialize.
The in-memory dict is the working copy; mutate inside `with vault.update()`
to get locking and persistence in one place.
"""

import contextlib
import fcntl
import json
import os

VERSION = 1


class VaultError(Exception):
    pass


def _empty():
    return {
        "version": VERSION,
        "log_url": None,
        "account_id": None,
        "token": None,
        "reps": None,
        "identity_sk": None,
        "archive_k": None,
        "archive_r": None,
        "pw": {"x": None, "eval_public": None, "pad_seed": None, "sites": {}},
        "fido2": {"creds": {}, "batches": {}},
        "totp": {"sites": {}},
    }


class Vault:
    def __init__(self, path):
        self.path = path
        self.lock_path = path + ".lock"
        self.data = _empty()
        if os.path.exists(path):
            self.reload()

    def reload(self):
        with open(self.path) as f:
            data = json.load(f)
        if data.get("version") != VERSION:
            raise VaultError("unsupported vault version %r" % data.get("version"))
        self.data = data

    def save(self):
        directory = os.path.dirname(os.path.abspath(self.path))
        os.makedirs(directory, exist_ok=True)
        tmp = self.path + ".tmp"
        with open(tmp, "w") as f:
            json.dump(self.data, f, indent=1, sort_keys=True)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, self.path)

    @contextlib.contextmanager
    def update(self):
        """Exclusive load-modify-save: reload under flock, yield, persist."""
        os.makedirs(os.path.dirname(os.path.abspath(self.lock_path)), exist_ok=True)
        with open(self.lock_path, "w") as lockf:
            fcntl.flock(lockf, fcntl.LOCK_EX)
            try:
                if os.path.exists(self.path):
                    self.reload()
                yield self.data
                self.save()
            finally:
                fcntl.flock(lockf, fcntl.LOCK_UN)

    def enrolled(self):
        return self.data.get("account_id") is not None

    def require_enrolled(self):
        if not self.enrolled():
            raise VaultError("not enrolled; run enroll first")
