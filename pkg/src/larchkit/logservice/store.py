"""Append-only record store with crash-safe recovery.

records.bin holds length-prefixed entries; records.idx is a sidecar of
fixed 12-byte (offset, length) rows for O(1) lookup. Every append writes
and fsyncs the data file before the index row, and append() does not
return until both are on disk: a credential is only ever released after
its record is durable. On open, a torn tail (crash mid-write) is detected
and truncated away; the index is rebuilt whenever it disagrees with the
data file.

Entry payload layout:
    account_id (16) || mech (1) || ts (8, unix big-endian) || body

Body per mechanism is ts-stripped record content (ciphertext followed by
the client's identity signature); the store does not interpret it beyond
framing.
"""

import os
import struct
import threading

_LEN = struct.Struct("<L")
_IDX = struct.Struct("<QL")

ACCOUNT_BYTES = 16

MECH_FIDO2 = 1
MECH_TOTP = 2
MECH_PW = 3

MECH_NAMES = {MECH_FIDO2: "fido2", MECH_TOTP: "totp", MECH_PW: "pw"}


class StoreError(Exception):
    pass


class Record:
    __slots__ = ("seq", "account", "mech", "ts", "body")

    def __init__(self, seq, account, mech, ts, body):
        self.seq = seq
        self.account = account
        self.mech = mech
        self.ts = ts
        self.body = body

    def payload(self):
        """The mechanism-level record: ts || body."""
        return struct.pack(">Q", self.ts) + self.body


class RecordStore:
    def __init__(self, directory):
        os.makedirs(directory, exist_ok=True)
        self.data_path = os.path.join(directory, "records.bin")
        self.idx_path = os.path.join(directory, "records.idx")
        self._lock = threading.Lock()
        self._offsets = []
        self._recover()
        self._data = open(self.data_path, "ab")
        self._idx = open(self.idx_path, "ab")

    def _recover(self):
        """Scan the data file, truncating a torn tail; rebuild a stale index."""
        entries = []
        size = 0
        if os.path.exists(self.data_path):
            with open(self.data_path, "rb") as f:
                data = f.read()
            size = len(data)
            pos = 0
            while pos + 4 <= size:
                (n,) = _LEN.unpack_from(data, pos)
                if pos + 4 + n > size or n < ACCOUNT_BYTES + 9:
                    break
                entries.append((pos, n))
                pos += 4 + n
            if pos != size:
                with open(self.data_path, "r+b") as f:
                    f.truncate(pos)
                    f.flush()
                    os.fsync(f.fileno())
        else:
            open(self.data_path, "wb").close()
        self._offsets = entries
        good_idx = False
        if os.path.exists(self.idx_path):
            raw = open(self.idx_path, "rb").read()
            if len(raw) == len(entries) * _IDX.size:
                rows = [_IDX.unpack_from(raw, i * _IDX.size) for i in range(len(entries))]
                good_idx = rows == entries
        if not good_idx:
            tmp = self.idx_path + ".tmp"
            with open(tmp, "wb") as f:
                for off, n in entries:
                    f.write(_IDX.pack(off, n))
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, self.idx_path)

    def __len__(self):
        with self._lock:
            return len(self._offsets)

    def append(self, account, mech, ts, body):
        """Durably append one record; returns its sequence number."""
        if len(account) != ACCOUNT_BYTES:
            raise StoreError("account id must be %d bytes" % ACCOUNT_BYTES)
        entry = account + bytes([mech]) + struct.pack(">Q", ts) + body
        with self._lock:
            off = self._data.tell()
            self._data.write(_LEN.pack(len(entry)))
            self._data.write(entry)
            self._data.flush()
            os.fsync(self._data.fileno())
            self._idx.write(_IDX.pack(off, len(entry)))
            self._idx.flush()
            os.fsync(self._idx.fileno())
            self._offsets.append((off, len(entry)))
            return len(self._offsets) - 1

    def get(self, seq):
        with self._lock:
            off, n = self._offsets[seq]
        with open(self.data_path, "rb") as f:
            f.seek(off)
            raw = f.read(4 + n)
        if len(raw) != 4 + n or _LEN.unpack_from(raw)[0] != n:
            raise StoreError("record %d framing damaged" % seq)
        return self._parse(seq, raw[4:])

    @staticmethod
    def _parse(seq, entry):
        account = entry[:ACCOUNT_BYTES]
        mech = entry[ACCOUNT_BYTES]
        (ts,) = struct.unpack_from(">Q", entry, ACCOUNT_BYTES + 1)
        body = entry[ACCOUNT_BYTES + 9 :]
        return Record(seq, account, mech, ts, body)

    def records(self, account=None, mech=None):
        """All records in append order, optionally filtered."""
        with self._lock:
            count = len(self._offsets)
        out = []
        for seq in range(count):
            rec = self.get(seq)
            if account is not None and rec.account != account:
                continue
            if mech is not None and rec.mech != mech:
                continue
            out.append(rec)
        return out

    def close(self):
        self._data.close()
        self._idx.close()
