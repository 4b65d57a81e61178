import pytest

from larchkit.client import LarchClient, LocalTransport
from larchkit.logservice.service import LogService


@pytest.fixture
def service(tmp_path):
    return LogService(str(tmp_path / "log"), reps=20)


@pytest.fixture
def client(tmp_path, service):
    cl = LarchClient(LocalTransport(service), str(tmp_path / "vault.json"))
    cl.enroll()
    return cl
