import socket
import threading
import time

import pytest
import uvicorn

from scoring_sidecar.app import create_app
from scoring_sidecar.models import SidecarConfig


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="session")
def sidecar_url():
    """A live sidecar (hash backend, small batch cap) on a local port."""
    config = SidecarConfig(backend="hash", max_batch=16, hash_dim=96)
    port = _free_port()
    server = uvicorn.Server(
        uvicorn.Config(create_app(config), host="127.0.0.1", port=port, log_level="error")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10.0
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("sidecar failed to start")
        time.sleep(0.02)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5.0)
