from __future__ import annotations

import socket
import threading
import time

import httpx
import pytest
import uvicorn

from encoder_service.app import create_app
from encoder_service.models import create_checkpoints
from encoder_service.registry import RegistryConfig


@pytest.fixture(scope="session")
def weights_dir(tmp_path_factory):
    return create_checkpoints(tmp_path_factory.mktemp("weights"), seed=7)


@pytest.fixture(scope="session")
def live_service(weights_dir):
    """A real uvicorn instance on localhost; yields its base URL."""
    config = RegistryConfig(weights_dir=str(weights_dir))
    app = create_app(config)
    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{port}"
    deadline = time.monotonic() + 15
    while time.monotonic() < deadline:
        try:
            if httpx.get(f"{base}/meta", timeout=1.0).status_code == 200:
                break
        except httpx.HTTPError:
            pass
        time.sleep(0.05)
    else:
        raise RuntimeError("service did not become ready")
    yield base
    server.should_exit = True
    thread.join(timeout=5)
