from __future__ import annotations

import struct
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from edgeinfer import corpus
from edgeinfer.agent import AgentConfig, start_agent

GOLDEN = Path(__file__).parent / "golden"

_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<i8"), 3: np.dtype("u1")}


def load_golden_tensor(name: str) -> np.ndarray:
    """Decode a wire-encoded golden tensor with struct only."""
    data = (GOLDEN / name).read_bytes()
    code, ndim = struct.unpack_from("<BB", data, 0)
    shape = struct.unpack_from(f"<{ndim}Q", data, 2)
    payload = data[2 + 8 * ndim:]
    return np.frombuffer(payload, dtype=_DTYPES[code]).reshape(shape)


@pytest.fixture(scope="session")
def plan_store(tmp_path_factory) -> tuple[Path, dict]:
    """Corpus compiled (all passes) into a session-wide plan directory."""
    store = tmp_path_factory.mktemp("plans")
    plans = corpus.build_store(store)
    return store, plans


@pytest.fixture(scope="session")
def agent(plan_store):
    """Live TCP agent serving the corpus store."""
    store, _ = plan_store
    server = start_agent(AgentConfig(listen_port=0, plan_dir=str(store)))
    yield server
    server.shutdown()
    server.server_close()
