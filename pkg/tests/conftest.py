import sys
import threading
import time
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
FIXTURES = TESTS_DIR / "fixtures"

sys.path.insert(0, str(TESTS_DIR))

from petm.records import PETMStore  # noqa: E402


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def figure_records() -> list:
    return PETMStore.load(FIXTURES / "prompts" / "figure_records.jsonl").records


@pytest.fixture(scope="session")
def figure1_records() -> list:
    return PETMStore.load(FIXTURES / "prompts" / "figure1_records.jsonl").records


@pytest.fixture(scope="session")
def fixture_corpus() -> tuple[list[str], list[str]]:
    lines = (FIXTURES / "metrics" / "fixture_corpus.tsv").read_text("utf-8").splitlines()
    pairs = [line.split("\t") for line in lines if line]
    return [p[0] for p in pairs], [p[1] for p in pairs]


class LiveServer:
    """Run a FastAPI app under uvicorn on a random localhost port."""

    def __init__(self, app):
        import uvicorn

        self._config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
        self._server = uvicorn.Server(self._config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def __enter__(self) -> str:
        self._thread.start()
        deadline = time.time() + 10
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start in time")
            time.sleep(0.01)
        port = self._server.servers[0].sockets[0].getsockname()[1]
        return f"http://127.0.0.1:{port}"

    def __exit__(self, *exc):
        self._server.should_exit = True
        self._thread.join(timeout=10)


@pytest.fixture
def live_server():
    return LiveServer
