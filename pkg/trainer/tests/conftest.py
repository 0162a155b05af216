import shutil
import subprocess
import sys

import pytest


def engine_cli(*args: str) -> subprocess.CompletedProcess:
    """Invoke the inference engine through its command-line interface."""
    cmd = [sys.executable, "-m", "fbsd", *args]
    return subprocess.run(cmd, capture_output=True, text=True)


@pytest.fixture(scope="session")
def engine_available() -> bool:
    probe = engine_cli("--help")
    if probe.returncode != 0:
        pytest.skip("fbsd engine CLI not installed")
    return True
