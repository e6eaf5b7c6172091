import shutil
from pathlib import Path

import pytest

from vert.config import PipelineConfig, BackendConfig
from vert.pipeline import prepare_oracle
from vert.source import SourceProgram

FIXTURES = Path(__file__).parent / "fixtures"
PROGRAMS = FIXTURES / "programs"
SUITE = FIXTURES / "suite"
PAIRS = FIXTURES / "pairs"
CANDIDATES = FIXTURES / "candidates"

HAVE_RUST = shutil.which("rustc") is not None
HAVE_CLANG = shutil.which("clang") is not None

needs_rust = pytest.mark.skipif(not HAVE_RUST, reason="rustc not installed")
needs_toolchain = pytest.mark.skipif(not (HAVE_RUST and HAVE_CLANG), reason="rustc and clang needed")


def make_config(tmp_path, **kw) -> PipelineConfig:
    kw.setdefault("stage_time_limit", 60.0)
    kw.setdefault("backend", BackendConfig(fixtures=str(CANDIDATES)))
    return PipelineConfig(workspace_dir=str(tmp_path / "ws"), **kw)


@pytest.fixture(scope="session")
def reverse_source() -> SourceProgram:
    return SourceProgram.from_dir(PROGRAMS / "reverse")


@pytest.fixture(scope="session")
def reverse_setup(tmp_path_factory, reverse_source):
    """Oracle, injection points and wrapper for the reverse program (built once)."""
    if not (HAVE_RUST and HAVE_CLANG):
        pytest.skip("rustc and clang needed")
    ws = tmp_path_factory.mktemp("reverse-oracle")
    return prepare_oracle(reverse_source, ws, PipelineConfig(stage_time_limit=60.0))


# acceptance verdicts, filled by tests/test_acceptance.py and echoed in the terminal summary
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        verdict, line = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {verdict}  {line}")
