"""Subprocess execution with a hard wall-clock limit."""

from __future__ import annotations

import os
import shutil
import signal
import subprocess
import time
from dataclasses import dataclass

from .errors import ToolchainMissing


@dataclass
class RunResult:
    argv: list[str]
    returncode: int | None  # None when killed on timeout
    stdout: str
    stderr: str
    duration: float
    timed_out: bool = False

    @property
    def ok(self) -> bool:
        return self.returncode == 0 and not self.timed_out


def which(tool: str) -> str:
    path = shutil.which(tool) if not os.path.isabs(tool) else (tool if os.path.exists(tool) else None)
    if path is None:
        raise ToolchainMissing(f"required tool not found: {tool}")
    return path


def run(argv: list[str], timeout: float | None = None, cwd: str | None = None,
        env: dict | None = None, stdin: str | None = None) -> RunResult:
    """Run ``argv``; on expiry the whole process group is killed.

    Kill happens at the deadline itself, so callers see the process gone
    within a fraction of a second past ``timeout``.
    """
    which(argv[0])
    full_env = None
    if env:
        full_env = dict(os.environ)
        full_env.update(env)
    t0 = time.monotonic()
    proc = subprocess.Popen(
        argv, cwd=cwd, env=full_env, text=True,
        stdin=subprocess.PIPE if stdin is not None else subprocess.DEVNULL,
        stdout=subprocess.PIPE, stderr=subprocess.PIPE,
        start_new_session=True,
    )
    try:
        out, err = proc.communicate(input=stdin, timeout=timeout)
        return RunResult(argv, proc.returncode, out, err, time.monotonic() - t0)
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        out, err = proc.communicate()
        return RunResult(argv, None, out or "", err or "", time.monotonic() - t0, timed_out=True)


def tool_version(tool: str) -> str:
    try:
        r = run([tool, "--version"], timeout=20)
    except ToolchainMissing:
        return "missing"
    return (r.stdout or r.stderr).strip().splitlines()[0] if (r.stdout or r.stderr).strip() else "unknown"
