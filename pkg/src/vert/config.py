"""Configuration dataclasses and the key=value config file loader."""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class ToolConfig:
    """Paths and flag spellings for every external tool."""

    clang: str = "clang"
    clangxx: str = "clang++"
    go: str = "go"
    rustc: str = "rustc"
    # external lifter command; empty selects the built-in lifter
    lifter: str = ""
    oracle_cflags: str = ("--target=wasm32 -O0 -nostdlib -Wl,--no-entry -Wl,--export-all "
                          "-Wl,-z,stack-size=16384 -Wl,--initial-memory=131072")
    rust_edition: str = "2021"
    # model checker: "builtin" runs the wasm symbolic checker, "kani" the real one
    checker: str = "builtin"
    kani: str = "cargo-kani"
    kani_unwind_flag: str = "--default-unwind"
    kani_unwind_checks_off: str = "--no-unwinding-checks"
    kani_extra: str = "-Z unstable-options"
    python: str = "python3"


@dataclass
class VerifierConfig:
    stage_time_limit: float = 120.0
    pbt_seed: int = 0
    initial_unwind: int = 10
    unwind_growth: int = 2
    pbt_cases: int = 100_000
    # the PBT driver stops itself this long before the runner would kill it
    pbt_margin: float = 3.0
    tools: ToolConfig = field(default_factory=ToolConfig)

    def __post_init__(self):
        if self.initial_unwind < 1:
            raise ValueError("initial_unwind must be >= 1")
        if self.unwind_growth < 2:
            raise ValueError("unwind_growth must be >= 2")
        if self.stage_time_limit <= 0:
            raise ValueError("stage_time_limit must be > 0")


@dataclass
class BackendConfig:
    kind: str = "scripted"  # scripted | remote
    fixtures: str = ""
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.2
    max_tokens: int = 2048
    credential_env: str = "VERT_API_KEY"
    retries: int = 3
    request_timeout: float = 120.0


@dataclass
class PipelineConfig:
    max_attempts: int = 20
    stage_time_limit: float = 120.0
    default_unwind_bound: int = 10
    unwind_growth: int = 2
    seed: int = 0
    workspace_dir: str = "vert-work"
    backend: BackendConfig = field(default_factory=BackendConfig)
    tools: ToolConfig = field(default_factory=ToolConfig)
    max_repair_rounds: int = 5
    pbt_cases: int = 100_000
    require_bounded: bool = False
    run_full: bool = True
    # success threshold for the CLI exit status
    success: str = "PassedPBT"

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.stage_time_limit <= 0:
            raise ValueError("stage_time_limit must be > 0")
        if self.default_unwind_bound < 1:
            raise ValueError("default_unwind_bound must be >= 1")

    def verifier(self) -> VerifierConfig:
        return VerifierConfig(
            stage_time_limit=self.stage_time_limit, pbt_seed=self.seed,
            initial_unwind=self.default_unwind_bound, unwind_growth=self.unwind_growth,
            pbt_cases=self.pbt_cases, tools=self.tools,
        )


def _coerce(value: str, current):
    if isinstance(current, bool):
        return value.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(current, int):
        return int(value)
    if isinstance(current, float):
        return float(value)
    return value.strip()


def apply_overrides(cfg: PipelineConfig, values: dict[str, str]) -> PipelineConfig:
    """Apply flat ``key=value`` settings.

    Keys ``backend.X`` and ``tools.X`` address the nested sections.
    """
    for key, raw in values.items():
        target = cfg
        name = key
        if "." in key:
            section, name = key.split(".", 1)
            target = getattr(cfg, section, None)
            if target is None or not dataclasses.is_dataclass(target):
                raise ValueError(f"unknown config section: {section}")
        if not any(f.name == name for f in dataclasses.fields(target)):
            raise ValueError(f"unknown config key: {key}")
        setattr(target, name, _coerce(raw, getattr(target, name)))
    cfg.__post_init__()
    return cfg


def load_config(path: str | Path | None, overrides: dict[str, str] | None = None) -> PipelineConfig:
    cfg = PipelineConfig()
    values: dict[str, str] = {}
    if path:
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        parser.read_string("[vert]\n" + Path(path).read_text())
        values.update(parser["vert"])
    values.update(overrides or {})
    return apply_overrides(cfg, values)
