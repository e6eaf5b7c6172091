"""Verified transpilation to safe Rust.

Candidates from a code generator are checked against an oracle obtained by
compiling the source to WebAssembly and lifting it back to Rust, first with
property-based testing and then with bounded and full model checking.
"""

from .pipeline import PipelineReport, transpile

__version__ = "0.1.0"
__all__ = ["PipelineReport", "transpile", "__version__"]
