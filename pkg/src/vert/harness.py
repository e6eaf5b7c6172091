"""Wrapper and differential-harness generation.

The wrapper is the lifted oracle with each entry-call constant replaced by a
read of a module-level mutable cell.  The harness draws inputs, runs the
candidate first, stores its output in the OUTPUT cell and its inputs in the
INPUT cells, then runs the oracle's entry function and asserts it returns 0.
The same harness text compiles for the std-only PBT driver (``rustc --test``),
the wasm symbolic checker (``--cfg vert_symbolic``) and Kani (``cfg(kani)``).
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .errors import PointStale, UnsupportedType
from .oracle import InjectionPoint, OracleModule
from .source import INT_BITS
from .wasm.lift import RESERVED_METHODS

DRIVER_FILE = "vert_driver.rs"


def driver_text() -> str:
    return resources.files("vert").joinpath("templates", DRIVER_FILE).read_text()


# -- input strategies ----------------------------------------------------

@dataclass
class InputStrategy:
    """How to generate one input slot.

    Scalars are drawn as one integer in ``[lo, hi]``; composites are built
    from scalar draws in a fixed order, so a list of draws decodes back into
    values without knowing which driver produced it.
    """

    kind: str  # int | bool | char | str | vec | struct | enum
    rust_type: str
    signed: bool = True
    bits: int = 32
    carrier: str = "i32"
    lo: int = 0
    hi: int = 0
    assumptions: list[str] = field(default_factory=list)
    ascii: bool = False
    capacity: int = 0
    element: "InputStrategy | None" = None
    fields: list[tuple[str, "InputStrategy"]] = field(default_factory=list)
    # (variant name, shape "unit"|"tuple"|"struct", payload fields)
    variants: list[tuple[str, str, list[tuple[str, "InputStrategy"]]]] = field(default_factory=list)

    @property
    def scalar(self) -> bool:
        return self.kind in ("int", "bool", "char")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class StructDecl:
    name: str
    fields: list[tuple[str, str]]
    tuple_like: bool = False


@dataclass
class EnumDecl:
    name: str
    # (variant, shape, [(field name or index, type)])
    variants: list[tuple[str, str, list[tuple[str, str]]]]


DEFAULT_CAPACITY = 4


def _split_top(text: str, sep: str = ",") -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "<([{":
            depth += 1
        elif ch in ">)]}":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def strip_reference(ty: str) -> tuple[str, str]:
    """Split ``&mut [i32]`` into (``"&mut"``, ``"[i32]"``)."""
    ty = ty.strip()
    m = re.match(r"&\s*(?:'\w+\s+)?(mut\s+)?(.*)$", ty, re.S)
    if m:
        return ("&mut" if m.group(1) else "&"), m.group(2).strip()
    return "", ty


def _int_strategy(ty: str) -> InputStrategy:
    bits = INT_BITS[ty]
    signed = ty.startswith("i")
    if signed:
        lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
        carrier = "i64" if bits == 64 else "i32"
        assumptions = [] if bits in (32, 64) else [f"{lo} <= v <= {hi}"]
    else:
        lo, hi = 0, (1 << bits) - 1
        # a signed carrier one size up holds every unsigned value
        carrier = {8: "i32", 16: "i32", 32: "i64", 64: "i128"}[bits]
        assumptions = [f"0 <= v <= {hi}"]
    return InputStrategy("int", ty, signed, bits, carrier, lo, hi, assumptions)


def derive_input_strategy(slot_types: list, sample_lengths: dict[int, int] | list | None = None,
                          decls: dict[str, StructDecl | EnumDecl] | None = None) -> list[InputStrategy]:
    """One InputStrategy per slot from candidate-side Rust types."""
    decls = decls or {}
    if isinstance(sample_lengths, (list, tuple)):
        sample_lengths = dict(enumerate(sample_lengths))
    sample_lengths = sample_lengths or {}
    return [_strategy(t, sample_lengths.get(i), decls, set()) for i, t in enumerate(slot_types)]


def _strategy(ty, cap: int | None, decls: dict, seen: set) -> InputStrategy:
    if isinstance(ty, (StructDecl, EnumDecl)):
        decls = {**decls, ty.name: ty}
        ty = ty.name
    _, base = strip_reference(str(ty))
    base = re.sub(r"\s+", "", base)
    if base in INT_BITS:
        return _int_strategy(base)
    if base in ("isize", "usize"):
        # the model checker targets wasm32, where these are 32 bits wide
        s = _int_strategy("i32" if base == "isize" else "u32")
        s.rust_type = base
        return s
    if base == "bool":
        return InputStrategy("bool", "bool", False, 1, "i32", 0, 1)
    if base == "char":
        return InputStrategy("char", "char", False, 32, "i32", 0, 127, ["v is ASCII"], ascii=True)
    if base in ("str", "String"):
        n = DEFAULT_CAPACITY if cap is None else cap
        return InputStrategy("str", "String", False, 8, "i32", 0, n,
                             [f"len(v) <= {n}", "every byte of v is ASCII"], ascii=True, capacity=n)
    m = re.fullmatch(r"(?:Vec<(.+)>|\[(.+)\])", base)
    if m:
        inner = m.group(1) or m.group(2)
        if ";" in inner:
            raise UnsupportedType(f"fixed-size arrays are not supported: {ty}")
        elem = _strategy(inner, None, decls, seen)
        n = DEFAULT_CAPACITY if cap is None else cap
        return InputStrategy("vec", f"Vec<{elem.rust_type}>", False, 0, "i32", 0, n,
                             [f"len(v) <= {n}"] + [f"element: {a}" for a in elem.assumptions],
                             capacity=n, element=elem)
    if base in decls:
        if base in seen:
            raise UnsupportedType(f"recursive type {base}")
        d = decls[base]
        seen = seen | {base}
        if isinstance(d, StructDecl):
            fields = [(f, _strategy(t, None, decls, seen)) for f, t in d.fields]
            return InputStrategy("struct", d.name, False, 0, "i32", 0, 0,
                                 [a for f, s in fields for a in (f"{f}: {x}" for x in s.assumptions)],
                                 fields=fields, variants=[] if not d.tuple_like else [("", "tuple", [])])
        variants = [(v, shape, [(f, _strategy(t, None, decls, seen)) for f, t in payload])
                    for v, shape, payload in d.variants]
        if not variants:
            raise UnsupportedType(f"empty enum {base}")
        n = len(variants)
        return InputStrategy("enum", d.name, False, 32, "i32", 0, n - 1, [f"0 <= discriminant <= {n - 1}"],
                             variants=variants)
    raise UnsupportedType(f"cannot decompose {ty!r} into primitive parts")


def parse_type_decls(text: str) -> dict[str, StructDecl | EnumDecl]:
    """Struct and enum declarations of a candidate, enough to build inputs."""
    out: dict = {}
    for m in re.finditer(r"\bstruct\s+(\w+)\s*(?:\{([^{}]*)\}|\(([^()]*)\)\s*;)", text):
        if m.group(2) is not None:
            fields = []
            for part in _split_top(m.group(2)):
                part = re.sub(r"^\s*(?:#\[[^\]]*\]\s*)*(?:pub(?:\([^)]*\))?\s+)?", "", part)
                name, _, ty = part.partition(":")
                fields.append((name.strip(), ty.strip()))
            out[m.group(1)] = StructDecl(m.group(1), fields)
        else:
            tys = [re.sub(r"^pub\s+", "", p) for p in _split_top(m.group(3))]
            out[m.group(1)] = StructDecl(m.group(1), [(str(i), t) for i, t in enumerate(tys)], tuple_like=True)
    for m in re.finditer(r"\benum\s+(\w+)\s*\{", text):
        depth, i = 1, m.end()
        while i < len(text) and depth:
            depth += {"{": 1, "}": -1}.get(text[i], 0)
            i += 1
        body = text[m.end():i - 1]
        variants = []
        for part in _split_top(body):
            part = re.sub(r"^\s*(?:#\[[^\]]*\]\s*)*", "", part)
            vm = re.match(r"(\w+)\s*(?:\((.*)\)|\{(.*)\})?\s*(?:=.*)?$", part, re.S)
            if not vm:
                continue
            if vm.group(2) is not None:
                variants.append((vm.group(1), "tuple", [(str(k), t) for k, t in enumerate(_split_top(vm.group(2)))]))
            elif vm.group(3) is not None:
                fs = [tuple(x.strip() for x in p.partition(":")[::2]) for p in _split_top(vm.group(3))]
                variants.append((vm.group(1), "struct", fs))
            else:
                variants.append((vm.group(1), "unit", []))
        out[m.group(1)] = EnumDecl(m.group(1), variants)
    return out


# -- draws <-> values ----------------------------------------------------

def draw_plan(strategies: list[InputStrategy]) -> list[tuple[int, int]]:
    """The (lo, hi) range of every scalar draw, in harness order."""
    plan: list[tuple[int, int]] = []

    def walk(s: InputStrategy):
        if s.scalar:
            plan.append((s.lo, s.hi))
        elif s.kind == "str":
            plan.append((0, s.capacity))
            plan.extend([(0, 127)] * s.capacity)
        elif s.kind == "vec":
            plan.append((0, s.capacity))
            for _ in range(s.capacity):
                walk(s.element)
        elif s.kind == "struct":
            for _, f in s.fields:
                walk(f)
        elif s.kind == "enum":
            plan.append((s.lo, s.hi))
            for _, _, payload in s.variants:
                for _, f in payload:
                    walk(f)
    for s in strategies:
        walk(s)
    return plan


def combine_wide_draws(plan: list[tuple[int, int]], raw: list[int]) -> list[int]:
    """Fold the model checker's per-call nondet values into one value per draw.

    Ranges wider than i64 are drawn as a (high, low) pair of i64s.
    """
    out, i = [], 0
    for lo, hi in plan:
        if lo >= -(1 << 63) and hi < (1 << 63):
            out.append(raw[i])
            i += 1
        else:
            out.append((raw[i] << 64) | (raw[i + 1] & ((1 << 64) - 1)))
            i += 2
    return out


def decode_values(strategies: list[InputStrategy], draws: list[int]) -> list:
    """Slot values from draw values; the inverse of the harness generator."""
    it = iter(draws)

    def take(lo: int, hi: int) -> int:
        return min(max(int(next(it, 0)), lo), hi)

    def walk(s: InputStrategy):
        if s.kind == "int":
            return take(s.lo, s.hi)
        if s.kind == "bool":
            return take(0, 1) != 0
        if s.kind == "char":
            return chr(take(0, 127))
        if s.kind == "str":
            n = take(0, s.capacity)
            chars = [chr(take(0, 127)) for _ in range(s.capacity)]
            return "".join(chars[:n])
        if s.kind == "vec":
            n = take(0, s.capacity)
            items = [walk(s.element) for _ in range(s.capacity)]
            return items[:n]
        if s.kind == "struct":
            return {f: walk(fs) for f, fs in s.fields}
        if s.kind == "enum":
            d = take(s.lo, s.hi)
            payloads = [[walk(f) for _, f in payload] for _, _, payload in s.variants]
            name = s.variants[d][0]
            return (name, payloads[d]) if payloads[d] else name
        raise UnsupportedType(s.kind)
    return [walk(s) for s in strategies]


def encode_values(strategies: list[InputStrategy], values: list) -> list[int]:
    """Draw values that make the harness generate ``values``."""
    out: list[int] = []

    def zeros(s: InputStrategy):
        for lo, hi in draw_plan([s]):
            out.append(min(max(0, lo), hi))

    def walk(s: InputStrategy, v):
        if s.kind == "int":
            out.append(int(v))
        elif s.kind == "bool":
            out.append(1 if v else 0)
        elif s.kind == "char":
            out.append(ord(v) if isinstance(v, str) else int(v))
        elif s.kind == "str":
            if len(v) > s.capacity:
                raise ValueError(f"string longer than capacity {s.capacity}")
            out.append(len(v))
            out.extend([ord(c) for c in v] + [0] * (s.capacity - len(v)))
        elif s.kind == "vec":
            if len(v) > s.capacity:
                raise ValueError(f"vector longer than capacity {s.capacity}")
            out.append(len(v))
            for item in v:
                walk(s.element, item)
            for _ in range(s.capacity - len(v)):
                zeros(s.element)
        elif s.kind == "struct":
            for f, fs in s.fields:
                walk(fs, v[f])
        elif s.kind == "enum":
            name, payload = (v, []) if isinstance(v, str) else v
            d = [n for n, _, _ in s.variants].index(name)
            out.append(d)
            for k, (_, _, fields) in enumerate(s.variants):
                for j, (_, fs) in enumerate(fields):
                    walk(fs, payload[j]) if k == d else zeros(fs)
    for s, v in zip(strategies, values):
        walk(s, v)
    return out


def format_value(value, strategy: InputStrategy | None = None) -> str:
    """Render a value as a target-language literal (prompt/counterexample form)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        if strategy is not None and strategy.kind == "char":
            return "'" + value.replace("\\", "\\\\").replace("'", "\\'") + "'"
        return json.dumps(value)
    if isinstance(value, list):
        el = strategy.element if strategy is not None else None
        return "[" + ", ".join(format_value(v, el) for v in value) + "]"
    if isinstance(value, dict):
        fs = dict(strategy.fields) if strategy is not None else {}
        name = strategy.rust_type if strategy is not None else ""
        return f"{name} {{ " + ", ".join(f"{k}: {format_value(v, fs.get(k))}" for k, v in value.items()) + " }"
    if isinstance(value, tuple):
        name, payload = value
        return f"{name}(" + ", ".join(format_value(v) for v in payload) + ")"
    return repr(value)


# -- candidate signatures ------------------------------------------------

@dataclass
class RustSignature:
    name: str
    params: list[tuple[str, str]]  # (pattern, type)
    ret: str  # "()" when absent

    @property
    def param_types(self) -> list[str]:
        return [t for _, t in self.params]


def parse_rust_signature(text: str, name: str) -> RustSignature:
    m = re.search(r"\bfn\s+" + re.escape(name) + r"\s*(<[^>]*>)?\s*\(", text)
    if m is None:
        raise UnsupportedType(f"candidate defines no function {name!r}")
    if m.group(1):
        raise UnsupportedType(f"generic candidate function {name!r}")
    depth, i = 1, m.end()
    while i < len(text) and depth:
        depth += {"(": 1, ")": -1}.get(text[i], 0)
        i += 1
    params = []
    for p in _split_top(text[m.end():i - 1]):
        if re.fullmatch(r"&?\s*(?:mut\s+)?self", p):
            raise UnsupportedType("methods are not supported as candidates")
        pat, _, ty = p.partition(":")
        params.append((pat.strip(), ty.strip()))
    rest = text[i:]
    rm = re.match(r"\s*->\s*([^{]+?)\s*(?:where\b[^{]*)?\{", rest, re.S)
    return RustSignature(name, params, rm.group(1).strip() if rm else "()")


# -- wrapper -------------------------------------------------------------

@dataclass
class WrappedOracle:
    text: str
    globals: list[str]
    cell_types: dict[str, str]
    entry_method: str


def _identifiers(text: str) -> set[str]:
    return set(re.findall(r"[A-Za-z_]\w*", text))


def _fresh(name: str, taken: set[str]) -> str:
    out, n = name, 1
    while out in taken:
        n += 1
        out = f"{name}_{n}"
    taken.add(out)
    return out


def entry_method_name(symbol: str) -> str:
    """The lifted module's method name for an exported function."""
    if symbol in RESERVED_METHODS or symbol.startswith("func_"):
        return f"export_{symbol}"
    return symbol


def _carrier_for(prim: str) -> str:
    return "i64" if prim in ("i64", "u64") else "i32"


def generate_wrapper(oracle: OracleModule, points: list[InjectionPoint]) -> WrappedOracle:
    lines = oracle.lifted_text.splitlines(keepends=True)
    taken = _identifiers(oracle.lifted_text)
    names: list[str] = []
    types: dict[str, str] = {}
    decls: list[str] = []
    for p in points:
        if not 0 <= p.line < len(lines):
            raise PointStale(f"line {p.line} outside the lifted text")
        line = lines[p.line]
        token = p.token
        hits = list(re.finditer(r"(?<![\w.])" + re.escape(token) + r"(?![\w.])", line)) if token else []
        if len(hits) != 1:
            raise PointStale(f"line {p.line} no longer holds {p.original_literal[0]} as {token!r}")
        base = f"INPUT_{p.slot_index + 1}" if p.kind == "Input" else "OUTPUT_1"
        cell = _fresh(base, taken)
        ty = _carrier_for(p.original_literal[1])
        h = hits[0]
        lines[p.line] = line[:h.start()] + f"unsafe {{{cell}}}" + line[h.end():]
        names.append(cell)
        types[cell] = ty
        decls.append(f"pub static mut {cell}: {ty} = {token};\n")
    text = "".join(lines)
    if decls:
        if not text.endswith("\n"):
            text += "\n"
        text += "\n// entry-call constants, rewritten by the harness before each run\n" + "".join(decls)
    return WrappedOracle(text, names, types, entry_method_name(oracle.entry_fn_symbol))


# -- harness -------------------------------------------------------------

@dataclass
class Harness:
    wrapped_oracle_text: str
    harness_text: str
    input_signature: list[InputStrategy]
    assumptions: list[str]
    globals: list[str]
    candidate_fn: RustSignature | None = None
    reference_text: str | None = None
    driver_text: str = ""
    directory: Path | None = None

    def draw_plan(self) -> list[tuple[int, int]]:
        return draw_plan(self.input_signature)


HEADER = """\
// Differential equivalence harness.
#![allow(unused, dead_code, non_snake_case, non_camel_case_types, non_upper_case_globals)]
#![allow(unused_mut, unused_parens, unused_unsafe, unreachable_code, unknown_lints, static_mut_refs)]

include!("candidate.rs");

"""

FOOTER = """
#[test]
#[cfg_attr(kani, kani::proof)]
fn vert_equivalence() {
    vert_driver::drive(vert_iteration);
}

#[cfg(all(vert_symbolic, not(kani)))]
#[no_mangle]
pub extern "C" fn vert_proof() {
    vert_driver::drive(vert_iteration);
}
"""


class _Emitter:
    def __init__(self):
        self.lines: list[str] = []
        self.indent = 1
        self.counter = 0

    def emit(self, line: str):
        self.lines.append("    " * self.indent + line)

    def fresh(self, stem: str) -> str:
        self.counter += 1
        return f"vert_{stem}{self.counter}"


def _i128(v: int) -> str:
    return f"{v}i128"


def _gen(e: _Emitter, s: InputStrategy, var: str) -> None:
    """Emit code binding ``var`` (candidate type) and ``var_n`` (its rendering)."""
    note = f"{var}_n"
    if s.kind == "int":
        e.emit(f"let {var}: {s.rust_type} = g.int_in({_i128(s.lo)}, {_i128(s.hi)}) as {s.rust_type};")
        e.emit(f"let {note}: String = if vert_driver::NOTES {{ format!(\"{{:?}}\", {var}) }} else {{ String::new() }};")
    elif s.kind == "bool":
        e.emit(f"let {var}: bool = g.int_in(0i128, 1i128) != 0;")
        e.emit(f"let {note}: String = if vert_driver::NOTES {{ format!(\"{{:?}}\", {var}) }} else {{ String::new() }};")
    elif s.kind == "char":
        e.emit(f"let {var}: char = g.int_in(0i128, 127i128) as u8 as char;")
        e.emit(f"let {note}: String = if vert_driver::NOTES {{ format!(\"{{:?}}\", {var}) }} else {{ String::new() }};")
    elif s.kind == "str":
        n, b = f"{var}_len", f"{var}_bytes"
        e.emit(f"let {n} = g.int_in(0i128, {_i128(s.capacity)}) as usize;")
        e.emit(f"let mut {b}: Vec<u8> = Vec::new();")
        e.emit(f"for _ in 0..{s.capacity} {{ {b}.push(g.int_in(0i128, 127i128) as u8); }}")
        e.emit(f"{b}.truncate({n});")
        e.emit(f"let {var}: String = {b}.iter().map(|&c| c as char).collect();")
        e.emit(f"let {note}: String = if vert_driver::NOTES {{ format!(\"{{:?}}\", {var}) }} else {{ String::new() }};")
    elif s.kind == "vec":
        n, ns = f"{var}_len", f"{var}_ns"
        e.emit(f"let {n} = g.int_in(0i128, {_i128(s.capacity)}) as usize;")
        e.emit(f"let mut {var}: {s.rust_type} = Vec::new();")
        e.emit(f"let mut {ns}: Vec<String> = Vec::new();")
        e.emit(f"for _ in 0..{s.capacity} {{")
        e.indent += 1
        el = e.fresh("e")
        _gen(e, s.element, el)
        e.emit(f"{var}.push({el});")
        e.emit(f"{ns}.push({el}_n);")
        e.indent -= 1
        e.emit("}")
        e.emit(f"{var}.truncate({n});")
        e.emit(f"{ns}.truncate({n});")
        e.emit(f"let {note}: String = format!(\"[{{}}]\", {ns}.join(\", \"));")
    elif s.kind == "struct":
        parts = []
        for f, fs in s.fields:
            fv = e.fresh("f")
            _gen(e, fs, fv)
            parts.append((f, fv))
        tuple_like = bool(s.variants)
        if tuple_like:
            e.emit(f"let {var} = {s.rust_type}(" + ", ".join(fv for _, fv in parts) + ");")
            fmt = f"{s.rust_type}(" + ", ".join("{}" for _ in parts) + ")"
        else:
            e.emit(f"let {var} = {s.rust_type} {{ " + ", ".join(f"{f}: {fv}" for f, fv in parts) + " };")
            fmt = f"{s.rust_type} {{{{ " + ", ".join(f"{f}: {{}}" for f, _ in parts) + " }}"
        args = "".join(f", {fv}_n" for _, fv in parts)
        e.emit(f"let {note}: String = format!(\"{fmt}\"{args});")
    elif s.kind == "enum":
        d = f"{var}_d"
        e.emit(f"let {d} = g.int_in({_i128(s.lo)}, {_i128(s.hi)});")
        payload_vars = []
        for _, _, payload in s.variants:
            pv = []
            for f, fs in payload:
                v = e.fresh("p")
                _gen(e, fs, v)
                pv.append((f, v))
            payload_vars.append(pv)
        e.emit(f"let ({var}, {note}) = match {d} {{")
        e.indent += 1
        for k, ((vname, shape, _), pv) in enumerate(zip(s.variants, payload_vars)):
            arm = "_" if k == len(s.variants) - 1 else str(k)
            path = f"{s.rust_type}::{vname}"
            if shape == "unit":
                e.emit(f"{arm} => ({path}, String::from(\"{path}\")),")
            elif shape == "tuple":
                fmt = path + "(" + ", ".join("{}" for _ in pv) + ")"
                args = "".join(f", {v}_n" for _, v in pv)
                e.emit(f"{arm} => ({path}(" + ", ".join(v for _, v in pv) + f"), format!(\"{fmt}\"{args})),")
            else:
                fmt = path + " {{ " + ", ".join(f"{f}: {{}}" for f, _ in pv) + " }}"
                args = "".join(f", {v}_n" for _, v in pv)
                e.emit(f"{arm} => ({path} {{ " + ", ".join(f"{f}: {v}" for f, v in pv) +
                       f" }}, format!(\"{fmt}\"{args})),")
        e.indent -= 1
        e.emit("};")
    else:
        raise UnsupportedType(s.kind)


def _argument(var: str, ty: str) -> str:
    ref, base = strip_reference(ty)
    if ref == "&mut":
        return f"&mut {var}.clone()"
    if ref == "&":
        return f"&{var}"
    return f"{var}.clone()"


def _check_candidate_types(sig: RustSignature, strategy: list[InputStrategy]) -> None:
    if len(sig.params) != len(strategy):
        raise UnsupportedType(f"candidate {sig.name} takes {len(sig.params)} arguments, "
                              f"strategy has {len(strategy)} slots")


def generate_equivalence_harness(wrapper: WrappedOracle | None, signature: RustSignature,
                                 strategy: list[InputStrategy], points: list[InjectionPoint] | None = None,
                                 reference: str | None = None) -> Harness:
    """Differential harness for ``signature`` against the wrapped oracle.

    With ``reference`` (Rust source defining a function of the same name)
    and no wrapper, the candidate is compared with that reference instead.
    """
    _check_candidate_types(signature, strategy)
    if wrapper is None and reference is None:
        raise ValueError("need a wrapped oracle or a reference implementation")
    points = points or []
    e = _Emitter()
    slot_vars = []
    for k, s in enumerate(strategy):
        var = f"vert_in{k}"
        _gen(e, s, var)
        e.emit(f"g.note({var}_n);")
        slot_vars.append(var)
    args = ", ".join(_argument(v, t) for v, t in zip(slot_vars, signature.param_types))
    e.emit("// candidate first: the oracle compares against its output")
    e.emit(f"let vert_out = {signature.name}({args});")
    if wrapper is not None:
        stores = []
        for p in points:
            cell = _cell_for(wrapper, p)
            if p.kind == "Input":
                if p.slot_index >= len(strategy):
                    raise UnsupportedType(f"injection point for missing slot {p.slot_index}")
                s = strategy[p.slot_index]
                if not s.scalar:
                    raise UnsupportedType(f"composite slot {p.slot_index} cannot be injected into the oracle")
                stores.append(f"oracle::{cell} = {slot_vars[p.slot_index]} as {wrapper.cell_types[cell]};")
            else:
                ret = strip_reference(signature.ret)[1]
                if ret not in INT_BITS and ret not in ("bool", "char", "isize", "usize"):
                    raise UnsupportedType(f"oracle cannot compare a {signature.ret} output")
                stores.append(f"oracle::{cell} = vert_out as {wrapper.cell_types[cell]};")
        if stores:
            e.emit("unsafe {")
            e.indent += 1
            for st in stores:
                e.emit(st)
            e.indent -= 1
            e.emit("}")
        e.emit("let mut vert_m = oracle::WasmModule::new();")
        e.emit("vert_m._start().expect(\"oracle trapped during start-up\");")
        e.emit(f"let vert_r = vert_m.{wrapper.entry_method}().expect(\"oracle trapped\");")
        e.emit("vert_driver::release(vert_m);")
        e.emit("assert!(vert_r == 0, \"candidate and oracle outputs differ\");")
    else:
        ref_args = ", ".join(_argument(v, t) for v, t in zip(slot_vars, signature.param_types))
        e.emit(f"let vert_ref = reference::{signature.name}({ref_args});")
        e.emit("assert!(vert_out == vert_ref, \"candidate and reference outputs differ\");")
    modules = []
    if wrapper is not None:
        modules.append('#[path = "wrapper.rs"]\nmod oracle;\n')
    else:
        modules.append("mod reference {\n    #![allow(unused, dead_code)]\n    include!(\"reference.rs\");\n}\n")
    modules.append(f'#[path = "{DRIVER_FILE}"]\nmod vert_driver;\n')
    body = "\n".join(e.lines)
    text = (HEADER + "\n".join(modules) + "\nfn vert_iteration(g: &mut vert_driver::Gen) {\n" + body + "\n}\n"
            + FOOTER)
    assumptions = [f"slot {k}: {a}" for k, s in enumerate(strategy) for a in s.assumptions]
    return Harness(
        wrapped_oracle_text=wrapper.text if wrapper is not None else "",
        harness_text=text,
        input_signature=list(strategy),
        assumptions=assumptions,
        globals=list(wrapper.globals) if wrapper is not None else [],
        candidate_fn=signature,
        reference_text=reference,
        driver_text=driver_text(),
    )


def _cell_for(wrapper: WrappedOracle, p: InjectionPoint) -> str:
    stem = f"INPUT_{p.slot_index + 1}" if p.kind == "Input" else "OUTPUT_1"
    for g in wrapper.globals:
        if g == stem or g.startswith(stem + "_"):
            return g
    raise PointStale(f"wrapper has no cell for {p.kind} slot {p.slot_index}")


# -- files ---------------------------------------------------------------

def strip_inner_attributes(text: str) -> str:
    """Drop crate-level ``#![...]`` lines so the text can be include!d."""
    return re.sub(r"(?m)^[ \t]*#!\[[^\n]*\]\s*$\n?", "", text)


CARGO_TOML = """\
[package]
name = "vert-harness"
version = "0.0.0"
edition = "{edition}"

[lib]
path = "harness.rs"

[profile.dev]
overflow-checks = true

[lints.rust]
unexpected_cfgs = {{ level = "allow", check-cfg = ["cfg(kani)", "cfg(vert_symbolic)"] }}
"""


def publicize(text: str) -> str:
    """Make top-level items visible from the enclosing crate."""
    return re.sub(r"^(fn|struct|enum|const|static|type|trait) ", r"pub \1 ", text, flags=re.M)


def write_harness(harness: Harness, candidate_text: str, directory: str | Path, edition: str = "2021") -> Path:
    """Write the harness crate; returns the path of harness.rs."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "candidate.rs").write_text(strip_inner_attributes(candidate_text))
    if harness.wrapped_oracle_text:
        (d / "wrapper.rs").write_text(harness.wrapped_oracle_text)
    if harness.reference_text is not None:
        (d / "reference.rs").write_text(publicize(strip_inner_attributes(harness.reference_text)))
    (d / DRIVER_FILE).write_text(harness.driver_text or driver_text())
    (d / "harness.rs").write_text(harness.harness_text)
    (d / "Cargo.toml").write_text(CARGO_TOML.format(edition=edition))
    manifest = {
        "harness": "harness.rs",
        "pbt_test": "vert_equivalence",
        "symbolic_entry": "vert_proof",
        "kani_harness": "vert_equivalence",
        "globals": harness.globals,
        "assumptions": harness.assumptions,
        "slots": [s.to_json() for s in harness.input_signature],
        "draw_plan": [list(r) for r in harness.draw_plan()],
    }
    (d / "vert-manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    harness.directory = d
    return d / "harness.rs"
