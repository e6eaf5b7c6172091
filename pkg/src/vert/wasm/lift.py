"""Lift a decoded wasm module to Rust source that embeds the wasm semantics.

The output follows the rWasm layout: a ``WasmModule`` struct owning linear
memory and globals, one ``func_N`` method per wasm function, and the value
stack lowered to ``TaggedVal`` slot variables ``v0, v1, ...``.  Every
instruction is emitted on its own line, so a constant in the source program
maps to exactly one line of output; the mutation-guided injection search
depends on that.
"""

from __future__ import annotations

import struct

from .decode import F32, F64, I32, I64, Function, Instr, Module, block_arity, const_value

RUST_TY = {I32: "i32", I64: "i64", F32: "f32", F64: "f64"}

PRELUDE = """\
#![allow(unused_mut, unused_variables, unused_assignments, unused_labels, unreachable_code)]
#![allow(non_snake_case, non_upper_case_globals, dead_code, unused_parens, unused_braces)]
#![allow(clippy::all)]

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum TaggedVal {
    Undefined,
    I32(i32),
    I64(i64),
    F32(f32),
    F64(f64),
}

impl From<i32> for TaggedVal {
    fn from(v: i32) -> Self {
        TaggedVal::I32(v)
    }
}
impl From<i64> for TaggedVal {
    fn from(v: i64) -> Self {
        TaggedVal::I64(v)
    }
}
impl From<f32> for TaggedVal {
    fn from(v: f32) -> Self {
        TaggedVal::F32(v)
    }
}
impl From<f64> for TaggedVal {
    fn from(v: f64) -> Self {
        TaggedVal::F64(v)
    }
}

impl TaggedVal {
    pub fn try_as_i32(&self) -> Option<i32> {
        match self {
            TaggedVal::I32(v) => Some(*v),
            _ => None,
        }
    }
    pub fn try_as_i64(&self) -> Option<i64> {
        match self {
            TaggedVal::I64(v) => Some(*v),
            _ => None,
        }
    }
    pub fn try_as_f32(&self) -> Option<f32> {
        match self {
            TaggedVal::F32(v) => Some(*v),
            _ => None,
        }
    }
    pub fn try_as_f64(&self) -> Option<f64> {
        match self {
            TaggedVal::F64(v) => Some(*v),
            _ => None,
        }
    }
}

fn ea(base: i32, offset: usize) -> Option<usize> {
    (base as u32 as usize).checked_add(offset)
}
"""

MEMORY_HELPERS = """\
    fn read_mem_u8(&self, addr: usize) -> Option<u8> {
        self.memory.get(addr).copied()
    }
    fn read_mem_u16(&self, addr: usize) -> Option<u16> {
        Some(u16::from_le_bytes(self.memory.get(addr..addr.checked_add(2)?)?.try_into().ok()?))
    }
    fn read_mem_u32(&self, addr: usize) -> Option<u32> {
        Some(u32::from_le_bytes(self.memory.get(addr..addr.checked_add(4)?)?.try_into().ok()?))
    }
    fn read_mem_u64(&self, addr: usize) -> Option<u64> {
        Some(u64::from_le_bytes(self.memory.get(addr..addr.checked_add(8)?)?.try_into().ok()?))
    }
    fn write_mem_u8(&mut self, addr: usize, v: u8) -> Option<()> {
        *self.memory.get_mut(addr)? = v;
        Some(())
    }
    fn write_mem_u16(&mut self, addr: usize, v: u16) -> Option<()> {
        self.memory.get_mut(addr..addr.checked_add(2)?)?.copy_from_slice(&v.to_le_bytes());
        Some(())
    }
    fn write_mem_u32(&mut self, addr: usize, v: u32) -> Option<()> {
        self.memory.get_mut(addr..addr.checked_add(4)?)?.copy_from_slice(&v.to_le_bytes());
        Some(())
    }
    fn write_mem_u64(&mut self, addr: usize, v: u64) -> Option<()> {
        self.memory.get_mut(addr..addr.checked_add(8)?)?.copy_from_slice(&v.to_le_bytes());
        Some(())
    }
    fn memory_grow(&mut self, pages: i32) -> i32 {
        let old = (self.memory.len() / 65536) as i32;
        let new = old as u64 + pages as u32 as u64;
        if new > MAX_PAGES {
            return -1;
        }
        self.memory.resize(new as usize * 65536, 0);
        old
    }
    fn memory_fill(&mut self, dst: i32, val: i32, len: i32) -> Option<()> {
        let d = dst as u32 as usize;
        let n = len as u32 as usize;
        self.memory.get_mut(d..d.checked_add(n)?)?.fill(val as u8);
        Some(())
    }
    fn memory_copy(&mut self, dst: i32, src: i32, len: i32) -> Option<()> {
        let d = dst as u32 as usize;
        let s = src as u32 as usize;
        let n = len as u32 as usize;
        if s.checked_add(n)? > self.memory.len() || d.checked_add(n)? > self.memory.len() {
            return None;
        }
        self.memory.copy_within(s..s + n, d);
        Some(())
    }
"""


class LiftError(ValueError):
    pass


_LOAD = {
    "i32.load": ("u32", "i32", "as i32"), "i64.load": ("u64", "i64", "as i64"),
    "f32.load": ("u32", "f32", "f32"), "f64.load": ("u64", "f64", "f64"),
    "i32.load8_s": ("u8", "i32", "as i8 as i32"), "i32.load8_u": ("u8", "i32", "as i32"),
    "i32.load16_s": ("u16", "i32", "as i16 as i32"), "i32.load16_u": ("u16", "i32", "as i32"),
    "i64.load8_s": ("u8", "i64", "as i8 as i64"), "i64.load8_u": ("u8", "i64", "as i64"),
    "i64.load16_s": ("u16", "i64", "as i16 as i64"), "i64.load16_u": ("u16", "i64", "as i64"),
    "i64.load32_s": ("u32", "i64", "as i32 as i64"), "i64.load32_u": ("u32", "i64", "as i64"),
}
_STORE = {
    "i32.store": ("u32", "i32", "as u32"), "i64.store": ("u64", "i64", "as u64"),
    "f32.store": ("u32", "f32", "to_bits"), "f64.store": ("u64", "f64", "to_bits"),
    "i32.store8": ("u8", "i32", "as u8"), "i32.store16": ("u16", "i32", "as u16"),
    "i64.store8": ("u8", "i64", "as u8"), "i64.store16": ("u16", "i64", "as u16"),
    "i64.store32": ("u32", "i64", "as u32"),
}

_INT_BIN = {
    "add": "{a}.wrapping_add({b})", "sub": "{a}.wrapping_sub({b})", "mul": "{a}.wrapping_mul({b})",
    "and": "{a} & {b}", "or": "{a} | {b}", "xor": "{a} ^ {b}",
    "shl": "{a}.wrapping_shl({b} as u32)", "shr_s": "{a}.wrapping_shr({b} as u32)",
    "shr_u": "(({a} as {u}).wrapping_shr({b} as u32)) as {t}",
    "rotl": "{a}.rotate_left(({b} as u32) % {bits})", "rotr": "{a}.rotate_right(({b} as u32) % {bits})",
    "div_s": "{a}.checked_div({b})?", "rem_s": "if {b} == 0 {{ return None }} else {{ {a}.wrapping_rem({b}) }}",
    "div_u": "({a} as {u}).checked_div({b} as {u})? as {t}", "rem_u": "({a} as {u}).checked_rem({b} as {u})? as {t}",
}
_INT_CMP = {
    "eq": "{a} == {b}", "ne": "{a} != {b}", "lt_s": "{a} < {b}", "gt_s": "{a} > {b}",
    "le_s": "{a} <= {b}", "ge_s": "{a} >= {b}",
    "lt_u": "({a} as {u}) < ({b} as {u})", "gt_u": "({a} as {u}) > ({b} as {u})",
    "le_u": "({a} as {u}) <= ({b} as {u})", "ge_u": "({a} as {u}) >= ({b} as {u})",
}
_INT_UN = {
    "clz": "{a}.leading_zeros() as {t}", "ctz": "{a}.trailing_zeros() as {t}",
    "popcnt": "{a}.count_ones() as {t}",
}
_FLOAT_BIN = {
    "add": "{a} + {b}", "sub": "{a} - {b}", "mul": "{a} * {b}", "div": "{a} / {b}",
    "min": "{a}.min({b})", "max": "{a}.max({b})", "copysign": "{a}.copysign({b})",
}
_FLOAT_CMP = {"eq": "==", "ne": "!=", "lt": "<", "gt": ">", "le": "<=", "ge": ">="}
_FLOAT_UN = {
    "abs": "{a}.abs()", "neg": "-{a}", "ceil": "{a}.ceil()", "floor": "{a}.floor()",
    "trunc": "{a}.trunc()", "nearest": "{a}.round_ties_even()", "sqrt": "{a}.sqrt()",
}
_CONVERT = {
    "i32.wrap_i64": ("i64", "{a} as i32"),
    "i64.extend_i32_s": ("i32", "{a} as i64"), "i64.extend_i32_u": ("i32", "{a} as u32 as i64"),
    "i32.extend8_s": ("i32", "{a} as i8 as i32"), "i32.extend16_s": ("i32", "{a} as i16 as i32"),
    "i64.extend8_s": ("i64", "{a} as i8 as i64"), "i64.extend16_s": ("i64", "{a} as i16 as i64"),
    "i64.extend32_s": ("i64", "{a} as i32 as i64"),
    "f32.convert_i32_s": ("i32", "{a} as f32"), "f32.convert_i32_u": ("i32", "{a} as u32 as f32"),
    "f32.convert_i64_s": ("i64", "{a} as f32"), "f32.convert_i64_u": ("i64", "{a} as u64 as f32"),
    "f64.convert_i32_s": ("i32", "{a} as f64"), "f64.convert_i32_u": ("i32", "{a} as u32 as f64"),
    "f64.convert_i64_s": ("i64", "{a} as f64"), "f64.convert_i64_u": ("i64", "{a} as u64 as f64"),
    "f32.demote_f64": ("f64", "{a} as f32"), "f64.promote_f32": ("f32", "{a} as f64"),
    "i32.reinterpret_f32": ("f32", "{a}.to_bits() as i32"), "i64.reinterpret_f64": ("f64", "{a}.to_bits() as i64"),
    "f32.reinterpret_i32": ("i32", "f32::from_bits({a} as u32)"),
    "f64.reinterpret_i64": ("i64", "f64::from_bits({a} as u64)"),
    "i32.trunc_sat_f32_s": ("f32", "{a} as i32"), "i32.trunc_sat_f32_u": ("f32", "{a} as u32 as i32"),
    "i32.trunc_sat_f64_s": ("f64", "{a} as i32"), "i32.trunc_sat_f64_u": ("f64", "{a} as u32 as i32"),
    "i64.trunc_sat_f32_s": ("f32", "{a} as i64"), "i64.trunc_sat_f32_u": ("f32", "{a} as u64 as i64"),
    "i64.trunc_sat_f64_s": ("f64", "{a} as i64"), "i64.trunc_sat_f64_u": ("f64", "{a} as u64 as i64"),
}
# trapping float->int: (source, target, unsigned carrier, lower exclusive, upper exclusive)
_TRUNC = {
    "i32.trunc_f32_s": ("f32", "i32", "i32", "-2147483904.0", "2147483648.0"),
    "i32.trunc_f32_u": ("f32", "i32", "u32", "-1.0", "4294967296.0"),
    "i32.trunc_f64_s": ("f64", "i32", "i32", "-2147483649.0", "2147483648.0"),
    "i32.trunc_f64_u": ("f64", "i32", "u32", "-1.0", "4294967296.0"),
    "i64.trunc_f32_s": ("f32", "i64", "i64", "-9223373136366403584.0", "9223372036854775808.0"),
    "i64.trunc_f32_u": ("f32", "i64", "u64", "-1.0", "18446744073709551616.0"),
    "i64.trunc_f64_s": ("f64", "i64", "i64", "-9223372036854777856.0", "9223372036854775808.0"),
    "i64.trunc_f64_u": ("f64", "i64", "u64", "-1.0", "18446744073709551616.0"),
}


def literal(value: int | float, valtype: int) -> str:
    """Rust literal text for a wasm constant."""
    if valtype == I32:
        return f"{value}i32"
    if valtype == I64:
        return f"{value}i64"
    if valtype == F32:
        return f"f32::from_bits({struct.unpack('<I', struct.pack('<f', value))[0]:#x})"
    return f"f64::from_bits({struct.unpack('<Q', struct.pack('<d', value))[0]:#x})"


class _Frame:
    __slots__ = ("kind", "label", "height", "results", "params")

    def __init__(self, kind: str, label: str, height: int, params: tuple, results: tuple):
        self.kind = kind
        self.label = label
        self.height = height  # stack height below the block's params
        self.params = params
        self.results = results

    def branch_arity(self) -> tuple:
        return self.params if self.kind == "loop" else self.results


class _FunctionLifter:
    def __init__(self, module: Module, func: Function):
        self.m = module
        self.f = func
        self.lines: list[str] = []
        self.indent = 2
        self.max_height = 0
        self.labels = 0
        self.local_types = list(func.type.params) + list(func.locals)

    def emit(self, text: str) -> None:
        self.lines.append("    " * self.indent + text)

    def slot(self, i: int) -> str:
        self.max_height = max(self.max_height, i + 1)
        return f"v{i}"

    def get(self, i: int, ty: int) -> str:
        return f"{self.slot(i)}.try_as_{RUST_TY[ty]}()?"

    def lift(self) -> list[str]:
        ft = self.f.type
        if len(ft.results) > 1:
            raise LiftError(f"func_{self.f.index}: multi-value results are unsupported")
        ret = RUST_TY[ft.results[0]] if ft.results else "()"
        params = ", ".join(f"arg_{i}: {RUST_TY[t]}" for i, t in enumerate(ft.params))
        body_frame = _Frame("func", "", 0, (), ft.results)
        self.frames = [body_frame]
        body = self.f.body
        h = self._lift_seq(body, 0, len(body) - 1, 0)
        if h is not None:
            self._emit_return(h)
        out = [f"    fn func_{self.f.index}(&mut self, {params}) -> Option<{ret}> {{"]
        for i, t in enumerate(ft.params):
            out.append(f"        let mut local_{i} : {RUST_TY[t]} = arg_{i};")
        for j, t in enumerate(self.f.locals):
            i = len(ft.params) + j
            zero = "0.0" if t in (F32, F64) else "0"
            out.append(f"        let mut local_{i} : {RUST_TY[t]} = {zero}{RUST_TY[t]};")
        for i in range(self.max_height):
            out.append(f"        let mut v{i}: TaggedVal = TaggedVal::Undefined;")
        out.extend(self.lines)
        out.append("    }")
        return out

    def _emit_return(self, h: int) -> None:
        results = self.f.type.results
        if results:
            self.emit(f"return Some({self.get(h - 1, results[0])});")
        else:
            self.emit("return Some(());")

    def _branch(self, depth: int, h: int) -> None:
        """Emit a branch to the frame ``depth`` levels out; stack top at ``h``."""
        target = self.frames[-1 - depth]
        if target.kind == "func":
            self._emit_return(h)
            return
        arity = target.branch_arity()
        base = target.height
        n = len(arity)
        for k in range(n):
            src, dst = h - n + k, base + k
            if src != dst:
                self.emit(f"{self.slot(dst)} = {self.slot(src)};")
        verb = "continue" if target.kind == "loop" else "break"
        self.emit(f"{verb} '{target.label};")

    def _skip_dead(self, body: list[Instr], i: int, stop: int) -> int:
        """Index of the next else/end belonging to the current block."""
        depth = 0
        while i < stop:
            op = body[i].op
            if op in ("block", "loop", "if"):
                i = body[i].match + 1
                continue
            if op in ("else", "end") and depth == 0:
                return i
            i += 1
        return stop

    def _lift_seq(self, body: list[Instr], i: int, stop: int, h: int) -> int | None:
        """Lift body[i:stop]; return the final stack height or None if unreachable."""
        while i < stop:
            ins = body[i]
            op = ins.op
            if op in ("block", "loop", "if"):
                params, results = block_arity(self.m, ins.imm[0])
                if op == "if":
                    h -= 1
                    cond = self.get(h, I32)
                base = h - len(params)
                self.labels += 1
                label = f"label_{self.labels - 1}"
                frame = _Frame(op, label, base, params, results)
                self.frames.append(frame)
                self.emit(f"'{label}: loop {{")
                self.indent += 1
                if op == "if":
                    self.emit(f"if {cond} != 0 {{")
                    self.indent += 1
                    then_stop = ins.else_at if ins.else_at is not None else ins.match
                    end_h = self._lift_seq(body, i + 1, then_stop, h)
                    if end_h is not None:
                        self._branch(0, end_h)
                    self.indent -= 1
                    self.emit("} else {")
                    self.indent += 1
                    if ins.else_at is not None:
                        end_h = self._lift_seq(body, ins.else_at + 1, ins.match, h)
                        if end_h is not None:
                            self._branch(0, end_h)
                    else:
                        self._branch(0, h)
                    self.indent -= 1
                    self.emit("}")
                else:
                    end_h = self._lift_seq(body, i + 1, ins.match, h)
                    if end_h is not None:
                        if op == "loop":
                            # falling off the end of a loop leaves it
                            n = len(results)
                            for k in range(n):
                                if end_h - n + k != base + k:
                                    self.emit(f"{self.slot(base + k)} = {self.slot(end_h - n + k)};")
                            self.emit(f"break '{label};")
                        else:
                            self._branch(0, end_h)
                self.indent -= 1
                self.emit("}")
                self.frames.pop()
                h = base + len(results)
                i = ins.match + 1
                continue
            if op in ("end", "else"):
                return h
            nh = self._lift_instr(ins, h)
            if nh is None:
                i = self._skip_dead(body, i + 1, stop)
                if i >= stop:
                    return None
                # dead tail inside a nested construct ends at this else/end
                return None
            h = nh
            i += 1
        return h

    def _lift_instr(self, ins: Instr, h: int) -> int | None:
        op, imm = ins.op, ins.imm
        e = self.emit
        if op == "nop":
            return h
        if op == "unreachable":
            e("return None;")
            return None
        if op == "br":
            self._branch(imm[0], h)
            return None
        if op == "br_if":
            h -= 1
            e(f"if {self.get(h, I32)} != 0 {{")
            self.indent += 1
            self._branch(imm[0], h)
            self.indent -= 1
            e("}")
            return h
        if op == "br_table":
            h -= 1
            targets, default = imm
            e(f"match {self.get(h, I32)} as u32 {{")
            self.indent += 1
            for k, t in enumerate(targets):
                e(f"{k} => {{")
                self.indent += 1
                self._branch(t, h)
                self.indent -= 1
                e("}")
            e("_ => {")
            self.indent += 1
            self._branch(default, h)
            self.indent -= 1
            e("}")
            self.indent -= 1
            e("}")
            return None
        if op == "return":
            self._emit_return(h)
            return None
        if op == "call":
            return self._call(imm[0], h)
        if op == "call_indirect":
            return self._call_indirect(imm[0], h)
        if op == "drop":
            return h - 1
        if op == "select" or op == "select_t":
            c = self.get(h - 1, I32)
            e(f"{self.slot(h - 3)} = if {c} != 0 {{ {self.slot(h - 3)} }} else {{ {self.slot(h - 2)} }};")
            return h - 2
        if op == "local.get":
            e(f"{self.slot(h)} = TaggedVal::from(local_{imm[0]});")
            return h + 1
        if op == "local.set":
            t = self.local_types[imm[0]]
            e(f"local_{imm[0]} = {self.get(h - 1, t)};")
            return h - 1
        if op == "local.tee":
            t = self.local_types[imm[0]]
            e(f"local_{imm[0]} = {self.get(h - 1, t)};")
            return h
        if op == "global.get":
            e(f"{self.slot(h)} = self.globals[{imm[0]}];")
            return h + 1
        if op == "global.set":
            e(f"self.globals[{imm[0]}] = {self.slot(h - 1)};")
            return h - 1
        if op.endswith(".const"):
            vt = {"i32": I32, "i64": I64, "f32": F32, "f64": F64}[op[:3]]
            e(f"{self.slot(h)} = TaggedVal::from({literal(imm[0], vt)});")
            return h + 1
        if op in _LOAD:
            width, res, conv = _LOAD[op]
            addr = f"ea({self.get(h - 1, I32)}, {imm[1]})?"
            raw = f"self.read_mem_{width}({addr})?"
            if conv in ("f32", "f64"):
                val = f"{conv}::from_bits({raw})"
            else:
                val = f"{raw} {conv}"
            e(f"{self.slot(h - 1)} = TaggedVal::from({val});")
            return h
        if op in _STORE:
            width, src, conv = _STORE[op]
            addr = f"ea({self.get(h - 2, I32)}, {imm[1]})?"
            v = self.get(h - 1, {"i32": I32, "i64": I64, "f32": F32, "f64": F64}[src])
            val = f"{v}.to_bits()" if conv == "to_bits" else f"{v} {conv}"
            e(f"self.write_mem_{width}({addr}, {val})?;")
            return h - 2
        if op == "memory.size":
            e(f"{self.slot(h)} = TaggedVal::from((self.memory.len() / 65536) as i32);")
            return h + 1
        if op == "memory.grow":
            e(f"{self.slot(h - 1)} = TaggedVal::from(self.memory_grow({self.get(h - 1, I32)}));")
            return h
        if op == "memory.fill":
            e(f"self.memory_fill({self.get(h - 3, I32)}, {self.get(h - 2, I32)}, {self.get(h - 1, I32)})?;")
            return h - 3
        if op == "memory.copy":
            e(f"self.memory_copy({self.get(h - 3, I32)}, {self.get(h - 2, I32)}, {self.get(h - 1, I32)})?;")
            return h - 3
        return self._numeric(op, h)

    def _numeric(self, op: str, h: int) -> int:
        ty, _, name = op.partition(".")
        e = self.emit
        if op in _CONVERT:
            src, fmt = _CONVERT[op]
            a = self.get(h - 1, {"i32": I32, "i64": I64, "f32": F32, "f64": F64}[src])
            e(f"{self.slot(h - 1)} = TaggedVal::from({fmt.format(a=a)});")
            return h
        if op in _TRUNC:
            src, dst, carrier, lo, hi = _TRUNC[op]
            a = self.get(h - 1, {"f32": F32, "f64": F64}[src])
            e("{")
            self.indent += 1
            e(f"let f = {a};")
            e(f"if !(f > {lo}_{src} && f < {hi}_{src}) {{ return None; }}")
            e(f"{self.slot(h - 1)} = TaggedVal::from(f as {carrier} as {dst});")
            self.indent -= 1
            e("}")
            return h
        if ty in ("i32", "i64"):
            vt = I32 if ty == "i32" else I64
            fmt_args = {"t": ty, "u": "u" + ty[1:], "bits": ty[1:]}
            if name == "eqz":
                e(f"{self.slot(h - 1)} = TaggedVal::from(({self.get(h - 1, vt)} == 0) as i32);")
                return h
            if name in _INT_UN:
                expr = _INT_UN[name].format(a=self.get(h - 1, vt), **fmt_args)
                e(f"{self.slot(h - 1)} = TaggedVal::from({expr});")
                return h
            a, b = self.get(h - 2, vt), self.get(h - 1, vt)
            if name in _INT_BIN:
                e("{")
                self.indent += 1
                e(f"let a = {a};")
                e(f"let b = {b};")
                expr = _INT_BIN[name].format(a="a", b="b", **fmt_args)
                e(f"{self.slot(h - 2)} = TaggedVal::from({expr});")
                self.indent -= 1
                e("}")
                return h - 1
            if name in _INT_CMP:
                e("{")
                self.indent += 1
                e(f"let a = {a};")
                e(f"let b = {b};")
                expr = _INT_CMP[name].format(a="a", b="b", **fmt_args)
                e(f"{self.slot(h - 2)} = TaggedVal::from(({expr}) as i32);")
                self.indent -= 1
                e("}")
                return h - 1
        if ty in ("f32", "f64"):
            vt = F32 if ty == "f32" else F64
            if name in _FLOAT_UN:
                expr = _FLOAT_UN[name].format(a=self.get(h - 1, vt))
                e(f"{self.slot(h - 1)} = TaggedVal::from({expr});")
                return h
            a, b = self.get(h - 2, vt), self.get(h - 1, vt)
            if name in _FLOAT_BIN:
                e(f"{self.slot(h - 2)} = TaggedVal::from({_FLOAT_BIN[name].format(a=a, b=b)});")
                return h - 1
            if name in _FLOAT_CMP:
                e(f"{self.slot(h - 2)} = TaggedVal::from(({a} {_FLOAT_CMP[name]} {b}) as i32);")
                return h - 1
        raise LiftError(f"unsupported instruction {op} in func_{self.f.index}")

    def _call_expr(self, index: int, h: int) -> tuple[str, int, tuple]:
        ft = self.m.func_type(index)
        if len(ft.results) > 1:
            raise LiftError(f"call to func_{index}: multi-value results are unsupported")
        n = len(ft.params)
        args = ", ".join(self.get(h - n + k, t) for k, t in enumerate(ft.params))
        return f"self.func_{index}({args})?", h - n, ft.results

    def _call(self, index: int, h: int) -> int:
        if index < len(self.m.imported_funcs):
            imp = self.m.imported_funcs[index]
            raise LiftError(f"call to imported function {imp.module}.{imp.name}")
        call, base, results = self._call_expr(index, h)
        if results:
            self.emit(f"{self.slot(base)} = TaggedVal::from({call});")
            return base + 1
        self.emit(f"{call};")
        return base

    def _call_indirect(self, type_index: int, h: int) -> int:
        ft = self.m.types[type_index]
        if len(ft.results) > 1:
            raise LiftError("call_indirect with multi-value results is unsupported")
        h -= 1
        idx = self.get(h, I32)
        n = len(ft.params)
        args = ", ".join(self.get(h - n + k, t) for k, t in enumerate(ft.params))
        base = h - n
        candidates = sorted({f for f in _table_funcs(self.m) if f >= 0 and self.m.func_type(f) == ft})
        dst = f"{self.slot(base)} = " if ft.results else ""
        wrap = ("TaggedVal::from(", ")") if ft.results else ("", "")
        self.emit(f"match *self.indirect_call_table.get({idx} as u32 as usize)? {{")
        self.indent += 1
        for f in candidates:
            if f < len(self.m.imported_funcs):
                continue
            self.emit(f"Some({f}) => {{ {dst}{wrap[0]}self.func_{f}({args})?{wrap[1]}; }}")
        self.emit("_ => return None,")
        self.indent -= 1
        self.emit("}")
        return base + (1 if ft.results else 0)


def _table_funcs(m: Module) -> list[int]:
    return [f for seg in m.elements for f in seg.funcs]


def _ident(name: str) -> bool:
    return name.isidentifier() and name.isascii()


RESERVED_METHODS = {"new", "_start"}
RUST_KEYWORDS = {
    "as", "break", "const", "continue", "crate", "else", "enum", "extern", "false", "fn", "for", "if",
    "impl", "in", "let", "loop", "match", "mod", "move", "mut", "pub", "ref", "return", "self", "Self",
    "static", "struct", "super", "trait", "true", "type", "unsafe", "use", "where", "while", "async",
    "await", "dyn", "abstract", "become", "box", "do", "final", "macro", "override", "priv", "typeof",
    "unsized", "virtual", "yield", "try", "gen",
}


def lift_module(m: Module) -> str:
    """Lift a whole module to Rust source text."""
    if any(i.kind in ("func", "global", "table") for i in m.imports):
        bad = next(i for i in m.imports if i.kind in ("func", "global", "table"))
        raise LiftError(f"module imports {bad.kind} {bad.module}.{bad.name}; only self-contained modules lift")
    mem_pages, mem_max = (m.memories[0] if m.memories else (0, None))
    for imp in m.imports:
        if imp.kind == "memory":
            mem_pages, mem_max = imp.desc
    out = [PRELUDE]
    out.append(f"const MAX_PAGES: u64 = {mem_max if mem_max is not None else 65536};")
    out.append("")
    out.append("pub struct WasmModule {")
    out.append("    memory: Vec<u8>,")
    out.append("    globals: Vec<TaggedVal>,")
    out.append("    indirect_call_table: Vec<Option<usize>>,")
    out.append("}")
    out.append("")
    out.append("impl WasmModule {")
    out.append("    pub fn new() -> Self {")
    out.append("        let mut m = WasmModule {")
    out.append(f"            memory: vec![0u8; {mem_pages * 65536}],")
    out.append("            globals: vec![],")
    out.append("            indirect_call_table: vec![],")
    out.append("        };")
    gvals: list = []
    for g in m.globals:
        v = const_value(g.init, gvals)
        gvals.append(v)
        out.append(f"        m.globals.push(TaggedVal::from({literal(v, g.valtype)}));")
    table_size = m.tables[0][1] if m.tables else 0
    if table_size:
        out.append(f"        m.indirect_call_table.resize({table_size}, None);")
    for seg in m.elements:
        if seg.offset is None:
            continue
        base = const_value(seg.offset, gvals)
        for k, f in enumerate(seg.funcs):
            out.append(f"        m.indirect_call_table[{base + k}] = Some({f});")
    for seg in m.data:
        if seg.offset is None or not seg.payload:
            continue
        base = const_value(seg.offset, gvals)
        body = ", ".join(str(b) for b in seg.payload)
        out.append(f"        m.memory[{base}..{base + len(seg.payload)}].copy_from_slice(&[{body}]);")
    out.append("        m")
    out.append("    }")
    out.append("")
    out.append("    pub fn _start(&mut self) -> Option<()> {")
    if m.start is not None:
        out.append(f"        self.func_{m.start}()?;")
    out.append("        Some(())")
    out.append("    }")
    out.append("")
    out.append(MEMORY_HELPERS.rstrip("\n"))
    for f in m.functions:
        out.append("")
        out.extend(_FunctionLifter(m, f).lift())
    exported = set()
    for ex in m.exports:
        if ex.kind != "func" or not _ident(ex.name) or ex.name in RUST_KEYWORDS:
            continue
        name = ex.name if ex.name not in RESERVED_METHODS and not ex.name.startswith("func_") else f"export_{ex.name}"
        if name in exported or name.startswith("read_mem_") or name.startswith("write_mem_") or name.startswith("memory_"):
            continue
        exported.add(name)
        ft = m.func_type(ex.index)
        params = ", ".join(f"arg_{i}: {RUST_TY[t]}" for i, t in enumerate(ft.params))
        args = ", ".join(f"arg_{i}" for i in range(len(ft.params)))
        ret = RUST_TY[ft.results[0]] if len(ft.results) == 1 else "()"
        out.append("")
        out.append(f"    pub fn {name}(&mut self, {params}) -> Option<{ret}> {{")
        out.append(f"        self.func_{ex.index}({args})")
        out.append("    }")
    out.append("}")
    return "\n".join(out) + "\n"
