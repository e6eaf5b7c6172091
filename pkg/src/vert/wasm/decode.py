"""Binary decoder for WebAssembly modules.

Covers the core format plus the post-MVP features that clang and rustc emit
by default for wasm32 (sign extension, saturating truncation, bulk memory,
multi-value block types, reference-typed call_indirect).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

I32, I64, F32, F64 = 0x7F, 0x7E, 0x7D, 0x7C
FUNCREF, EXTERNREF = 0x70, 0x6F

VALTYPE_NAMES = {I32: "i32", I64: "i64", F32: "f32", F64: "f64", FUNCREF: "funcref", EXTERNREF: "externref"}


class DecodeError(ValueError):
    pass


@dataclass(frozen=True)
class FuncType:
    params: tuple[int, ...]
    results: tuple[int, ...]


@dataclass
class Import:
    module: str
    name: str
    kind: str  # "func" | "table" | "memory" | "global"
    desc: object


@dataclass
class Global:
    valtype: int
    mutable: bool
    init: list


@dataclass
class Export:
    name: str
    kind: str
    index: int


@dataclass
class Element:
    table: int
    offset: list | None  # None for passive/declarative segments
    funcs: list[int]


@dataclass
class Data:
    memory: int
    offset: list | None
    payload: bytes


@dataclass
class Instr:
    """One decoded instruction.

    ``match`` is filled in for structured instructions: for block/loop/if it
    holds the index of the matching ``end``; ``else_at`` the index of the
    ``else`` of an ``if`` (or None).
    """

    op: str
    imm: tuple = ()
    offset: int = 0
    match: int = -1
    else_at: int | None = None

    def __repr__(self) -> str:
        return f"{self.op}{' ' + ' '.join(map(str, self.imm)) if self.imm else ''}"


@dataclass
class Function:
    index: int
    type: FuncType
    locals: list[int]
    body: list[Instr]
    name: str | None = None


@dataclass
class Module:
    types: list[FuncType] = field(default_factory=list)
    imports: list[Import] = field(default_factory=list)
    func_types: list[int] = field(default_factory=list)  # defined funcs only
    tables: list[tuple[int, int, int | None]] = field(default_factory=list)
    memories: list[tuple[int, int | None]] = field(default_factory=list)
    globals: list[Global] = field(default_factory=list)
    exports: list[Export] = field(default_factory=list)
    start: int | None = None
    elements: list[Element] = field(default_factory=list)
    data: list[Data] = field(default_factory=list)
    functions: list[Function] = field(default_factory=list)
    func_names: dict[int, str] = field(default_factory=dict)

    @property
    def imported_funcs(self) -> list[Import]:
        return [i for i in self.imports if i.kind == "func"]

    @property
    def imported_globals(self) -> list[Import]:
        return [i for i in self.imports if i.kind == "global"]

    def func_type(self, index: int) -> FuncType:
        imported = self.imported_funcs
        if index < len(imported):
            return self.types[imported[index].desc]
        return self.functions[index - len(imported)].type

    def function(self, index: int) -> Function:
        return self.functions[index - len(self.imported_funcs)]

    def export(self, name: str, kind: str = "func") -> Export | None:
        for e in self.exports:
            if e.name == name and e.kind == kind:
                return e
        return None


# opcode -> (name, immediate kinds)
# immediate kinds: "u" unsigned LEB, "i32"/"i64" signed LEB, "f32"/"f64" raw,
# "bt" block type, "mem" memarg, "tbl" br_table, "b" single byte
_OPS: dict[int, tuple[str, tuple[str, ...]]] = {
    0x00: ("unreachable", ()), 0x01: ("nop", ()),
    0x02: ("block", ("bt",)), 0x03: ("loop", ("bt",)), 0x04: ("if", ("bt",)),
    0x05: ("else", ()), 0x0B: ("end", ()),
    0x0C: ("br", ("u",)), 0x0D: ("br_if", ("u",)), 0x0E: ("br_table", ("tbl",)),
    0x0F: ("return", ()), 0x10: ("call", ("u",)), 0x11: ("call_indirect", ("u", "u")),
    0x1A: ("drop", ()), 0x1B: ("select", ()), 0x1C: ("select_t", ("vec",)),
    0x20: ("local.get", ("u",)), 0x21: ("local.set", ("u",)), 0x22: ("local.tee", ("u",)),
    0x23: ("global.get", ("u",)), 0x24: ("global.set", ("u",)),
    0x25: ("table.get", ("u",)), 0x26: ("table.set", ("u",)),
    0x3F: ("memory.size", ("b",)), 0x40: ("memory.grow", ("b",)),
    0x41: ("i32.const", ("i32",)), 0x42: ("i64.const", ("i64",)),
    0x43: ("f32.const", ("f32",)), 0x44: ("f64.const", ("f64",)),
    0xD0: ("ref.null", ("b",)), 0xD1: ("ref.is_null", ()), 0xD2: ("ref.func", ("u",)),
}

_LOADS_STORES = [
    "i32.load", "i64.load", "f32.load", "f64.load",
    "i32.load8_s", "i32.load8_u", "i32.load16_s", "i32.load16_u",
    "i64.load8_s", "i64.load8_u", "i64.load16_s", "i64.load16_u", "i64.load32_s", "i64.load32_u",
    "i32.store", "i64.store", "f32.store", "f64.store",
    "i32.store8", "i32.store16", "i64.store8", "i64.store16", "i64.store32",
]
for _i, _name in enumerate(_LOADS_STORES):
    _OPS[0x28 + _i] = (_name, ("mem",))

_NUMERIC = """
i32.eqz i32.eq i32.ne i32.lt_s i32.lt_u i32.gt_s i32.gt_u i32.le_s i32.le_u i32.ge_s i32.ge_u
i64.eqz i64.eq i64.ne i64.lt_s i64.lt_u i64.gt_s i64.gt_u i64.le_s i64.le_u i64.ge_s i64.ge_u
f32.eq f32.ne f32.lt f32.gt f32.le f32.ge
f64.eq f64.ne f64.lt f64.gt f64.le f64.ge
i32.clz i32.ctz i32.popcnt i32.add i32.sub i32.mul i32.div_s i32.div_u i32.rem_s i32.rem_u
i32.and i32.or i32.xor i32.shl i32.shr_s i32.shr_u i32.rotl i32.rotr
i64.clz i64.ctz i64.popcnt i64.add i64.sub i64.mul i64.div_s i64.div_u i64.rem_s i64.rem_u
i64.and i64.or i64.xor i64.shl i64.shr_s i64.shr_u i64.rotl i64.rotr
f32.abs f32.neg f32.ceil f32.floor f32.trunc f32.nearest f32.sqrt f32.add f32.sub f32.mul f32.div
f32.min f32.max f32.copysign
f64.abs f64.neg f64.ceil f64.floor f64.trunc f64.nearest f64.sqrt f64.add f64.sub f64.mul f64.div
f64.min f64.max f64.copysign
i32.wrap_i64 i32.trunc_f32_s i32.trunc_f32_u i32.trunc_f64_s i32.trunc_f64_u
i64.extend_i32_s i64.extend_i32_u i64.trunc_f32_s i64.trunc_f32_u i64.trunc_f64_s i64.trunc_f64_u
f32.convert_i32_s f32.convert_i32_u f32.convert_i64_s f32.convert_i64_u f32.demote_f64
f64.convert_i32_s f64.convert_i32_u f64.convert_i64_s f64.convert_i64_u f64.promote_f32
i32.reinterpret_f32 i64.reinterpret_f64 f32.reinterpret_i32 f64.reinterpret_i64
i32.extend8_s i32.extend16_s i64.extend8_s i64.extend16_s i64.extend32_s
""".split()
for _i, _name in enumerate(_NUMERIC):
    _OPS[0x45 + _i] = (_name, ())

_PREFIX_FC = {
    0: ("i32.trunc_sat_f32_s", ()), 1: ("i32.trunc_sat_f32_u", ()),
    2: ("i32.trunc_sat_f64_s", ()), 3: ("i32.trunc_sat_f64_u", ()),
    4: ("i64.trunc_sat_f32_s", ()), 5: ("i64.trunc_sat_f32_u", ()),
    6: ("i64.trunc_sat_f64_s", ()), 7: ("i64.trunc_sat_f64_u", ()),
    8: ("memory.init", ("u", "b")), 9: ("data.drop", ("u",)),
    10: ("memory.copy", ("b", "b")), 11: ("memory.fill", ("b",)),
    12: ("table.init", ("u", "u")), 13: ("elem.drop", ("u",)),
    14: ("table.copy", ("u", "u")), 15: ("table.grow", ("u",)),
    16: ("table.size", ("u",)), 17: ("table.fill", ("u",)),
}


class _Reader:
    def __init__(self, data: bytes, pos: int = 0, end: int | None = None):
        self.data = data
        self.pos = pos
        self.end = len(data) if end is None else end

    def eof(self) -> bool:
        return self.pos >= self.end

    def byte(self) -> int:
        if self.pos >= self.end:
            raise DecodeError("unexpected end of input")
        b = self.data[self.pos]
        self.pos += 1
        return b

    def bytes(self, n: int) -> bytes:
        if self.pos + n > self.end:
            raise DecodeError("unexpected end of input")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u(self) -> int:
        result = shift = 0
        while True:
            b = self.byte()
            result |= (b & 0x7F) << shift
            shift += 7
            if not b & 0x80:
                return result

    def s(self, bits: int) -> int:
        result = shift = 0
        while True:
            b = self.byte()
            result |= (b & 0x7F) << shift
            shift += 7
            if not b & 0x80:
                break
        if b & 0x40:
            result -= 1 << shift
        # normalise to the signed range of the declared width
        result &= (1 << bits) - 1
        if result >> (bits - 1):
            result -= 1 << bits
        return result

    def name(self) -> str:
        return self.bytes(self.u()).decode("utf-8")

    def limits(self) -> tuple[int, int | None]:
        flag = self.byte()
        lo = self.u()
        hi = self.u() if flag & 1 else None
        return lo, hi


def _blocktype(r: _Reader) -> object:
    b = r.data[r.pos]
    if b == 0x40:
        r.pos += 1
        return None
    if b in VALTYPE_NAMES:
        r.pos += 1
        return b
    return ("type", r.s(33))


def decode_body(r: _Reader) -> list[Instr]:
    out: list[Instr] = []
    stack: list[int] = []
    depth = 1
    while depth:
        at = r.pos
        op = r.byte()
        if op == 0xFC:
            sub = r.u()
            if sub not in _PREFIX_FC:
                raise DecodeError(f"unsupported opcode 0xfc {sub}")
            name, kinds = _PREFIX_FC[sub]
        elif op in _OPS:
            name, kinds = _OPS[op]
        else:
            raise DecodeError(f"unsupported opcode {op:#x} at {at}")
        imm = []
        for kind in kinds:
            if kind == "u":
                imm.append(r.u())
            elif kind == "i32":
                imm.append(r.s(32))
            elif kind == "i64":
                imm.append(r.s(64))
            elif kind == "f32":
                imm.append(struct.unpack("<f", r.bytes(4))[0])
            elif kind == "f64":
                imm.append(struct.unpack("<d", r.bytes(8))[0])
            elif kind == "bt":
                imm.append(_blocktype(r))
            elif kind == "mem":
                align = r.u()
                imm.append(align)
                imm.append(r.u())
            elif kind == "tbl":
                targets = tuple(r.u() for _ in range(r.u()))
                imm.append(targets)
                imm.append(r.u())
            elif kind == "vec":
                imm.append(tuple(r.byte() for _ in range(r.u())))
            elif kind == "b":
                imm.append(r.byte())
        ins = Instr(name, tuple(imm), at)
        idx = len(out)
        out.append(ins)
        if name in ("block", "loop", "if"):
            stack.append(idx)
            depth += 1
        elif name == "else":
            out[stack[-1]].else_at = idx
        elif name == "end":
            depth -= 1
            if stack:
                opener = stack.pop()
                out[opener].match = idx
                ins.match = opener
    return out


def _const_expr(r: _Reader) -> list[Instr]:
    return decode_body(r)


def decode(data: bytes) -> Module:
    if data[:4] != b"\0asm":
        raise DecodeError("not a wasm module")
    if data[4:8] != b"\x01\0\0\0":
        raise DecodeError("unsupported wasm version")
    m = Module()
    r = _Reader(data, 8)
    bodies: list[tuple[list[int], list[Instr]]] = []
    while not r.eof():
        sid = r.byte()
        size = r.u()
        sec = _Reader(data, r.pos, r.pos + size)
        r.pos += size
        if sid == 0:
            _custom(sec, m)
        elif sid == 1:
            for _ in range(sec.u()):
                if sec.byte() != 0x60:
                    raise DecodeError("bad functype")
                params = tuple(sec.byte() for _ in range(sec.u()))
                results = tuple(sec.byte() for _ in range(sec.u()))
                m.types.append(FuncType(params, results))
        elif sid == 2:
            for _ in range(sec.u()):
                mod, name, kind = sec.name(), sec.name(), sec.byte()
                if kind == 0:
                    m.imports.append(Import(mod, name, "func", sec.u()))
                elif kind == 1:
                    et = sec.byte()
                    m.imports.append(Import(mod, name, "table", (et, *sec.limits())))
                elif kind == 2:
                    m.imports.append(Import(mod, name, "memory", sec.limits()))
                elif kind == 3:
                    m.imports.append(Import(mod, name, "global", (sec.byte(), bool(sec.byte()))))
                else:
                    raise DecodeError(f"bad import kind {kind}")
        elif sid == 3:
            m.func_types = [sec.u() for _ in range(sec.u())]
        elif sid == 4:
            for _ in range(sec.u()):
                et = sec.byte()
                m.tables.append((et, *sec.limits()))
        elif sid == 5:
            m.memories = [sec.limits() for _ in range(sec.u())]
        elif sid == 6:
            for _ in range(sec.u()):
                vt, mut = sec.byte(), bool(sec.byte())
                m.globals.append(Global(vt, mut, _const_expr(sec)))
        elif sid == 7:
            kinds = {0: "func", 1: "table", 2: "memory", 3: "global"}
            for _ in range(sec.u()):
                name = sec.name()
                m.exports.append(Export(name, kinds[sec.byte()], sec.u()))
        elif sid == 8:
            m.start = sec.u()
        elif sid == 9:
            for _ in range(sec.u()):
                m.elements.append(_element(sec))
        elif sid == 10:
            for _ in range(sec.u()):
                size = sec.u()
                end = sec.pos + size
                body = _Reader(data, sec.pos, end)
                local_types: list[int] = []
                for _ in range(body.u()):
                    n = body.u()
                    local_types.extend([body.byte()] * n)
                bodies.append((local_types, decode_body(body)))
                sec.pos = end
        elif sid == 11:
            for _ in range(sec.u()):
                flag = sec.u()
                if flag == 0:
                    off = _const_expr(sec)
                    m.data.append(Data(0, off, sec.bytes(sec.u())))
                elif flag == 1:
                    m.data.append(Data(0, None, sec.bytes(sec.u())))
                elif flag == 2:
                    mem = sec.u()
                    off = _const_expr(sec)
                    m.data.append(Data(mem, off, sec.bytes(sec.u())))
                else:
                    raise DecodeError(f"bad data segment flag {flag}")
        elif sid == 12:
            sec.u()  # data count
        else:
            raise DecodeError(f"unknown section {sid}")
    if len(bodies) != len(m.func_types):
        raise DecodeError("function and code section sizes differ")
    base = len(m.imported_funcs)
    for i, (local_types, body) in enumerate(bodies):
        idx = base + i
        m.functions.append(Function(idx, m.types[m.func_types[i]], local_types, body, m.func_names.get(idx)))
    return m


def _element(sec: _Reader) -> Element:
    flag = sec.u()
    if flag == 0:
        off = _const_expr(sec)
        return Element(0, off, [sec.u() for _ in range(sec.u())])
    if flag in (1, 3):
        sec.byte()  # elemkind
        return Element(0, None, [sec.u() for _ in range(sec.u())])
    if flag == 2:
        table = sec.u()
        off = _const_expr(sec)
        sec.byte()
        return Element(table, off, [sec.u() for _ in range(sec.u())])
    if flag == 4:
        off = _const_expr(sec)
        funcs = []
        for _ in range(sec.u()):
            expr = _const_expr(sec)
            funcs.append(expr[0].imm[0] if expr[0].op == "ref.func" else -1)
        return Element(0, off, funcs)
    raise DecodeError(f"unsupported element segment flag {flag}")


def _custom(sec: _Reader, m: Module) -> None:
    name = sec.name()
    if name != "name":
        return
    try:
        while not sec.eof():
            sub = sec.byte()
            size = sec.u()
            end = sec.pos + size
            if sub == 1:
                for _ in range(sec.u()):
                    idx = sec.u()
                    m.func_names[idx] = sec.name()
            sec.pos = end
    except (DecodeError, UnicodeDecodeError):
        # names are advisory
        pass
    for f in m.functions:
        f.name = m.func_names.get(f.index)


def const_value(expr: list[Instr], globals_: list | None = None) -> int | float:
    """Evaluate a constant initializer expression (single const or global.get)."""
    ins = expr[0]
    if ins.op.endswith(".const"):
        return ins.imm[0]
    if ins.op == "global.get" and globals_ is not None:
        return globals_[ins.imm[0]]
    raise DecodeError(f"unsupported constant expression {ins}")


def block_arity(m: Module, bt: object) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """(params, results) of a block type immediate."""
    if bt is None:
        return (), ()
    if isinstance(bt, tuple):
        ft = m.types[bt[1]]
        return ft.params, ft.results
    return (), (bt,)
