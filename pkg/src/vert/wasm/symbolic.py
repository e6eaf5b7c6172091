"""Bounded model checking of a wasm harness by symbolic execution.

The harness module imports nondeterministic inputs from the ``vert`` module
(``__vert_nondet_i32``, ``__vert_nondet_i64``, ``__vert_assume``) and exports
a proof function.  Every path through the proof function is explored with
z3; a panic or trap on a feasible path is a counterexample.

Loop handling mirrors CBMC/Kani unwinding: each loop instance whose control
flow depends on symbolic data may enter its header at most ``unwind`` times.
With ``unwind_checks`` off, longer paths are silently cut (bounded mode);
with them on, reaching the cut is reported as an unwinding failure.
Loops that only ever branch on concrete values run to completion, since
their trip count cannot vary across inputs.
"""

from __future__ import annotations

import argparse
import json
import math
import struct
import sys
import time
from dataclasses import dataclass, field

import z3

from .decode import F32, F64, I32, I64, Function, Module, block_arity, const_value, decode

PAGE = 65536
CHUNK = 4096

MASK = {32: 0xFFFFFFFF, 64: 0xFFFFFFFFFFFFFFFF}

# substrings of mangled names of functions that only exist to panic
PANIC_MARKERS = (
    "9panicking", "rust_begin_unwind", "__rust_start_panic", "10rust_panic", "13unwrap_failed",
    "13expect_failed", "18handle_alloc_error", "17capacity_overflow", "12handle_error",
    "17len_mismatch_fail", "8rust_oom", "__rust_abort", "11panic_const",
)


class Trap(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class Unsupported(Exception):
    pass


class PathCut(Exception):
    pass


class UnwindFailure(Exception):
    def __init__(self, where: str):
        super().__init__(where)
        self.where = where


def _bits(vt: int) -> int:
    return 32 if vt == I32 else 64


def _signed(v: int, bits: int) -> int:
    return v - (1 << bits) if v >> (bits - 1) else v


def _sym(v, bits: int):
    return v if isinstance(v, z3.BitVecRef) else z3.BitVecVal(v, bits)


def _simp(e):
    """Simplify; collapse to a Python int when the result is a numeral."""
    e = z3.simplify(e)
    if z3.is_bv_value(e):
        return e.as_long()
    return e


class Memory:
    """Copy-on-write byte memory with a symbolic overlay."""

    def __init__(self, size: int):
        self.size = size
        self.chunks: list[bytearray | None] = [None] * ((size + CHUNK - 1) // CHUNK)
        self.owned: set[int] = set()
        self.sym: dict[int, z3.BitVecRef] = {}

    def fork(self) -> "Memory":
        m = Memory.__new__(Memory)
        m.size = self.size
        m.chunks = list(self.chunks)
        m.owned = set()
        m.sym = dict(self.sym)
        self.owned = set()
        return m

    def grow(self, new_size: int) -> None:
        self.chunks.extend([None] * ((new_size + CHUNK - 1) // CHUNK - len(self.chunks)))
        self.size = new_size

    def _chunk_w(self, c: int) -> bytearray:
        ch = self.chunks[c]
        if ch is None:
            ch = bytearray(CHUNK)
            self.chunks[c] = ch
            self.owned.add(c)
        elif c not in self.owned:
            ch = bytearray(ch)
            self.chunks[c] = ch
            self.owned.add(c)
        return ch

    def read_concrete(self, addr: int, n: int) -> bytes:
        out = bytearray()
        while n:
            c, o = divmod(addr, CHUNK)
            take = min(n, CHUNK - o)
            ch = self.chunks[c]
            out += bytes(take) if ch is None else ch[o:o + take]
            addr += take
            n -= take
        return bytes(out)

    def write_concrete(self, addr: int, data: bytes) -> None:
        i = 0
        n = len(data)
        if self.sym:
            for a in range(addr, addr + n):
                self.sym.pop(a, None)
        while i < n:
            c, o = divmod(addr + i, CHUNK)
            take = min(n - i, CHUNK - o)
            self._chunk_w(c)[o:o + take] = data[i:i + take]
            i += take

    def fill(self, addr: int, value: int, n: int) -> None:
        if self.sym:
            for a in [a for a in self.sym if addr <= a < addr + n]:
                del self.sym[a]
        end = addr + n
        while addr < end:
            c, o = divmod(addr, CHUNK)
            take = min(end - addr, CHUNK - o)
            if value == 0 and o == 0 and take == CHUNK and self.chunks[c] is None:
                pass
            else:
                self._chunk_w(c)[o:o + take] = bytes([value]) * take
            addr += take

    def load(self, addr: int, n: int):
        raw = self.read_concrete(addr, n)
        if not self.sym or not any((addr + k) in self.sym for k in range(n)):
            return int.from_bytes(raw, "little")
        parts = []
        for k in range(n):
            b = self.sym.get(addr + k)
            parts.append(b if b is not None else z3.BitVecVal(raw[k], 8))
        return _same_source(parts)

    def store(self, addr: int, n: int, value) -> None:
        if isinstance(value, int):
            self.write_concrete(addr, value.to_bytes(n, "little"))
            return
        src, base = value, 0
        if z3.is_app_of(value, z3.Z3_OP_EXTRACT):
            src, base = value.arg(0), value.params()[1]
        for k in range(n):
            lo = base + 8 * k
            if lo == 0 and src.size() == 8:
                self.sym[addr + k] = src
            else:
                self.sym[addr + k] = z3.Extract(lo + 7, lo, src)
        # materialize the chunks so the concrete plane exists under the overlay
        for c in range(addr // CHUNK, (addr + n - 1) // CHUNK + 1):
            self._chunk_w(c)


def _byte_source(p):
    """(source, low bit) when ``p`` is one byte of a wider term."""
    if z3.is_app_of(p, z3.Z3_OP_EXTRACT):
        hi, lo = p.params()
        if hi - lo == 7:
            return p.arg(0), lo
    return p, 0


def _same_source(parts):
    """Reassemble little-endian bytes, merging runs cut from one term."""
    runs = []  # [source, low bit, byte count]
    for p in parts:
        src, lo = _byte_source(p)
        if runs:
            last = runs[-1]
            if last[0].eq(src) and last[1] + 8 * last[2] == lo:
                last[2] += 1
                continue
        runs.append([src, lo, 1])
    pieces = []
    for src, lo, count in runs:
        width = 8 * count
        if lo == 0 and src.size() == width:
            pieces.append(src)
        else:
            pieces.append(z3.Extract(lo + width - 1, lo, src))
    if len(pieces) == 1 and pieces[0] is runs[0][0]:
        return pieces[0]
    return _simp(pieces[0] if len(pieces) == 1 else z3.Concat(*reversed(pieces)))


@dataclass
class Label:
    kind: str
    start: int
    end: int
    height: int
    branch_arity: int
    result_arity: int
    count: int = 1  # loop-head entries, as CBMC counts unwinding
    symbolic: bool = False


@dataclass
class Frame:
    func: Function
    ip: int
    locals: list
    stack: list
    labels: list


@dataclass
class State:
    frames: list
    globals: list
    memory: Memory
    path: list
    draws: list
    table: list
    depth: dict = field(default_factory=dict)
    forks: int = 0
    defs: set = field(default_factory=set)

    def fork(self) -> "State":
        return State(
            frames=[Frame(f.func, f.ip, list(f.locals), list(f.stack),
                          [Label(**vars(l)) for l in f.labels]) for f in self.frames],
            globals=list(self.globals),
            memory=self.memory.fork(),
            path=list(self.path),
            draws=list(self.draws),
            table=self.table,
            depth=dict(self.depth),
            forks=self.forks,
            defs=set(self.defs),
        )


@dataclass
class CheckResult:
    status: str  # "pass" | "counterexample" | "unwind" | "timeout" | "error"
    counterexample: list | None = None
    reason: str = ""
    paths: int = 0
    cut_paths: int = 0
    instructions: int = 0
    unwind: int = 0
    unwind_checks: bool = False
    seconds: float = 0.0

    def to_json(self) -> dict:
        return {
            "status": self.status, "counterexample": self.counterexample, "reason": self.reason,
            "paths": self.paths, "cut_paths": self.cut_paths, "instructions": self.instructions,
            "unwind": self.unwind, "unwind_checks": self.unwind_checks, "seconds": round(self.seconds, 3),
        }


class SymbolicChecker:
    def __init__(self, module: Module, unwind: int, unwind_checks: bool,
                 deadline: float | None = None, max_addresses: int = 64):
        self.m = module
        self.unwind = unwind
        self.unwind_checks = unwind_checks
        self.deadline = deadline
        self.max_addresses = max_addresses
        self.n_imported = len(module.imported_funcs)
        self.panic_funcs = {
            f.index for f in module.functions if f.name and any(p in f.name for p in PANIC_MARKERS)
        }
        self.instructions = 0
        self.draw_count = 0
        self._inc = z3.Solver()
        self._asserted: list = []
        self._model = None
        self._divdefs: dict = {}
        self._keep: list = []

    # -- solver helpers -------------------------------------------------

    def _solver(self) -> z3.Solver:
        s = z3.Solver()
        self._set_timeout(s)
        return s

    def _set_timeout(self, s: z3.Solver) -> None:
        if self.deadline is not None:
            left = self.deadline - time.monotonic()
            if left <= 0:
                raise TimeoutError()
            s.set("timeout", max(1, int(left * 1000)))

    def _sync(self, path: list) -> z3.Solver:
        """Bring the shared incremental solver in line with ``path``.

        Paths are explored depth first, so consecutive queries usually share
        a long prefix; only the differing suffix is popped and re-asserted.
        """
        s = self._inc
        asserted = self._asserted
        n = 0
        limit = min(len(asserted), len(path))
        while n < limit and asserted[n] is path[n]:
            n += 1
        if n < len(asserted):
            s.pop(len(asserted) - n)
            del asserted[n:]
        for c in path[n:]:
            s.push()
            s.add(c)
            asserted.append(c)
        self._set_timeout(s)
        return s

    def feasible(self, path: list, extra=None) -> bool:
        if extra is not None and self._model is not None:
            # a model of a prefix-compatible query may already witness this one
            try:
                if all(z3.is_true(self._model.eval(c)) for c in path[-4:]) and \
                        z3.is_true(self._model.eval(extra, model_completion=True)) and \
                        all(z3.is_true(self._model.eval(c, model_completion=True)) for c in path):
                    return True
            except z3.Z3Exception:
                pass
        s = self._sync(path)
        if extra is not None:
            s.push()
            s.add(extra)
        try:
            r = s.check()
            if r == z3.sat:
                self._model = s.model()
        finally:
            if extra is not None:
                s.pop()
        if r == z3.unknown:
            if self.deadline is not None and time.monotonic() >= self.deadline:
                raise TimeoutError()
            raise Unsupported("solver returned unknown")
        return r == z3.sat

    def model_values(self, st: State, extra=None) -> list[int]:
        s = self._solver()
        s.add(*st.path)
        if extra is not None:
            s.add(extra)
        if s.check() != z3.sat:
            raise Unsupported("counterexample path became infeasible")
        model = s.model()
        out = []
        for var, bits in st.draws:
            v = model.eval(var, model_completion=True).as_long()
            out.append(_signed(v, bits))
        return out

    # -- initial state --------------------------------------------------

    def initial_state(self) -> State:
        m = self.m
        pages = m.memories[0][0] if m.memories else 0
        mem = Memory(pages * PAGE)
        gvals: list = []
        for g in m.globals:
            v = const_value(g.init, gvals)
            if g.valtype in (I32, I64):
                v &= MASK[_bits(g.valtype)]
            gvals.append(v)
        for seg in m.data:
            if seg.offset is not None:
                mem.write_concrete(const_value(seg.offset, gvals) & MASK[32], seg.payload)
        table: list = []
        if m.tables:
            table = [None] * m.tables[0][1]
            for seg in m.elements:
                if seg.offset is not None:
                    base = const_value(seg.offset, gvals)
                    for k, f in enumerate(seg.funcs):
                        table[base + k] = f
        return State(frames=[], globals=gvals, memory=mem, path=[], draws=[], table=table)

    # -- exploration ----------------------------------------------------

    def check(self, entry: str) -> CheckResult:
        t0 = time.monotonic()
        ex = self.m.export(entry)
        if ex is None:
            return CheckResult("error", reason=f"no exported function {entry!r}")
        st = self.initial_state()
        if self.m.start is not None:
            self._push_call(st, self.m.start, [])
        self._push_call(st, ex.index, [])
        work = [st]
        paths = cut = 0
        result = CheckResult("pass")
        try:
            while work:
                st = work.pop()
                try:
                    self._run(st, work)
                    paths += 1
                except PathCut:
                    cut += 1
                except Trap as t:
                    result = CheckResult("counterexample", self.model_values(st), t.reason)
                    break
                except UnwindFailure as u:
                    result = CheckResult("unwind", None, f"unwinding assertion loop {u.where}")
                    break
        except TimeoutError:
            result = CheckResult("timeout", reason="checker deadline reached")
        except (Unsupported, RecursionError) as e:
            result = CheckResult("error", reason=str(e))
        result.paths = paths
        result.cut_paths = cut
        result.instructions = self.instructions
        result.unwind = self.unwind
        result.unwind_checks = self.unwind_checks
        result.seconds = time.monotonic() - t0
        return result

    def _push_call(self, st: State, index: int, args: list) -> None:
        f = self.m.function(index)
        locals_ = list(args)
        for t in f.locals:
            locals_.append(0.0 if t in (F32, F64) else 0)
        arity = len(f.type.results)
        label = Label("func", -1, len(f.body) - 1, 0, arity, arity)
        st.frames.append(Frame(f, 0, locals_, [], [label]))
        st.depth[index] = st.depth.get(index, 0) + 1
        if st.depth[index] > self.unwind and st.forks:
            if self.unwind_checks:
                raise UnwindFailure(f"recursion in func {index}")
            raise PathCut()
        if len(st.frames) > 2000:
            raise Unsupported("call depth exceeded")

    def _branch_cond(self, st: State, cond, work: list) -> bool:
        """Decide a two-way branch on i32 ``cond``; may fork into ``work``."""
        if isinstance(cond, int):
            return cond != 0
        c = z3.simplify(cond != 0)
        if z3.is_true(c):
            return True
        if z3.is_false(c):
            return False
        for lab in st.frames[-1].labels:
            if lab.kind == "loop":
                lab.symbolic = True
        t_ok = self.feasible(st.path, c)
        f_ok = self.feasible(st.path, z3.Not(c))
        if t_ok and f_ok:
            other = st.fork()
            other.path.append(z3.Not(c))
            other.forks += 1
            work.append(other)
            st.path.append(c)
            st.forks += 1
            return True
        if t_ok:
            st.path.append(c)
            return True
        if f_ok:
            st.path.append(z3.Not(c))
            return False
        raise PathCut()

    def _guard(self, st: State, bad, reason: str, work: list) -> None:
        """Trap if ``bad`` (a z3 Bool) is feasible on the current path."""
        b = z3.simplify(bad)
        if z3.is_false(b):
            return
        if z3.is_true(b):
            raise Trap(reason)
        if self.feasible(st.path, b):
            # report the trapping path first; the caller continues with the rest
            trap = st.fork()
            trap.path.append(b)
            st.path.append(z3.Not(b))
            raise _TrapFork(trap, reason)
        st.path.append(z3.Not(b))

    def _address(self, st: State, base, offset: int, n: int) -> list[int]:
        """Concrete candidate addresses for an access; traps on possible OOB."""
        if isinstance(base, int):
            addr = base + offset
            if addr + n > st.memory.size:
                raise Trap("out of bounds memory access")
            return [addr]
        ea = z3.ZeroExt(32, base) + offset
        bad = z3.UGT(ea + n, z3.BitVecVal(st.memory.size, 64))
        if self.feasible(st.path, bad):
            raise _TrapFork(_with(st, bad), "out of bounds memory access")
        st.path.append(z3.Not(bad))
        values = []
        s = z3.Solver()
        s.add(*st.path)
        while len(values) <= self.max_addresses:
            if s.check() != z3.sat:
                break
            v = s.model().eval(ea, model_completion=True).as_long()
            values.append(v)
            s.add(ea != v)
        if len(values) > self.max_addresses:
            raise Unsupported("symbolic address ranges over too many locations")
        self._addr_expr = ea
        return values

    def _load(self, st: State, base, offset: int, n: int):
        addrs = self._address(st, base, offset, n)
        if len(addrs) == 1:
            if not isinstance(base, int):
                st.path.append(self._addr_expr == addrs[0])
            return st.memory.load(addrs[0], n)
        ea = self._addr_expr
        out = _sym(st.memory.load(addrs[-1], n), 8 * n)
        for a in reversed(addrs[:-1]):
            out = z3.If(ea == a, _sym(st.memory.load(a, n), 8 * n), out)
        return _simp(out)

    def _store(self, st: State, base, offset: int, n: int, value) -> None:
        addrs = self._address(st, base, offset, n)
        if len(addrs) == 1:
            if not isinstance(base, int):
                st.path.append(self._addr_expr == addrs[0])
            st.memory.store(addrs[0], n, value)
            return
        ea = self._addr_expr
        for a in addrs:
            old = _sym(st.memory.load(a, n), 8 * n)
            st.memory.store(a, n, _simp(z3.If(ea == a, _sym(value, 8 * n), old)))

    # -- interpreter ----------------------------------------------------

    def _run(self, st: State, work: list) -> None:
        while True:
            try:
                self._run_inner(st, work)
                return
            except _TrapFork as tf:
                # explore the trapping branch first: it carries the answer
                work.append(st)
                raise_state = tf.state
                st_vals = self.model_values(raise_state)
                raise _Found(st_vals, tf.reason)

    def _run_inner(self, st: State, work: list) -> None:
        m = self.m
        while st.frames:
            fr = st.frames[-1]
            body = fr.func.body
            stack = fr.stack
            ins = body[fr.ip]
            op = ins.op
            self.instructions += 1
            if self.instructions & 0x3FF == 0 and self.deadline is not None and time.monotonic() > self.deadline:
                raise TimeoutError()
            fr.ip += 1
            if op == "local.get":
                stack.append(fr.locals[ins.imm[0]])
            elif op == "local.set":
                fr.locals[ins.imm[0]] = stack.pop()
            elif op == "local.tee":
                fr.locals[ins.imm[0]] = stack[-1]
            elif op == "i32.const":
                stack.append(ins.imm[0] & MASK[32])
            elif op == "i64.const":
                stack.append(ins.imm[0] & MASK[64])
            elif op == "global.get":
                stack.append(st.globals[ins.imm[0]])
            elif op == "global.set":
                st.globals[ins.imm[0]] = stack.pop()
            elif op in ("block", "loop"):
                params, results = block_arity(m, ins.imm[0])
                h = len(stack) - len(params)
                if op == "loop":
                    fr.labels.append(Label("loop", fr.ip - 1, ins.match, h, len(params), len(results)))
                else:
                    fr.labels.append(Label("block", fr.ip - 1, ins.match, h, len(results), len(results)))
            elif op == "if":
                params, results = block_arity(m, ins.imm[0])
                cond = stack.pop()
                taken = self._branch_cond(st, cond, work)
                h = len(stack) - len(params)
                if taken:
                    fr.labels.append(Label("if", fr.ip - 1, ins.match, h, len(results), len(results)))
                elif ins.else_at is not None:
                    fr.labels.append(Label("if", fr.ip - 1, ins.match, h, len(results), len(results)))
                    fr.ip = ins.else_at + 1
                else:
                    fr.ip = ins.match + 1
            elif op == "else":
                lab = fr.labels.pop()
                fr.ip = lab.end + 1
            elif op == "end":
                lab = fr.labels.pop()
                if lab.kind == "func":
                    self._return(st)
            elif op == "br":
                self._br(st, fr, ins.imm[0])
            elif op == "br_if":
                cond = stack.pop()
                if self._branch_cond(st, cond, work):
                    self._br(st, fr, ins.imm[0])
            elif op == "br_table":
                idx = stack.pop()
                targets, default = ins.imm
                if isinstance(idx, int):
                    t = targets[idx] if idx < len(targets) else default
                else:
                    t = self._br_table_sym(st, idx, targets, default, work)
                self._br(st, fr, t)
            elif op == "return":
                self._return(st)
            elif op == "call":
                self._call(st, ins.imm[0], work)
            elif op == "call_indirect":
                ft = m.types[ins.imm[0]]
                idx = stack.pop()
                if not isinstance(idx, int):
                    raise Unsupported("symbolic indirect call target")
                if idx >= len(st.table) or st.table[idx] is None:
                    raise Trap("undefined table element")
                target = st.table[idx]
                if m.func_type(target) != ft:
                    raise Trap("indirect call type mismatch")
                self._call(st, target, work)
            elif op == "drop":
                stack.pop()
            elif op in ("select", "select_t"):
                c = stack.pop()
                b = stack.pop()
                a = stack.pop()
                if isinstance(c, int):
                    stack.append(a if c else b)
                elif isinstance(a, float) or isinstance(b, float):
                    raise Unsupported("symbolic select over floats")
                else:
                    bits = c.size() if isinstance(a, int) and isinstance(b, int) else (
                        a.size() if not isinstance(a, int) else b.size())
                    if isinstance(a, int) and isinstance(b, int):
                        bits = 64 if max(a, b) > MASK[32] else 32
                    stack.append(_simp(z3.If(c != 0, _sym(a, bits), _sym(b, bits))))
            elif op == "unreachable":
                raise Trap("unreachable executed")
            elif op == "nop":
                pass
            elif ".load" in op:
                self._do_load(st, fr, op, ins.imm[1], work)
            elif ".store" in op:
                self._do_store(st, fr, op, ins.imm[1])
            elif op == "memory.size":
                stack.append(st.memory.size // PAGE)
            elif op == "memory.grow":
                n = stack.pop()
                if not isinstance(n, int):
                    raise Unsupported("symbolic memory.grow")
                old = st.memory.size // PAGE
                limit = self.m.memories[0][1] if self.m.memories and self.m.memories[0][1] else 65536
                if old + n > limit:
                    stack.append(MASK[32])
                else:
                    st.memory.grow((old + n) * PAGE)
                    stack.append(old)
            elif op == "memory.fill":
                n, val, dst = stack.pop(), stack.pop(), stack.pop()
                if not all(isinstance(x, int) for x in (n, dst)):
                    raise Unsupported("symbolic memory.fill bounds")
                if dst + n > st.memory.size:
                    raise Trap("out of bounds memory fill")
                if isinstance(val, int):
                    st.memory.fill(dst, val & 0xFF, n)
                else:
                    for a in range(dst, dst + n):
                        st.memory.store(a, 1, _simp(z3.Extract(7, 0, val)))
            elif op == "memory.copy":
                n, src, dst = stack.pop(), stack.pop(), stack.pop()
                if not all(isinstance(x, int) for x in (n, src, dst)):
                    raise Unsupported("symbolic memory.copy bounds")
                if src + n > st.memory.size or dst + n > st.memory.size:
                    raise Trap("out of bounds memory copy")
                syms = {a - src: st.memory.sym[a] for a in range(src, src + n) if a in st.memory.sym} \
                    if st.memory.sym else {}
                data = st.memory.read_concrete(src, n)
                st.memory.write_concrete(dst, data)
                for k, b in syms.items():
                    st.memory.sym[dst + k] = b
            else:
                self._numeric(st, stack, op, work)

    def _br_table_sym(self, st: State, idx, targets, default, work: list) -> int:
        n = len(targets)
        for k in range(n):
            if self._branch_cond(st, _simp(z3.If(idx == k, z3.BitVecVal(1, 32), z3.BitVecVal(0, 32))), work):
                return targets[k]
        return default

    def _br(self, st: State, fr: Frame, depth: int) -> None:
        lab = fr.labels[-1 - depth]
        if lab.kind == "func":
            self._return(st)
            return
        n = lab.branch_arity
        vals = fr.stack[len(fr.stack) - n:] if n else []
        del fr.stack[lab.height:]
        fr.stack.extend(vals)
        if lab.kind == "loop":
            del fr.labels[len(fr.labels) - depth:]
            lab.count += 1
            if lab.symbolic and lab.count > self.unwind:
                if self.unwind_checks:
                    raise UnwindFailure(f"{fr.func.index}:{lab.start}")
                raise PathCut()
            fr.ip = lab.start + 1
        else:
            del fr.labels[len(fr.labels) - 1 - depth:]
            fr.ip = lab.end + 1

    def _return(self, st: State) -> None:
        fr = st.frames.pop()
        st.depth[fr.func.index] -= 1
        n = len(fr.func.type.results)
        if st.frames and n:
            st.frames[-1].stack.extend(fr.stack[len(fr.stack) - n:])

    def _call(self, st: State, index: int, work: list) -> None:
        stack = st.frames[-1].stack
        if index < self.n_imported:
            self._host_call(st, self.m.imported_funcs[index], work)
            return
        if index in self.panic_funcs:
            raise Trap(f"panic in {self.m.func_names.get(index, index)}")
        ft = self.m.func_type(index)
        n = len(ft.params)
        args = stack[len(stack) - n:] if n else []
        if n:
            del stack[len(stack) - n:]
        self._push_call(st, index, args)

    def _host_call(self, st: State, imp, work: list) -> None:
        stack = st.frames[-1].stack
        name = imp.name
        if name in ("__vert_nondet_i32", "__vert_nondet_i64"):
            bits = 32 if name.endswith("i32") else 64
            self.draw_count += 1
            var = z3.BitVec(f"in{len(st.draws)}_{self.draw_count}", bits)
            st.draws.append((var, bits))
            stack.append(var)
        elif name == "__vert_assume":
            c = stack.pop()
            if isinstance(c, int):
                if c == 0:
                    raise PathCut()
            else:
                cond = z3.simplify(c != 0)
                if z3.is_false(cond) or not self.feasible(st.path, cond):
                    raise PathCut()
                st.path.append(cond)
        else:
            raise Unsupported(f"call to unknown host function {imp.module}.{name}")

    def _do_load(self, st: State, fr: Frame, op: str, offset: int, work: list) -> None:
        ty, _, kind = op.partition(".load")
        base = fr.stack.pop()
        n = {"": 4 if ty in ("i32", "f32") else 8, "8_s": 1, "8_u": 1, "16_s": 2, "16_u": 2, "32_s": 4, "32_u": 4}[kind]
        try:
            v = self._load(st, base, offset, n)
        except _TrapFork:
            raise
        bits = 32 if ty in ("i32", "f32") else 64
        if ty in ("f32", "f64"):
            if not isinstance(v, int):
                raise Unsupported("symbolic float load")
            fr.stack.append(struct.unpack("<f" if ty == "f32" else "<d", v.to_bytes(n, "little"))[0])
            return
        if n * 8 < bits:
            if isinstance(v, int):
                if kind.endswith("_s") and v >> (8 * n - 1):
                    v -= 1 << (8 * n)
                v &= MASK[bits]
            else:
                ext = z3.SignExt if kind.endswith("_s") else z3.ZeroExt
                v = _simp(ext(bits - 8 * n, v))
        fr.stack.append(v)

    def _do_store(self, st: State, fr: Frame, op: str, offset: int) -> None:
        ty, _, kind = op.partition(".store")
        v = fr.stack.pop()
        base = fr.stack.pop()
        n = {"": 4 if ty in ("i32", "f32") else 8, "8": 1, "16": 2, "32": 4}[kind]
        if isinstance(v, float):
            v = int.from_bytes(struct.pack("<f" if ty == "f32" else "<d", v), "little")
        elif n * 8 < _width(v, ty):
            v = v & ((1 << (8 * n)) - 1) if isinstance(v, int) else _simp(z3.Extract(8 * n - 1, 0, v))
        self._store(st, base, offset, n, v)

    def _numeric(self, st: State, stack: list, op: str, work: list) -> None:
        ty, _, name = op.partition(".")
        if ty in ("f32", "f64") or "trunc_f" in op or "trunc_sat" in op or "convert" in op \
                or "reinterpret" in op or op in ("f32.demote_f64", "f64.promote_f32"):
            _float_op(stack, op)
            return
        bits = 32 if ty == "i32" else 64
        mask = MASK[bits]
        if name in ("eqz", "clz", "ctz", "popcnt") or name.startswith("extend") or name.startswith("wrap"):
            a = stack.pop()
            stack.append(_int_unop(op, a))
            return
        b = stack.pop()
        a = stack.pop()
        if isinstance(a, int) and isinstance(b, int):
            stack.append(_int_binop_concrete(name, a, b, bits))
            return
        sa, sb = _sym(a, bits), _sym(b, bits)
        if name in ("div_s", "div_u", "rem_s", "rem_u") and isinstance(b, int) and \
                (name.endswith("_u") and b > 1 or name.endswith("_s") and 1 < _signed(b, bits) or
                 name.endswith("_s") and _signed(b, bits) < -1):
            q, r = self._divmod_const(st, a, b, bits, name.endswith("_s"))
            stack.append(q if name.startswith("div") else r)
            return
        if name in ("div_s", "div_u", "rem_s", "rem_u"):
            self._guard_fork(st, sb == 0, "integer divide by zero", work)
            if name == "div_s":
                self._guard_fork(st, z3.And(sa == (1 << (bits - 1)), sb == mask), "integer overflow", work)
        stack.append(_simp(_int_binop_sym(name, sa, sb, bits)))

    def _divmod_const(self, st: State, a, c: int, bits: int, signed: bool):
        """Quotient and remainder of symbolic ``a`` by a constant.

        Bit-blasted dividers are very expensive for the solver, so the pair
        is introduced as fresh variables tied to ``a`` by ``a = q*c + r``
        with the remainder range of truncating division.  The definition
        is functional, so sharing it between paths is sound.
        """
        key = (a.get_id(), c, bits, signed)
        hit = self._divdefs.get(key)
        if hit is None:
            n = len(self._divdefs)
            q = z3.BitVec(f"q{n}_{bits}", bits)
            r = z3.BitVec(f"r{n}_{bits}", bits)
            ext = z3.SignExt if signed else z3.ZeroExt
            cv = _signed(c, bits) if signed else c
            wide = ext(bits + 2, a) == ext(bits + 2, q) * cv + ext(bits + 2, r)
            if signed:
                mag = abs(cv)
                rng = z3.And(r > -mag, r < mag, z3.Implies(a >= 0, r >= 0), z3.Implies(a < 0, r <= 0))
            else:
                rng = z3.ULT(r, c)
            hit = (q, r, z3.And(wide, rng))
            self._divdefs[key] = hit
            self._keep.append(a)
        if key not in st.defs:
            st.defs.add(key)
            st.path.append(hit[2])
        return hit[0], hit[1]

    def _guard_fork(self, st: State, bad, reason: str, work: list) -> None:
        b = z3.simplify(bad)
        if z3.is_false(b):
            return
        if z3.is_true(b):
            raise Trap(reason)
        if self.feasible(st.path, b):
            raise _TrapFork(_with(st, b), reason)
        st.path.append(z3.Not(b))


class _TrapFork(Exception):
    def __init__(self, state: State, reason: str):
        super().__init__(reason)
        self.state = state
        self.reason = reason


class _Found(Trap):
    def __init__(self, values: list, reason: str):
        super().__init__(reason)
        self.values = values


def _with(st: State, cond) -> State:
    s = st.fork()
    s.path.append(cond)
    return s


def _width(v, ty: str) -> int:
    if isinstance(v, int):
        return 32 if ty == "i32" else 64
    return v.size()


def _int_unop(op: str, a):
    ty, _, name = op.partition(".")
    bits = 32 if ty == "i32" else 64
    if isinstance(a, int):
        if name == "eqz":
            return int(a == 0)
        if name == "clz":
            return bits - a.bit_length()
        if name == "ctz":
            return bits if a == 0 else (a & -a).bit_length() - 1
        if name == "popcnt":
            return bin(a).count("1")
        if op == "i32.wrap_i64":
            return a & MASK[32]
        if op == "i64.extend_i32_s":
            return _signed(a, 32) & MASK[64]
        if op == "i64.extend_i32_u":
            return a
        src = {"extend8_s": 8, "extend16_s": 16, "extend32_s": 32}[name]
        v = a & ((1 << src) - 1)
        if v >> (src - 1):
            v -= 1 << src
        return v & MASK[bits]
    if name == "eqz":
        return _simp(z3.If(a == 0, z3.BitVecVal(1, 32), z3.BitVecVal(0, 32)))
    if op == "i32.wrap_i64":
        return _simp(z3.Extract(31, 0, a))
    if op == "i64.extend_i32_s":
        return _simp(z3.SignExt(32, a))
    if op == "i64.extend_i32_u":
        return _simp(z3.ZeroExt(32, a))
    if name.startswith("extend"):
        src = {"extend8_s": 8, "extend16_s": 16, "extend32_s": 32}[name]
        return _simp(z3.SignExt(bits - src, z3.Extract(src - 1, 0, a)))
    if name == "popcnt":
        total = z3.BitVecVal(0, bits)
        for k in range(bits):
            total = total + z3.ZeroExt(bits - 1, z3.Extract(k, k, a))
        return _simp(total)
    if name == "clz":
        out = z3.BitVecVal(bits, bits)
        for k in range(bits):
            out = z3.If(z3.Extract(k, k, a) == 1, z3.BitVecVal(bits - 1 - k, bits), out)
        return _simp(out)
    if name == "ctz":
        out = z3.BitVecVal(bits, bits)
        for k in reversed(range(bits)):
            out = z3.If(z3.Extract(k, k, a) == 1, z3.BitVecVal(k, bits), out)
        return _simp(out)
    raise Unsupported(op)


def _int_binop_concrete(name: str, a: int, b: int, bits: int) -> int:
    mask = MASK[bits]
    sa, sb = _signed(a, bits), _signed(b, bits)
    if name == "add":
        return (a + b) & mask
    if name == "sub":
        return (a - b) & mask
    if name == "mul":
        return (a * b) & mask
    if name in ("div_s", "div_u", "rem_s", "rem_u") and b == 0:
        raise Trap("integer divide by zero")
    if name == "div_s":
        if sa == -(1 << (bits - 1)) and sb == -1:
            raise Trap("integer overflow")
        q = abs(sa) // abs(sb)
        return (q if (sa < 0) == (sb < 0) else -q) & mask
    if name == "div_u":
        return a // b
    if name == "rem_s":
        r = abs(sa) % abs(sb)
        return (-r if sa < 0 else r) & mask
    if name == "rem_u":
        return a % b
    if name == "and":
        return a & b
    if name == "or":
        return a | b
    if name == "xor":
        return a ^ b
    if name == "shl":
        return (a << (b % bits)) & mask
    if name == "shr_s":
        return (sa >> (b % bits)) & mask
    if name == "shr_u":
        return a >> (b % bits)
    if name == "rotl":
        k = b % bits
        return ((a << k) | (a >> (bits - k))) & mask
    if name == "rotr":
        k = b % bits
        return ((a >> k) | (a << (bits - k))) & mask
    cmp = {
        "eq": a == b, "ne": a != b, "lt_s": sa < sb, "lt_u": a < b, "gt_s": sa > sb, "gt_u": a > b,
        "le_s": sa <= sb, "le_u": a <= b, "ge_s": sa >= sb, "ge_u": a >= b,
    }
    if name in cmp:
        return int(cmp[name])
    raise Unsupported(name)


def _int_binop_sym(name: str, a, b, bits: int):
    one, zero = z3.BitVecVal(1, 32), z3.BitVecVal(0, 32)
    shift = z3.URem(b, bits)
    ops = {
        "add": lambda: a + b, "sub": lambda: a - b, "mul": lambda: a * b,
        "div_s": lambda: a / b, "div_u": lambda: z3.UDiv(a, b),
        "rem_s": lambda: z3.SRem(a, b), "rem_u": lambda: z3.URem(a, b),
        "and": lambda: a & b, "or": lambda: a | b, "xor": lambda: a ^ b,
        "shl": lambda: a << shift, "shr_s": lambda: a >> shift, "shr_u": lambda: z3.LShR(a, shift),
        "rotl": lambda: z3.RotateLeft(a, shift), "rotr": lambda: z3.RotateRight(a, shift),
    }
    if name in ops:
        return ops[name]()
    cmps = {
        "eq": lambda: a == b, "ne": lambda: a != b, "lt_s": lambda: a < b, "lt_u": lambda: z3.ULT(a, b),
        "gt_s": lambda: a > b, "gt_u": lambda: z3.UGT(a, b), "le_s": lambda: a <= b,
        "le_u": lambda: z3.ULE(a, b), "ge_s": lambda: a >= b, "ge_u": lambda: z3.UGE(a, b),
    }
    if name in cmps:
        return z3.If(cmps[name](), one, zero)
    raise Unsupported(name)


def _f32(x: float) -> float:
    return struct.unpack("<f", struct.pack("<f", x))[0] if math.isfinite(x) else x


def _float_op(stack: list, op: str) -> None:
    """Concrete-only float semantics."""
    ty, _, name = op.partition(".")
    arity2 = name in ("add", "sub", "mul", "div", "min", "max", "copysign", "eq", "ne", "lt", "gt", "le", "ge")
    args = [stack.pop()] if not arity2 else [stack.pop(), stack.pop()][::-1]
    if any(not isinstance(x, (int, float)) for x in args):
        raise Unsupported(f"symbolic operand to {op}")
    rnd = _f32 if ty == "f32" else float
    if arity2:
        a, b = args
        if name in ("eq", "ne", "lt", "gt", "le", "ge"):
            r = {"eq": a == b, "ne": a != b, "lt": a < b, "gt": a > b, "le": a <= b, "ge": a >= b}[name]
            stack.append(int(r))
            return
        if name == "div":
            if b == 0:
                r = math.nan if a == 0 or math.isnan(a) else math.copysign(math.inf, a) * math.copysign(1, b)
            else:
                r = a / b
        else:
            r = {"add": lambda: a + b, "sub": lambda: a - b, "mul": lambda: a * b,
                 "min": lambda: min(a, b), "max": lambda: max(a, b),
                 "copysign": lambda: math.copysign(a, b)}[name]()
        stack.append(rnd(r))
        return
    (a,) = args
    if name in ("abs", "neg", "ceil", "floor", "trunc", "nearest", "sqrt"):
        if name in ("ceil", "floor", "trunc", "nearest") and not math.isfinite(a):
            stack.append(a)
            return
        r = {"abs": lambda: abs(a), "neg": lambda: -a, "ceil": lambda: float(math.ceil(a)),
             "floor": lambda: float(math.floor(a)), "trunc": lambda: float(math.trunc(a)),
             "nearest": lambda: float(round(a)), "sqrt": lambda: math.sqrt(a) if a >= 0 else math.nan}[name]()
        stack.append(rnd(r))
        return
    if "convert" in name:
        src_bits = 32 if name.endswith("i32_s") or name.endswith("i32_u") else 64
        v = _signed(a, src_bits) if name.endswith("_s") else a
        stack.append(rnd(float(v)))
        return
    if name in ("demote_f64",):
        stack.append(_f32(a))
        return
    if name in ("promote_f32",):
        stack.append(float(a))
        return
    if "reinterpret" in name:
        if ty == "i32":
            stack.append(int.from_bytes(struct.pack("<f", a), "little"))
        elif ty == "i64":
            stack.append(int.from_bytes(struct.pack("<d", a), "little"))
        elif ty == "f32":
            stack.append(struct.unpack("<f", a.to_bytes(4, "little"))[0])
        else:
            stack.append(struct.unpack("<d", a.to_bytes(8, "little"))[0])
        return
    # float -> int truncation
    bits = 32 if ty == "i32" else 64
    signed = name.endswith("_s")
    lo, hi = (-(1 << (bits - 1)), (1 << (bits - 1)) - 1) if signed else (0, (1 << bits) - 1)
    if math.isnan(a):
        if "sat" in name:
            stack.append(0)
            return
        raise Trap("invalid conversion to integer")
    t = math.trunc(a) if math.isfinite(a) else (hi + 1 if a > 0 else lo - 1)
    if t < lo or t > hi:
        if "sat" in name:
            t = lo if t < lo else hi
        else:
            raise Trap("integer overflow in conversion")
    stack.append(t & MASK[bits])


def check_module(wasm: bytes, entry: str, unwind: int, unwind_checks: bool,
                 time_limit: float | None = None) -> CheckResult:
    module = decode(wasm)
    deadline = time.monotonic() + time_limit if time_limit else None
    checker = SymbolicChecker(module, unwind, unwind_checks, deadline)
    try:
        return checker.check(entry)
    except _Found as f:
        return CheckResult("counterexample", f.values, f.reason, instructions=checker.instructions,
                           unwind=unwind, unwind_checks=unwind_checks)


def render_log(result: CheckResult) -> str:
    """Kani-style textual summary followed by a machine-readable line."""
    lines = [f"Checking harness with unwind={result.unwind} "
             f"unwinding-assertions={'on' if result.unwind_checks else 'off'}"]
    if result.status == "pass":
        lines.append("VERIFICATION:- SUCCESSFUL")
    elif result.status == "counterexample":
        lines.append(f"Failed Checks: {result.reason}")
        lines.append("VERIFICATION:- FAILED")
    elif result.status == "unwind":
        lines.append(f"Failed Checks: {result.reason}")
        lines.append("VERIFICATION:- FAILED (unwinding assertion)")
    elif result.status == "timeout":
        lines.append("VERIFICATION:- TIMEOUT")
    else:
        lines.append(f"ERROR: {result.reason}")
    lines.append("VERT-CHECK " + json.dumps(result.to_json(), sort_keys=True))
    return "\n".join(lines) + "\n"


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="vert-symcheck", description="bounded model checking of a wasm harness")
    ap.add_argument("wasm")
    ap.add_argument("--entry", default="vert_proof")
    ap.add_argument("--unwind", type=int, default=10)
    ap.add_argument("--unwinding-assertions", action="store_true")
    ap.add_argument("--time-limit", type=float, default=None)
    args = ap.parse_args(argv)
    with open(args.wasm, "rb") as fh:
        wasm = fh.read()
    sys.setrecursionlimit(10000)
    result = check_module(wasm, args.entry, args.unwind, args.unwinding_assertions, args.time_limit)
    sys.stdout.write(render_log(result))
    return {"pass": 0, "counterexample": 1, "unwind": 1, "timeout": 3}.get(result.status, 2)


if __name__ == "__main__":
    sys.exit(main())
