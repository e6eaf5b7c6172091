"""Lifter and symbolic checker checked against independent semantics."""

import pytest
import z3
from hypothesis import given, settings, strategies as st

from vert.config import ToolConfig
from vert.oracle import C_PRELUDE
from vert.toolchain import run
from vert.wasm.decode import I32, I64, decode
from vert.wasm.lift import lift_module, literal
from vert.wasm.symbolic import Trap, _int_binop_concrete, _int_binop_sym

from conftest import needs_toolchain

MIXED_C = r"""
typedef unsigned int u32;
typedef long long i64;
static int table[8] = {3, 1, 4, 1, 5, 9, 2, 6};

static int collatz_steps(int n) {
  int steps = 0;
  unsigned m = (unsigned)n % 1000u + 1u;
  while (m != 1u && steps < 200) { m = (m & 1u) ? 3u * m + 1u : m >> 1; steps++; }
  return steps;
}

int mixed(int a, int b, i64 c) {
  int buf[6];
  for (int i = 0; i < 6; i++) buf[i] = table[(a + i) & 7] * (b | 1);
  int acc = 0;
  for (int i = 5; i >= 0; i--) acc ^= buf[i] << (i & 3);
  u32 ua = (u32)a, ub = (u32)b;
  i64 wide = c * 3 + (i64)a * (i64)b;
  int q = (b != 0 && !(a == (-2147483647 - 1) && b == -1)) ? a / b + a % b : 7;
  u32 uq = ub ? ua / ub + ua % ub : 11u;
  int rot = (int)((ua << (ub & 31)) | (ua >> ((32 - (ub & 31)) & 31)));
  int cmp = (a < b) + 2 * (ua < ub) + 4 * (c > (i64)a) + 8 * (a >= 0);
  switch (a & 3) { case 0: acc += 17; break; case 1: acc -= 5; break; default: acc ^= 0x55; }
  return acc + q + (int)uq + rot + cmp + (int)(wide >> 7) + (int)wide + collatz_steps(a);
}
"""

HOST_MAIN = r"""
#include <stdio.h>
int main(void) {
  static const int A[] = {%(a)s}; static const int B[] = {%(b)s}; static const long long C[] = {%(c)s};
  for (int k = 0; k < %(n)d; k++) printf("%%d\n", mixed(A[k], B[k], C[k]));
  return 0;
}
"""

RUST_MAIN = r"""
#[path = "lifted.rs"]
mod lifted;
fn main() {
    let a: [i32; %(n)d] = [%(a)s]; let b: [i32; %(n)d] = [%(b)s]; let c: [i64; %(n)d] = [%(c)s];
    for k in 0..%(n)d {
        let mut m = lifted::WasmModule::new();
        m._start().unwrap();
        println!("{}", m.mixed(a[k], b[k], c[k]).expect("trap"));
    }
}
"""

EDGES = [0, 1, -1, 2, 7, -8, 31, 32, 100, -100, 2**31 - 1, -2**31, 123456789, -987654321]


@pytest.fixture(scope="module")
def lifted_mixed(tmp_path_factory):
    d = tmp_path_factory.mktemp("mixed")
    (d / "m.c").write_text(C_PRELUDE + MIXED_C)
    r = run(["clang"] + ToolConfig().oracle_cflags.split() + ["-o", str(d / "m.wasm"), str(d / "m.c")], timeout=120)
    assert r.ok, r.stderr
    (d / "lifted.rs").write_text(lift_module(decode((d / "m.wasm").read_bytes())))
    return d


def _run_both(d, rows):
    n = len(rows)
    fmt = {"n": n, "a": ", ".join(str(r[0]) for r in rows), "b": ", ".join(str(r[1]) for r in rows),
           "c": ", ".join(f"{r[2]}LL" if r[2] != -2**63 else "(-9223372036854775807LL - 1)" for r in rows)}
    (d / "host.c").write_text(MIXED_C + HOST_MAIN % fmt)
    r = run(["clang", "-O0", "-fwrapv", "-o", str(d / "host"), str(d / "host.c")], timeout=120)
    assert r.ok, r.stderr
    host = run([str(d / "host")], timeout=60).stdout.split()
    fmt["c"] = ", ".join(f"{r[2]}i64" if r[2] != -2**63 else "i64::MIN" for r in rows)
    (d / "main.rs").write_text(RUST_MAIN % fmt)
    r = run(["rustc", "--edition", "2021", "-O", "-A", "warnings", "-o", str(d / "lifted_bin"), str(d / "main.rs")],
            timeout=300, cwd=str(d))
    assert r.ok, r.stderr[-3000:]
    lifted = run([str(d / "lifted_bin")], timeout=60).stdout.split()
    return host, lifted


@needs_toolchain
def test_lifted_code_agrees_with_native_build(lifted_mixed):
    import random
    rnd = random.Random(7)
    rows = [(a, b, c) for a in EDGES[:6] for b in EDGES[:5] for c in (0, -3)]
    rows += [(rnd.choice(EDGES), rnd.choice(EDGES), rnd.randrange(-2**40, 2**40)) for _ in range(60)]
    rows += [(rnd.randrange(-2**31, 2**31), rnd.randrange(-2**31, 2**31), rnd.randrange(-2**62, 2**62))
             for _ in range(120)]
    host, lifted = _run_both(lifted_mixed, rows)
    assert len(host) == len(rows)
    assert lifted == host


def test_literal_spelling():
    assert literal(-5, I32) == "-5i32"
    assert literal(2**40, I64) == "1099511627776i64"


# -- checker arithmetic: concrete vs. z3 vs. a plain reference ---------------------

def _ref(name, a, b, bits):
    """Straightforward two's-complement reference, written from the wasm rules."""
    mod = 1 << bits

    def s(x):
        return x - mod if x >= mod // 2 else x
    if name in ("div_s", "div_u", "rem_s", "rem_u") and b == 0:
        return "trap"
    if name == "div_s":
        if s(a) == -(mod // 2) and s(b) == -1:
            return "trap"
        return _trunc_div(s(a), s(b)) % mod
    if name == "rem_s":
        return (s(a) - s(b) * _trunc_div(s(a), s(b))) % mod
    table = {
        "add": lambda: (a + b) % mod, "sub": lambda: (a - b) % mod, "mul": lambda: (a * b) % mod,
        "div_u": lambda: a // b, "rem_u": lambda: a % b, "and": lambda: a & b, "or": lambda: a | b,
        "xor": lambda: a ^ b, "shl": lambda: (a * 2 ** (b % bits)) % mod,
        "shr_u": lambda: a // 2 ** (b % bits), "shr_s": lambda: (s(a) // 2 ** (b % bits)) % mod,
        "rotl": lambda: int(format(a, f"0{bits}b")[b % bits:] + format(a, f"0{bits}b")[:b % bits], 2),
        "rotr": lambda: int(format(a, f"0{bits}b")[bits - b % bits:] + format(a, f"0{bits}b")[:bits - b % bits], 2),
        "eq": lambda: int(a == b), "ne": lambda: int(a != b), "lt_s": lambda: int(s(a) < s(b)),
        "lt_u": lambda: int(a < b), "gt_s": lambda: int(s(a) > s(b)), "gt_u": lambda: int(a > b),
        "le_s": lambda: int(s(a) <= s(b)), "le_u": lambda: int(a <= b), "ge_s": lambda: int(s(a) >= s(b)),
        "ge_u": lambda: int(a >= b),
    }
    return table[name]()


def _trunc_div(x, y):
    q = abs(x) // abs(y)
    return q if (x < 0) == (y < 0) else -q


OPS = ["add", "sub", "mul", "div_s", "div_u", "rem_s", "rem_u", "and", "or", "xor", "shl", "shr_s", "shr_u",
       "rotl", "rotr", "eq", "ne", "lt_s", "lt_u", "gt_s", "gt_u", "le_s", "le_u", "ge_s", "ge_u"]


@st.composite
def operands(draw):
    bits = draw(st.sampled_from([32, 64]))
    edge = st.sampled_from([0, 1, 2, (1 << bits) - 1, 1 << (bits - 1), (1 << (bits - 1)) - 1, bits, bits + 1])
    word = st.one_of(edge, st.integers(0, (1 << bits) - 1))
    return draw(st.sampled_from(OPS)), draw(word), draw(word), bits


@settings(max_examples=600, deadline=None)
@given(operands())
def test_concrete_and_symbolic_ops_match_reference(case):
    name, a, b, bits = case
    want = _ref(name, a, b, bits)
    try:
        got = _int_binop_concrete(name, a, b, bits)
    except Trap:
        got = "trap"
    assert got == want
    if want == "trap":
        return
    sym = z3.simplify(_int_binop_sym(name, z3.BitVecVal(a, bits), z3.BitVecVal(b, bits), bits))
    assert sym.as_long() == want
