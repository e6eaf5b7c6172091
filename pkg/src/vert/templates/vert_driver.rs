// Input source for generated equivalence harnesses.
//
// One harness body runs under three drivers:
//   * default: a self-contained property-based tester (seeded RNG, edge
//     cases first, shrinking, replay);
//   * cfg(vert_symbolic): nondeterministic values imported from the host,
//     for the wasm bounded model checker;
//   * cfg(kani): kani::any / kani::assume.
// Every value is drawn through `int_in(lo, hi)`, so a harness's draw layout
// is the same under all three.
#![allow(dead_code)]

// rendering inputs as text is only useful (and only cheap) when concrete
#[cfg(not(any(kani, vert_symbolic)))]
pub const NOTES: bool = true;
#[cfg(any(kani, vert_symbolic))]
pub const NOTES: bool = false;

pub struct Gen {
    pub notes: Vec<String>,
    pub draws: Vec<i128>,
    #[cfg(not(any(kani, vert_symbolic)))]
    pbt: Pbt,
}

#[cfg(not(any(kani, vert_symbolic)))]
struct Pbt {
    state: u64,
    case: u64,
    replay: Option<Vec<i128>>,
    pos: usize,
}

impl Gen {
    pub fn note(&mut self, s: String) {
        self.notes.push(s);
    }

    pub fn i32(&mut self) -> i32 {
        self.int_in(i32::MIN as i128, i32::MAX as i128) as i32
    }

    pub fn i64(&mut self) -> i64 {
        self.int_in(i64::MIN as i128, i64::MAX as i128) as i64
    }

    pub fn bool(&mut self) -> bool {
        self.int_in(0, 1) != 0
    }
}

// ---------------------------------------------------------------- PBT --

#[cfg(not(any(kani, vert_symbolic)))]
fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(not(any(kani, vert_symbolic)))]
const EDGE_CASES: u64 = 32;

#[cfg(not(any(kani, vert_symbolic)))]
impl Gen {
    fn pbt(seed: u64, case: u64, replay: Option<Vec<i128>>) -> Gen {
        let mut state = seed ^ case.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        splitmix(&mut state);
        Gen { notes: Vec::new(), draws: Vec::new(), pbt: Pbt { state, case, replay, pos: 0 } }
    }

    fn next_u64(&mut self) -> u64 {
        splitmix(&mut self.pbt.state)
    }

    fn uniform(&mut self, lo: i128, hi: i128) -> i128 {
        let span = (hi - lo) as u128 + 1;
        let r = ((self.next_u64() as u128) << 64) | self.next_u64() as u128;
        if span == 0 {
            return lo.wrapping_add(r as i128);
        }
        lo + (r % span) as i128
    }

    pub fn int_in(&mut self, lo: i128, hi: i128) -> i128 {
        let v = if let Some(replay) = &self.pbt.replay {
            let v = replay.get(self.pbt.pos).copied().unwrap_or(0);
            self.pbt.pos += 1;
            v.clamp(lo, hi)
        } else {
            let edges = [0i128, 1, -1, 2, -2, lo, hi, lo.saturating_add(1), hi.saturating_sub(1), 10, -10];
            let case = self.pbt.case;
            let roll = self.next_u64() % 100;
            let raw = if case < EDGE_CASES || roll < 10 {
                edges[(self.next_u64() % edges.len() as u64) as usize]
            } else if roll < 40 {
                self.uniform(-100, 100)
            } else if roll < 55 {
                let bits = self.next_u64() % 64;
                let m = (1i128 << bits) - 1;
                let x = (self.next_u64() as i128) & m;
                if self.next_u64() & 1 == 0 { x } else { -x }
            } else {
                self.uniform(lo, hi)
            };
            if raw < lo || raw > hi { self.uniform(lo, hi) } else { raw }
        };
        self.draws.push(v);
        v
    }

    pub fn assume(&mut self, c: bool) {
        if !c {
            panic!("VERT_REJECT");
        }
    }
}

#[cfg(not(any(kani, vert_symbolic)))]
fn fmt_draws(d: &[i128]) -> String {
    d.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(not(any(kani, vert_symbolic)))]
fn env_u64(name: &str, default: u64) -> u64 {
    std::env::var(name).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(default)
}

#[cfg(not(any(kani, vert_symbolic)))]
enum CaseResult {
    Pass,
    Reject,
    Fail(String),
}

#[cfg(not(any(kani, vert_symbolic)))]
fn run_case(f: fn(&mut Gen), g: &mut Gen) -> CaseResult {
    let r = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| f(g)));
    match r {
        Ok(()) => CaseResult::Pass,
        Err(e) => {
            let msg = if let Some(s) = e.downcast_ref::<&str>() {
                s.to_string()
            } else if let Some(s) = e.downcast_ref::<String>() {
                s.clone()
            } else {
                "panic".to_string()
            };
            if msg == "VERT_REJECT" { CaseResult::Reject } else { CaseResult::Fail(msg) }
        }
    }
}

#[cfg(not(any(kani, vert_symbolic)))]
fn report(tag: &str, g: &Gen, msg: &str) {
    println!(
        "\nVERT_PBT_FAILURE{} inputs=[{}] draws=[{}] message={:?}",
        tag,
        g.notes.join(", "),
        fmt_draws(&g.draws),
        msg
    );
}

#[cfg(not(any(kani, vert_symbolic)))]
fn shrink(f: fn(&mut Gen), seed: u64, start: Vec<i128>) -> (Vec<i128>, Gen, String) {
    // halve draws toward zero while the failure persists
    let mut best = start;
    let mut best_gen = Gen::pbt(seed, 0, Some(best.clone()));
    let mut best_msg = match run_case(f, &mut best_gen) {
        CaseResult::Fail(m) => m,
        _ => String::new(),
    };
    let mut improved = true;
    let mut rounds = 0;
    while improved && rounds < 2000 {
        improved = false;
        rounds += 1;
        for i in 0..best.len() {
            let mut v = best[i];
            while v != 0 {
                let smaller = v / 2;
                let mut cand = best.clone();
                cand[i] = smaller;
                let mut g = Gen::pbt(seed, 0, Some(cand.clone()));
                match run_case(f, &mut g) {
                    CaseResult::Fail(m) => {
                        best = g.draws.clone();
                        best_gen = g;
                        best_msg = m;
                        improved = true;
                        v = best[i];
                        if v == cand[i] && smaller == v {
                            continue;
                        }
                    }
                    _ => break,
                }
            }
        }
    }
    (best, best_gen, best_msg)
}

#[cfg(not(any(kani, vert_symbolic)))]
pub fn release<T>(value: T) {
    drop(value);
}

#[cfg(not(any(kani, vert_symbolic)))]
pub fn drive(f: fn(&mut Gen)) {
    use std::io::Write;
    let seed = env_u64("VERT_SEED", 0);
    let cases = env_u64("VERT_CASES", 100_000);
    let budget = std::env::var("VERT_TIME_BUDGET").ok().and_then(|s| s.parse::<f64>().ok());
    let mut trace = std::env::var("VERT_TRACE").ok().map(|p| {
        std::io::BufWriter::new(std::fs::File::create(p).expect("cannot open trace file"))
    });
    std::panic::set_hook(Box::new(|_| {}));
    if let Ok(replay) = std::env::var("VERT_REPLAY") {
        let draws: Vec<i128> = replay
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse().expect("bad replay value"))
            .collect();
        let mut g = Gen::pbt(seed, 0, Some(draws));
        match run_case(f, &mut g) {
            CaseResult::Fail(m) => {
                report("", &g, &m);
                let _ = std::panic::take_hook();
                panic!("replayed input diverges");
            }
            _ => {
                println!("VERT_REPLAY_PASS inputs=[{}]", g.notes.join(", "));
                return;
            }
        }
    }
    let start = std::time::Instant::now();
    let mut done = 0u64;
    let mut rejected = 0u64;
    for case in 0..cases {
        if let Some(b) = budget {
            if start.elapsed().as_secs_f64() > b {
                break;
            }
        }
        let mut g = Gen::pbt(seed, case, None);
        let r = run_case(f, &mut g);
        if let Some(t) = trace.as_mut() {
            let _ = writeln!(t, "{}\t{}", fmt_draws(&g.draws), g.notes.join("\t"));
        }
        match r {
            CaseResult::Pass => done += 1,
            CaseResult::Reject => rejected += 1,
            CaseResult::Fail(msg) => {
                report("", &g, &msg);
                let _ = std::io::stdout().flush();
                let (_, sg, smsg) = shrink(f, seed, g.draws.clone());
                report(" shrunk", &sg, &smsg);
                let _ = std::io::stdout().flush();
                let _ = std::panic::take_hook();
                panic!("candidate and oracle diverge");
            }
        }
        if g.draws.is_empty() {
            // no inputs: one invocation covers every case
            break;
        }
    }
    if let Some(mut t) = trace {
        let _ = t.flush();
    }
    let _ = std::panic::take_hook();
    println!("VERT_PBT_PASS cases={} rejected={} seconds={:.3}", done, rejected, start.elapsed().as_secs_f64());
}

// ---------------------------------------------------------- symbolic --

#[cfg(all(vert_symbolic, not(kani)))]
#[link(wasm_import_module = "vert")]
extern "C" {
    fn __vert_nondet_i32() -> i32;
    fn __vert_nondet_i64() -> i64;
    fn __vert_assume(c: i32);
}

#[cfg(all(vert_symbolic, not(kani)))]
impl Gen {
    pub fn int_in(&mut self, lo: i128, hi: i128) -> i128 {
        let v: i128 = if lo >= i32::MIN as i128 && hi <= i32::MAX as i128 {
            let x = unsafe { __vert_nondet_i32() };
            if lo > i32::MIN as i128 || hi < i32::MAX as i128 {
                unsafe { __vert_assume((x as i128 >= lo && x as i128 <= hi) as i32) };
            }
            x as i128
        } else if lo >= i64::MIN as i128 && hi <= i64::MAX as i128 {
            let x = unsafe { __vert_nondet_i64() };
            if lo > i64::MIN as i128 || hi < i64::MAX as i128 {
                unsafe { __vert_assume((x as i128 >= lo && x as i128 <= hi) as i32) };
            }
            x as i128
        } else {
            let hi_part = unsafe { __vert_nondet_i64() } as i128;
            let lo_part = unsafe { __vert_nondet_i64() } as u64 as i128;
            let x = (hi_part << 64) | lo_part;
            unsafe { __vert_assume((x >= lo && x <= hi) as i32) };
            x
        };
        v
    }

    pub fn assume(&mut self, c: bool) {
        unsafe { __vert_assume(c as i32) };
    }
}

#[cfg(all(vert_symbolic, not(kani)))]
pub fn release<T>(value: T) {
    // dropping the oracle's linear memory costs one loop step per byte
    // under symbolic execution, and nothing observes it
    core::mem::forget(value);
}

#[cfg(all(vert_symbolic, not(kani)))]
pub fn drive(f: fn(&mut Gen)) {
    let mut g = Gen { notes: Vec::new(), draws: Vec::new() };
    f(&mut g);
}

// -------------------------------------------------------------- kani --

#[cfg(kani)]
impl Gen {
    pub fn int_in(&mut self, lo: i128, hi: i128) -> i128 {
        let x: i128 = kani::any();
        kani::assume(x >= lo && x <= hi);
        x
    }

    pub fn assume(&mut self, c: bool) {
        kani::assume(c);
    }
}

#[cfg(kani)]
pub fn release<T>(value: T) {
    core::mem::forget(value);
}

#[cfg(kani)]
pub fn drive(f: fn(&mut Gen)) {
    let mut g = Gen { notes: Vec::new(), draws: Vec::new() };
    f(&mut g);
}
