fn weigh(n: u32, s: String) -> u64 {
    let mut total = n as u64;
    for b in s.bytes() {
        total += b as u64;
    }
    total
}
