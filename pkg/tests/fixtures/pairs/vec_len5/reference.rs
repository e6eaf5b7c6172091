fn total(v: &[i32]) -> i64 {
    let mut s: i64 = 0;
    for x in v {
        s += *x as i64;
    }
    s
}
