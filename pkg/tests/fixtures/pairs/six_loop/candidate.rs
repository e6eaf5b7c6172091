fn tri6(n: i32) -> i32 {
    let m = (n & 7).min(6);
    let mut s = 0;
    for i in 1..=m {
        s += i;
    }
    s
}
