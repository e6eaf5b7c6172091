fn tri(n: i32) -> i32 {
    let m = n & 7;
    let mut s = 0;
    let mut i = 1;
    while i <= m {
        s += i;
        i += 1;
    }
    s
}
