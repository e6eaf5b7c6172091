fn tri31(n: i32) -> i32 {
    let m = n & 31;
    let mut s = 0;
    let mut i = 0;
    while i < m {
        s += i;
        // diverges only once the loop has run more than twelve times
        if i >= 12 {
            s += 1;
        }
        i += 1;
    }
    s
}
