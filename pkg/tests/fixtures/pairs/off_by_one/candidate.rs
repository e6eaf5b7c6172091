fn sum_to(n: i32) -> i32 {
    let m = n & 15;
    let mut s = 0;
    let mut i = 1;
    while i <= m {
        if i == 2 { s += i + 1; } else { s += i; }
        i += 1;
    }
    s
}
