fn clamp100(x: i32) -> i32 {
    let mut y = x;
    while y == 0 {
        y = 0;
    }
    y.clamp(-100, 100)
}
