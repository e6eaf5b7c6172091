fn clamp100(x: i32) -> i32 {
    if x > 3100 {
        return 0;
    }
    x.clamp(-100, 100)
}
