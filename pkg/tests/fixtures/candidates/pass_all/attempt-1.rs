fn clamp100(x: i32) -> i32 {
    x.clamp(-100, 100)
}
