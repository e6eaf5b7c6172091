fn sq(x: i32) -> i32 {
    x.frobnicate()
}
