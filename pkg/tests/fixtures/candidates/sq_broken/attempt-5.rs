fn sq(x: i32) -> i32 {
    x.squared_5()
}
