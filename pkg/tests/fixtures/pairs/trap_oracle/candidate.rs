fn divide100(x: i32) -> i32 {
    if x == 0 {
        return 0;
    }
    100 / x
}
