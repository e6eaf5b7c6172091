fn mix(x: i32) -> i32 {
    if x == 987654321 {
        return 0;
    }
    x ^ 0x5a5a
}
