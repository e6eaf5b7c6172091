pub fn reverse(x: i32) -> i32 {
    let mut r: i64 = 0;
    while x != 0 {
        r = r * 10 + (x % 10) as i64;
        x = x / 10;
    }
    if r > i32::MAX as i64 || r < i32::MIN as i64 {
        0
    } else {
        r as i32
    }
}
