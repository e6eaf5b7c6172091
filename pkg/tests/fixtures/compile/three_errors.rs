pub fn bump(x: i32) -> i32 {
    x += 1;
    x
}

pub fn take(r: &i32) -> i32 {
    *r
}

pub fn caller(num: i32) -> i32 {
    let a = take(num);
    let b = take(num);
    a + b
}
