fn bit_score(x: i32) -> i32 {
    let mut s = 0;
    if x & 1 != 0 { s += 3; } else { s -= 1; }
    if x & 2 != 0 { s += 5; } else { s -= 2; }
    if x & 4 != 0 { s += 7; } else { s -= 3; }
    if x & 8 != 0 { s += 11; } else { s -= 4; }
    if x & 16 != 0 { s += 13; } else { s -= 5; }
    if x & 32 != 0 { s += 17; } else { s -= 6; }
    if x & 64 != 0 { s += 19; } else { s -= 7; }
    if x & 128 != 0 { s += 23; } else { s -= 8; }
    if x & 256 != 0 { s += 29; } else { s -= 9; }
    if x & 512 != 0 { s += 31; } else { s -= 10; }
    if x & 1024 != 0 { s += 37; } else { s -= 11; }
    if x & 2048 != 0 { s += 41; } else { s -= 12; }
    s
}
