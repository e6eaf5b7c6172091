use std::collections::HashMap;

pub fn unique_paths(m: i32, n: i32) -> i32 {
    let num = m + n - 2;
    let mut map: HashMap<&i32, i32> = HashMap::new();
    let mut index = 0;
    while index < n {
        map.insert(num, index as i32);
        index += 1;
    }
    let mut paths: i64 = 1;
    for k in 1..=(m - 1) as i64 {
        paths = paths * (num as i64 - (m - 1) as i64 + k) / k;
    }
    paths as i32 + map.len() as i32 - 1
}
