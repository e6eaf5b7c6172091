package main

func reverse(x int32) int32 {
	var r int64
	for x != 0 {
		r = r*10 + int64(x%10)
		x /= 10
	}
	if r > 2147483647 || r < -2147483648 {
		return 0
	}
	return int32(r)
}
