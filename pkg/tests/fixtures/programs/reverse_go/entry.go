func callReverse() int32 {
	result := reverse(123)
	if result == 321 {
		return 0
	}
	return 1
}
