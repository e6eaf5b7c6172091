int callSum() {
  int result = sum_to(4);
  return result == 10 ? 0 : 1;
}
