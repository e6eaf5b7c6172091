int sum_to(int n) {
  int s = 0;
  int m = n & 15;
  for (int i = 1; i <= m; i++) s += i;
  return s;
}
