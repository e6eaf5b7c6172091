int callSq() {
  int result = sq(9);
  return result == 81 ? 0 : 1;
}
