int callDivide() {
  int result = divide100(5);
  return result == 20 ? 0 : 1;
}
