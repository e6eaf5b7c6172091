int mix(int x) {
  return x ^ 0x5a5a;
}
