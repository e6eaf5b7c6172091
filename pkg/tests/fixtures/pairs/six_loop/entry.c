int callTri() {
  int result = tri6(3);
  return result == 6 ? 0 : 1;
}
