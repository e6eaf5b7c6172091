int callTri() {
  int result = tri(4);
  return result == 10 ? 0 : 1;
}
