int callClamp() {
  int result = clamp100(250);
  return result == 100 ? 0 : 1;
}
