int callMix() {
  int result = mix(1);
  return result == 23131 ? 0 : 1;
}
