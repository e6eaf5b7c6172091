int callAnswer() {
  return answer() == 42 ? 0 : 1;
}
