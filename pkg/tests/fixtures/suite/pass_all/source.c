#include <stdio.h>

int clamp100(int x) {
  if (x > 100) return 100;
  if (x < -100) return -100;
  return x;
}

int main(void) {
  printf("%d\n", clamp100(250));
  return 0;
}
