#include <dlfcn.h>
#include <stdio.h>
#include <unistd.h>

static void *loaded;

int kaa_load(const char *path) {
  if (loaded)
    dlclose(loaded);
  loaded = dlopen(path, RTLD_NOW | RTLD_GLOBAL);
  if (!loaded) {
    fprintf(stderr, "%s\n", dlerror());
    return -1;
  }
  return 0;
}

int main(void) {
  while (1) {
    usleep(1000);
  }
}
