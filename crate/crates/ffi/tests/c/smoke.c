#include <stdio.h>
#include <string.h>
#include "airfleet.h"

#define CHECK(expr)                                                        \
  do {                                                                     \
    if (!(expr)) {                                                         \
      fprintf(stderr, "check failed: %s (%s)\n", #expr, af_last_error()); \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(int argc, char **argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: smoke INSTANCE.json\n");
    return 64;
  }
  AfInstance *inst = NULL;
  CHECK(af_instance_load(argv[1], &inst) == AF_STATUS_OK);
  AfInstance *unused = NULL;
  CHECK(af_instance_load(NULL, &unused) == AF_STATUS_NULL_POINTER && unused == NULL);

  size_t n = 0, k = 0;
  CHECK(af_instance_size(inst, &n, &k) == AF_STATUS_OK);

  AfSchedule *start = NULL, *tabu = NULL, *best = NULL;
  CHECK(af_construct(inst, &start) == AF_STATUS_OK);
  AfSearchOptions opts = af_search_options_default();
  opts.mode = AF_SEARCH_MODE_TABU;
  CHECK(af_search(inst, start, &opts, &tabu) == AF_STATUS_OK);
  CHECK(af_solve_exact(inst, 0.0, 0, &best) == AF_STATUS_OK);

  double h_tabu = 0, h_best = 0;
  bool ok = false;
  CHECK(af_schedule_objective(inst, tabu, &h_tabu) == AF_STATUS_OK);
  CHECK(af_schedule_objective(inst, best, &h_best) == AF_STATUS_OK);
  CHECK(af_schedule_is_feasible(inst, best, &ok) == AF_STATUS_OK && ok);
  CHECK(h_best <= h_tabu + 1e-9);

  char *json = NULL;
  CHECK(af_schedule_to_json(inst, best, &json) == AF_STATUS_OK);
  CHECK(json != NULL && json[0] == '{');
  af_string_free(json);

  printf("missions=%zu bases=%zu tabu=%.6f exact=%.6f version=%s\n", n, k, h_tabu, h_best,
         af_version());
  af_schedule_free(start);
  af_schedule_free(tabu);
  af_schedule_free(best);
  af_instance_free(inst);
  return 0;
}
