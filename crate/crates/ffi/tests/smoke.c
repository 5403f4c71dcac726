#include <stdio.h>
#include <string.h>

#include "stlc.h"

#define CHECK(cond)                                                  \
  do {                                                               \
    if (!(cond)) {                                                   \
      fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__,         \
              __LINE__, #cond);                                      \
      return 1;                                                      \
    }                                                                \
  } while (0)

int main(void) {
  char *ty = NULL;
  CHECK(stlc_infer("lambda bv0 : T . x", &ty) == STLC_STATUS_OK);
  CHECK(strcmp(ty, "T -> T") == 0);
  stlc_string_free(ty);

  CHECK(stlc_infer("[x x]", &ty) == STLC_STATUS_TYPE_ERROR);
  CHECK(stlc_last_error() != NULL);

  StlcRuleTable *table = stlc_rule_table_new();
  CHECK(table != NULL);
  uint32_t ids[16];
  size_t len = 0;
  CHECK(stlc_encode_type(table, "T -> T -> T", ids, 16, &len) == STLC_STATUS_OK);
  CHECK(len == 5);
  CHECK(stlc_decode_rule_ids(table, ids, len, &ty) == STLC_STATUS_OK);
  CHECK(strcmp(ty, "T -> T -> T") == 0);
  stlc_string_free(ty);
  stlc_rule_table_free(table);

  StlcOptimizer *opt = stlc_optimizer_new(STLC_OPTIMIZER_KIND_ADAM, 1, 1);
  double p = 0.0, g = 1.0;
  CHECK(stlc_optimizer_step(opt, &p, &g, 1, 1e-3) == STLC_STATUS_OK);
  CHECK(p < -9.99999989e-4 && p > -9.99999991e-4);
  stlc_optimizer_free(opt);

  double lr = 0.0;
  CHECK(stlc_schedule_value("warmup:2000", 1e-4, 2000, &lr) == STLC_STATUS_OK);
  CHECK(lr == 1e-4);

  puts("ok");
  return 0;
}
