/* Exercises the committed header against the static library: construction,
 * spectral queries, thresholds, and the error-message channel. Exits nonzero
 * on the first mismatch so the Rust harness can report the step. */

#include <stdio.h>
#include <string.h>

#include "pcmap.h"

int main(void) {
  PcmapMap *map = NULL;
  if (pcmap_map_from_spec("lambda:a=0.6", &map) != PCMAP_STATUS_OK) return 1;
  if (pcmap_map_dim(map) != 2) return 2;

  double lam = 0.0;
  if (pcmap_choi_lambda_min(map, &lam) != PCMAP_STATUS_OK) return 3;
  if (!(lam < -1e-3)) return 4;

  int32_t cp = -1;
  if (pcmap_is_completely_positive(map, 1e-9, &cp) != PCMAP_STATUS_OK) return 5;
  if (cp != 0) return 6;

  double boundary = 0.0;
  if (pcmap_isotropic_threshold(map, 0.25, 1.0, &boundary) != PCMAP_STATUS_OK)
    return 7;
  if (boundary < 0.833332 || boundary > 0.833335) return 8;

  double margin = 0.0;
  int32_t feasible = 0;
  if (pcmap_extension_margin(map, 9, &margin, &feasible) != PCMAP_STATUS_OK)
    return 9;
  if (feasible != 1) return 10;
  pcmap_map_free(map);

  PcmapMap *bad = NULL;
  if (pcmap_map_from_spec("lambda:a=2", &bad) != PCMAP_STATUS_INVALID_INPUT)
    return 11;
  if (bad != NULL) return 12;
  char msg[128];
  if (pcmap_last_error(msg, sizeof msg) == 0) return 13;
  if (strlen(msg) == 0) return 14;

  printf("header smoke ok: boundary %.6f, last error '%s'\n", boundary, msg);
  return 0;
}
