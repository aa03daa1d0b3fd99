/* Copyright 2026 The APS-Eval Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface of the amodal panoptic evaluation library. Every function
 * returns APS_OK or an error code; aps_last_error() describes the most
 * recent failure on the calling thread. All strings are UTF-8. */

#ifndef APS_EVAL_H_
#define APS_EVAL_H_

#ifdef __cplusplus
extern "C" {
#endif

typedef enum aps_status {
  APS_OK = 0,
  APS_ERR_INVALID_ARGUMENT = 1,
  APS_ERR_IO = 2,
  APS_ERR_INVALID_DATA = 3,
  APS_ERR_INTERNAL = 4
} aps_status;

typedef struct aps_taxonomy aps_taxonomy;
typedef struct aps_report aps_report;

/* Message for the last failing call on this thread; empty string if none.
 * The pointer stays valid until the next failing call on the same thread. */
const char* aps_last_error(void);

aps_status aps_taxonomy_read(const char* path, aps_taxonomy** out);
void aps_taxonomy_free(aps_taxonomy* tax);

/* Directory evaluation. matching_mode: 0 = visible-mask IoU, 1 = amodal-mask
 * IoU. Stems missing from pred_dir count as all-false-negative images;
 * unreadable pairs are listed in the report and excluded from the scores. */
aps_status aps_evaluate_dirs(const aps_taxonomy* tax, const char* gt_dir,
                             const char* pred_dir, int matching_mode,
                             double min_iou, int threads, aps_report** out);

aps_status aps_stats_dir(const aps_taxonomy* tax, const char* ann_dir,
                         int bins, int threads, aps_report** out);

/* Fuses semantic logits (APST file) with instance predictions (JSON
 * manifest) and writes <out_stem>.png / <out_stem>.json. */
aps_status aps_fuse_files(const aps_taxonomy* tax, const char* semantic_path,
                          const char* instances_path, const char* out_stem,
                          double confidence_threshold,
                          double overlap_threshold);

/* Structural validation of every annotation in ann_dir. *out_text receives
 * one "stem: rule: detail" line per finding (empty string when clean) and
 * must be released with aps_string_free. */
aps_status aps_validate_dir(const aps_taxonomy* tax, const char* ann_dir,
                            char** out_text, int* finding_count);

/* Writes `count` seeded synthetic scenes (<out_dir>/scene_%05d.png/.json)
 * plus the generator taxonomy as <out_dir>/taxonomy.json. */
aps_status aps_synth_generate(const char* out_dir, int count,
                              unsigned long long seed, int height, int width,
                              int min_things, int max_things);

/* Canonical report JSON; valid until aps_report_free. */
const char* aps_report_json(const aps_report* report);
/* One-line score summary for evaluation reports; empty for stats reports. */
const char* aps_report_summary(const aps_report* report);
int aps_report_invalid_pair_count(const aps_report* report);
int aps_report_missing_prediction_count(const aps_report* report);
void aps_report_free(aps_report* report);

void aps_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* APS_EVAL_H_ */
