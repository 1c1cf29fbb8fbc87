#pragma once

#include <string>

#include "declineforge/pipeline/config.hpp"

namespace df {

// Stage driver. Each stage reads its inputs from the workspace laid out by
// the upstream stages and records completion in <workspace>/manifest.json.
// Re-running a completed stage without force throws; run_all skips completed
// stages instead (resume semantics).
//
// Stage names: synth, cluster, split, pretrain, embed, evaluate, run-all,
// report. Unknown names throw ArgumentError.
void run_stage(const PipelineConfig& cfg, const std::string& stage, bool force);

// Formatted report text (the evaluate stage must be complete).
std::string render_report(const PipelineConfig& cfg);

}  // namespace df
