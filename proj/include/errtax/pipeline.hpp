#pragma once

// Orchestration: runs the corpus -> analysis -> embedding -> clustering ->
// taxonomy -> report chain as restartable stages with on-disk artifacts.
// A stage is skipped when its outputs exist, are newer than its inputs, and
// were produced under the same config hash and seed.

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "errtax/config.hpp"

namespace errtax::pipeline {

inline constexpr std::array<std::string_view, 9> kStageOrder = {
    "ingest", "generate", "filter", "analyze", "embed",
    "select-k", "cluster", "label", "report"};

struct StageStatus {
    std::string name;
    bool skipped = false;
    std::vector<std::filesystem::path> outputs;
};

struct PipelineResult {
    std::vector<StageStatus> stages;
};

std::filesystem::path artifact_path(const Config& config, std::string_view artifact);

// Runs one stage unconditionally; its inputs must already exist on disk.
StageStatus run_stage(const Config& config, const std::string& stage);

// Runs every stage in order with freshness skipping. A failing stage aborts
// the run with its name in the error; artifacts of earlier stages remain.
PipelineResult run_pipeline(const Config& config);

}  // namespace errtax::pipeline
