#pragma once

// grade/simulate -> calibrate -> learning curves -> analyze -> contour, in one
// report directory.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace irtkit {

/// A stage failed; `what()` starts with "stage <name>: ".
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& message, bool numerical)
        : std::runtime_error("stage " + stage + ": " + message), stage_(std::move(stage)), numerical_(numerical) {}
    const std::string& stage() const noexcept { return stage_; }
    bool numerical() const noexcept { return numerical_; }

private:
    std::string stage_;
    bool numerical_;
};

/// The pipeline configuration with every default filled in. Throws
/// ValidationError for unknown sources or malformed sections.
nlohmann::ordered_json resolve_pipeline_config(const nlohmann::json& raw);

/// Input files named by a resolved configuration, resolved against `base_dir`.
std::vector<std::filesystem::path> pipeline_inputs(const nlohmann::ordered_json& resolved,
                                                   const std::filesystem::path& base_dir);

struct PipelineResult {
    /// 0 on success, 2 when calibration or a regression did not converge.
    int status = 0;
    nlohmann::ordered_json report;
};

/// Runs every stage, writing matrix.csv, params.json, difficulties.csv,
/// calibration.json, curves.csv, fit.json, contour_<model>.csv and
/// report.json into `out_dir`. Relative input paths resolve against `base_dir`.
PipelineResult run_pipeline(const nlohmann::ordered_json& resolved, const std::filesystem::path& base_dir,
                            const std::filesystem::path& out_dir, unsigned threads);

}  // namespace irtkit
