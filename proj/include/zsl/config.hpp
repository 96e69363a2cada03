#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "zsl/amssfe.hpp"
#include "zsl/dataset.hpp"
#include "zsl/graphzsl.hpp"
#include "zsl/rectify.hpp"

namespace zsl {

/// Every hyperparameter of the three pipelines plus synthesis, read from an
/// INI-style file: [section] headers, key=value lines, '#' comments.
/// Unknown sections or keys are rejected; seed is mandatory.
struct RunConfig {
    std::uint64_t seed = 0;

    SyntheticSpec data;
    bool normalize_features = false;
    bool synth_graphs = false;  // also emit a graph bundle from cmd_synth
    std::size_t graph_parts = 8;
    std::size_t graph_part_dim = 16;

    RectifyParams rectify;

    ExpansionParams amssfe;
    MappingParams mapping;

    GcnSpec graphzsl;
    double graph_epsilon = 0.0;
    std::size_t graph_target_edges = 0;  // 0 = use epsilon directly
    std::size_t classifier_epochs = 300;
    double classifier_lr = 0.05;
};

RunConfig load_config(const std::filesystem::path& path);

/// Raw sections for grid files: section -> key -> value list.
using GridSpec = std::map<std::string, std::vector<std::string>>;
GridSpec load_grid(const std::filesystem::path& path);
GridSpec preset_grid(const std::string& name);

/// Applies "section.key" = value onto a config (used by the tuner).
void apply_config_override(RunConfig& cfg, const std::string& dotted_key,
                           const std::string& value);

}  // namespace zsl
