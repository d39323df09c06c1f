#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "thrnn/config.hpp"
#include "thrnn/metrics.hpp"

namespace thrnn {

namespace fs = std::filesystem;

nlohmann::json stats_json(const DatasetSplit& split);

// dataset: "lastfm", "reddit" or "synthetic" (input is then a generator spec).
nlohmann::json cmd_preprocess(const std::string& dataset, const fs::path& input, const fs::path& output,
                              const RunConfig& cfg);

nlohmann::json cmd_synth(const fs::path& spec_path, const fs::path& output, std::uint64_t seed);

// Writes the checkpoint and one JSON line per epoch to `log`. Returns the
// checkpoint digest.
std::string cmd_train(const fs::path& split_path, const fs::path& checkpoint, const RunConfig& cfg,
                      const std::optional<fs::path>& resume, std::ostream& log);

inline const std::vector<std::string> kBaselines{"hawkes_short", "hawkes_long", "mean_gap", "popularity"};

// One report and one plot-data file per model in `out_dir`; several
// checkpoints are also aggregated into thrnn.aggregate.jsonl.
std::vector<EvalReport> cmd_evaluate(const std::vector<fs::path>& checkpoints, const fs::path& split_path,
                                     const std::vector<std::string>& baselines, const fs::path& out_dir,
                                     const RunConfig& cfg);

// History layout: {"user": id, "sessions": [{"start": s, "end": s, "items": [ids]}],
// "current": [ids]}. "current" is optional.
nlohmann::json cmd_predict(const fs::path& checkpoint, const nlohmann::json& history, std::size_t k);

}  // namespace thrnn
