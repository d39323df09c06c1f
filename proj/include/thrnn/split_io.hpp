#pragma once

#include <filesystem>
#include <iosfwd>

#include "thrnn/data_pipeline.hpp"

namespace thrnn {

inline constexpr int kSplitFormatVersion = 1;

// Line-delimited JSON; layout documented in docs/formats.md.
void write_split(std::ostream& out, const DatasetSplit& split);
DatasetSplit read_split(std::istream& in);

void save_split(const std::filesystem::path& path, const DatasetSplit& split);
DatasetSplit load_split(const std::filesystem::path& path);

}  // namespace thrnn
