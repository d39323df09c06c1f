#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "thrnn/data_pipeline.hpp"

namespace thrnn {

enum class DatasetFormat {
  LastFm,  // TSV: user, timestamp, artist-id, artist-name, track-id, track-name
  Reddit,  // CSV: user, subreddit, utc-timestamp
};

struct IngestResult {
  Vocabulary users;
  Vocabulary items;
  std::vector<std::vector<Event>> events_by_user;  // sorted by timestamp
  std::size_t rows = 0;
  std::size_t malformed = 0;
};

// Integer or fractional epoch seconds, or ISO-8601 UTC ("2009-05-04T23:08:57Z").
std::optional<Seconds> parse_timestamp(std::string_view text);

// Rows that cannot be parsed are counted; more than max_malformed_fraction of
// them (or no rows at all) raises FormatError.
IngestResult ingest(std::istream& in, DatasetFormat format, double max_malformed_fraction = 0.01);
IngestResult ingest_file(const std::filesystem::path& path, DatasetFormat format,
                         double max_malformed_fraction = 0.01);

DatasetSplit build_split(const IngestResult& raw, const PipelineConfig& cfg);

}  // namespace thrnn
