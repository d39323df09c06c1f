#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "thrnn/optimizer.hpp"
#include "thrnn/trainer.hpp"

namespace thrnn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary container: magic, version, JSON metadata, named float64 arrays and
// optionally the optimizer moments. Layout documented in docs/formats.md.
struct Checkpoint {
  Model model;
  TrainConfig training;
  std::size_t epochs_done = 0;
  std::optional<Adam> optimizer;
};

void write_checkpoint(std::ostream& out, const Model& model, const TrainConfig& training, std::size_t epochs_done,
                      const Adam* optimizer);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Model& model, const TrainConfig& training,
                     std::size_t epochs_done, const Adam* optimizer);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// 64-bit FNV-1a of the file contents as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace thrnn
