#include "thrnn/split_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "thrnn/error.hpp"

namespace thrnn {

using nlohmann::json;

void write_split(std::ostream& out, const DatasetSplit& split) {
  json header = {{"format", "thrnn-split"},
                 {"version", kSplitFormatVersion},
                 {"num_items", split.num_items()},
                 {"num_users", split.num_users()}};
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < split.item_ids.size(); ++i)
    out << json{{"item", i}, {"id", split.item_ids[i]}}.dump() << '\n';
  for (std::size_t u = 0; u < split.user_ids.size(); ++u)
    out << json{{"user", u}, {"id", split.user_ids[u]}}.dump() << '\n';
  auto emit = [&](const std::vector<UserHistory>& part, const char* name) {
    for (const auto& h : part) {
      for (const auto& s : h.sessions) {
        json rec = {{"u", h.user_index},    {"part", name},          {"start", s.start_time},
                    {"end", s.end_time},    {"gap", s.gap_before},   {"masked", s.gap_masked},
                    {"items", s.items}};
        out << rec.dump() << '\n';
      }
    }
  };
  emit(split.train, "train");
  emit(split.test, "test");
}

DatasetSplit read_split(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("split file is empty");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(std::string("split header is not JSON: ") + e.what());
  }
  if (header.value("format", "") != "thrnn-split") throw FormatError("not a thrnn split file");
  if (header.value("version", -1) != kSplitFormatVersion)
    throw FormatError("unsupported split version " + header.value("version", json(-1)).dump());

  DatasetSplit split;
  const auto num_items = header.at("num_items").get<std::size_t>();
  const auto num_users = header.at("num_users").get<std::size_t>();
  split.item_ids.resize(num_items);
  split.user_ids.resize(num_users);
  split.train.resize(num_users);
  split.test.resize(num_users);
  for (std::size_t u = 0; u < num_users; ++u) {
    split.train[u].user_index = static_cast<UserIndex>(u);
    split.test[u].user_index = static_cast<UserIndex>(u);
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      if (rec.contains("item")) {
        split.item_ids.at(rec["item"].get<std::size_t>()) = rec.at("id").get<std::string>();
      } else if (rec.contains("user")) {
        split.user_ids.at(rec["user"].get<std::size_t>()) = rec.at("id").get<std::string>();
      } else {
        Session s;
        s.start_time = rec.at("start").get<Seconds>();
        s.end_time = rec.at("end").get<Seconds>();
        s.gap_before = rec.at("gap").get<Seconds>();
        s.gap_masked = rec.at("masked").get<bool>();
        s.items = rec.at("items").get<std::vector<ItemIndex>>();
        for (auto i : s.items)
          if (i >= num_items) throw FormatError("item index out of range");
        const auto u = rec.at("u").get<std::size_t>();
        const auto part = rec.at("part").get<std::string>();
        if (part == "train")
          split.train.at(u).sessions.push_back(std::move(s));
        else if (part == "test")
          split.test.at(u).sessions.push_back(std::move(s));
        else
          throw FormatError("unknown part '" + part + "'");
      }
    } catch (const json::exception& e) {
      throw FormatError("split line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::out_of_range& e) {
      throw FormatError("split line " + std::to_string(lineno) + ": index out of range");
    }
  }
  return split;
}

void save_split(const std::filesystem::path& path, const DatasetSplit& split) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  write_split(out, split);
}

DatasetSplit load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return read_split(in);
}

}  // namespace thrnn
