#include "thrnn/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <istream>
#include <sstream>

#include "thrnn/error.hpp"

namespace thrnn {

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<Seconds> parse_timestamp(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.find('T') != std::string_view::npos || text.find('-', 1) != std::string_view::npos) {
    std::tm tm{};
    std::istringstream is{std::string(text)};
    is >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
    if (is.fail()) return std::nullopt;
    const auto t = timegm(&tm);
    if (t < 0) return std::nullopt;
    return static_cast<Seconds>(t);
  }
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value) || value < 0.0) return std::nullopt;
  return static_cast<Seconds>(std::floor(value));
}

IngestResult ingest(std::istream& in, DatasetFormat format, double max_malformed_fraction) {
  IngestResult out;
  std::string line;
  bool first_line = true;
  const char sep = format == DatasetFormat::LastFm ? '\t' : ',';
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line, sep);
    std::string_view user;
    std::string_view item;
    std::optional<Seconds> ts;
    bool ok = false;
    if (format == DatasetFormat::LastFm) {
      if (fields.size() >= 4) {
        user = trim(fields[0]);
        ts = parse_timestamp(fields[1]);
        // Some rows lack a MusicBrainz artist id; the artist name stands in.
        item = trim(fields[2]);
        if (item.empty()) item = trim(fields[3]);
        ok = !user.empty() && !item.empty() && ts.has_value();
      }
    } else {
      if (fields.size() >= 3) {
        user = trim(fields[0]);
        item = trim(fields[1]);
        ts = parse_timestamp(fields[2]);
        ok = !user.empty() && !item.empty() && ts.has_value();
      }
      if (first_line && !ok) {
        first_line = false;
        continue;  // header row
      }
    }
    first_line = false;
    ++out.rows;
    if (!ok) {
      ++out.malformed;
      continue;
    }
    const auto u = out.users.intern(std::string(user));
    const auto i = out.items.intern(std::string(item));
    if (u >= out.events_by_user.size()) out.events_by_user.resize(u + 1);
    out.events_by_user[u].push_back(Event{i, *ts});
  }
  if (out.rows == 0) throw FormatError("input contains zero data rows");
  const double frac = static_cast<double>(out.malformed) / static_cast<double>(out.rows);
  if (frac > max_malformed_fraction) {
    std::ostringstream os;
    os << out.malformed << " of " << out.rows << " rows malformed (" << frac * 100.0
       << "%), above the allowed " << max_malformed_fraction * 100.0 << "%";
    throw FormatError(os.str());
  }
  for (auto& events : out.events_by_user) {
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
  }
  return out;
}

IngestResult ingest_file(const std::filesystem::path& path, DatasetFormat format, double max_malformed_fraction) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return ingest(in, format, max_malformed_fraction);
}

DatasetSplit build_split(const IngestResult& raw, const PipelineConfig& cfg) {
  std::vector<UserHistory> histories;
  histories.reserve(raw.events_by_user.size());
  for (std::size_t u = 0; u < raw.events_by_user.size(); ++u) {
    histories.push_back(UserHistory{static_cast<UserIndex>(u), preprocess_user(raw.events_by_user[u], cfg)});
  }
  return split_train_test(std::move(histories), raw.items.ids(), raw.users.ids(), cfg.train_fraction,
                          cfg.min_sessions);
}

}  // namespace thrnn
