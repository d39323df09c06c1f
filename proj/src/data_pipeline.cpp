#include "thrnn/data_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "thrnn/error.hpp"

namespace thrnn {

void GapBucketizer::validate() const {
  if (!(upper_bound > 0.0)) throw InvalidArgument("bucketizer upper_bound must be > 0");
  if (num_buckets == 0) throw InvalidArgument("bucketizer num_buckets must be > 0");
}

std::unordered_map<std::string, ItemIndex> DatasetSplit::item_vocabulary() const {
  std::unordered_map<std::string, ItemIndex> out;
  out.reserve(item_ids.size());
  for (std::size_t i = 0; i < item_ids.size(); ++i) out.emplace(item_ids[i], static_cast<ItemIndex>(i));
  return out;
}

std::uint32_t Vocabulary::intern(const std::string& id) {
  auto [it, inserted] = index_.try_emplace(id, static_cast<std::uint32_t>(ids_.size()));
  if (inserted) ids_.push_back(id);
  return it->second;
}

std::vector<Session> sessionize(std::span<const Event> events, Seconds gap_threshold) {
  if (gap_threshold <= 0) throw InvalidArgument("gap_threshold must be positive");
  std::vector<Session> sessions;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (e.timestamp < 0) throw InvalidArgument("negative timestamp");
    if (i > 0 && e.timestamp < events[i - 1].timestamp) {
      std::ostringstream os;
      os << "events not sorted by timestamp at position " << i << " (" << events[i - 1].timestamp << " > "
         << e.timestamp << ")";
      throw InvalidArgument(os.str());
    }
    if (sessions.empty() || e.timestamp > sessions.back().end_time + gap_threshold) {
      Session s;
      s.start_time = e.timestamp;
      s.end_time = e.timestamp;
      sessions.push_back(std::move(s));
    }
    sessions.back().items.push_back(e.item);
    sessions.back().end_time = e.timestamp;
  }
  assign_gaps(sessions);
  return sessions;
}

Session collapse_repeats(Session session) {
  auto last = std::unique(session.items.begin(), session.items.end());
  session.items.erase(last, session.items.end());
  return session;
}

void assign_gaps(std::vector<Session>& sessions) {
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    Session& s = sessions[i];
    if (s.gap_masked || i == 0) {
      s.gap_before = 0;
      continue;
    }
    s.gap_before = s.start_time - sessions[i - 1].end_time;
  }
}

std::vector<Session> enforce_length(std::vector<Session> sessions, std::size_t max_length) {
  if (max_length == 0) throw InvalidArgument("max_session_length must be positive");
  std::vector<Session> out;
  out.reserve(sessions.size());
  for (Session& s : sessions) {
    const std::size_t n = s.items.size();
    if (n <= max_length) {
      out.push_back(std::move(s));
    } else if (n <= 2 * max_length) {
      // Both halves are anchored at the original start time so the
      // artificial boundary yields a zero, masked gap.
      Session first;
      first.items.assign(s.items.begin(), s.items.begin() + static_cast<std::ptrdiff_t>(max_length));
      first.start_time = s.start_time;
      first.end_time = s.start_time;
      first.gap_masked = s.gap_masked;
      Session second;
      second.items.assign(s.items.begin() + static_cast<std::ptrdiff_t>(max_length), s.items.end());
      second.start_time = s.start_time;
      second.end_time = s.end_time;
      second.gap_masked = true;
      out.push_back(std::move(first));
      out.push_back(std::move(second));
    }
  }
  assign_gaps(out);
  return out;
}

std::vector<Session> preprocess_user(std::span<const Event> events, const PipelineConfig& cfg) {
  auto sessions = sessionize(events, cfg.gap_threshold);
  for (auto& s : sessions) s = collapse_repeats(std::move(s));
  return enforce_length(std::move(sessions), cfg.max_session_length);
}

DatasetSplit split_train_test(std::vector<UserHistory> histories, std::span<const std::string> item_ids,
                              std::span<const std::string> user_ids, double train_fraction,
                              std::size_t min_sessions) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InvalidArgument("train_fraction must lie in (0, 1)");
  if (histories.empty()) throw InvalidArgument("empty corpus: no user histories");

  DatasetSplit split;
  std::vector<std::int64_t> item_remap(item_ids.size(), -1);
  auto remap_item = [&](ItemIndex old) -> ItemIndex {
    if (old >= item_remap.size()) throw InvalidArgument("item index outside the provided vocabulary");
    if (item_remap[old] < 0) {
      item_remap[old] = static_cast<std::int64_t>(split.item_ids.size());
      split.item_ids.push_back(item_ids[old]);
    }
    return static_cast<ItemIndex>(item_remap[old]);
  };

  for (auto& h : histories) {
    const std::size_t n = h.sessions.size();
    if (n == 0 || n < min_sessions) continue;
    if (h.user_index >= user_ids.size()) throw InvalidArgument("user index outside the provided user list");
    for (std::size_t i = 1; i < n; ++i) {
      if (h.sessions[i].start_time < h.sessions[i - 1].start_time)
        throw InvalidArgument("sessions of user '" + user_ids[h.user_index] + "' not sorted by start time");
    }
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
    const auto dense_user = static_cast<UserIndex>(split.user_ids.size());
    split.user_ids.push_back(user_ids[h.user_index]);

    UserHistory train{dense_user, {}};
    UserHistory test{dense_user, {}};
    for (std::size_t i = 0; i < n; ++i) {
      Session s = std::move(h.sessions[i]);
      for (auto& item : s.items) item = remap_item(item);
      (i < n_train ? train : test).sessions.push_back(std::move(s));
    }
    split.train.push_back(std::move(train));
    split.test.push_back(std::move(test));
  }
  if (split.user_ids.empty()) throw InvalidArgument("empty corpus: no user has enough sessions");
  return split;
}

std::size_t bucketize_gap(double gap_seconds, const GapBucketizer& b) {
  const double g = std::clamp(gap_seconds, 0.0, b.upper_bound);
  double scaled = 0.0;
  if (b.scheme == BucketScheme::Uniform) {
    scaled = g * static_cast<double>(b.num_buckets) / b.upper_bound;
  } else {
    scaled = std::log1p(g) * static_cast<double>(b.num_buckets) / std::log1p(b.upper_bound);
  }
  const auto idx = static_cast<std::size_t>(std::floor(scaled));
  return std::min(b.num_buckets - 1, idx);
}

CorpusStats corpus_stats(const DatasetSplit& split) {
  CorpusStats st;
  st.users = split.num_users();
  st.items = split.num_items();
  for (const auto* part : {&split.train, &split.test}) {
    for (const auto& h : *part) {
      st.sessions += h.sessions.size();
      for (const auto& s : h.sessions) st.interactions += s.items.size();
    }
  }
  if (st.users > 0) st.sessions_per_user = static_cast<double>(st.sessions) / static_cast<double>(st.users);
  if (st.sessions > 0)
    st.average_session_length = static_cast<double>(st.interactions) / static_cast<double>(st.sessions);
  return st;
}

std::string check_invariants(const DatasetSplit& split, std::size_t max_session_length) {
  std::ostringstream err;
  if (split.train.size() != split.test.size()) return "train/test user lists differ in length";
  for (std::size_t u = 0; u < split.train.size(); ++u) {
    const auto& tr = split.train[u];
    const auto& te = split.test[u];
    if (tr.user_index != te.user_index) return "train/test user lists not aligned";
    if (tr.user_index >= split.num_users()) return "user index out of range";
    std::vector<const Session*> all;
    for (const auto& s : tr.sessions) all.push_back(&s);
    for (const auto& s : te.sessions) all.push_back(&s);
    for (std::size_t i = 0; i < all.size(); ++i) {
      const Session& s = *all[i];
      if (s.items.empty() || s.items.size() > max_session_length) {
        err << "user " << u << " session " << i << " has length " << s.items.size();
        return err.str();
      }
      if (s.end_time < s.start_time) {
        err << "user " << u << " session " << i << " ends before it starts";
        return err.str();
      }
      for (std::size_t k = 0; k < s.items.size(); ++k) {
        if (s.items[k] >= split.num_items()) return "item index out of range";
        if (k > 0 && s.items[k] == s.items[k - 1]) {
          err << "user " << u << " session " << i << " has consecutive duplicate items";
          return err.str();
        }
      }
      if (i > 0) {
        if (s.start_time < all[i - 1]->start_time) return "sessions not sorted by start time";
        if (!s.gap_masked && s.gap_before != s.start_time - all[i - 1]->end_time) {
          err << "user " << u << " session " << i << " gap_before inconsistent with timestamps";
          return err.str();
        }
      }
      if (s.gap_masked && s.gap_before != 0) return "masked session with non-zero gap";
      if (!s.gap_masked && s.gap_before < 0) return "negative gap";
    }
    if (!tr.sessions.empty() && !te.sessions.empty() &&
        tr.sessions.back().start_time > te.sessions.front().start_time)
      return "train session starts after a test session";
  }
  return {};
}

}  // namespace thrnn
