#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace thrnn {

using ItemIndex = std::uint32_t;
using UserIndex = std::uint32_t;
using Seconds = std::int64_t;

struct RawInteraction {
  std::string user_id;
  std::string item_id;
  Seconds timestamp = 0;
};

// One interaction after the item id was mapped to an index.
struct Event {
  ItemIndex item = 0;
  Seconds timestamp = 0;
};

struct Session {
  std::vector<ItemIndex> items;
  Seconds start_time = 0;
  Seconds end_time = 0;
  // Seconds since the previous session ended. Zero for a user's first
  // session and for the second half of a length split (then gap_masked).
  Seconds gap_before = 0;
  bool gap_masked = false;

  std::size_t length() const { return items.size(); }
};

struct UserHistory {
  UserIndex user_index = 0;
  std::vector<Session> sessions;
};

enum class BucketScheme { Uniform, Log };

struct GapBucketizer {
  double upper_bound = 30.0 * 86400.0;  // seconds
  std::size_t num_buckets = 360;
  BucketScheme scheme = BucketScheme::Uniform;

  void validate() const;
};

struct DatasetSplit {
  std::vector<UserHistory> train;
  std::vector<UserHistory> test;  // aligned with train by position
  std::vector<std::string> item_ids;  // dense index -> original id
  std::vector<std::string> user_ids;

  std::size_t num_items() const { return item_ids.size(); }
  std::size_t num_users() const { return user_ids.size(); }
  std::unordered_map<std::string, ItemIndex> item_vocabulary() const;
};

// Insertion-ordered string -> dense index map.
class Vocabulary {
 public:
  std::uint32_t intern(const std::string& id);
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> ids_;
};

struct PipelineConfig {
  Seconds gap_threshold = 3600;
  std::size_t max_session_length = 20;
  double train_fraction = 0.8;
  std::size_t min_sessions = 3;
};

// Throws InvalidArgument when the events are not sorted by timestamp.
std::vector<Session> sessionize(std::span<const Event> events, Seconds gap_threshold);

Session collapse_repeats(Session session);

// Sessions longer than max_length are halved (second half masked); sessions
// longer than twice max_length are dropped. Gaps are recomputed afterwards.
std::vector<Session> enforce_length(std::vector<Session> sessions, std::size_t max_length);

// Recomputes gap_before from start/end times, leaving masked sessions at 0.
void assign_gaps(std::vector<Session>& sessions);

// sessionize -> collapse_repeats -> enforce_length for one user.
std::vector<Session> preprocess_user(std::span<const Event> events, const PipelineConfig& cfg);

// Per user: floor(train_fraction * n) earliest sessions go to train. Users
// with fewer than min_sessions are dropped and item/user indices re-densified.
DatasetSplit split_train_test(std::vector<UserHistory> histories,
                              std::span<const std::string> item_ids,
                              std::span<const std::string> user_ids,
                              double train_fraction, std::size_t min_sessions = 3);

std::size_t bucketize_gap(double gap_seconds, const GapBucketizer& b);

struct CorpusStats {
  std::size_t users = 0;
  std::size_t sessions = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
  double sessions_per_user = 0.0;
  double average_session_length = 0.0;
};

CorpusStats corpus_stats(const DatasetSplit& split);

// Checks every pipeline invariant; returns a description of the first
// violation or an empty string.
std::string check_invariants(const DatasetSplit& split, std::size_t max_session_length);

}  // namespace thrnn
