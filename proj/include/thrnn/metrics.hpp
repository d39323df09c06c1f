#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace thrnn {

inline constexpr int kReportFormatVersion = 1;

double recall_at_k(std::span<const std::size_t> ranks, std::size_t k);
double mrr_at_k(std::span<const std::size_t> ranks, std::size_t k);

struct MaeBucket {
  double lo_days = 0.0;
  double hi_days = 0.0;
  double mae_days = 0.0;  // 0 when count == 0
  std::size_t count = 0;
};

struct MaeBreakdown {
  std::vector<MaeBucket> buckets;
  double overall_mae_days = 0.0;
  std::size_t count = 0;
};

// Events are bucketed by target; edges are ascending and the final bucket is
// closed on the right. Targets beyond the last edge join the last bucket.
MaeBreakdown mae_by_bucket(std::span<const double> predicted_days, std::span<const double> target_days,
                           std::span<const double> edges_days);

// Edges 0, width, 2 width, ..., up to (and including) cutoff.
std::vector<double> uniform_edges(double width_days, double cutoff_days);

struct EvalReport {
  std::string model;
  std::map<std::size_t, double> recall;
  std::map<std::size_t, double> mrr;
  std::size_t rank_events = 0;
  MaeBreakdown mae;
  bool has_ranking = false;
  bool has_time = false;
};

// Seed aggregate: mean and population std per metric.
struct AggregateReport {
  std::string model;
  std::size_t runs = 0;
  std::map<std::size_t, std::pair<double, double>> recall;
  std::map<std::size_t, std::pair<double, double>> mrr;
  std::pair<double, double> overall_mae{0.0, 0.0};
  std::vector<std::pair<double, double>> bucket_mae;  // per bucket, runs where the bucket is non-empty
};

AggregateReport aggregate(std::span<const EvalReport> runs);

// Line-delimited JSON records; see docs/formats.md.
void write_report(std::ostream& out, const EvalReport& r);
void write_aggregate(std::ostream& out, const AggregateReport& r);
// Tab-separated (lo_days, hi_days, mae_days, count) rows with a header.
void write_plot_data(std::ostream& out, const EvalReport& r);

}  // namespace thrnn
