#include "thrnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "thrnn/error.hpp"

namespace thrnn {

using nlohmann::json;

namespace {

void check_ranks(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw InvalidArgument("rank list is empty");
  for (auto r : ranks)
    if (r < 1) throw InvalidArgument("ranks start at 1");
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

}  // namespace

double recall_at_k(std::span<const std::size_t> ranks, std::size_t k) {
  check_ranks(ranks);
  const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r <= k; });
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mrr_at_k(std::span<const std::size_t> ranks, std::size_t k) {
  check_ranks(ranks);
  double acc = 0.0;
  for (auto r : ranks)
    if (r <= k) acc += 1.0 / static_cast<double>(r);
  return acc / static_cast<double>(ranks.size());
}

std::vector<double> uniform_edges(double width_days, double cutoff_days) {
  if (!(width_days > 0.0) || !(cutoff_days > 0.0)) throw InvalidArgument("bucket width and cutoff must be > 0");
  std::vector<double> edges{0.0};
  while (edges.back() + 1e-12 < cutoff_days) edges.push_back(std::min(cutoff_days, edges.back() + width_days));
  return edges;
}

MaeBreakdown mae_by_bucket(std::span<const double> predicted_days, std::span<const double> target_days,
                           std::span<const double> edges_days) {
  if (predicted_days.size() != target_days.size()) throw ShapeError("mae_by_bucket: length mismatch");
  if (edges_days.size() < 2) throw InvalidArgument("mae_by_bucket needs at least two edges");
  for (std::size_t i = 1; i < edges_days.size(); ++i)
    if (!(edges_days[i] > edges_days[i - 1])) throw InvalidArgument("bucket edges must be strictly ascending");

  const std::size_t nb = edges_days.size() - 1;
  MaeBreakdown out;
  out.buckets.resize(nb);
  std::vector<double> sums(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    out.buckets[b].lo_days = edges_days[b];
    out.buckets[b].hi_days = edges_days[b + 1];
  }
  double total = 0.0;
  for (std::size_t i = 0; i < target_days.size(); ++i) {
    const double t = target_days[i];
    const auto it = std::upper_bound(edges_days.begin(), edges_days.end(), t);
    std::size_t b = it == edges_days.begin() ? 0 : static_cast<std::size_t>(it - edges_days.begin()) - 1;
    b = std::min(b, nb - 1);
    const double err = std::abs(predicted_days[i] - t);
    sums[b] += err;
    out.buckets[b].count += 1;
    total += err;
  }
  for (std::size_t b = 0; b < nb; ++b)
    if (out.buckets[b].count) out.buckets[b].mae_days = sums[b] / static_cast<double>(out.buckets[b].count);
  out.count = target_days.size();
  if (out.count) out.overall_mae_days = total / static_cast<double>(out.count);
  return out;
}

AggregateReport aggregate(std::span<const EvalReport> runs) {
  AggregateReport a;
  if (runs.empty()) throw InvalidArgument("aggregate needs at least one report");
  a.model = runs.front().model;
  a.runs = runs.size();
  if (runs.front().has_ranking) {
    for (const auto& [k, _] : runs.front().recall) {
      std::vector<double> rs;
      std::vector<double> ms;
      for (const auto& r : runs) {
        rs.push_back(r.recall.at(k));
        ms.push_back(r.mrr.at(k));
      }
      a.recall[k] = mean_std(rs);
      a.mrr[k] = mean_std(ms);
    }
  }
  if (runs.front().has_time) {
    std::vector<double> overall;
    for (const auto& r : runs) overall.push_back(r.mae.overall_mae_days);
    a.overall_mae = mean_std(overall);
    for (std::size_t b = 0; b < runs.front().mae.buckets.size(); ++b) {
      std::vector<double> xs;
      for (const auto& r : runs)
        if (b < r.mae.buckets.size() && r.mae.buckets[b].count) xs.push_back(r.mae.buckets[b].mae_days);
      a.bucket_mae.push_back(mean_std(xs));
    }
  }
  return a;
}

void write_report(std::ostream& out, const EvalReport& r) {
  out << json{{"type", "header"}, {"format", "thrnn-report"}, {"version", kReportFormatVersion}, {"model", r.model}}
             .dump()
      << '\n';
  if (r.has_ranking) {
    for (const auto& [k, recall] : r.recall) {
      out << json{{"type", "rank"}, {"model", r.model}, {"k", k}, {"recall", recall}, {"mrr", r.mrr.at(k)},
                  {"events", r.rank_events}}
                 .dump()
          << '\n';
    }
  }
  if (r.has_time) {
    for (const auto& b : r.mae.buckets) {
      out << json{{"type", "mae_bucket"}, {"model", r.model},      {"lo_days", b.lo_days},
                  {"hi_days", b.hi_days}, {"mae_days", b.mae_days}, {"count", b.count}}
                 .dump()
          << '\n';
    }
    out << json{{"type", "mae_overall"}, {"model", r.model}, {"mae_days", r.mae.overall_mae_days},
                {"count", r.mae.count}}
               .dump()
        << '\n';
  }
}

void write_aggregate(std::ostream& out, const AggregateReport& r) {
  out << json{{"type", "header"},
              {"format", "thrnn-report"},
              {"version", kReportFormatVersion},
              {"model", r.model},
              {"runs", r.runs},
              {"note", "values are mean and population std over runs"}}
             .dump()
      << '\n';
  for (const auto& [k, rec] : r.recall) {
    out << json{{"type", "rank_aggregate"}, {"model", r.model},     {"k", k},
                {"recall_mean", rec.first}, {"recall_std", rec.second}, {"mrr_mean", r.mrr.at(k).first},
                {"mrr_std", r.mrr.at(k).second}}
               .dump()
        << '\n';
  }
  for (std::size_t b = 0; b < r.bucket_mae.size(); ++b) {
    out << json{{"type", "mae_bucket_aggregate"}, {"model", r.model},
                {"bucket", b},                    {"mae_days_mean", r.bucket_mae[b].first},
                {"mae_days_std", r.bucket_mae[b].second}}
               .dump()
        << '\n';
  }
  if (!r.bucket_mae.empty()) {
    out << json{{"type", "mae_overall_aggregate"},
                {"model", r.model},
                {"mae_days_mean", r.overall_mae.first},
                {"mae_days_std", r.overall_mae.second}}
               .dump()
        << '\n';
  }
}

void write_plot_data(std::ostream& out, const EvalReport& r) {
  out << "# model=" << r.model << "\n";
  out << "lo_days\thi_days\tmae_days\tcount\n";
  for (const auto& b : r.mae.buckets) {
    out << b.lo_days << '\t' << b.hi_days << '\t';
    if (b.count) out << b.mae_days;  // empty field for an empty bucket
    out << '\t' << b.count << '\n';
  }
}

}  // namespace thrnn
