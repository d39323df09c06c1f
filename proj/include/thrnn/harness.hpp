#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "thrnn/data_pipeline.hpp"
#include "thrnn/hawkes.hpp"
#include "thrnn/metrics.hpp"
#include "thrnn/trainer.hpp"

namespace thrnn {

inline constexpr std::array<std::size_t, 3> kReportKs{5, 10, 20};
inline constexpr double kSecondsPerDay = 86400.0;

// Raw per-event outputs of one predictor over the test split. Test sessions
// are consumed in order with each user's train sessions (and the preceding
// test sessions) as context.
struct Predictions {
  std::vector<std::size_t> ranks;       // one per intra-session target
  std::vector<double> predicted_days;   // one per unmasked gap target
  std::vector<double> target_days;
};

// Gap target in days, clipped to the cutoff.
double target_days(Seconds gap, double cutoff_days);

Predictions predict_thrnn(const Model& model, const DatasetSplit& split);
Predictions predict_popularity(const DatasetSplit& split);
Predictions predict_mean_gap(const DatasetSplit& split, double cutoff_days);

struct HawkesBaselineConfig {
  hawkes::FitConfig fit;
  QuadratureConfig quadrature;  // in days
  std::size_t prime_events = 15;
};
Predictions predict_hawkes(const DatasetSplit& split, const HawkesBaselineConfig& cfg);

EvalReport make_report(std::string model, const Predictions& p, std::span<const double> edges_days,
                       std::span<const std::size_t> ks = kReportKs);

}  // namespace thrnn
