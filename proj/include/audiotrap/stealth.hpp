#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

namespace audiotrap {

/// Minimum |mean| for the coefficient of variation to be defined.
inline constexpr double kCvMeanEpsilon = 1e-9;

/// Per-step loss differential between a triggered and a clean training run,
/// with its dispersion statistics.
struct DifferentialReport {
    std::vector<double> series;  // triggered[t] - clean[t]
    double mean = 0.0;
    double variance = 0.0;          // population, 1/N
    std::optional<double> cv;       // signed sigma/mean; unset when |mean| < kCvMeanEpsilon
};

/// Element-wise triggered[t] - clean[t]. Traces must be non-empty and of
/// equal length.
std::vector<double> loss_differential(const std::vector<double>& triggered,
                                      const std::vector<double>& clean);

double mean(const std::vector<double>& xs);

/// Population variance (divides by N).
double variance(const std::vector<double>& xs);

/// Signed sigma/mean with population sigma. Throws when |mean| < kCvMeanEpsilon.
double coefficient_of_variation(const std::vector<double>& xs);

/// Composes loss_differential with the dispersion metrics. An undefined CV
/// is flagged (nullopt) rather than thrown.
DifferentialReport summarize(const std::vector<double>& triggered,
                             const std::vector<double>& clean);

void save_report(const DifferentialReport& report, const std::filesystem::path& path);
DifferentialReport load_report(const std::filesystem::path& path);

/// Columns "step,diff"; row t holds series[t].
void save_series_csv(const std::vector<double>& series, const std::filesystem::path& path);

}  // namespace audiotrap
