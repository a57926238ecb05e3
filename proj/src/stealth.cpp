#include "audiotrap/stealth.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "audiotrap/format.hpp"

namespace audiotrap {

std::vector<double> loss_differential(const std::vector<double>& triggered,
                                      const std::vector<double>& clean) {
    if (triggered.empty() || clean.empty())
        throw std::invalid_argument("loss differential needs non-empty traces");
    if (triggered.size() != clean.size())
        throw std::invalid_argument("loss trace lengths differ: " +
                                    std::to_string(triggered.size()) + " vs " +
                                    std::to_string(clean.size()));
    std::vector<double> diff(triggered.size());
    for (std::size_t t = 0; t < triggered.size(); ++t) diff[t] = triggered[t] - clean[t];
    return diff;
}

double mean(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean of empty series");
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
}

double variance(const std::vector<double>& xs) {
    double mu = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - mu) * (x - mu);
    return acc / static_cast<double>(xs.size());
}

double coefficient_of_variation(const std::vector<double>& xs) {
    double mu = mean(xs);
    if (std::fabs(mu) < kCvMeanEpsilon)
        throw std::invalid_argument("coefficient of variation undefined: mean is ~0");
    return std::sqrt(variance(xs)) / mu;
}

DifferentialReport summarize(const std::vector<double>& triggered,
                             const std::vector<double>& clean) {
    DifferentialReport report;
    report.series = loss_differential(triggered, clean);
    report.mean = mean(report.series);
    report.variance = variance(report.series);
    if (std::fabs(report.mean) >= kCvMeanEpsilon)
        report.cv = std::sqrt(report.variance) / report.mean;
    return report;
}

void save_report(const DifferentialReport& report, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["num_steps"] = report.series.size();
    j["mean"] = report.mean;
    j["variance"] = report.variance;
    if (report.cv)
        j["cv"] = *report.cv;
    else
        j["cv"] = nullptr;
    j["series"] = report.series;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write differential report: " + path.string());
    out << j.dump(2) << '\n';
}

DifferentialReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open differential report: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("differential report parse error in " + path.string() + ": " +
                                 e.what());
    }
    DifferentialReport report;
    report.series = j.at("series").get<std::vector<double>>();
    report.mean = j.at("mean").get<double>();
    report.variance = j.at("variance").get<double>();
    if (j.contains("cv") && !j["cv"].is_null()) report.cv = j["cv"].get<double>();
    return report;
}

void save_series_csv(const std::vector<double>& series, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write series csv: " + path.string());
    out << "step,diff\n";
    for (std::size_t i = 0; i < series.size(); ++i)
        out << i << ',' << format_double(series[i]) << '\n';
}

}  // namespace audiotrap
