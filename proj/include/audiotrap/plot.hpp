#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace audiotrap {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;  // same length as x
};

/// Standalone 800x500 SVG line chart. Byte-deterministic for identical
/// inputs; throws (writing nothing) when there is no data to draw.
void emit_plot(const std::vector<Series>& series, const std::string& title,
               const std::string& x_label, const std::string& y_label,
               const std::filesystem::path& path);

}  // namespace audiotrap
