#include "audiotrap/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace audiotrap {

namespace {

constexpr double kWidth = 800.0, kHeight = 500.0;
constexpr double kLeft = 70.0, kRight = 780.0, kTop = 50.0, kBottom = 440.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
constexpr std::size_t kPaletteSize = sizeof kPalette / sizeof kPalette[0];

std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

void emit_plot(const std::vector<Series>& series, const std::string& title,
               const std::string& x_label, const std::string& y_label,
               const std::filesystem::path& path) {
    if (series.empty()) throw std::invalid_argument("emit_plot: no series");
    std::size_t total_points = 0;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size())
            throw std::invalid_argument("emit_plot: series x/y length mismatch: " + s.name);
        total_points += s.x.size();
    }
    if (total_points == 0) throw std::invalid_argument("emit_plot: all series are empty");

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (double v : s.x) {
            if (!std::isfinite(v)) throw std::invalid_argument("emit_plot: non-finite x value");
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
        }
        for (double v : s.y) {
            if (!std::isfinite(v)) throw std::invalid_argument("emit_plot: non-finite y value");
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    auto pad_range = [](double& lo, double& hi) {
        if (hi - lo < 1e-300) {
            double pad = std::max(0.5, std::fabs(hi) * 0.1);
            lo -= pad;
            hi += pad;
        } else {
            double pad = (hi - lo) * 0.05;
            lo -= pad;
            hi += pad;
        }
    };
    pad_range(xmin, xmax);
    pad_range(ymin, ymax);

    auto to_px_x = [&](double v) { return kLeft + (v - xmin) / (xmax - xmin) * (kRight - kLeft); };
    auto to_px_y = [&](double v) { return kBottom - (v - ymin) / (ymax - ymin) * (kBottom - kTop); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
        << "\" font-family=\"monospace\" font-size=\"12\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" fill=\"#ffffff\"/>\n";
    svg << "<text x=\"" << px(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << escape_xml(title) << "</text>\n";

    const int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
        double fx = xmin + (xmax - xmin) * i / ticks;
        double fy = ymin + (ymax - ymin) * i / ticks;
        double gx = to_px_x(fx), gy = to_px_y(fy);
        svg << "<line x1=\"" << px(gx) << "\" y1=\"" << px(kTop) << "\" x2=\"" << px(gx)
            << "\" y2=\"" << px(kBottom) << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg << "<line x1=\"" << px(kLeft) << "\" y1=\"" << px(gy) << "\" x2=\"" << px(kRight)
            << "\" y2=\"" << px(gy) << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << px(gx) << "\" y=\"" << px(kBottom + 18)
            << "\" text-anchor=\"middle\">" << tick_label(fx) << "</text>\n";
        svg << "<text x=\"" << px(kLeft - 8) << "\" y=\"" << px(gy + 4)
            << "\" text-anchor=\"end\">" << tick_label(fy) << "</text>\n";
    }
    svg << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\""
        << px(kRight - kLeft) << "\" height=\"" << px(kBottom - kTop)
        << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << px((kLeft + kRight) / 2) << "\" y=\"" << px(kHeight - 10)
        << "\" text-anchor=\"middle\">" << escape_xml(x_label) << "</text>\n";
    svg << "<text x=\"18\" y=\"" << px((kTop + kBottom) / 2)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << px((kTop + kBottom) / 2)
        << ")\">" << escape_xml(y_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        if (series[s].x.empty()) continue;
        const char* color = kPalette[s % kPaletteSize];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (i > 0) svg << ' ';
            svg << px(to_px_x(series[s].x[i])) << ',' << px(to_px_y(series[s].y[i]));
        }
        svg << "\"/>\n";
        if (series[s].x.size() == 1) {
            svg << "<circle cx=\"" << px(to_px_x(series[s].x[0])) << "\" cy=\""
                << px(to_px_y(series[s].y[0])) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
    }

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % kPaletteSize];
        double ly = kTop + 14.0 + 16.0 * static_cast<double>(s);
        svg << "<line x1=\"" << px(kRight - 150) << "\" y1=\"" << px(ly) << "\" x2=\""
            << px(kRight - 128) << "\" y2=\"" << px(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << px(kRight - 122) << "\" y=\"" << px(ly + 4) << "\">"
            << escape_xml(series[s].name) << "</text>\n";
    }
    svg << "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write plot: " + path.string());
    out << svg.str();
}

}  // namespace audiotrap
