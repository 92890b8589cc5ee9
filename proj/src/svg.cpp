#include "specrec/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "specrec/csv.hpp"

namespace specrec::svg {

namespace {

constexpr double kWidth = 800.0, kHeight = 500.0;
constexpr double kMarginLeft = 70.0, kMarginRight = 20.0;
constexpr double kMarginTop = 40.0, kMarginBottom = 50.0;

struct Range {
    double lo = 0.0, hi = 1.0;
};

Range span_of(const std::vector<Series>& series, bool vertical) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const Series& s : series)
        for (double v : vertical ? s.y : s.x) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!(lo < hi)) {  // flat or single-point data: pad symmetrically
        double pad = std::abs(lo) > 0.0 ? 0.1 * std::abs(lo) : 1.0;
        lo -= pad;
        hi += pad;
    }
    return {lo, hi};
}

}  // namespace

void write_plot(const std::filesystem::path& path, const std::string& title,
                const std::vector<Series>& series) {
    if (series.empty()) throw std::invalid_argument("svg: need at least one series");
    for (const Series& s : series) {
        if (s.x.size() != s.y.size() || s.x.empty())
            throw std::invalid_argument("svg: series needs equally many x and y values");
        for (double v : s.x)
            if (!std::isfinite(v)) throw std::invalid_argument("svg: x values must be finite");
        for (double v : s.y)
            if (!std::isfinite(v)) throw std::invalid_argument("svg: y values must be finite");
    }
    Range xr = span_of(series, false), yr = span_of(series, true);
    double plot_w = kWidth - kMarginLeft - kMarginRight;
    double plot_h = kHeight - kMarginTop - kMarginBottom;
    auto px = [&](double x) { return kMarginLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
    auto py = [&](double y) {
        return kHeight - kMarginBottom - (y - yr.lo) / (yr.hi - yr.lo) * plot_h;
    };

    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory for " + path.string());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">"
        << title << "</text>\n";
    // frame and corner labels
    out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << plot_w
        << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kMarginLeft << "\" y=\"" << kHeight - kMarginBottom + 20
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << csv::format_double(xr.lo)
        << "</text>\n";
    out << "<text x=\"" << kWidth - kMarginRight << "\" y=\""
        << kHeight - kMarginBottom + 20
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << csv::format_double(xr.hi) << "</text>\n";
    out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << kHeight - kMarginBottom
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << csv::format_double(yr.lo) << "</text>\n";
    out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << kMarginTop + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << csv::format_double(yr.hi) << "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const Series& s = series[i];
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" "
               "points=\"";
        for (std::size_t j = 0; j < s.x.size(); ++j)
            out << (j ? " " : "") << csv::format_double(px(s.x[j])) << ","
                << csv::format_double(py(s.y[j]));
        out << "\"/>\n";
        double ly = kMarginTop + 16.0 + 16.0 * static_cast<double>(i);
        out << "<line x1=\"" << kMarginLeft + 8 << "\" y1=\"" << ly - 4 << "\" x2=\""
            << kMarginLeft + 32 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << s.color
            << "\" stroke-width=\"1.5\"/>\n";
        out << "<text x=\"" << kMarginLeft + 38 << "\" y=\"" << ly
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
    }
    out << "</svg>\n";
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace specrec::svg
