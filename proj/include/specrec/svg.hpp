#ifndef SPECREC_SVG_HPP
#define SPECREC_SVG_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace specrec::svg {

struct Series {
    std::string label;
    std::string color;  // any SVG color string
    std::vector<double> x, y;
};

/// Minimal deterministic line plot: fixed 800x500 canvas, shared axes over
/// the union of all series ranges, one polyline per series plus a small
/// legend. Output depends only on the arguments (no timestamps), so reruns
/// are byte-identical.
void write_plot(const std::filesystem::path& path, const std::string& title,
                const std::vector<Series>& series);

}  // namespace specrec::svg

#endif
