#include "specrec/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "specrec/parallel.hpp"
#include "specrec/quadrature.hpp"

namespace specrec {

namespace {

struct RawAtom {
    double lo, hi, level;
    bool plateau;
};

// integral of rho over (lo,hi), splitting at rho's own breakpoints
double integrate_source(const SourceFunction& rho, double lo, double hi, int n_panels) {
    std::vector<double> cuts = rho.breakpoints();
    std::vector<double> bounds = quad::merge_breakpoints(lo, hi, cuts);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i)
        total += quad::simpson(rho.piece_formula(0.5 * (bounds[i] + bounds[i + 1])),
                               bounds[i], bounds[i + 1], n_panels);
    return total;
}

std::vector<LevelsetCell> cluster_by_level(std::vector<RawAtom> atoms, double eps_p) {
    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (atoms[i].level != atoms[j].level) return atoms[i].level < atoms[j].level;
        return atoms[i].lo < atoms[j].lo;  // stable tie-break for determinism
    });

    std::vector<LevelsetCell> cells;
    std::size_t pos = 0;
    while (pos < order.size()) {
        std::size_t end = pos + 1;
        while (end < order.size() &&
               atoms[order[end]].level - atoms[order[end - 1]].level <= eps_p)
            ++end;

        std::vector<std::size_t> members(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
        std::sort(members.begin(), members.end(),
                  [&](std::size_t i, std::size_t j) { return atoms[i].lo < atoms[j].lo; });

        LevelsetCell cell;
        double weighted = 0.0, width = 0.0;
        for (std::size_t m : members) {
            const RawAtom& atom = atoms[m];
            double w = atom.hi - atom.lo;
            weighted += w * atom.level;
            width += w;
            cell.plateau = cell.plateau || atom.plateau;
            if (!cell.parts.empty() && cell.parts.back().second == atom.lo)
                cell.parts.back().second = atom.hi;  // coalesce touching parts
            else
                cell.parts.emplace_back(atom.lo, atom.hi);
        }
        // keep a lone atom's level bit-exact (plateau values are meaningful)
        cell.level = members.size() == 1 ? atoms[members[0]].level : weighted / width;
        cells.push_back(std::move(cell));
        pos = end;
    }
    return cells;
}

double default_eps_p(const AttenuationExponent& p) {
    if (p.is_closed_form()) return 1e-12;
    double eps = 1e-9 * p.value_range();
    // a constant sample set has zero range; fall back to an absolute floor
    return eps > 0.0 ? eps : 1e-15;
}

}  // namespace

double LevelsetCell::width() const {
    double total = 0.0;
    for (auto [lo, hi] : parts) total += hi - lo;
    return total;
}

LevelsetPartition::LevelsetPartition(Interval interval, double eps_p,
                                     std::vector<LevelsetCell> cells)
    : interval_(interval), eps_p_(eps_p), cells_(std::move(cells)) {
    if (!(eps_p_ > 0.0) || !std::isfinite(eps_p_))
        throw std::invalid_argument("partition: eps_p must be positive and finite");
    if (cells_.empty())
        throw std::invalid_argument("partition: need at least one cell");
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        if (cells_[c].parts.empty())
            throw std::invalid_argument("partition: every cell needs a subinterval");
        for (auto [lo, hi] : cells_[c].parts) {
            if (!(lo < hi))
                throw std::invalid_argument("partition: subintervals must have positive width");
            atoms_.push_back({lo, hi, c});
        }
    }
    std::sort(atoms_.begin(), atoms_.end(),
              [](const Atom& s, const Atom& t) { return s.lo < t.lo; });
    double tol = 1e-12 * interval_.length();
    if (std::abs(atoms_.front().lo - interval_.a()) > tol ||
        std::abs(atoms_.back().hi - interval_.b()) > tol)
        throw std::invalid_argument("partition: cells must cover the interval");
    for (std::size_t i = 0; i + 1 < atoms_.size(); ++i)
        if (std::abs(atoms_[i].hi - atoms_[i + 1].lo) > tol)
            throw std::invalid_argument("partition: cells must tile without gaps or overlaps");
}

std::size_t LevelsetPartition::cell_at(double x) const {
    if (!interval_.contains(x))
        throw std::invalid_argument("partition: point outside the domain");
    auto it = std::partition_point(atoms_.begin(), atoms_.end(),
                                   [x](const Atom& atom) { return atom.lo < x; });
    std::size_t i =
        it == atoms_.begin() ? 0 : static_cast<std::size_t>(it - atoms_.begin()) - 1;
    return atoms_[i].cell;
}

bool LevelsetPartition::cell_averaged(std::size_t index) const {
    if (index >= cells_.size())
        throw std::invalid_argument("partition: cell index out of range");
    return cells_[index].plateau || cells_[index].parts.size() > 1;
}

LevelsetPartition partition_levelsets(const AttenuationExponent& p, int grid_resolution,
                                      double eps_p) {
    if (grid_resolution < 1)
        throw std::invalid_argument("partition_levelsets: grid resolution must be positive");
    if (!(eps_p > 0.0) || !std::isfinite(eps_p))
        throw std::invalid_argument("partition_levelsets: eps_p must be positive and finite");

    const Interval& domain = p.interval();
    std::vector<RawAtom> atoms;
    if (p.is_closed_form()) {
        std::vector<double> grid_lines;
        grid_lines.reserve(static_cast<std::size_t>(grid_resolution) - 1);
        double step = domain.length() / static_cast<double>(grid_resolution);
        for (int i = 1; i < grid_resolution; ++i)
            grid_lines.push_back(domain.a() + static_cast<double>(i) * step);
        for (const auto& seg : p.segment_list()) {
            if (seg.plateau) {
                atoms.push_back({seg.lo, seg.hi, *seg.plateau, true});
                continue;
            }
            std::vector<double> bounds = quad::merge_breakpoints(seg.lo, seg.hi, grid_lines);
            for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
                double mid = 0.5 * (bounds[i] + bounds[i + 1]);
                atoms.push_back({bounds[i], bounds[i + 1], seg.f(mid), false});
            }
        }
    } else {
        const std::vector<double>& raw = p.sample_values();
        std::size_t count = raw.size();
        double step = domain.length() / static_cast<double>(count - 1);
        auto node = [&](std::size_t i) {
            return i + 1 == count ? domain.b() : domain.a() + static_cast<double>(i) * step;
        };
        // A single sample jutting out of otherwise level surroundings has
        // measure zero; flatten it before looking for runs.
        std::vector<double> values = raw;
        for (std::size_t i = 1; i + 1 < count; ++i)
            if (std::abs(raw[i] - raw[i - 1]) > eps_p && std::abs(raw[i] - raw[i + 1]) > eps_p &&
                std::abs(raw[i + 1] - raw[i - 1]) <= eps_p)
                values[i] = 0.5 * (raw[i - 1] + raw[i + 1]);

        std::size_t i = 0;
        while (i + 1 < count) {
            if (std::abs(values[i + 1] - values[i]) <= eps_p) {
                std::size_t j = i + 1;
                double sum = values[i] + values[i + 1];
                while (j + 1 < count && std::abs(values[j + 1] - values[j]) <= eps_p) {
                    ++j;
                    sum += values[j];
                }
                atoms.push_back({node(i), node(j), sum / static_cast<double>(j - i + 1), true});
                i = j;
            } else {
                atoms.push_back({node(i), node(i + 1), 0.5 * (values[i] + values[i + 1]), false});
                ++i;
            }
        }
    }
    return LevelsetPartition(domain, eps_p, cluster_by_level(std::move(atoms), eps_p));
}

LevelsetPartition partition_levelsets(const AttenuationExponent& p, int grid_resolution) {
    return partition_levelsets(p, grid_resolution, default_eps_p(p));
}

ProjectedDensity::ProjectedDensity(LevelsetPartition partition, SourceFunction rho,
                                   std::vector<double> cell_means)
    : partition_(std::move(partition)), rho_(std::move(rho)),
      cell_means_(std::move(cell_means)) {
    if (cell_means_.size() != partition_.cells().size())
        throw std::invalid_argument("projection: need one mean per cell");
    for (double m : cell_means_)
        if (!std::isfinite(m))
            throw std::invalid_argument("projection: cell means must be finite");
}

double ProjectedDensity::operator()(double x) const {
    std::size_t index = partition_.cell_at(x);
    return partition_.cell_averaged(index) ? cell_means_[index] : rho_(x);
}

SourceFunction ProjectedDensity::as_source() const {
    bool any_averaged = false;
    for (std::size_t c = 0; c < partition_.cells().size(); ++c)
        any_averaged = any_averaged || partition_.cell_averaged(c);
    if (!any_averaged) return rho_;  // wholly injective p: the projection is the identity

    const Interval& domain = partition_.interval();
    std::vector<double> cell_bounds;
    for (const LevelsetCell& cell : partition_.cells())
        for (auto [lo, hi] : cell.parts) {
            cell_bounds.push_back(lo);
            cell_bounds.push_back(hi);
        }
    std::vector<double> bounds = quad::merge_breakpoints(domain.a(), domain.b(), cell_bounds,
                                                         rho_.breakpoints());
    std::vector<SourceFunction::Piece> pieces;
    pieces.reserve(bounds.size() - 1);
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        double mid = 0.5 * (bounds[i] + bounds[i + 1]);
        std::size_t index = partition_.cell_at(mid);
        if (partition_.cell_averaged(index)) {
            double mean = cell_means_[index];
            pieces.push_back({bounds[i], bounds[i + 1], [mean](double) { return mean; }});
        } else {
            pieces.push_back({bounds[i], bounds[i + 1], rho_.piece_formula(mid)});
        }
    }
    return SourceFunction::piecewise(domain, std::move(pieces));
}

ProjectedDensity project(const SourceFunction& rho, const LevelsetPartition& partition,
                         int n_panels, int n_threads) {
    double tol = 1e-12 * partition.interval().length();
    if (std::abs(rho.interval().a() - partition.interval().a()) > tol ||
        std::abs(rho.interval().b() - partition.interval().b()) > tol)
        throw std::invalid_argument("project: rho and partition domains differ");
    const auto& cells = partition.cells();
    std::vector<double> means(cells.size());
    parallel_for(static_cast<int>(cells.size()), n_threads, [&](int c) {
        const LevelsetCell& cell = cells[static_cast<std::size_t>(c)];
        double width = cell.width();
        if (!(width > 0.0))
            throw std::logic_error("project: zero-measure cell");
        double integral = 0.0;
        for (auto [lo, hi] : cell.parts)
            integral += integrate_source(rho, lo, hi, n_panels);
        means[static_cast<std::size_t>(c)] = integral / width;
    });
    return ProjectedDensity(partition, rho, std::move(means));
}

ProjectedDensity project(const DensityField& rho, const LevelsetPartition& partition,
                         int n_panels, int n_threads) {
    return project(SourceFunction::from_density(rho), partition, n_panels, n_threads);
}

ProjectedDensity project(const std::function<double(double)>& rho,
                         const LevelsetPartition& partition, int n_panels, int n_threads) {
    if (!rho) throw std::invalid_argument("project: rho must be callable");
    return project(SourceFunction(partition.interval(), rho), partition, n_panels, n_threads);
}

double data_invariance_gap(const AttenuationExponent& p, const SourceFunction& rho,
                           const ProjectedDensity& projected, std::span<const double> lambdas,
                           int n_panels) {
    if (lambdas.empty())
        throw std::invalid_argument("data_invariance_gap: need at least one frequency");
    SourceFunction averaged = projected.as_source();
    double gap = 0.0;
    for (double lambda : lambdas)
        gap = std::max(gap, std::abs(forward_data(p, rho, lambda, n_panels) -
                                     forward_data(p, averaged, lambda, n_panels)));
    return gap;
}

SourceFunction levelset_perturbation(const LevelsetPartition& partition,
                                     std::size_t cell_index,
                                     const std::function<double(double)>& shape,
                                     int n_panels) {
    if (cell_index >= partition.cells().size())
        throw std::invalid_argument("levelset_perturbation: cell index out of range");
    if (!partition.cell_averaged(cell_index))
        throw std::invalid_argument("levelset_perturbation: cell is not a plateau");
    if (!shape) throw std::invalid_argument("levelset_perturbation: shape must be callable");

    const LevelsetCell& cell = partition.cells()[cell_index];
    double integral = 0.0;
    for (auto [lo, hi] : cell.parts)
        integral += quad::simpson(shape, lo, hi, n_panels);
    double mean = integral / cell.width();

    const Interval& domain = partition.interval();
    auto zero = [](double) { return 0.0; };
    auto centered = [shape, mean](double x) { return shape(x) - mean; };
    std::vector<SourceFunction::Piece> pieces;
    double cursor = domain.a();
    for (auto [lo, hi] : cell.parts) {
        if (lo > cursor) pieces.push_back({cursor, lo, zero});
        pieces.push_back({lo, hi, centered});
        cursor = hi;
    }
    if (cursor < domain.b()) pieces.push_back({cursor, domain.b(), zero});
    return SourceFunction::piecewise(domain, std::move(pieces));
}

std::vector<double> conditional_expectation_oracle(std::span<const double> p_samples,
                                                   std::span<const double> rho_samples,
                                                   int n_bins) {
    if (p_samples.empty() || p_samples.size() != rho_samples.size())
        throw std::invalid_argument("oracle: need equally many p and rho samples");
    if (n_bins < 1) throw std::invalid_argument("oracle: need at least one bin");
    double lo = p_samples[0], hi = p_samples[0];
    for (double v : p_samples) {
        if (!std::isfinite(v)) throw std::invalid_argument("oracle: p samples must be finite");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : rho_samples)
        if (!std::isfinite(v)) throw std::invalid_argument("oracle: rho samples must be finite");

    double scale = hi > lo ? static_cast<double>(n_bins) / (hi - lo) : 0.0;
    auto bin_of = [&](double v) {
        auto bin = static_cast<long long>((v - lo) * scale);
        return std::min<long long>(bin, n_bins - 1);
    };
    struct BinStat {
        double sum = 0.0;
        long long count = 0;
    };
    std::unordered_map<long long, BinStat> bins;
    for (std::size_t i = 0; i < p_samples.size(); ++i) {
        BinStat& stat = bins[bin_of(p_samples[i])];
        stat.sum += rho_samples[i];
        stat.count += 1;
    }
    std::vector<double> out(p_samples.size());
    for (std::size_t i = 0; i < p_samples.size(); ++i) {
        const BinStat& stat = bins[bin_of(p_samples[i])];
        out[i] = stat.sum / static_cast<double>(stat.count);
    }
    return out;
}

}  // namespace specrec
