#ifndef SPECREC_PROJECTION_HPP
#define SPECREC_PROJECTION_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "specrec/model.hpp"

namespace specrec {

/// One approximate levelset of p: a finite union of subintervals sharing a
/// representative p value. `plateau` marks cells on which p is detected as
/// exactly constant (not merely quantized together).
struct LevelsetCell {
    std::vector<std::pair<double, double>> parts;  // disjoint, ascending
    double level = 0.0;
    bool plateau = false;
    double width() const;
};

/// Finite approximation of the sigma-algebra generated by p: disjoint cells
/// covering the interval, each a union of subintervals with p constant to
/// within eps_p (plateaus) or a single resolution cell (injective regions).
class LevelsetPartition {
public:
    LevelsetPartition(Interval interval, double eps_p, std::vector<LevelsetCell> cells);
    const Interval& interval() const { return interval_; }
    double eps_p() const { return eps_p_; }
    const std::vector<LevelsetCell>& cells() const { return cells_; }
    /// Index of the cell owning x (subintervals are left-open; the leftmost
    /// one also owns the interval's left endpoint).
    std::size_t cell_at(double x) const;
    /// True when averaging replaces rho on this cell: a detected plateau, or
    /// several quantized-together locations sharing one p value.
    bool cell_averaged(std::size_t index) const;

private:
    struct Atom {
        double lo, hi;
        std::size_t cell;
    };
    Interval interval_;
    double eps_p_;
    std::vector<LevelsetCell> cells_;
    std::vector<Atom> atoms_;  // cell parts re-sorted by position
};

/// Detect the levelsets of p at the given grid resolution. Closed-form
/// plateau segments become exact cells and the remaining segments split into
/// per-grid-cell singletons; sampled p merges consecutive grid cells whose
/// values agree within eps_p (isolated single-sample spikes are first
/// absorbed into their surroundings). Cells whose representative values
/// agree within eps_p merge into one, possibly non-contiguous, cell.
LevelsetPartition partition_levelsets(const AttenuationExponent& p, int grid_resolution,
                                      double eps_p);
/// Same with the default tolerance: 1e-12 for closed-form p (plateaus are
/// exact) and 1e-9 * range(p) for sampled p.
LevelsetPartition partition_levelsets(const AttenuationExponent& p, int grid_resolution);

/// Conditional expectation of rho given the partition: on averaged cells the
/// value is the integral mean over the whole cell, elsewhere rho passes
/// through unchanged. Per-cell integrals of the input are preserved.
class ProjectedDensity {
public:
    ProjectedDensity(LevelsetPartition partition, SourceFunction rho,
                     std::vector<double> cell_means);
    double operator()(double x) const;
    const LevelsetPartition& partition() const { return partition_; }
    /// Integral mean of the input over each cell, indexed like cells().
    const std::vector<double>& cell_means() const { return cell_means_; }
    /// Piecewise view suitable for quadrature and further projection.
    SourceFunction as_source() const;

private:
    LevelsetPartition partition_;
    SourceFunction rho_;
    std::vector<double> cell_means_;
};

ProjectedDensity project(const SourceFunction& rho, const LevelsetPartition& partition,
                         int n_panels = 64, int n_threads = 1);
ProjectedDensity project(const DensityField& rho, const LevelsetPartition& partition,
                         int n_panels = 64, int n_threads = 1);
ProjectedDensity project(const std::function<double(double)>& rho,
                         const LevelsetPartition& partition, int n_panels = 64,
                         int n_threads = 1);

/// max_j |D(rho) - D(P rho)| over the given frequencies; zero in exact
/// arithmetic because projection preserves the data.
double data_invariance_gap(const AttenuationExponent& p, const SourceFunction& rho,
                           const ProjectedDensity& projected, std::span<const double> lambdas,
                           int n_panels = 64);

/// shape minus its mean over the given plateau cell, masked to the cell:
/// a zero-integral perturbation that the projection annihilates. The cell
/// must satisfy cell_averaged.
SourceFunction levelset_perturbation(const LevelsetPartition& partition,
                                     std::size_t cell_index,
                                     const std::function<double(double)>& shape,
                                     int n_panels = 64);

/// Brute-force discrete conditional expectation on aligned sample grids:
/// quantize the p samples into n_bins equal-width value bins and replace
/// each rho sample by the mean of its bin. Used as an independent oracle
/// for project.
std::vector<double> conditional_expectation_oracle(std::span<const double> p_samples,
                                                   std::span<const double> rho_samples,
                                                   int n_bins);

}  // namespace specrec

#endif
