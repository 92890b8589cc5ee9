#ifndef SPECREC_CSV_HPP
#define SPECREC_CSV_HPP

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "specrec/model.hpp"
#include "specrec/projection.hpp"

namespace specrec {

/// Reading or parsing failed because the file's content is malformed;
/// messages are anchored as "<path>:<line>: ...".
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The file system itself failed (open, create, write).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace csv {

/// Shortest decimal scientific form that parses back to the same double.
std::string format_double(double value);
/// Inverse of format_double; accepts any standard decimal form.
double parse_double(std::string_view text);
std::string format_u64(std::uint64_t value);
std::uint64_t parse_u64(std::string_view text);

/// Generic table: one header row, then numeric rows, every value in
/// round-trip scientific form.
void write_table(const std::filesystem::path& path, const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows);

/// measurements.csv: "# sigma=..." and (when present) "# seed=..." header
/// comments, then "lambda,D" rows.
void write_measurements(const std::filesystem::path& path, const MeasurementSet& data);
MeasurementSet read_measurements(const std::filesystem::path& path);

/// partition.csv: one row per cell with its id, "lo:hi|lo:hi" subinterval
/// list, representative p value, and whether averaging applies.
void write_partition(const std::filesystem::path& path, const LevelsetPartition& partition);

}  // namespace csv

}  // namespace specrec

#endif
