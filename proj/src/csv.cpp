#include "specrec/csv.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

namespace specrec::csv {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() +
                              ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

void finish_out(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

[[noreturn]] void schema_fail(const std::filesystem::path& path, std::size_t line,
                              const std::string& message) {
    std::ostringstream msg;
    msg << path.string() << ":" << line << ": " << message;
    throw SchemaError(msg.str());
}

}  // namespace

std::string format_double(double value) {
    char buffer[64];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                   std::chars_format::scientific);
    if (ec != std::errc())
        throw std::invalid_argument("format_double: value not representable");
    return std::string(buffer, end);
}

double parse_double(std::string_view text) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [end, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || end != last)
        throw std::invalid_argument("parse_double: malformed number '" + std::string(text) + "'");
    return value;
}

std::string format_u64(std::uint64_t value) {
    char buffer[32];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc()) throw std::invalid_argument("format_u64: not representable");
    return std::string(buffer, end);
}

std::uint64_t parse_u64(std::string_view text) {
    std::uint64_t value = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size())
        throw std::invalid_argument("parse_u64: malformed integer '" + std::string(text) + "'");
    return value;
}

void write_table(const std::filesystem::path& path, const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows) {
    if (columns.empty()) throw std::invalid_argument("write_table: need at least one column");
    std::ofstream out = open_out(path);
    for (std::size_t c = 0; c < columns.size(); ++c)
        out << (c ? "," : "") << columns[c];
    out << "\n";
    for (const auto& row : rows) {
        if (row.size() != columns.size())
            throw std::invalid_argument("write_table: row width must match the header");
        for (std::size_t c = 0; c < row.size(); ++c)
            out << (c ? "," : "") << format_double(row[c]);
        out << "\n";
    }
    finish_out(out, path);
}

void write_measurements(const std::filesystem::path& path, const MeasurementSet& data) {
    std::ofstream out = open_out(path);
    out << "# sigma=" << format_double(data.sigma()) << "\n";
    if (data.seed()) out << "# seed=" << format_u64(*data.seed()) << "\n";
    out << "lambda,D\n";
    for (std::size_t j = 0; j < data.size(); ++j)
        out << format_double(data.lambdas()[j]) << "," << format_double(data.values()[j])
            << "\n";
    finish_out(out, path);
}

MeasurementSet read_measurements(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");

    std::optional<double> sigma;
    std::optional<std::uint64_t> seed;
    std::vector<double> lambdas, values;
    bool saw_header = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string_view body(line);
            body.remove_prefix(1);
            while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
            if (body.starts_with("sigma=")) {
                try {
                    sigma = parse_double(body.substr(6));
                } catch (const std::invalid_argument& err) {
                    schema_fail(path, line_no, err.what());
                }
            } else if (body.starts_with("seed=")) {
                try {
                    seed = parse_u64(body.substr(5));
                } catch (const std::invalid_argument& err) {
                    schema_fail(path, line_no, err.what());
                }
            } else {
                schema_fail(path, line_no, "unknown header comment");
            }
            continue;
        }
        if (!saw_header) {
            if (line != "lambda,D")
                schema_fail(path, line_no, "expected column header 'lambda,D'");
            saw_header = true;
            continue;
        }
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            schema_fail(path, line_no, "expected two comma-separated values");
        try {
            lambdas.push_back(parse_double(std::string_view(line).substr(0, comma)));
            values.push_back(parse_double(std::string_view(line).substr(comma + 1)));
        } catch (const std::invalid_argument& err) {
            schema_fail(path, line_no, err.what());
        }
    }
    if (!saw_header) schema_fail(path, line_no, "missing column header 'lambda,D'");
    if (!sigma) schema_fail(path, line_no, "missing '# sigma=' header");
    if (lambdas.empty()) schema_fail(path, line_no, "no measurement rows");
    try {
        return MeasurementSet(std::move(lambdas), std::move(values), *sigma, seed);
    } catch (const std::invalid_argument& err) {
        schema_fail(path, line_no, err.what());
    }
}

void write_partition(const std::filesystem::path& path, const LevelsetPartition& partition) {
    std::ofstream out = open_out(path);
    out << "cell,parts,level,averaged\n";
    const auto& cells = partition.cells();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        out << c << ",";
        for (std::size_t i = 0; i < cells[c].parts.size(); ++i)
            out << (i ? "|" : "") << format_double(cells[c].parts[i].first) << ":"
                << format_double(cells[c].parts[i].second);
        out << "," << format_double(cells[c].level) << ","
            << (partition.cell_averaged(c) ? 1 : 0) << "\n";
    }
    finish_out(out, path);
}

}  // namespace specrec::csv
