#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ghem {

// Error categories used across the toolkit; the CLI maps them to exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // 1-based line number of each row in the source file, for diagnostics.
    std::vector<std::size_t> line_numbers;

    int column(const std::string& name) const;  // -1 if absent
    int require_column(const std::string& name) const;
};

// Plain comma-separated values, no quoting (none of our schemas need it).
// Leading/trailing whitespace of each field is trimmed. Blank lines skipped.
CsvTable read_csv(const std::string& path);

class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void write_row(const std::vector<std::string>& fields);

  private:
    void* file_;
    std::string path_;
};

// Deterministic numeric formatting (snprintf, locale-independent).
std::string fmt_double(double v, int precision = 6);
double parse_double_field(const std::string& field, const std::string& file,
                          std::size_t line, const std::string& col);
std::int64_t parse_int_field(const std::string& field, const std::string& file,
                             std::size_t line, const std::string& col);

}  // namespace ghem
