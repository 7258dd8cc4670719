#include "ghem/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>

namespace ghem {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

int CsvTable::require_column(const std::string& name) const {
    const int c = column(name);
    if (c < 0) throw DataError("missing required CSV column '" + name + "'");
    return c;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file '" + path + "'");
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        auto fields = split_fields(t);
        if (table.header.empty()) {
            table.header = std::move(fields);
        } else {
            if (fields.size() != table.header.size())
                throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                                std::to_string(table.header.size()) + " fields, got " +
                                std::to_string(fields.size()));
            table.rows.push_back(std::move(fields));
            table.line_numbers.push_back(line_no);
        }
    }
    if (table.header.empty()) throw DataError("CSV file '" + path + "' is empty");
    return table;
}

CsvWriter::CsvWriter(const std::string& path) : path_(path) {
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw DataError("cannot open '" + path + "' for writing: " + std::strerror(errno));
    file_ = f;
}

CsvWriter::~CsvWriter() {
    if (file_) std::fclose(static_cast<FILE*>(file_));
}

void CsvWriter::write_row(const std::vector<std::string>& fields) {
    FILE* f = static_cast<FILE*>(file_);
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) std::fputc(',', f);
        std::fputs(fields[i].c_str(), f);
    }
    std::fputc('\n', f);
}

std::string fmt_double(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    // Normalize "-0.000000" to "0.000000" so byte-identical reruns don't
    // depend on the sign of a rounded-away residual.
    if (buf[0] == '-') {
        bool all_zero = true;
        for (const char* p = buf + 1; *p; ++p)
            if (*p != '0' && *p != '.') {
                all_zero = false;
                break;
            }
        if (all_zero) return buf + 1;
    }
    return buf;
}

double parse_double_field(const std::string& field, const std::string& file,
                          std::size_t line, const std::string& col) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size() || errno == ERANGE)
        throw DataError(file + ":" + std::to_string(line) + ": bad numeric value '" + field +
                        "' in column '" + col + "'");
    return v;
}

std::int64_t parse_int_field(const std::string& field, const std::string& file,
                             std::size_t line, const std::string& col) {
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(field.c_str(), &end, 10);
    if (field.empty() || end != field.c_str() + field.size() || errno == ERANGE)
        throw DataError(file + ":" + std::to_string(line) + ": bad integer value '" + field +
                        "' in column '" + col + "'");
    return v;
}

}  // namespace ghem
