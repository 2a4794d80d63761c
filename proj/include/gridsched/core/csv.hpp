#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gridsched/error.hpp"

namespace gridsched::core {

/// Reads a two-column (hour_index, kW) profile. A non-numeric first line is
/// treated as a header. Rows must be in hour order starting at 0.
inline std::vector<double> read_profile_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigUnreadable("cannot open profile CSV: " + path.string());
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string idx_s, val_s;
        if (!std::getline(ss, idx_s, ',') || !std::getline(ss, val_s))
            throw SchemaViolation(path.string() + ":" + std::to_string(line_no) + ": expected 'hour_index,kW'");
        std::size_t idx = 0;
        double v = 0.0;
        try {
            idx = std::stoul(idx_s);
            v = std::stod(val_s);
        } catch (const std::exception&) {
            if (line_no == 1) continue; // header
            throw SchemaViolation(path.string() + ":" + std::to_string(line_no) + ": non-numeric value");
        }
        if (idx != values.size())
            throw SchemaViolation(path.string() + ":" + std::to_string(line_no) + ": hour index out of sequence");
        values.push_back(v);
    }
    return values;
}

inline void write_profile_csv(const std::filesystem::path& path, const std::vector<double>& values) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out.precision(17);
    out << "hour_index,kw\n";
    for (std::size_t i = 0; i < values.size(); ++i) out << i << ',' << values[i] << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace gridsched::core
