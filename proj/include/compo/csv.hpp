#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace compo {

/// Artifact-wide CSV version tag; bump when any schema changes.
inline constexpr const char* kCsvVersion = "v1";

/// RFC-4180-style CSV writing: comma separated, LF line endings, fields
/// quoted when they contain commas, quotes or newlines. Numbers render with
/// %.17g so payloads are byte-stable across runs.
class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::string& schema) : os_(os) {
        os_ << "# compo-approx-lab " << kCsvVersion << " schema=" << schema << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            os_ << quote(cells[i]);
        }
        os_ << '\n';
    }

    static std::string num(double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    static std::string num(std::uint64_t v) { return std::to_string(v); }

private:
    static std::string quote(const std::string& s) {
        bool needs = s.find_first_of(",\"\n") != std::string::npos;
        if (!needs) return s;
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') out += '"';
            out += c;
        }
        out += '"';
        return out;
    }

    std::ostream& os_;
};

} // namespace compo
