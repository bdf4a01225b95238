#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace hypochain::csv {

/// Locale-independent, 17 significant digits (round-trips doubles exactly).
std::string format_double(double v);

/// Deterministic CSV output: '.' decimal, '\n' line ends, no timestamps.
class Writer {
public:
    explicit Writer(const std::filesystem::path& path);

    void comment(const std::string& text);
    void header(const std::vector<std::string>& columns);
    void row(const std::vector<double>& values);
    void row_mixed(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
};

}  // namespace hypochain::csv
