#include "hypochain/csv.hpp"

#include <charconv>
#include <cmath>

#include "hypochain/errors.hpp"

namespace hypochain::csv {

std::string format_double(double v) {
    char buffer[64];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v,
                                   std::chars_format::general, 17);
    if (ec != std::errc()) throw Error("number formatting failed");
    return std::string(buffer, ptr);
}

Writer::Writer(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
}

void Writer::comment(const std::string& text) { out_ << "# " << text << "\n"; }

void Writer::header(const std::vector<std::string>& columns) { row_mixed(columns); }

void Writer::row(const std::vector<double>& values) {
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) out_ << ',';
        out_ << format_double(values[i]);
    }
    out_ << '\n';
}

void Writer::row_mixed(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

}  // namespace hypochain::csv
