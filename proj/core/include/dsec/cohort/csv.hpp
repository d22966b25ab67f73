#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dsec::cohort {

/// Splits one CSV line. Fields may be wrapped in double quotes; a doubled
/// quote inside a quoted field is a literal quote.
std::vector<std::string> split_csv_line(std::string_view line);

/// Quotes a field only when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

/// Reads CSV rows, skipping blank lines and lines starting with '#'.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    /// Next row, or nullopt at end of input.
    std::optional<std::vector<std::string>> next();
    /// 1-based physical line number of the row last returned.
    std::size_t line() const noexcept { return line_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
};

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Strict full-field parse; nullopt for empty or malformed fields.
std::optional<double> parse_double(std::string_view field);

} // namespace dsec::cohort
