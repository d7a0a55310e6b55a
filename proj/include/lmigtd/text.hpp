#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace lmigtd::text {

inline std::string_view trim(std::string_view s)
{
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_double(std::string_view s)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    if (s.empty())
        return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

inline bool is_integer(double v) { return std::floor(v) == v; }

/// Shortest representation that round-trips through parse_double.
inline std::string format_double(double v)
{
    if (v == 0.0)
        v = 0.0; // drop the sign of -0
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

/// Strict weak order that compares two labels numerically when both parse as
/// numbers, and lexicographically otherwise.
inline bool label_less(const std::string& a, const std::string& b)
{
    const auto na = parse_double(a);
    const auto nb = parse_double(b);
    if (na && nb) {
        if (*na != *nb)
            return *na < *nb;
        return a < b;
    }
    if (na != nb)
        return na.has_value(); // numbers sort before words
    return a < b;
}

/// RFC-4180 reader. Fields may be quoted; quoted fields may hold commas,
/// doubled quotes and line breaks. Unquoted fields are whitespace-trimmed.
class CsvReader {
public:
    explicit CsvReader(std::istream& in, char delim = ',') : in_(in), delim_(delim) {}

    /// Reads the next record. Returns false at end of input.
    bool next(std::vector<std::string>& fields)
    {
        fields.clear();
        if (in_.peek() == std::char_traits<char>::eof())
            return false;
        std::string field;
        bool quoted = false, in_quotes = false, any = false;
        auto push = [&] {
            fields.push_back(quoted ? field : std::string(trim(field)));
            field.clear();
            quoted = false;
        };
        for (int ci; (ci = in_.get()) != std::char_traits<char>::eof();) {
            const char c = static_cast<char>(ci);
            any = true;
            if (in_quotes) {
                if (c == '"') {
                    if (in_.peek() == '"') {
                        field.push_back('"');
                        in_.get();
                    } else {
                        in_quotes = false;
                    }
                } else {
                    field.push_back(c);
                }
            } else if (c == '"' && trim(field).empty()) {
                field.clear();
                in_quotes = quoted = true;
            } else if (c == delim_) {
                push();
            } else if (c == '\n') {
                push();
                ++line_;
                return true;
            } else if (c != '\r' || in_.peek() != '\n') {
                field.push_back(c);
            }
        }
        if (in_quotes)
            throw std::runtime_error("unterminated quoted field at line " + std::to_string(line_ + 1));
        if (any)
            push();
        ++line_;
        return any;
    }

    std::size_t line() const { return line_; }

private:
    std::istream& in_;
    char delim_;
    std::size_t line_ = 0;
};

inline std::string quote_csv(std::string_view s)
{
    if (s.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            os << ',';
        os << quote_csv(fields[i]);
    }
    os << '\n';
}

inline std::size_t edit_distance(std::string_view a, std::string_view b)
{
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j)
        prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

} // namespace lmigtd::text
