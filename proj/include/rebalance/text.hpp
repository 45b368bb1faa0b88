#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "rebalance/errors.hpp"

namespace rebalance {

/// Shortest decimal form that round-trips the exact double value.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, std::string_view context = {}) {
    double v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw parse_error("invalid number '" + std::string(s) + "'" +
                          (context.empty() ? "" : " in " + std::string(context)));
    return v;
}

inline std::int64_t parse_int(std::string_view s, std::string_view context = {}) {
    std::int64_t v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw parse_error("invalid integer '" + std::string(s) + "'" +
                          (context.empty() ? "" : " in " + std::string(context)));
    return v;
}

inline std::uint64_t parse_uint(std::string_view s, std::string_view context = {}) {
    std::uint64_t v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw parse_error("invalid unsigned integer '" + std::string(s) + "'" +
                          (context.empty() ? "" : " in " + std::string(context)));
    return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

/// Splits into lines on '\n'; a trailing newline does not produce an empty tail line.
inline std::vector<std::string_view> split_lines(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start < s.size()) {
        std::size_t pos = s.find('\n', start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

/// FNV-1a 64-bit; used for manifest integrity digests and config digests.
inline std::uint64_t fnv1a64(std::string_view data,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string to_hex16(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

inline std::uint64_t parse_hex16(std::string_view s, std::string_view context = {}) {
    std::uint64_t v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.size() != 16)
        throw parse_error("invalid digest '" + std::string(s) + "'" +
                          (context.empty() ? "" : " in " + std::string(context)));
    return v;
}

/// Identifiers and names travel in tab-separated single-line records.
inline void require_plain_text(std::string_view s, std::string_view what) {
    if (s.find('\t') != std::string_view::npos ||
        s.find('\n') != std::string_view::npos ||
        s.find('\r') != std::string_view::npos)
        throw validation_error(std::string(what) + " must not contain tabs or line breaks");
}

} // namespace rebalance
