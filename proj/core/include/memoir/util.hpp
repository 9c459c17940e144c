#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace memoir {

std::string trim(const std::string& s);
std::string to_lower(std::string s);

/// Lowercase snake_case normalization used for profile keys.
std::string snake_case(const std::string& s);

std::vector<std::string> split_lines(const std::string& s);

/// Lowercased alphanumeric token set (non-alnum characters are separators).
std::set<std::string> token_set(const std::string& s);

/// Whitespace-delimited token count; the accounting unit of the test doubles.
std::size_t whitespace_token_count(const std::string& s);

std::uint64_t fnv1a64(const std::string& s);
std::uint64_t splitmix64(std::uint64_t& state);

/// Millisecond-precision UTC instants, e.g. "2026-01-02T03:04:05.678Z".
std::string format_iso8601_ms(std::int64_t ms);
std::optional<std::int64_t> parse_iso8601_ms(const std::string& s);

/// Replaces line breaks with the literal two-character sequence "\n".
std::string escape_linebreaks(const std::string& s);

std::string random_hex(std::size_t bytes);

} // namespace memoir
