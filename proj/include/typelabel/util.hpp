#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace typelabel {

// Malformed input data (sample records, vocab files, pattern files, ...).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or missing configuration, including missing input files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Backend (MLM / encoder service) failures.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a64(std::string_view data);

std::string to_lower(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view line);

std::string join_tokens(std::span<const std::string> tokens, std::string_view sep = " ");

// Whole file as trimmed lines; empty lines are dropped. Throws ConfigError
// naming the path when the file cannot be opened.
std::vector<std::string> read_lines(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view content);

// Raw little-endian doubles; used for bit-exact checkpoint round trips.
void write_doubles(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_doubles(const std::filesystem::path& path);

}  // namespace typelabel
