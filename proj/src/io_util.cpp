#include "pggact/io_util.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace pggact {

namespace {

std::string printf_format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

std::string format_double(double v) { return printf_format("%.17g", v); }
std::string format_fraction(double v) { return printf_format("%.6f", v); }
std::string format_compact(double v) { return printf_format("%.6g", v); }

void ensure_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) {
    throw std::runtime_error("cannot create directory " + path + ": " +
                             ec.message());
  }
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path + " for hashing");
  std::uint64_t hash = 1469598103934665603ull;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ull;
    }
  }
  return hash;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

void Manifest::add(const std::string& key, const std::string& value) {
  entries.emplace_back(key, value);
}

void Manifest::add(const std::string& key, double value) {
  entries.emplace_back(key, format_double(value));
}

void Manifest::add(const std::string& key, long value) {
  entries.emplace_back(key, std::to_string(value));
}

void Manifest::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& [key, value] : entries) {
    out << key << "=" << value << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::string> list_files(const std::string& root,
                                    const std::string& exclude) {
  std::vector<std::string> files;
  if (!fs::exists(root)) return files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::string rel = fs::relative(entry.path(), root).generic_string();
    if (rel == exclude) continue;
    files.push_back(std::move(rel));
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace pggact
