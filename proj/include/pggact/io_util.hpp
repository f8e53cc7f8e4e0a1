#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace pggact {

// %.17g: round-trips doubles exactly.
std::string format_double(double v);
// %.6f, for time-series fractions.
std::string format_fraction(double v);
// %.6g, compact value for directory names and labels.
std::string format_compact(double v);

void ensure_dir(const std::string& path);

// FNV-1a 64-bit over a file's bytes; used for the reproducibility audit
// hashes in run manifests.
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t v);

// Flat key=value manifest, written in insertion order.
struct Manifest {
  std::vector<std::pair<std::string, std::string>> entries;

  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, double value);
  void add(const std::string& key, long value);
  void write(const std::string& path) const;
};

// Relative paths of all regular files under root (sorted), excluding
// `exclude` (e.g. the manifest itself).
std::vector<std::string> list_files(const std::string& root,
                                    const std::string& exclude = "");

}  // namespace pggact
