#pragma once
// Deterministic text output: shortest round-trip decimal formatting, atomic
// file writes (temp file + rename), and a small CSV reader for path files.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mlrde/pathnorms.hpp"

namespace mlrde {

// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const std::to_chars_result res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

// Writes content to path via a sibling temp file and rename, so an
// interrupted run never leaves a partial file at the target.
inline void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("atomic_write_file: cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("atomic_write_file: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// Reads a path CSV: one header line (ignored if non-numeric), then rows of
// time followed by one column per dimension.
inline DiscretePath read_path_csv(std::istream& in) {
  DiscretePath path;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(cell, &pos));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header row
      }
      throw std::invalid_argument("read_path_csv: non-numeric row");
    }
    first = false;
    if (row.size() < 2) throw std::invalid_argument("read_path_csv: need time plus one value");
    path.times.push_back(row[0]);
    path.values.emplace_back(row.begin() + 1, row.end());
  }
  path.validate();
  return path;
}

inline DiscretePath read_path_csv_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("read_path_csv_file: cannot open " + file.string());
  return read_path_csv(in);
}

}  // namespace mlrde
