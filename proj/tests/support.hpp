#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "censmte/dataset.hpp"

namespace testsupport {

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratchDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("censmte_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string writeFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return path.string();
}

inline std::string readFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline censmte::ObservationTable makeTable(std::vector<censmte::Observation> rows,
                                           std::size_t levels = 1, std::size_t clusters = 1,
                                           std::size_t deciders = 0) {
  std::vector<std::string> x, cl, dec;
  for (std::size_t i = 0; i < levels; ++i) x.push_back("x" + std::to_string(i));
  for (std::size_t i = 0; i < clusters; ++i) cl.push_back("g" + std::to_string(i));
  for (std::size_t i = 0; i < deciders; ++i) dec.push_back("j" + std::to_string(i));
  return censmte::ObservationTable(std::move(rows), x, cl, dec);
}

}  // namespace testsupport
