#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fibra/config.hpp"

namespace fibra {

// exit codes shared by the CLI and the drivers
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitIo = 4;

// Versioned CSV: first line "# schema <name> v<version>". Readers reject
// unknown schema names/versions.
struct CsvTable {
  std::string schema;
  int version = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::filesystem::path& path, const std::string& expect_schema,
                  int max_version);

int run_rve(const RunConfig& cfg);
int run_multiscale(const RunConfig& cfg);
int run_bench(const RunConfig& cfg);
int run_netgen(const RunConfig& cfg);
int run_metrics(const RunConfig& cfg);

// dispatch on cfg.mode; maps exceptions to exit codes and prints them
int run(const RunConfig& cfg);

}  // namespace fibra
