#pragma once

#include "adatrans/datagen.hpp"
#include "adatrans/types.hpp"

#include <map>
#include <optional>
#include <string>

namespace adatrans {

void write_matrix_csv(const Matrix& m, const std::string& path);
Matrix read_matrix_csv(const std::string& path);

/// Writes `<prefix>_meta.txt`, `<prefix>_X<k>.csv` / `<prefix>_y<k>.csv` for
/// every task (0 = target) and, when a truth is given, `<prefix>_truth.csv`
/// holding beta and the contrasts as columns. Matrices are plain CSV with 17
/// significant digits, one row per line.
void dump_problem(const TransferProblem& problem, const GroundTruth* truth,
                  const SettingSpec* spec, const std::string& prefix);

struct LoadedProblem {
  TransferProblem problem;
  std::optional<GroundTruth> truth;
  std::optional<SettingSpec> spec;
};

LoadedProblem load_problem(const std::string& prefix);

/// `key = value` lines; blank lines and '#' comments ignored.
std::map<std::string, std::string> parse_config_file(const std::string& path);

}  // namespace adatrans
