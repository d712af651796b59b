#include "adatrans/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace adatrans {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path + " for reading");
  return is;
}

}  // namespace

void write_matrix_csv(const Matrix& m, const std::string& path) {
  std::ofstream os = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << fmt(m(i, j));
    }
    os << '\n';
  }
  if (!os) throw std::runtime_error("write to " + path + " failed");
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream is = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) row.push_back(std::stod(field));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ": ragged rows");
    rows.push_back(std::move(row));
  }
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void dump_problem(const TransferProblem& problem, const GroundTruth* truth,
                  const SettingSpec* spec, const std::string& prefix) {
  problem.validate();
  {
    std::ofstream meta = open_out(prefix + "_meta.txt");
    meta << "format_version = 1\n";
    meta << "p = " << problem.p() << "\n";
    meta << "n_t = " << problem.n_target() << "\n";
    meta << "n_s = " << problem.n_source() << "\n";
    meta << "k = " << problem.num_sources() << "\n";
    if (spec) {
      meta << "setting = " << static_cast<int>(spec->setting) << "\n";
      meta << "s = " << spec->s << "\n";
      meta << "s_k = " << spec->s_k << "\n";
      meta << "h_wedge = " << fmt(spec->h_wedge) << "\n";
      meta << "beta_value = " << fmt(spec->beta_value) << "\n";
      meta << "cov = "
           << (spec->covariance == CovarianceKind::identity ? "identity" : "toeplitz") << "\n";
      meta << "rho = " << fmt(spec->toeplitz_rho) << "\n";
      meta << "noise_sd = " << fmt(spec->noise_sd) << "\n";
      meta << "sign = "
           << (spec->sign_pattern == SignPattern::alternating ? "alternating" : "random")
           << "\n";
      meta << "seed = " << spec->seed << "\n";
    }
  }
  write_matrix_csv(problem.target_X, prefix + "_X0.csv");
  write_matrix_csv(problem.target_y, prefix + "_y0.csv");
  for (int k = 0; k < problem.num_sources(); ++k) {
    write_matrix_csv(problem.sources[k].X, prefix + "_X" + std::to_string(k + 1) + ".csv");
    write_matrix_csv(problem.sources[k].y, prefix + "_y" + std::to_string(k + 1) + ".csv");
  }
  if (truth) {
    Matrix t(problem.p(), 1 + truth->num_sources());
    t.col(0) = truth->beta;
    for (int k = 0; k < truth->num_sources(); ++k) t.col(k + 1) = truth->deltas[k];
    write_matrix_csv(t, prefix + "_truth.csv");
  }
}

LoadedProblem load_problem(const std::string& prefix) {
  const auto meta = parse_config_file(prefix + "_meta.txt");
  auto require = [&](const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end())
      throw std::runtime_error(prefix + "_meta.txt: missing key '" + key + "'");
    return it->second;
  };
  const int k = std::stoi(require("k"));

  LoadedProblem out;
  out.problem.target_X = read_matrix_csv(prefix + "_X0.csv");
  Matrix y0 = read_matrix_csv(prefix + "_y0.csv");
  out.problem.target_y = y0.col(0);
  for (int i = 1; i <= k; ++i) {
    TaskSample s;
    s.X = read_matrix_csv(prefix + "_X" + std::to_string(i) + ".csv");
    Matrix y = read_matrix_csv(prefix + "_y" + std::to_string(i) + ".csv");
    s.y = y.col(0);
    out.problem.sources.push_back(std::move(s));
  }
  out.problem.validate();

  if (meta.count("setting")) {
    SettingSpec spec = SettingSpec::defaults(
        std::stoi(meta.at("setting")) == 2 ? Setting::sample_wise : Setting::feature_wise);
    spec.p = out.problem.p();
    spec.n_t = out.problem.n_target();
    spec.n_s = out.problem.n_source();
    spec.k = out.problem.num_sources();
    if (meta.count("s")) spec.s = std::stoi(meta.at("s"));
    if (meta.count("s_k")) spec.s_k = std::stoi(meta.at("s_k"));
    if (meta.count("h_wedge")) spec.h_wedge = std::stod(meta.at("h_wedge"));
    if (meta.count("beta_value")) spec.beta_value = std::stod(meta.at("beta_value"));
    if (meta.count("cov"))
      spec.covariance = meta.at("cov") == "toeplitz" ? CovarianceKind::toeplitz
                                                     : CovarianceKind::identity;
    if (meta.count("rho")) spec.toeplitz_rho = std::stod(meta.at("rho"));
    if (meta.count("noise_sd")) spec.noise_sd = std::stod(meta.at("noise_sd"));
    if (meta.count("sign"))
      spec.sign_pattern = meta.at("sign") == "random" ? SignPattern::random
                                                      : SignPattern::alternating;
    if (meta.count("seed")) spec.seed = std::stoull(meta.at("seed"));
    out.spec = spec;
  }

  std::ifstream probe(prefix + "_truth.csv");
  if (probe.good()) {
    probe.close();
    const Matrix t = read_matrix_csv(prefix + "_truth.csv");
    GroundTruth truth;
    truth.beta = t.col(0);
    truth.support0 = support_of(truth.beta);
    truth.h_min0 = 0.0;
    for (int j : truth.support0)
      truth.h_min0 = truth.h_min0 == 0.0 ? std::abs(truth.beta[j])
                                         : std::min(truth.h_min0, std::abs(truth.beta[j]));
    double h_min_k = 0.0;
    for (int c = 1; c < t.cols(); ++c) {
      truth.deltas.push_back(t.col(c));
      truth.supports.push_back(support_of(t.col(c)));
      double l1 = 0.0;
      for (int j : truth.supports.back()) {
        l1 += std::abs(t(j, c));
        h_min_k = h_min_k == 0.0 ? std::abs(t(j, c)) : std::min(h_min_k, std::abs(t(j, c)));
      }
      truth.h_l1.push_back(l1);
    }
    truth.h_min_k = h_min_k;
    out.truth = truth;
  }
  return out;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream is = open_in(path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

}  // namespace adatrans
