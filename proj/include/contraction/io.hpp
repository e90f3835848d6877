#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "contraction/langevin.hpp"
#include "contraction/models.hpp"

namespace contraction {

namespace detail {

/// Shortest exact decimal for a double ("%.17g" round-trips bit-exactly).
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw estimation_error("cannot write " + p.string());
  return f;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw estimation_error("cannot read " + p.string());
  return f;
}

}  // namespace detail

/// Writes <base>.csv (header x1..xd[,y], one record per sample) and a
/// <base>.json sidecar with {kind, d, p, theta_star, n, seed}.
inline void write_dataset(const ModelSpec& spec, const Dataset& data, const std::string& base) {
  auto csv = detail::open_out(base + ".csv");
  for (int j = 0; j < spec.d; ++j) csv << (j ? "," : "") << "x" << (j + 1);
  if (spec.responses_present()) csv << ",y";
  csv << "\n";
  for (long i = 0; i < data.n; ++i) {
    for (int j = 0; j < spec.d; ++j)
      csv << (j ? "," : "") << detail::fmt_double(data.covariates(i, j));
    if (spec.responses_present()) csv << "," << detail::fmt_double(data.responses(i));
    csv << "\n";
  }
  nlohmann::json meta{{"kind", to_string(spec.kind)},
                      {"d", spec.d},
                      {"p", spec.p},
                      {"theta_star", std::vector<double>(spec.theta_star.data(),
                                                         spec.theta_star.data() + spec.d)},
                      {"n", data.n},
                      {"seed", data.seed}};
  detail::open_out(base + ".json") << meta.dump(2) << "\n";
}

inline std::pair<ModelSpec, Dataset> read_dataset(const std::string& base) {
  nlohmann::json meta;
  detail::open_in(base + ".json") >> meta;
  const int d = meta.at("d").get<int>();
  auto star = meta.at("theta_star").get<std::vector<double>>();
  ModelSpec spec(model_kind_from_string(meta.at("kind").get<std::string>()), d,
                 Eigen::Map<VectorXd>(star.data(), static_cast<long>(star.size())),
                 meta.at("p").get<int>());
  Dataset data;
  data.n = meta.at("n").get<long>();
  data.seed = meta.at("seed").get<std::uint64_t>();
  data.model_fingerprint = spec.fingerprint();
  data.covariates.resize(data.n, d);
  if (spec.responses_present()) data.responses.resize(data.n);

  auto csv = detail::open_in(base + ".csv");
  std::string line;
  if (!std::getline(csv, line)) throw estimation_error("empty dataset csv: " + base);
  for (long i = 0; i < data.n; ++i) {
    if (!std::getline(csv, line))
      throw estimation_error("dataset csv truncated at record " + std::to_string(i));
    const auto cells = detail::split_csv_line(line);
    const std::size_t expect = static_cast<std::size_t>(d) + (spec.responses_present() ? 1 : 0);
    if (cells.size() != expect)
      throw estimation_error("dataset csv: bad field count at record " + std::to_string(i));
    for (int j = 0; j < d; ++j) data.covariates(i, j) = std::stod(cells[j]);
    if (spec.responses_present()) data.responses(i) = std::stod(cells[d]);
  }
  data.finalize_caches();
  return {spec, data};
}

/// Writes <base>.csv (step, coord1..coordd) and <base>.json metadata
/// {seed, h, sampler, acceptance_rate, fingerprint}.
inline void write_trajectory(const Trajectory& traj, const std::string& base) {
  auto csv = detail::open_out(base + ".csv");
  csv << "step";
  for (long j = 0; j < traj.states.cols(); ++j) csv << ",coord" << (j + 1);
  csv << "\n";
  for (long i = 0; i < traj.states.rows(); ++i) {
    csv << (i + 1);
    for (long j = 0; j < traj.states.cols(); ++j)
      csv << "," << detail::fmt_double(traj.states(i, j));
    csv << "\n";
  }
  nlohmann::json meta{{"seed", traj.seed},
                      {"h", traj.step_size_used},
                      {"sampler", to_string(traj.sampler)},
                      {"acceptance_rate", traj.acceptance_rate},
                      {"fingerprint", traj.config_fingerprint},
                      {"burn_in_rows", traj.burn_in_rows},
                      {"low_acceptance_windows", traj.low_acceptance_windows}};
  detail::open_out(base + ".json") << meta.dump(2) << "\n";
}

inline Trajectory read_trajectory(const std::string& base) {
  nlohmann::json meta;
  detail::open_in(base + ".json") >> meta;
  Trajectory traj;
  traj.seed = meta.at("seed").get<std::uint64_t>();
  traj.step_size_used = meta.at("h").get<double>();
  traj.sampler = sampler_from_string(meta.at("sampler").get<std::string>());
  traj.acceptance_rate = meta.at("acceptance_rate").get<double>();
  traj.config_fingerprint = meta.at("fingerprint").get<std::uint64_t>();
  traj.burn_in_rows = meta.value("burn_in_rows", 0L);
  traj.low_acceptance_windows = meta.value("low_acceptance_windows", 0);

  auto csv = detail::open_in(base + ".csv");
  std::string line;
  std::getline(csv, line);
  const auto header = detail::split_csv_line(line);
  const long d = static_cast<long>(header.size()) - 1;
  std::vector<std::vector<double>> rows;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    std::vector<double> row;
    for (long j = 1; j <= d; ++j) row.push_back(std::stod(cells[static_cast<std::size_t>(j)]));
    rows.push_back(std::move(row));
  }
  traj.states.resize(static_cast<long>(rows.size()), d);
  for (long i = 0; i < traj.states.rows(); ++i)
    for (long j = 0; j < d; ++j) traj.states(i, j) = rows[static_cast<std::size_t>(i)][j];
  return traj;
}

}  // namespace contraction
