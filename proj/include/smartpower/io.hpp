#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "smartpower/calibration.hpp"
#include "smartpower/power.hpp"
#include "smartpower/trial.hpp"

namespace smartpower {

/** FNV-1a 64-bit hash, hex-encoded; used to fingerprint configs. */
std::string fnv1a_hex(const std::string& text);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

/** Columns: id,subgroup,a1,r,a2,y1..yT. Integers only, so a write/read
 *  round trip reproduces the dataset exactly. */
void write_observed_trial_csv(const std::string& path,
                              const ObservedTrial& trial);
ObservedTrial read_observed_trial_csv(const std::string& path);

void write_power_csv(const std::string& path,
                     const std::vector<PowerEstimate>& curve);

void write_calibration_csv(const std::string& path,
                           const CalibrationTable& table);

void write_path_correlations_csv(const std::string& path,
                                 const PathCorrelations& pc);

void write_sweep_csv(const std::string& path, const std::string& axis,
                     const std::vector<SweepPoint>& points);

/** Minimal incremental CSV writer for ad hoc study outputs. */
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();
  void row(const std::vector<std::string>& cells);
  static std::string num(double v);

 private:
  struct Impl;
  Impl* impl_;
};

/** Everything needed to reproduce a run bit for bit. */
struct RunManifest {
  std::string version;
  std::string command;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::vector<std::pair<std::string, double>> timings;  // stage -> seconds
  std::vector<std::string> warnings;
  std::string resolved_config_json;
};

void write_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace smartpower
