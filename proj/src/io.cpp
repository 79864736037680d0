#include "smartpower/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "smartpower/errors.hpp"

namespace smartpower {

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_observed_trial_csv(const std::string& path,
                              const ObservedTrial& trial) {
  std::ostringstream out;
  out << "id,subgroup,a1,r,a2";
  for (int j = 1; j <= trial.T; ++j) out << ",y" << j;
  out << "\n";
  for (const auto& row : trial.rows) {
    out << row.id << ',' << row.subgroup << ',' << row.a1 << ',' << row.r
        << ',' << row.a2;
    for (int v : row.y) out << ',' << v;
    out << "\n";
  }
  write_text_file(path, out.str());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  return cells;
}

int parse_int_cell(const std::string& cell, const std::string& path, int line) {
  try {
    size_t pos = 0;
    const int v = std::stoi(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (...) {
    std::ostringstream msg;
    msg << path << ":" << line << ": expected an integer, got '" << cell << "'";
    throw ConfigError(msg.str());
  }
}

}  // namespace

ObservedTrial read_observed_trial_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read dataset: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError(path + ": empty dataset file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 6 || header[0] != "id" || header[1] != "subgroup" ||
      header[2] != "a1" || header[3] != "r" || header[4] != "a2")
    throw ConfigError(path + ": expected header id,subgroup,a1,r,a2,y1..yT");
  ObservedTrial trial;
  trial.T = static_cast<int>(header.size()) - 5;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << path << ":" << lineno << ": expected " << header.size()
          << " cells, got " << cells.size();
      throw ConfigError(msg.str());
    }
    ObservedTrial::Row row;
    row.id = parse_int_cell(cells[0], path, lineno);
    row.subgroup = parse_int_cell(cells[1], path, lineno);
    row.a1 = parse_int_cell(cells[2], path, lineno);
    row.r = parse_int_cell(cells[3], path, lineno);
    row.a2 = parse_int_cell(cells[4], path, lineno);
    row.y.resize(trial.T);
    for (int j = 0; j < trial.T; ++j)
      row.y[j] = parse_int_cell(cells[5 + j], path, lineno);
    trial.rows.push_back(std::move(row));
  }
  return trial;
}

struct CsvWriter::Impl {
  std::ofstream out;
  size_t width = 0;
  std::string path;
};

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : impl_(new Impl) {
  impl_->out.open(path, std::ios::binary);
  impl_->path = path;
  if (!impl_->out) {
    delete impl_;
    throw ConfigError("cannot write file: " + path);
  }
  impl_->width = header.size();
  for (size_t i = 0; i < header.size(); ++i)
    impl_->out << (i ? "," : "") << header[i];
  impl_->out << "\n";
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != impl_->width)
    throw ConfigError("csv row width mismatch for " + impl_->path);
  for (size_t i = 0; i < cells.size(); ++i)
    impl_->out << (i ? "," : "") << cells[i];
  impl_->out << "\n";
}

std::string CsvWriter::num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_power_csv(const std::string& path,
                     const std::vector<PowerEstimate>& curve) {
  CsvWriter csv(path, {"n", "power", "mc_se", "failed", "elapsed.secs"});
  for (const auto& pt : curve)
    csv.row({std::to_string(pt.n), CsvWriter::num(pt.power),
             CsvWriter::num(pt.mc_se), std::to_string(pt.failed),
             CsvWriter::num(pt.elapsed_secs)});
}

void write_calibration_csv(const std::string& path,
                           const CalibrationTable& table) {
  CsvWriter csv(path, {"rho", "tau_hat", "mc_se"});
  for (const auto& pt : table.points)
    csv.row({CsvWriter::num(pt.rho), CsvWriter::num(pt.tau_hat),
             CsvWriter::num(pt.mc_se)});
}

void write_path_correlations_csv(const std::string& path,
                                 const PathCorrelations& pc) {
  CsvWriter csv(path, {"path", "i", "j", "corr"});
  for (size_t p = 0; p < pc.corr.size(); ++p)
    for (int a = 0; a < pc.corr[p].rows(); ++a)
      for (int b = 0; b < pc.corr[p].cols(); ++b)
        csv.row({pc.labels[p], std::to_string(a + 1), std::to_string(b + 1),
                 CsvWriter::num(pc.corr[p](a, b))});
}

void write_sweep_csv(const std::string& path, const std::string& axis,
                     const std::vector<SweepPoint>& points) {
  CsvWriter csv(path, {axis, "power", "mc_se", "failed", "error"});
  for (const auto& pt : points) {
    if (pt.estimate) {
      csv.row({CsvWriter::num(pt.value), CsvWriter::num(pt.estimate->power),
               CsvWriter::num(pt.estimate->mc_se),
               std::to_string(pt.estimate->failed), ""});
    } else {
      std::string err = pt.error;
      for (auto& ch : err)
        if (ch == ',' || ch == '\n') ch = ';';
      csv.row({CsvWriter::num(pt.value), "", "", "", err});
    }
  }
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  nlohmann::ordered_json doc;
  doc["version"] = manifest.version;
  doc["command"] = manifest.command;
  doc["config_hash"] = manifest.config_hash;
  doc["master_seed"] = manifest.master_seed;
  nlohmann::ordered_json timings = nlohmann::ordered_json::array();
  for (const auto& [stage, secs] : manifest.timings)
    timings.push_back({{"stage", stage}, {"seconds", secs}});
  doc["timings"] = timings;
  doc["warnings"] = manifest.warnings;
  doc["config"] =
      nlohmann::ordered_json::parse(manifest.resolved_config_json);
  write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace smartpower
