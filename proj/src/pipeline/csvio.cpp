#include "declineforge/pipeline/csvio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "declineforge/error.hpp"

namespace df {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream f(path);
  if (!f) throw IoError("csv: cannot write '" + path + "'");
  for (size_t i = 0; i < header.size(); ++i)
    f << (i ? "," : "") << header[i];
  f << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
    f << "\n";
  }
  if (!f) throw IoError("csv: short write to '" + path + "'");
}

std::vector<std::vector<std::string>> read_csv(
    const std::string& path, std::vector<std::string>* header) {
  std::ifstream f(path);
  if (!f) throw IoError("csv: cannot open '" + path + "'");
  const auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
  };
  std::string line;
  if (!std::getline(f, line)) throw ParseError("csv: empty file '" + path + "'");
  if (header) *header = split(line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    rows.push_back(split(line));
  }
  return rows;
}

void write_trajectories_csv(const std::string& path,
                            const std::vector<Trajectory>& trajectories) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& t : trajectories)
    for (size_t v = 0; v < t.times.size(); ++v)
      rows.push_back(
          {t.subject_id, format_double(t.times[v]), format_double(t.values[v])});
  write_csv(path, {"subject_id", "visit_month", "cdrsb"}, rows);
}

std::vector<Trajectory> read_trajectories_csv(const std::string& path) {
  std::vector<std::string> header;
  const auto rows = read_csv(path, &header);
  std::vector<Trajectory> out;
  for (const auto& row : rows) {
    if (row.size() != 3)
      throw ParseError("trajectories csv: bad row in '" + path + "'");
    if (out.empty() || out.back().subject_id != row[0]) {
      out.emplace_back();
      out.back().subject_id = row[0];
    }
    out.back().times.push_back(std::stod(row[1]));
    out.back().values.push_back(std::stod(row[2]));
  }
  return out;
}

void write_tabular_csv(const std::string& path,
                       const std::vector<TabularRecord>& records) {
  std::vector<std::string> header{"subject_id"};
  for (const auto& fg : feature_groups())
    for (const auto& name : fg.features)
      header.push_back(fg.name + "_" + name);
  std::vector<std::vector<std::string>> rows;
  for (const auto& rec : records) {
    std::vector<std::string> row{rec.subject_id};
    for (const auto& fg : feature_groups()) {
      const auto& vals = rec.groups.at(fg.name);
      for (double v : vals)
        row.push_back(std::isfinite(v) ? format_double(v) : "");
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

std::vector<TabularRecord> read_tabular_csv(const std::string& path) {
  std::vector<std::string> header;
  const auto rows = read_csv(path, &header);
  std::vector<TabularRecord> out;
  for (const auto& row : rows) {
    if (row.size() < 1 || row.size() > header.size())
      throw ParseError("tabular csv: bad row in '" + path + "'");
    TabularRecord rec;
    rec.subject_id = row[0];
    size_t col = 1;
    for (const auto& fg : feature_groups()) {
      std::vector<double> vals;
      for (size_t j = 0; j < fg.features.size(); ++j, ++col) {
        if (col >= row.size() || row[col].empty())
          vals.push_back(std::numeric_limits<double>::quiet_NaN());
        else
          vals.push_back(std::stod(row[col]));
      }
      rec.groups[fg.name] = std::move(vals);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace df
