#pragma once

#include <string>
#include <vector>

#include "declineforge/cohort.hpp"

namespace df {

// Plain CSV helpers for the pipeline's artifact files. Numbers are written
// with %.10g so re-runs under fixed seeds are byte-identical.
std::string format_double(double v);

void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               std::vector<std::string>* header);

// subject_id,visit_month,cdrsb (one row per visit)
void write_trajectories_csv(const std::string& path,
                            const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> read_trajectories_csv(const std::string& path);

// wide layout: subject_id, then <group>_<feature> columns; empty = missing
void write_tabular_csv(const std::string& path,
                       const std::vector<TabularRecord>& records);
std::vector<TabularRecord> read_tabular_csv(const std::string& path);

}  // namespace df
