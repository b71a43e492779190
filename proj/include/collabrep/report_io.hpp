#pragma once

#include <nlohmann/json.hpp>

#include <ostream>
#include <span>

#include "collabrep/classifier.hpp"
#include "collabrep/dictlearn.hpp"
#include "collabrep/metrics.hpp"

namespace collabrep {

nlohmann::json to_json(const SelectionReport& report);
nlohmann::json to_json(const TrendFit& fit);
nlohmann::json to_json(const FitTrace& trace);

// Table layout with a group row (Statistics | Prediction | Actual Performance)
// above the column names. Rows and reports are paired by index.
void write_table_csv(std::ostream& out, std::span<const TableRow> rows, std::span<const SelectionReport> reports);

}  // namespace collabrep
