#include "collabrep/report_io.hpp"

#include <iomanip>

namespace collabrep {

namespace {

nlohmann::json optional_number(const std::optional<double>& value) {
  return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

}  // namespace

nlohmann::json to_json(const SelectionReport& report) {
  return {
      {"d", report.d},
      {"n", report.n},
      {"num_classes", report.num_classes},
      {"mpd_accuracy", report.mpd_accuracy},
      {"fdr", report.fdr},
      {"score_fdr_d", report.score_fdr_d},
      {"score_fdr_over_n", report.score_fdr_over_n},
      {"score", report.score},
      {"acc_l1", optional_number(report.acc_l1)},
      {"acc_l2", optional_number(report.acc_l2)},
      {"err", optional_number(report.err)},
      {"threshold", report.threshold},
      {"recommendation", std::string(to_string(report.recommendation))},
  };
}

nlohmann::json to_json(const TrendFit& fit) {
  return {{"slope", fit.slope}, {"intercept", fit.intercept}, {"sse", fit.sse}};
}

nlohmann::json to_json(const FitTrace& trace) {
  nlohmann::json steps = nlohmann::json::array();
  for (HalfStep s : trace.steps) steps.push_back(s == HalfStep::coefficients ? "A" : "D");
  return {
      {"objective", trace.objective},
      {"steps", steps},
      {"converged", trace.converged},
      {"iterations", trace.iterations},
      {"singular_fallbacks", trace.singular_fallbacks},
      {"max_relative_increase", trace.objective.size() < 2 ? 0.0 : trace.max_relative_increase()},
  };
}

void write_table_csv(std::ostream& out, std::span<const TableRow> rows, std::span<const SelectionReport> reports) {
  if (rows.size() != reports.size()) throw InvalidArgument("table: rows and reports differ in length");
  out << ",Statistics,,,,Prediction,,,,,Actual Performance,,\n";
  out << "dataset,d,C,n_i,n,MPD,FDR,FDR*d,FDR/n,FDR*d/n,CRC_l1,CRC_l2,ERR\n";
  out << std::fixed;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const TableRow& row = rows[k];
    const SelectionReport& r = reports[k];
    out << csv_field(row.name + (row.starred ? "*" : "")) << ',' << row.d << ',' << row.num_classes << ','
        << csv_field(row.per_class) << ',' << row.n << ',' << std::setprecision(3) << r.mpd_accuracy << ','
        << std::setprecision(2) << r.fdr << ',' << std::setprecision(0) << r.score_fdr_d << ','
        << std::setprecision(4) << r.score_fdr_over_n << ',' << std::setprecision(2) << r.score << ','
        << std::setprecision(3) << r.acc_l1.value_or(0.0) << ',' << r.acc_l2.value_or(0.0) << ',';
    if (r.err) out << *r.err;
    out << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

}  // namespace collabrep
