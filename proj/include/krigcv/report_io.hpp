// CSV and JSON persistence for datasets and experiment reports. Every double
// is written with 17 significant digits so that reading it back is exact.

#ifndef KRIGCV_REPORT_IO_HPP_
#define KRIGCV_REPORT_IO_HPP_

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "krigcv/estimators.hpp"
#include "krigcv/montecarlo.hpp"

namespace krigcv {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::string format_double(double v);

/// Header x_1,...,x_d,y then one row per observation.
void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset parse_dataset_csv(std::istream& in, const std::string& source = "<dataset>");
Dataset read_dataset_csv(const std::filesystem::path& path);

/// Records and aggregates of one (n, specification) cell of the study.
struct ReportSection {
  int n{0};
  std::string specification;
  std::vector<ReplicationRecord> records;
  std::size_t failures{0};
  Aggregates aggregates;
};

void write_replications_csv(std::ostream& out, const std::vector<ReportSection>& sections);
/// Sections in order of first appearance; aggregates are left empty.
std::vector<ReportSection> parse_replications_csv(std::istream& in,
                                                  const std::string& source = "<replications>");

/// Columns n, specification, estimator, mean_ell, sd_ell, mean_E, mean_D,
/// count; two estimator rows per section.
void write_table1_csv(std::ostream& out, const std::vector<ReportSection>& sections);

/// Columns n, specification, bin_left, bin_right, count.
void write_histogram_csv(std::ostream& out, const std::vector<ReportSection>& sections,
                         const std::string& quantity, const std::string& estimator);

/// Recomputes aggregates from the records of each section.
void reaggregate(std::vector<ReportSection>& sections, int histogram_bins);

/// Files are written under temporary names and renamed on commit(); if the
/// set is destroyed before commit() every staged file is removed.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir);
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet();

  std::ostream& open(const std::string& name);
  void commit();

 private:
  struct Entry {
    std::filesystem::path final_path;
    std::filesystem::path staged_path;
    std::unique_ptr<std::ofstream> stream;
  };
  std::filesystem::path dir_;
  std::vector<Entry> entries_;
  bool committed_{false};
};

/// Writes replications.csv, table1.csv and hist_<quantity>_<estimator>.csv
/// (plus report.json when "json" is among the formats).
void write_report(const std::filesystem::path& dir, const std::vector<ReportSection>& sections,
                  const std::vector<std::string>& formats, bool include_replications = true);

}  // namespace krigcv

#endif  // KRIGCV_REPORT_IO_HPP_
