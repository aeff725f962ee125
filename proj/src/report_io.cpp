#include "krigcv/report_io.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace krigcv {

namespace {

constexpr const char* kReplicationHeader =
    "n,specification,rep_index,sigma2_ml,ell_ml,sigma2_cv,ell_cv,d_ml,d_cv,e_ml,e_cv,"
    "ml_value,cv_value,evals_ml,evals_cv,seconds";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

template <typename T>
T parse_number(const std::string& field, const std::string& source, std::size_t line,
               const char* column) {
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty())
    throw ParseError(source, line,
                     std::string("invalid value '") + field + "' in column " + column);
  return value;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (Eigen::Index k = 0; k < data.design.d(); ++k) out << "x_" << (k + 1) << ',';
  out << "y\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index k = 0; k < data.design.d(); ++k)
      out << format_double(data.design.points(i, k)) << ',';
    out << format_double(data.y(i)) << '\n';
  }
}

Dataset parse_dataset_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError(source, lineno, "empty file");
  const auto header = split(strip_cr(line));
  if (header.size() < 2 || header.back() != "y")
    throw ParseError(source, lineno, "header must be x_1,...,x_d,y");
  const std::size_t d = header.size() - 1;
  for (std::size_t k = 0; k < d; ++k)
    if (header[k] != "x_" + std::to_string(k + 1))
      throw ParseError(source, lineno, "expected column x_" + std::to_string(k + 1) + ", got '" +
                                           header[k] + "'");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != d + 1)
      throw ParseError(source, lineno,
                       "expected " + std::to_string(d + 1) + " fields, got " +
                           std::to_string(fields.size()));
    std::vector<double> row;
    for (std::size_t k = 0; k <= d; ++k)
      row.push_back(parse_number<double>(fields[k], source, lineno, header[k].c_str()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(source, lineno, "no observations");

  Dataset data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  data.design.points.resize(n, static_cast<Eigen::Index>(d));
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < d; ++k) data.design.points(i, static_cast<Eigen::Index>(k)) = row[k];
    data.y(i) = row[d];
  }
  return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  return parse_dataset_csv(in, path.string());
}

void write_replications_csv(std::ostream& out, const std::vector<ReportSection>& sections) {
  out << kReplicationHeader << '\n';
  for (const auto& s : sections) {
    for (const auto& r : s.records) {
      out << s.n << ',' << s.specification << ',' << r.rep_index << ','
          << format_double(r.theta_ml.sigma2) << ',' << format_double(r.theta_ml.ell) << ','
          << format_double(r.theta_cv.sigma2) << ',' << format_double(r.theta_cv.ell) << ','
          << format_double(r.d_ml) << ',' << format_double(r.d_cv) << ','
          << format_double(r.e_ml) << ',' << format_double(r.e_cv) << ','
          << format_double(r.ml_value) << ',' << format_double(r.cv_value) << ','
          << r.evals_ml << ',' << r.evals_cv << ',' << format_double(r.seconds) << '\n';
    }
  }
}

std::vector<ReportSection> parse_replications_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || strip_cr(line) != kReplicationHeader)
    throw ParseError(source, lineno, "unexpected header, expected " +
                                         std::string(kReplicationHeader));
  const auto columns = split(kReplicationHeader);
  std::vector<ReportSection> sections;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != columns.size())
      throw ParseError(source, lineno,
                       "expected " + std::to_string(columns.size()) + " fields, got " +
                           std::to_string(f.size()));
    auto num = [&](std::size_t k) {
      return parse_number<double>(f[k], source, lineno, columns[k].c_str());
    };
    const int n = parse_number<int>(f[0], source, lineno, "n");
    ReplicationRecord r;
    r.rep_index = parse_number<std::uint64_t>(f[2], source, lineno, "rep_index");
    r.theta_ml = {num(3), num(4)};
    r.theta_cv = {num(5), num(6)};
    r.d_ml = num(7);
    r.d_cv = num(8);
    r.e_ml = num(9);
    r.e_cv = num(10);
    r.ml_value = num(11);
    r.cv_value = num(12);
    r.evals_ml = parse_number<int>(f[13], source, lineno, "evals_ml");
    r.evals_cv = parse_number<int>(f[14], source, lineno, "evals_cv");
    r.seconds = num(15);

    auto it = std::find_if(sections.begin(), sections.end(), [&](const ReportSection& s) {
      return s.n == n && s.specification == f[1];
    });
    if (it == sections.end()) {
      sections.push_back(ReportSection{n, f[1], {}, 0, {}});
      it = std::prev(sections.end());
    }
    it->records.push_back(r);
  }
  if (sections.empty()) throw ParseError(source, lineno, "no replication rows");
  return sections;
}

void write_table1_csv(std::ostream& out, const std::vector<ReportSection>& sections) {
  out << "n,specification,estimator,mean_ell,sd_ell,mean_E,mean_D,count\n";
  for (const auto& s : sections) {
    for (const auto& [name, summary] :
         {std::pair{"ML", &s.aggregates.ml}, std::pair{"CV", &s.aggregates.cv}}) {
      out << s.n << ',' << s.specification << ',' << name << ','
          << format_double(summary->mean_ell) << ',' << format_double(summary->sd_ell) << ','
          << format_double(summary->mean_e) << ',' << format_double(summary->mean_d) << ','
          << summary->count << '\n';
    }
  }
}

void write_histogram_csv(std::ostream& out, const std::vector<ReportSection>& sections,
                         const std::string& quantity, const std::string& estimator) {
  out << "n,specification,bin_left,bin_right,count\n";
  for (const auto& s : sections) {
    for (const auto& h : s.aggregates.histograms) {
      if (h.quantity != quantity || h.estimator != estimator) continue;
      for (std::size_t k = 0; k < h.counts.size(); ++k)
        out << s.n << ',' << s.specification << ',' << format_double(h.edges[k]) << ','
            << format_double(h.edges[k + 1]) << ',' << h.counts[k] << '\n';
    }
  }
}

void reaggregate(std::vector<ReportSection>& sections, int histogram_bins) {
  for (auto& s : sections) s.aggregates = aggregate(s.records, histogram_bins);
}

OutputSet::OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

OutputSet::~OutputSet() {
  if (committed_) return;
  for (auto& e : entries_) {
    e.stream.reset();
    std::error_code ec;
    std::filesystem::remove(e.staged_path, ec);
  }
}

std::ostream& OutputSet::open(const std::string& name) {
  Entry e;
  e.final_path = dir_ / name;
  e.staged_path = dir_ / (name + ".partial");
  e.stream = std::make_unique<std::ofstream>(e.staged_path);
  if (!*e.stream) throw std::runtime_error("cannot write " + e.staged_path.string());
  e.stream->precision(17);
  entries_.push_back(std::move(e));
  return *entries_.back().stream;
}

void OutputSet::commit() {
  for (auto& e : entries_) {
    e.stream->flush();
    if (!*e.stream) throw std::runtime_error("error writing " + e.staged_path.string());
    e.stream->close();
  }
  for (auto& e : entries_) std::filesystem::rename(e.staged_path, e.final_path);
  committed_ = true;
}

void write_report(const std::filesystem::path& dir, const std::vector<ReportSection>& sections,
                  const std::vector<std::string>& formats, bool include_replications) {
  const bool csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();
  const bool json_out = std::find(formats.begin(), formats.end(), "json") != formats.end();
  OutputSet out(dir);
  if (csv || include_replications) {
    if (include_replications) write_replications_csv(out.open("replications.csv"), sections);
    write_table1_csv(out.open("table1.csv"), sections);
    for (const char* q : {"ell", "D", "E"})
      for (const char* est : {"ml", "cv"})
        write_histogram_csv(out.open(std::string("hist_") + q + "_" + est + ".csv"), sections, q,
                            est);
  }
  if (json_out) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : sections) {
      auto summary = [](const EstimatorSummary& e) {
        return nlohmann::json{{"mean_ell", e.mean_ell}, {"sd_ell", e.sd_ell},
                              {"sd_defined", e.sd_defined}, {"mean_E", e.mean_e},
                              {"mean_D", e.mean_d}, {"count", e.count}};
      };
      j.push_back({{"n", s.n},
                   {"specification", s.specification},
                   {"failures", s.failures},
                   {"ML", summary(s.aggregates.ml)},
                   {"CV", summary(s.aggregates.cv)}});
    }
    out.open("report.json") << j.dump(2) << '\n';
  }
  out.commit();
}

}  // namespace krigcv
