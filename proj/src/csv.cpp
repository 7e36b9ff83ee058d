#include "pcs/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <system_error>
#include <vector>

namespace pcs {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string_view f = (comma == std::string_view::npos)
                             ? line.substr(start)
                             : line.substr(start, comma - start);
    fields.emplace_back(trim(f));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool try_parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;  // from_chars rejects a leading plus
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

double parse_double_field(const std::string& s, const char* what, long line_no) {
  double v;
  if (!try_parse_double(s, v))
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse " + what +
                     " value '" + s + "'");
  return v;
}

long parse_int_field(const std::string& s, const char* what, long line_no) {
  long v;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse " + what +
                     " value '" + s + "'");
  return v;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// Distinct labels in grid order: numeric ascending when every label is a
// number, lexicographic otherwise; ties broken lexicographically so "1" and
// "1.0" get a stable order.
std::vector<std::string> ordered_labels(const std::vector<std::string>& seen) {
  std::vector<std::string> labels = seen;
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  bool numeric = true;
  std::vector<double> vals(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (!try_parse_double(labels[i], vals[i])) {
      numeric = false;
      break;
    }
  if (numeric) {
    std::vector<std::size_t> idx(labels.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (vals[a] != vals[b]) return vals[a] < vals[b];
      return labels[a] < labels[b];
    });
    std::vector<std::string> out(labels.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
    return out;
  }
  return labels;
}

}  // namespace

PanelDataset load_panel(const std::string& path, const PanelSchema& schema) {
  auto lines = read_lines(path);
  if (lines.empty()) throw ParseError("'" + path + "' is empty");

  auto header = split_line(lines[0]);
  int col_unit = -1, col_time = -1, col_y = -1;
  std::map<int, int> x_cols;  // covariate index k (1-based) -> column
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string& name = header[c];
    if (name == schema.unit)
      col_unit = c;
    else if (name == schema.time)
      col_time = c;
    else if (name == schema.outcome)
      col_y = c;
    else if (name.size() > schema.covariate_prefix.size() &&
             name.compare(0, schema.covariate_prefix.size(), schema.covariate_prefix) == 0) {
      const std::string tail = name.substr(schema.covariate_prefix.size());
      long k;
      auto res = std::from_chars(tail.data(), tail.data() + tail.size(), k);
      if (res.ec == std::errc() && res.ptr == tail.data() + tail.size() && k >= 1)
        x_cols[static_cast<int>(k)] = c;
    }
  }
  if (col_unit < 0 || col_time < 0 || col_y < 0)
    throw ParseError("'" + path + "': header must contain columns '" + schema.unit +
                     "', '" + schema.time + "', '" + schema.outcome + "'");
  int n_x = 0;
  while (x_cols.count(n_x + 1)) ++n_x;
  if (n_x == 0)
    throw ParseError("'" + path + "': no covariate column '" + schema.covariate_prefix +
                     "1' found");
  if (static_cast<int>(x_cols.size()) != n_x)
    throw ParseError("'" + path + "': covariate columns must be contiguous from " +
                     schema.covariate_prefix + "1");

  struct Row {
    std::string unit, time;
    double y;
    std::vector<double> x;
  };
  std::vector<Row> rows;
  std::vector<std::string> units, times;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    auto fields = split_line(lines[ln]);
    if (static_cast<int>(fields.size()) < static_cast<int>(header.size()))
      throw ParseError("line " + std::to_string(ln + 1) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    Row r;
    r.unit = fields[col_unit];
    r.time = fields[col_time];
    r.y = parse_double_field(fields[col_y], "outcome", static_cast<long>(ln + 1));
    if (!std::isfinite(r.y))
      throw NonFinite("line " + std::to_string(ln + 1) + ": non-finite outcome");
    r.x.resize(n_x);
    for (int k = 1; k <= n_x; ++k) {
      r.x[k - 1] =
          parse_double_field(fields[x_cols[k]], "covariate", static_cast<long>(ln + 1));
      if (!std::isfinite(r.x[k - 1]))
        throw NonFinite("line " + std::to_string(ln + 1) + ": non-finite covariate");
    }
    units.push_back(r.unit);
    times.push_back(r.time);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ParseError("'" + path + "': no data rows");

  PanelDataset panel;
  panel.unit_labels = ordered_labels(units);
  panel.time_labels = ordered_labels(times);
  panel.n_units = static_cast<int>(panel.unit_labels.size());
  panel.n_periods = static_cast<int>(panel.time_labels.size());
  panel.covariate_dim = n_x;
  std::map<std::string, int> unit_idx, time_idx;
  for (int i = 0; i < panel.n_units; ++i) unit_idx[panel.unit_labels[i]] = i;
  for (int t = 0; t < panel.n_periods; ++t) time_idx[panel.time_labels[t]] = t;

  panel.outcomes.setZero(panel.n_units, panel.n_periods);
  panel.covariates.assign(panel.n_units,
                          Eigen::MatrixXd::Zero(panel.n_periods, panel.covariate_dim));
  std::vector<std::uint8_t> seen(
      static_cast<std::size_t>(panel.n_units) * panel.n_periods, 0);
  for (const Row& r : rows) {
    int i = unit_idx[r.unit];
    int t = time_idx[r.time];
    std::size_t cell = static_cast<std::size_t>(i) * panel.n_periods + t;
    if (seen[cell])
      throw DuplicateCell("duplicate row for unit '" + r.unit + "', time '" + r.time + "'");
    seen[cell] = 1;
    panel.outcomes(i, t) = r.y;
    for (int k = 0; k < n_x; ++k) panel.covariates[i](t, k) = r.x[k];
  }
  for (int i = 0; i < panel.n_units; ++i)
    for (int t = 0; t < panel.n_periods; ++t)
      if (!seen[static_cast<std::size_t>(i) * panel.n_periods + t])
        throw MissingCell("missing row for unit '" + panel.unit_labels[i] + "', time '" +
                          panel.time_labels[t] + "'");
  validate_panel(panel);
  return panel;
}

void save_panel(const std::string& path, const PanelDataset& panel,
                const PanelSchema& schema) {
  validate_panel(panel);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << schema.unit << ',' << schema.time << ',' << schema.outcome;
  for (int k = 1; k <= panel.covariate_dim; ++k) out << ',' << schema.covariate_prefix << k;
  out << '\n';
  for (int i = 0; i < panel.n_units; ++i)
    for (int t = 0; t < panel.n_periods; ++t) {
      out << panel.unit_labels[i] << ',' << panel.time_labels[t] << ','
          << format_double(panel.outcomes(i, t));
      for (int k = 0; k < panel.covariate_dim; ++k)
        out << ',' << format_double(panel.covariates[i](t, k));
      out << '\n';
    }
  if (!out) throw ParseError("write to '" + path + "' failed");
}

GroupModel load_coefficients(const std::string& path, int n_periods) {
  if (n_periods < 2) throw DimensionMismatch("load_coefficients: n_periods must be >= 2");
  auto lines = read_lines(path);
  if (lines.empty()) throw ParseError("'" + path + "' is empty");
  auto header = split_line(lines[0]);
  if (header.size() < 4 || header[0] != "group" || header[1] != "time" ||
      header[2] != "k" || header[3] != "value")
    throw ParseError("'" + path + "': header must be group,time,k,value");

  struct Entry {
    long group, k;
    bool star;
    long time;  // 1-based, valid when !star
    double value;
  };
  std::vector<Entry> entries;
  long max_group = 0, max_k = 0;
  bool all_star = true;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    auto fields = split_line(lines[ln]);
    if (fields.size() < 4)
      throw ParseError("line " + std::to_string(ln + 1) + ": expected 4 fields");
    Entry e;
    e.group = parse_int_field(fields[0], "group", static_cast<long>(ln + 1));
    e.k = parse_int_field(fields[2], "k", static_cast<long>(ln + 1));
    e.value = parse_double_field(fields[3], "value", static_cast<long>(ln + 1));
    if (!std::isfinite(e.value))
      throw NonFinite("line " + std::to_string(ln + 1) + ": non-finite coefficient");
    if (e.group < 1 || e.k < 1)
      throw ParseError("line " + std::to_string(ln + 1) + ": group and k must be >= 1");
    if (fields[1] == "*") {
      e.star = true;
      e.time = 0;
    } else {
      e.star = false;
      e.time = parse_int_field(fields[1], "time", static_cast<long>(ln + 1));
      if (e.time < 1 || e.time > n_periods)
        throw ParseError("line " + std::to_string(ln + 1) + ": time " +
                         std::to_string(e.time) + " outside 1.." +
                         std::to_string(n_periods));
      all_star = false;
    }
    max_group = std::max(max_group, e.group);
    max_k = std::max(max_k, e.k);
    entries.push_back(e);
  }
  if (entries.empty()) throw ParseError("'" + path + "': no data rows");

  GroupModel model;
  model.n_groups = static_cast<int>(max_group);
  model.time_constant = all_star;
  const int K = static_cast<int>(max_k);
  model.coefficients.assign(model.n_groups, Eigen::MatrixXd::Zero(n_periods, K));
  std::vector<std::uint8_t> seen(
      static_cast<std::size_t>(model.n_groups) * n_periods * K, 0);
  auto cell = [&](long g, long t, long k) {
    return (static_cast<std::size_t>(g - 1) * n_periods + (t - 1)) * K + (k - 1);
  };
  for (const Entry& e : entries) {
    long t_lo = e.star ? 1 : e.time;
    long t_hi = e.star ? n_periods : e.time;
    for (long t = t_lo; t <= t_hi; ++t) {
      std::size_t c = cell(e.group, t, e.k);
      if (seen[c])
        throw DuplicateCell("duplicate coefficient for group " + std::to_string(e.group) +
                            ", time " + std::to_string(t) + ", k " + std::to_string(e.k));
      seen[c] = 1;
      model.coefficients[e.group - 1](t - 1, e.k - 1) = e.value;
    }
  }
  for (long g = 1; g <= model.n_groups; ++g)
    for (long t = 1; t <= n_periods; ++t)
      for (long k = 1; k <= K; ++k)
        if (!seen[cell(g, t, k)])
          throw MissingCell("missing coefficient for group " + std::to_string(g) +
                            ", time " + std::to_string(t) + ", k " + std::to_string(k));
  return model;
}

void save_coefficients(const std::string& path, const GroupModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << "group,time,k,value\n";
  for (int g = 0; g < model.n_groups; ++g) {
    const auto& beta = model.coefficients[g];
    if (model.time_constant) {
      for (int k = 0; k < beta.cols(); ++k)
        out << (g + 1) << ",*," << (k + 1) << ',' << format_double(beta(0, k)) << '\n';
    } else {
      for (int t = 0; t < beta.rows(); ++t)
        for (int k = 0; k < beta.cols(); ++k)
          out << (g + 1) << ',' << (t + 1) << ',' << (k + 1) << ','
              << format_double(beta(t, k)) << '\n';
    }
  }
  if (!out) throw ParseError("write to '" + path + "' failed");
}

void save_assignment(const std::string& path, const PanelDataset& panel,
                     const GroupModel& model) {
  if (static_cast<int>(model.assignment.size()) != panel.n_units)
    throw DimensionMismatch("save_assignment: model has no assignment for this panel");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << "unit,group\n";
  for (int i = 0; i < panel.n_units; ++i)
    out << panel.unit_labels[i] << ',' << (model.assignment[i] + 1) << '\n';
  if (!out) throw ParseError("write to '" + path + "' failed");
}

}  // namespace pcs
