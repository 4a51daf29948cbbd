#include "curvebic/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace curvebic {

std::string family_name(Family f) {
  switch (f) {
    case Family::Linear: return "linear";
    case Family::HierarchicalNormal: return "hierarchical-normal";
    case Family::LMM: return "lmm";
    case Family::GLMMBinomial: return "glmm-binomial";
    case Family::GLMMPoisson: return "glmm-poisson";
  }
  return "?";
}

Family family_from_name(const std::string& name) {
  if (name == "linear") return Family::Linear;
  if (name == "hierarchical-normal") return Family::HierarchicalNormal;
  if (name == "lmm") return Family::LMM;
  if (name == "glmm-binomial") return Family::GLMMBinomial;
  if (name == "glmm-poisson") return Family::GLMMPoisson;
  throw ConfigError("unknown family: " + name);
}

int Dataset::column_index(const std::string& name) const {
  for (size_t i = 0; i < column_names.size(); ++i)
    if (column_names[i] == name) return static_cast<int>(i);
  throw MissingColumn(name);
}

Eigen::VectorXd Dataset::column(const std::string& name) const {
  return X.col(column_index(name));
}

Eigen::VectorXd GroupedDataset::column(const std::string& name) const {
  for (size_t i = 0; i < z_names.size(); ++i)
    if (z_names[i] == name) return Z->col(static_cast<Eigen::Index>(i));
  return base.column(name);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, int row, const std::string& column) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw NonFiniteValue(row, column);
  }
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (first) {
      table.header = fields;
      first = false;
    } else {
      if (fields.size() != table.header.size())
        throw ConfigError("csv row has " + std::to_string(fields.size()) + " fields, expected " +
                          std::to_string(table.header.size()));
      table.rows.push_back(std::move(fields));
    }
  }
  if (first) throw ConfigError("empty csv input");
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  return read_csv(in);
}

namespace {

Dataset build_dataset(const CsvTable& table, const std::vector<int>& value_cols) {
  const int n = static_cast<int>(table.rows.size());
  if (n < 1) throw ConfigError("dataset has no rows");

  Dataset d;
  int y_col = -1;
  for (int c : value_cols) {
    if (table.header[c] == "y")
      y_col = c;
    else
      d.column_names.push_back(table.header[c]);
  }
  if (y_col < 0) throw MissingColumn("y");

  {
    std::set<std::string> seen;
    for (const auto& name : d.column_names)
      if (!seen.insert(name).second) throw DuplicateColumnName(name);
  }

  d.y.resize(n);
  d.X.resize(n, static_cast<Eigen::Index>(d.column_names.size()));
  for (int i = 0; i < n; ++i) {
    int xj = 0;
    for (int c : value_cols) {
      double v = parse_double(table.rows[i][c], i, table.header[c]);
      if (!std::isfinite(v)) throw NonFiniteValue(i, table.header[c]);
      if (c == y_col)
        d.y(i) = v;
      else
        d.X(i, xj++) = v;
    }
  }
  return d;
}

}  // namespace

Dataset validate_plain(const CsvTable& table, const ModelSpec& spec) {
  std::vector<int> value_cols;
  for (int c = 0; c < static_cast<int>(table.header.size()); ++c)
    if (table.header[c] != "group") value_cols.push_back(c);
  Dataset d = build_dataset(table, value_cols);
  for (const auto& name : spec.fixed_columns) d.column_index(name);
  return d;
}

GroupedDataset validate_grouped(const CsvTable& table, const ModelSpec& spec,
                                const std::vector<std::string>& expected_groups) {
  int group_col = -1;
  std::vector<int> value_cols;
  for (int c = 0; c < static_cast<int>(table.header.size()); ++c) {
    if (table.header[c] == "group")
      group_col = c;
    else
      value_cols.push_back(c);
  }
  if (group_col < 0) throw MissingColumn("group");

  GroupedDataset gd;
  gd.base = build_dataset(table, value_cols);
  const int n = gd.base.n();
  gd.group.reserve(n);
  for (int i = 0; i < n; ++i) {
    const std::string& label = table.rows[i][group_col];
    gd.group.push_back(label);
    auto it = std::find(gd.group_labels.begin(), gd.group_labels.end(), label);
    if (it == gd.group_labels.end()) {
      gd.group_labels.push_back(label);
      gd.group_rows.push_back({i});
    } else {
      gd.group_rows[static_cast<size_t>(it - gd.group_labels.begin())].push_back(i);
    }
  }
  for (const auto& label : expected_groups) {
    if (std::find(gd.group_labels.begin(), gd.group_labels.end(), label) == gd.group_labels.end())
      throw EmptyGroup(label);
  }
  for (const auto& name : spec.fixed_columns) gd.base.column_index(name);
  for (const auto& name : spec.random_columns) gd.base.column_index(name);
  return gd;
}

AnyDataset validate_dataset(const CsvTable& table, const ModelSpec& spec,
                            const std::vector<std::string>& expected_groups) {
  if (spec.family == Family::Linear) return validate_plain(table, spec);
  return validate_grouped(table, spec, expected_groups);
}

namespace {

void write_value(std::ostream& out, double v) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
}

void write_rows(std::ostream& out, const Dataset& d, const std::vector<std::string>* group) {
  out << "y";
  for (const auto& name : d.column_names) out << ',' << name;
  if (group) out << ",group";
  out << '\n';
  for (int i = 0; i < d.n(); ++i) {
    write_value(out, d.y(i));
    for (int j = 0; j < d.X.cols(); ++j) {
      out << ',';
      write_value(out, d.X(i, j));
    }
    if (group) out << ',' << (*group)[i];
    out << '\n';
  }
}

}  // namespace

void write_csv(std::ostream& out, const Dataset& data) { write_rows(out, data, nullptr); }

void write_csv(std::ostream& out, const GroupedDataset& data) {
  write_rows(out, data.base, &data.group);
}

namespace {

template <typename D>
Eigen::MatrixXd design_impl(const D& data, const std::vector<std::string>& columns,
                            bool intercept) {
  const int n = data.n();
  const int p = static_cast<int>(columns.size()) + (intercept ? 1 : 0);
  Eigen::MatrixXd X(n, p);
  int j = 0;
  if (intercept) X.col(j++).setOnes();
  for (const auto& name : columns) X.col(j++) = data.column(name);
  return X;
}

}  // namespace

Eigen::MatrixXd build_design(const Dataset& data, const std::vector<std::string>& columns,
                             bool intercept) {
  return design_impl(data, columns, intercept);
}

Eigen::MatrixXd build_design(const GroupedDataset& data, const std::vector<std::string>& columns,
                             bool intercept) {
  return design_impl(data, columns, intercept);
}

}  // namespace curvebic
