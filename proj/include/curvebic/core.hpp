#pragma once

#include <iosfwd>
#include <variant>

#include "curvebic/types.hpp"

namespace curvebic {

/// Raw tabular records as parsed from CSV; values still textual so the
/// reserved "group" column can carry arbitrary labels.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

using AnyDataset = std::variant<Dataset, GroupedDataset>;

/// Validates raw rows against the spec. Returns a GroupedDataset when the
/// spec's family needs groups (anything but Linear), in which case the table
/// must carry the reserved "group" column. expected_groups, when nonempty,
/// asserts that every listed label occurs in the data.
AnyDataset validate_dataset(const CsvTable& table, const ModelSpec& spec,
                            const std::vector<std::string>& expected_groups = {});

Dataset validate_plain(const CsvTable& table, const ModelSpec& spec);
GroupedDataset validate_grouped(const CsvTable& table, const ModelSpec& spec,
                                const std::vector<std::string>& expected_groups = {});

/// Round-trip serialization: doubles written with max_digits10 so re-parsing
/// reproduces bit-equal values.
void write_csv(std::ostream& out, const Dataset& data);
void write_csv(std::ostream& out, const GroupedDataset& data);

/// Design matrix for the given columns, optionally with a leading intercept
/// column of ones.
Eigen::MatrixXd build_design(const Dataset& data, const std::vector<std::string>& columns,
                             bool intercept);
Eigen::MatrixXd build_design(const GroupedDataset& data, const std::vector<std::string>& columns,
                             bool intercept);

}  // namespace curvebic
