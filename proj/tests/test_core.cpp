#include <doctest.h>

#include <random>
#include <sstream>

#include "curvebic/core.hpp"

using namespace curvebic;

namespace {

CsvTable table_from(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

}  // namespace

TEST_CASE("validate_dataset accepts a plain linear table") {
  auto t = table_from("y,x1\n1,0.5\n2,1.5\n3,2.5\n4,3.5\n");
  ModelSpec spec;
  spec.family = Family::Linear;
  spec.fixed_columns = {"x1"};
  Dataset d = validate_plain(t, spec);
  CHECK(d.n() == 4);
  CHECK(d.column_names == std::vector<std::string>{"x1"});
  CHECK(d.y(3) == 4.0);
}

TEST_CASE("validate_dataset rejects non-finite values") {
  auto t = table_from("y,x1\n1,nan\n2,1.5\n");
  ModelSpec spec;
  CHECK_THROWS_AS(validate_plain(t, spec), NonFiniteValue);
}

TEST_CASE("validate_dataset rejects duplicate column names") {
  auto t = table_from("y,x1,x1\n1,2,3\n");
  ModelSpec spec;
  CHECK_THROWS_AS(validate_plain(t, spec), DuplicateColumnName);
}

TEST_CASE("validate_dataset reports missing referenced columns") {
  auto t = table_from("y,x1\n1,2\n");
  ModelSpec spec;
  spec.fixed_columns = {"x2"};
  CHECK_THROWS_AS(validate_plain(t, spec), MissingColumn);
}

TEST_CASE("grouped validation flags declared-but-absent groups") {
  auto t = table_from("y,x1,group\n1,2,g1\n2,3,g2\n");
  ModelSpec spec;
  spec.family = Family::HierarchicalNormal;
  CHECK_THROWS_AS(validate_grouped(t, spec, {"g3"}), EmptyGroup);
  auto gd = validate_grouped(t, spec, {"g1", "g2"});
  CHECK(gd.p_groups() == 2);
}

TEST_CASE("group partition covers all rows exactly once") {
  std::mt19937_64 rng(7);
  std::ostringstream text;
  text << "y,group\n";
  const int n = 57;
  for (int i = 0; i < n; ++i) text << i << ",g" << rng() % 5 << "\n";
  auto t = table_from(text.str());
  ModelSpec spec;
  spec.family = Family::HierarchicalNormal;
  auto gd = validate_grouped(t, spec);

  std::vector<int> seen(n, 0);
  for (const auto& rows : gd.group_rows)
    for (int r : rows) ++seen[r];
  for (int i = 0; i < n; ++i) CHECK(seen[i] == 1);
}

TEST_CASE("csv round trip is bit-exact") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset d;
  d.y.resize(20);
  d.X.resize(20, 3);
  d.column_names = {"a", "b", "c"};
  for (int i = 0; i < 20; ++i) {
    d.y(i) = normal(rng) * 1e-7;
    for (int j = 0; j < 3; ++j) d.X(i, j) = normal(rng) * std::pow(10.0, int(rng() % 9) - 4);
  }
  std::ostringstream out;
  write_csv(out, d);
  ModelSpec spec;
  Dataset back = validate_plain(table_from(out.str()), spec);
  CHECK(back.column_names == d.column_names);
  for (int i = 0; i < 20; ++i) {
    CHECK(back.y(i) == d.y(i));
    for (int j = 0; j < 3; ++j) CHECK(back.X(i, j) == d.X(i, j));
  }
}

TEST_CASE("build_design places the intercept first") {
  auto t = table_from("y,x1\n1,2\n2,4\n");
  ModelSpec spec;
  Dataset d = validate_plain(t, spec);
  Eigen::MatrixXd X = build_design(d, {"x1"}, true);
  CHECK(X(0, 0) == 1.0);
  CHECK(X(1, 1) == 4.0);
}
