#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "ivcheck/dataset.hpp"

using namespace ivcheck;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

Dataset small_dataset() {
  Dataset d;
  d.x.resize(7);
  d.y.resize(7);
  d.z.resize(7, 2);
  d.w.resize(7, 1);
  d.x << 1.0, -2.5, 1.0 / 3.0, 4.0, 1e-8, 7.25, -0.125;
  d.y << 0.5, 2.0, -9.75, 1e3, 2.0 / 7.0, -1.0, 0.0;
  d.z.col(0) << 1, 0, 1, 1, 0, 0, 1;
  d.z.col(1) << 0.1, 0.2, 0.3, -0.4, 0.5, 123.456, -7.0;
  d.w.col(0) << -1, -2, -3, 4, 5, 6, 7;
  d.z_names = {"Z1", "Z2"};
  d.w_names = {"W1"};
  return d;
}

}  // namespace

TEST_CASE("csv round trip preserves every value bit for bit", "[dataset]") {
  const Dataset d = small_dataset();
  const std::string path = temp_path("ivcheck_roundtrip.csv");
  write_csv(path, d);

  const Dataset back = load_csv(path, {"X", "Y", {"Z1", "Z2"}, {"W1"}});
  REQUIRE(back.n() == d.n());
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    CHECK(back.x[i] == d.x[i]);
    CHECK(back.y[i] == d.y[i]);
    CHECK(back.z(i, 0) == d.z(i, 0));
    CHECK(back.z(i, 1) == d.z(i, 1));
    CHECK(back.w(i, 0) == d.w(i, 0));
  }
  CHECK(back.z_names == d.z_names);
  CHECK(back.w_names == d.w_names);
  std::filesystem::remove(path);
}

TEST_CASE("value formatting round trips doubles through decimal text", "[dataset]") {
  for (double v : {0.1, 1.0 / 3.0, -2.718281828459045, 1e300, 5e-324, 0.0, -123456.789}) {
    const std::string s = format_value(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("column order in the file does not matter, roles do", "[dataset]") {
  const std::string path = temp_path("ivcheck_order.csv");
  write_text(path, "b,outcome,a\n1,2,3\n4,5,6\n");
  const Dataset d = load_csv(path, {"a", "outcome", {"b"}, {}});
  CHECK(d.x[0] == 3.0);
  CHECK(d.y[0] == 2.0);
  CHECK(d.z(0, 0) == 1.0);
  CHECK(d.num_covariates() == 0);
  std::filesystem::remove(path);
}

TEST_CASE("cells are trimmed but must parse fully as numbers", "[dataset]") {
  const std::string path = temp_path("ivcheck_cells.csv");
  write_text(path, "X,Y,Z\n 1.5 ,\t2e3, -0.25\n");
  const Dataset d = load_csv(path, {"X", "Y", {"Z"}, {}});
  CHECK(d.x[0] == 1.5);
  CHECK(d.y[0] == 2000.0);
  CHECK(d.z(0, 0) == -0.25);
  std::filesystem::remove(path);
}

TEST_CASE("loader rejects malformed input with a pointed message", "[dataset]") {
  const ColumnRoles roles{"X", "Y", {"Z"}, {}};
  const std::string path = temp_path("ivcheck_bad.csv");

  SECTION("missing file") {
    CHECK_THROWS_AS(load_csv(temp_path("ivcheck_does_not_exist.csv"), roles), InputError);
  }
  SECTION("missing column") {
    write_text(path, "X,Y\n1,2\n");
    CHECK_THROWS_WITH(load_csv(path, roles), Catch::Matchers::ContainsSubstring("missing column 'Z'"));
  }
  SECTION("non numeric cell") {
    write_text(path, "X,Y,Z\n1,oops,3\n");
    CHECK_THROWS_WITH(load_csv(path, roles), Catch::Matchers::ContainsSubstring("non-numeric cell 'oops'"));
  }
  SECTION("trailing junk after a number") {
    write_text(path, "X,Y,Z\n1,2.5x,3\n");
    CHECK_THROWS_AS(load_csv(path, roles), InputError);
  }
  SECTION("infinity is not a usable value") {
    write_text(path, "X,Y,Z\n1,inf,3\n");
    CHECK_THROWS_AS(load_csv(path, roles), InputError);
  }
  SECTION("ragged row") {
    write_text(path, "X,Y,Z\n1,2,3\n4,5\n");
    CHECK_THROWS_WITH(load_csv(path, roles), Catch::Matchers::ContainsSubstring("row 2"));
  }
  SECTION("empty cell") {
    write_text(path, "X,Y,Z\n1,,3\n");
    CHECK_THROWS_WITH(load_csv(path, roles), Catch::Matchers::ContainsSubstring("missing value"));
  }
  SECTION("header only") {
    write_text(path, "X,Y,Z\n");
    CHECK_THROWS_WITH(load_csv(path, roles), Catch::Matchers::ContainsSubstring("no data rows"));
  }
  std::filesystem::remove(path);
}

TEST_CASE("role validation happens before any file io", "[dataset]") {
  CHECK_THROWS_AS(load_csv("unused.csv", {"", "Y", {"Z"}, {}}), ConfigError);
  CHECK_THROWS_AS(load_csv("unused.csv", {"X", "Y", {}, {}}), ConfigError);
  CHECK_THROWS_AS(load_csv("unused.csv", {"X", "Y", {"Z", "Z"}, {}}), ConfigError);
  CHECK_THROWS_AS(load_csv("unused.csv", {"X", "Y", {"Z"}, {"X"}}), ConfigError);
}

TEST_CASE("dataset validation catches structural problems", "[dataset]") {
  Dataset d = small_dataset();
  SECTION("passes on clean data") { CHECK_NOTHROW(validate(d)); }
  SECTION("nan entries") {
    d.y[3] = std::nan("");
    CHECK_THROWS_AS(validate(d), InputError);
  }
  SECTION("inf in instruments") {
    d.z(2, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(validate(d), InputError);
  }
  SECTION("length mismatch") {
    d.y.conservativeResize(6);
    CHECK_THROWS_AS(validate(d), InputError);
  }
  SECTION("no candidates") {
    d.z.resize(7, 0);
    CHECK_THROWS_AS(validate(d), InputError);
  }
  SECTION("no rows") {
    Dataset e;
    e.z.resize(0, 1);
    CHECK_THROWS_AS(validate(e), InputError);
  }
}

TEST_CASE("centering removes means and leaves the original alone", "[dataset]") {
  const Dataset d = small_dataset();
  const Dataset c = center(d);
  CHECK(std::abs(c.x.mean()) < 1e-12);
  CHECK(std::abs(c.y.mean()) < 1e-10);  // y spans 1e3, so give the mean some slack
  CHECK(std::abs(c.z.col(0).mean()) < 1e-12);
  CHECK(std::abs(c.w.col(0).mean()) < 1e-12);
  CHECK(d.x[0] == 1.0);  // input untouched
  // Centering shifts but never rescales.
  CHECK(c.x[1] - c.x[0] == Catch::Approx(d.x[1] - d.x[0]).epsilon(1e-14));
}
