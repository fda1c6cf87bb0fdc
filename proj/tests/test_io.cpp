#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "interpnn/csv.hpp"
#include "interpnn/svg.hpp"

using namespace interpnn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("interpnn_test_" + std::to_string(std::rand()) + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("format_double round-trips and stays compact") {
  for (double x : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 1e-300, 123456.789, 2.0 / 3.0}) {
    CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("atomic writes leave no temporary behind") {
  TempDir dir;
  const auto target = dir.path / "out.csv";
  write_file_atomic(target.string(), "a,b\n1,2\n");
  CHECK(slurp(target) == "a,b\n1,2\n");
  CHECK_FALSE(fs::exists(target.string() + ".tmp"));
  // overwrite works
  write_file_atomic(target.string(), "x\n");
  CHECK(slurp(target) == "x\n");
}

TEST_CASE("load_csv parses a small dataset") {
  TempDir dir;
  const auto path = dir.path / "toy.csv";
  write(path, "x1,x2,label\n0.5,1.5,0\n2.5,3.5,1\n-1,0,1\n");
  const auto ds = load_csv(path.string(), "label", Task::kClassification);
  REQUIRE(ds.size() == 3);
  CHECK(ds.dim() == 2);
  CHECK(ds.point(1)[0] == 2.5);
  CHECK(ds.label(2) == 1.0);
}

TEST_CASE("load_csv accepts the label column anywhere") {
  TempDir dir;
  const auto path = dir.path / "toy.csv";
  write(path, "y,a,b\n1,0.5,1.5\n0,2.5,3.5\n");
  const auto ds = load_csv(path.string(), "y", Task::kClassification);
  CHECK(ds.dim() == 2);
  CHECK(ds.label(0) == 1.0);
  CHECK(ds.point(0)[1] == 1.5);
}

TEST_CASE("load_csv error paths") {
  TempDir dir;
  const auto path = dir.path / "bad.csv";

  write(path, "x,label\n");
  CHECK_THROWS_AS(load_csv(path.string(), "label", Task::kClassification), EmptyDatasetError);

  write(path, "x,label\n0.5,oops\n");
  CHECK_THROWS_WITH(load_csv(path.string(), "label", Task::kRegression),
                    Catch::Matchers::ContainsSubstring("row 2") &&
                        Catch::Matchers::ContainsSubstring("column 2"));

  write(path, "x,label\n1.0,2\n");
  CHECK_THROWS_AS(load_csv(path.string(), "label", Task::kClassification), NonBinaryLabelError);
  CHECK_NOTHROW(load_csv(path.string(), "label", Task::kRegression));

  write(path, "x,label\n1.0,0\n2.0\n");
  CHECK_THROWS_AS(load_csv(path.string(), "label", Task::kRegression), CsvParseError);

  write(path, "x,label\n1.0,inf\n");
  CHECK_THROWS_AS(load_csv(path.string(), "label", Task::kRegression), CsvParseError);

  CHECK_THROWS_AS(load_csv((dir.path / "missing.csv").string(), "label", Task::kRegression),
                  IoError);

  write(path, "x,y\n1,0\n");
  CHECK_THROWS_WITH(load_csv(path.string(), "label", Task::kRegression),
                    Catch::Matchers::ContainsSubstring("label column"));
}

TEST_CASE("svg renderer emits well-formed charts") {
  const PlotSeries sim{"simulated",
                       {{0.0, 1.0}, {0.1, 0.97}, {0.2, 0.96}, {0.3, 1.01}},
                       "#1f77b4",
                       true,
                       true};
  const PlotSeries theory{"theory",
                          {{0.0, 1.0}, {0.1, 0.98}, {0.2, std::nan("")}, {0.3, 1.0}},
                          "#000000",
                          false,
                          false};
  const auto svg = render_line_chart("title", "gamma/d", "ratio", {sim, theory});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  // one polyline per series plus legend swatches
  std::size_t polylines = 0;
  for (std::size_t at = svg.find("<polyline"); at != std::string::npos;
       at = svg.find("<polyline", at + 1))
    ++polylines;
  CHECK(polylines == 2);
  CHECK(svg.find("simulated") != std::string::npos);
  CHECK(svg.find("nan") == std::string::npos);  // NaN points are skipped

  // identical input renders identical bytes
  CHECK(render_line_chart("title", "gamma/d", "ratio", {sim, theory}) == svg);
}
