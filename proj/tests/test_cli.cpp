#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "ncr/model_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = ncr::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "ncr_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run({}).code == ncr::cli::kUsage);
  CHECK(run({"describe", "--bogus"}).code == ncr::cli::kUsage);
  CHECK(run({"describe", "--model", "no_such_model"}).code == ncr::cli::kIo);
  CHECK(run({"describe", "--model", "x2y2", "--out", "/nonexistent_dir/x.csv"}).code == ncr::cli::kIo);

  fs::path bad = scratch("bad.json");
  write(bad, "{\"name\": \"b\", \"charts\": 3}");
  Result schema = run({"describe", "--model", bad.string()});
  CHECK(schema.code == ncr::cli::kModel);
  CHECK(schema.err.find("line") != std::string::npos);

  CHECK(run({"fibre", "--model", "x2y2", "--at", "origin", "-c", "1", "--real"}).code == ncr::cli::kDomain);
  CHECK(run({"describe", "--model", "x2y2"}).code == ncr::cli::kOk);
}

TEST_CASE("check over the catalog and a damaged model") {
  Result all = run({"check", "--samples", "40"});
  CHECK(all.code == ncr::cli::kOk);
  CHECK(all.out.find("PASS") != std::string::npos);

  auto doc = nlohmann::ordered_json::parse(ncr::catalog_document("x2y2"));
  doc["components"][0]["multiplicity"] = 5;
  fs::path broken = scratch("broken.json");
  write(broken, doc.dump(2));
  Result bad = run({"check", "--model", broken.string(), "--samples", "40"});
  CHECK(bad.code == ncr::cli::kCheckFailed);
  CHECK(bad.out.find("FAIL") != std::string::npos);
  // Other subcommands refuse an invalid model outright.
  CHECK(run({"describe", "--model", broken.string()}).code == ncr::cli::kModel);
}

TEST_CASE("subcommand outputs") {
  Result milnor = run({"milnor", "--model", "cusp.json", "--at", "origin"});
  CHECK(milnor.code == 0);
  CHECK(milnor.out.find("chi = -1") != std::string::npos);
  CHECK(milnor.out.find("pi0 = 1") != std::string::npos);

  fs::path csv = scratch("fibre.csv");
  Result fibre = run({"fibre", "--real", "--model", "x2y2.json", "--at", "origin", "-c", "0.01", "--out", csv.string()});
  CHECK(fibre.code == 0);
  const std::string text = read(csv);
  CHECK(count_lines(text) == 5);
  CHECK(text.rfind("chart,sheet,x1,x2,f\n", 0) == 0);

  Result alpha = run({"alpha-fibre", "--exponents", "6"});
  CHECK(alpha.code == 0);
  CHECK(alpha.out.find("1 2 3 4 5 0") != std::string::npos);

  CHECK(run({"retract", "--model", "x2y2", "--point", "ambient:0.3,0.3"}).code == 0);
  CHECK(run({"stratify", "--model", "cusp"}).code == 0);
}

TEST_CASE("repeated runs write identical files") {
  fs::path a = scratch("a.csv"), b = scratch("b.csv");
  REQUIRE(run({"check", "--model", "z2z3", "--seed", "9", "--samples", "30", "--out", a.string()}).code == 0);
  REQUIRE(run({"check", "--model", "z2z3", "--seed", "9", "--samples", "30", "--out", b.string()}).code == 0);
  CHECK(read(a) == read(b));
  CHECK(!read(a).empty());
}
