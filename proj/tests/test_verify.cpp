#include <doctest.h>

#include <algorithm>

#include <json.hpp>

#include "ncr/model_io.hpp"
#include "ncr/verify.hpp"

using namespace ncr;

namespace {

const CheckRow* row(const Report& r, const std::string& id) {
  auto it = std::find_if(r.rows.begin(), r.rows.end(), [&](const CheckRow& c) { return c.id == id; });
  return it == r.rows.end() ? nullptr : &*it;
}

}  // namespace

TEST_CASE("invariant suite on clean models") {
  for (const char* name : {"x2y2", "z6", "cusp"}) {
    Report r = verify_suite(catalog_model(name), {1, 60});
    CAPTURE(name);
    CHECK(r.all_pass());
    CHECK(std::is_sorted(r.rows.begin(), r.rows.end(), [](const CheckRow& a, const CheckRow& b) { return a.id < b.id; }));
    CHECK(r.csv().rfind(Report::csv_header(), 0) == 0);
  }
}

TEST_CASE("invariant suite is reproducible") {
  NCModel m = catalog_model("x2y2g");
  CHECK(verify_suite(m, {5, 40}).csv() == verify_suite(m, {5, 40}).csv());
}

TEST_CASE("a broken multiplicity is reported with a witness") {
  auto doc = nlohmann::ordered_json::parse(catalog_document("x2y2"));
  doc["components"][0]["multiplicity"] = 3;
  Report r = verify_suite(load_model(doc.dump()), {1, 40});
  CHECK_FALSE(r.all_pass());
  const CheckRow* d = row(r, "ncmodel.diagnostics");
  REQUIRE(d != nullptr);
  CHECK_FALSE(d->pass);
  CHECK(!d->witness.empty());
}
