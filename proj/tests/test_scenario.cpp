#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "orbita/scenario.hpp"

using namespace orbita;

namespace {

// A minimal valid scenario: the diag(2,3) linear group anchored at (1,1).
Json base_scenario() {
  return Json::parse(R"({
    "name": "diag23",
    "n": 2,
    "degree": 4,
    "generators": [[
      {"component": 0, "monomial": [1, 0], "re": 2.0, "im": 0.0},
      {"component": 1, "monomial": [0, 1], "re": 3.0, "im": 0.0}
    ]],
    "base_points": [[{"re": 1.0, "im": 0.0}, {"re": 1.0, "im": 0.0}]],
    "budget": 4
  })");
}

}  // namespace

TEST_CASE("parse_scenario: round trip of the valid fixture") {
  const Scenario s = parse_scenario(base_scenario());
  CHECK(s.name == "diag23");
  CHECK(s.n == 2);
  CHECK(s.degree == 4);
  REQUIRE(s.generators.size() == 1);
  CHECK(s.generators[0].coeff(0, {1, 0}) == Cplx(2.0, 0.0));
  CHECK(s.generators[0].coeff(1, {0, 1}) == Cplx(3.0, 0.0));
  REQUIRE(s.base_points.size() == 1);
  CHECK(s.base_points[0](0) == Cplx(1.0, 0.0));
  CHECK(s.budget == 4);
  CHECK(s.grid_step == 0.25);
  CHECK(s.hash.size() == 16);

  const GroupSpec spec = group_from_scenario(s);
  CHECK(spec.n == 2);
  CHECK(effective_budget(s, -1) == 4);
  CHECK(effective_budget(s, 2) == 2);
}

TEST_CASE("parse_scenario: schema refusals") {
  // Unknown top-level key.
  Json j = base_scenario();
  j["budgett"] = 3;
  CHECK_THROWS_AS((void)parse_scenario(j), SchemaError);

  // Empty generator list.
  j = base_scenario();
  j["generators"] = Json::array();
  CHECK_THROWS_AS((void)parse_scenario(j), SchemaError);

  // Constant term in a generator record.
  j = base_scenario();
  j["generators"][0].push_back({{"component", 0}, {"monomial", {0, 0}}, {"re", 1.0}, {"im", 0.0}});
  CHECK_THROWS_AS((void)parse_scenario(j), SchemaError);

  // Monomial shape mismatch.
  j = base_scenario();
  j["generators"][0][0]["monomial"] = {1, 0, 0};
  CHECK_THROWS_AS((void)parse_scenario(j), SchemaError);

  // Degree beyond truncation.
  j = base_scenario();
  j["generators"][0][0]["monomial"] = {5, 0};
  CHECK_THROWS_AS((void)parse_scenario(j), SchemaError);

  // Base point with the wrong dimension.
  j = base_scenario();
  j["base_points"] = Json::array({Json::array({Json{{"re", 1.0}, {"im", 0.0}}})});
  CHECK_THROWS_AS((void)parse_scenario(j), SchemaError);

  // Non-positive knobs.
  j = base_scenario();
  j["grid_step"] = 0.0;
  CHECK_THROWS_AS((void)parse_scenario(j), SchemaError);
  j = base_scenario();
  j["budget"] = 0;
  CHECK_THROWS_AS((void)parse_scenario(j), SchemaError);
  j = base_scenario();
  j["tolerances"] = Json{{"rank_rel", -1.0}};
  CHECK_THROWS_AS((void)parse_scenario(j), SchemaError);
  j = base_scenario();
  j["tolerances"] = Json{{"rankrel", 1e-9}};
  CHECK_THROWS_AS((void)parse_scenario(j), SchemaError);

  // Unknown command name.
  j = base_scenario();
  j["commands"] = Json::array({"linearise"});
  CHECK_THROWS_AS((void)parse_scenario(j), SchemaError);

  // Region radii must match n and be positive.
  j = base_scenario();
  j["region"] = Json{{"center", Json::array({Json{{"re", 0.0}, {"im", 0.0}},
                                             Json{{"re", 0.0}, {"im", 0.0}}})},
                     {"radii", Json::array({1.0})}};
  CHECK_THROWS_AS((void)parse_scenario(j), SchemaError);
}

TEST_CASE("scenario_hash: stable under key order, sensitive to content") {
  const Json a = base_scenario();
  Json b = Json::parse(R"({"budget": 4, "degree": 4})");
  b["n"] = a.at("n");
  b["name"] = a.at("name");
  b["generators"] = a.at("generators");
  b["base_points"] = a.at("base_points");
  CHECK(scenario_hash(a) == scenario_hash(b));  // same content, insertion order differs

  Json c = base_scenario();
  c["budget"] = 5;
  CHECK(scenario_hash(a) != scenario_hash(c));
  CHECK(parse_scenario(a).hash == scenario_hash(a));
}

TEST_CASE("group_from_scenario: declared fixed point pins the constant term") {
  // Serialized part q(x) = 2x on C^1 with fixed point 1: f(x) = 2x - 1.
  const Json j = Json::parse(R"({
    "n": 1,
    "degree": 2,
    "generators": [[{"component": 0, "monomial": [1], "re": 2.0, "im": 0.0}]],
    "fixed_point": [{"re": 1.0, "im": 0.0}]
  })");
  const Scenario s = parse_scenario(j);
  const GroupSpec spec = group_from_scenario(s);
  REQUIRE(spec.generators.size() == 1);
  CVec p(1);
  p << 1.0;
  CHECK((spec.generators[0].evaluate(p) - p).norm() <= 1e-14);  // fixes p
  CVec zero(1);
  zero << 0.0;
  CHECK(std::abs(spec.generators[0].evaluate(zero)(0) - Cplx(-1.0, 0.0)) <= 1e-14);

  // The normalized group is exactly x -> 2x.
  const GroupSpec norm = normalize_fixed_point(spec);
  CHECK(norm.generators[0].term_count() == 1);
  CHECK(norm.generators[0].coeff(0, {1}) == Cplx(2.0, 0.0));

  // A fixed point no generator can fix still fails downstream, not at parse.
  CHECK_THROWS_AS((void)parse_scenario(Json::parse(R"({"n": 1, "degree": 2, "generators": []})")),
                  SchemaError);
}

TEST_CASE("load_scenario: file round trip and parse failures") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "orbita_scenario_test";
  fs::create_directories(dir);

  const fs::path good = dir / "good.json";
  std::ofstream(good) << base_scenario().dump(2);
  const Scenario s = load_scenario(good.string());
  CHECK(s.name == "diag23");

  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << "{ not json";
  CHECK_THROWS_AS((void)load_scenario(bad.string()), SchemaError);
  CHECK_THROWS_AS((void)load_scenario((dir / "missing.json").string()), SchemaError);
  fs::remove_all(dir);
}

TEST_CASE("report envelope and CSV shapes") {
  const Scenario s = parse_scenario(base_scenario());
  const Json rep = report_envelope(s, "dominance", 4, 7);
  CHECK(rep.at("tool") == "orbita");
  CHECK(rep.at("command") == "dominance");
  CHECK(rep.at("scenario_hash") == s.hash);
  CHECK(rep.at("budget") == 4);
  CHECK(rep.at("seed") == 7);
  CHECK(rep.contains("timestamp"));
  CHECK(rep.at("tolerances").at("rank_rel") == 1e-9);
  CHECK(rep.at("results").is_object());

  CHECK(word_tag({3}) == "3");
  CHECK(word_tag({0, -2}) == "0;-2");

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "orbita_csv_test";
  CMat pts(1, 2);
  pts(0, 0) = Cplx(1.0, 0.0);
  pts(0, 1) = Cplx(0.5, -0.25);
  write_cloud_csv(dir / "cloud.csv", {{0}, {-1}}, pts);
  std::ifstream in(dir / "cloud.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "word,re_0,im_0");
  std::getline(in, line);
  CHECK(line == "0,1,0");
  std::getline(in, line);
  CHECK(line == "-1,0.5,-0.25");
  CHECK(!std::getline(in, line));
  fs::remove_all(dir);
}
