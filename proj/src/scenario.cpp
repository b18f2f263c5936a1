#include "orbita/scenario.hpp"

#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "orbita/linear_core.hpp"

namespace orbita {

namespace {

[[noreturn]] void schema_fail(const std::string& where, const std::string& what) {
  throw SchemaError("scenario: " + where + ": " + what);
}

void require_keys(const Json& j, const std::string& where, const std::set<std::string>& required,
                  const std::set<std::string>& optional) {
  if (!j.is_object()) schema_fail(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!required.count(key) && !optional.count(key))
      schema_fail(where, "unknown key \"" + key + "\"");
  }
  for (const std::string& key : required)
    if (!j.contains(key)) schema_fail(where, "missing key \"" + key + "\"");
}

double number_at(const Json& j, const std::string& where) {
  if (!j.is_number()) schema_fail(where, "expected a number");
  return j.get<double>();
}

Cplx parse_complex(const Json& j, const std::string& where) {
  require_keys(j, where, {"re", "im"}, {});
  return {number_at(j.at("re"), where + ".re"), number_at(j.at("im"), where + ".im")};
}

CVec parse_cvec(const Json& j, int n, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    schema_fail(where, "expected an array of " + std::to_string(n) + " complex entries");
  CVec v(n);
  for (int i = 0; i < n; ++i)
    v(i) = parse_complex(j.at(static_cast<std::size_t>(i)), where + "[" + std::to_string(i) + "]");
  return v;
}

std::vector<CVec> parse_points(const Json& j, int n, const std::string& where) {
  if (!j.is_array()) schema_fail(where, "expected an array of points");
  std::vector<CVec> points;
  for (std::size_t i = 0; i < j.size(); ++i)
    points.push_back(parse_cvec(j.at(i), n, where + "[" + std::to_string(i) + "]"));
  return points;
}

JetMap parse_jet(const Json& j, int n, int degree, const std::string& where) {
  if (!j.is_array() || j.empty()) schema_fail(where, "expected a nonempty array of term records");
  JetMap f(n, degree);
  for (std::size_t t = 0; t < j.size(); ++t) {
    const std::string at = where + "[" + std::to_string(t) + "]";
    const Json& rec = j.at(t);
    require_keys(rec, at, {"component", "monomial", "re", "im"}, {});
    if (!rec.at("component").is_number_integer()) schema_fail(at + ".component", "expected an integer");
    const int comp = rec.at("component").get<int>();
    if (comp < 0 || comp >= n)
      schema_fail(at + ".component", "out of range [0, " + std::to_string(n) + ")");
    const Json& mono = rec.at("monomial");
    if (!mono.is_array() || static_cast<int>(mono.size()) != n)
      schema_fail(at + ".monomial", "expected " + std::to_string(n) + " exponents");
    Multi alpha(static_cast<std::size_t>(n), 0);
    int total = 0;
    for (int i = 0; i < n; ++i) {
      const Json& e = mono.at(static_cast<std::size_t>(i));
      if (!e.is_number_integer() || e.get<int>() < 0)
        schema_fail(at + ".monomial", "exponents must be nonnegative integers");
      alpha[static_cast<std::size_t>(i)] = e.get<int>();
      total += e.get<int>();
    }
    if (total == 0)
      schema_fail(at, "constant terms are not accepted; declare fixed_point instead");
    if (total > degree)
      schema_fail(at, "monomial degree " + std::to_string(total) + " exceeds truncation degree " +
                          std::to_string(degree));
    f.add_coeff(comp, alpha, {number_at(rec.at("re"), at + ".re"), number_at(rec.at("im"), at + ".im")});
  }
  return f;
}

Tolerances parse_tolerances(const Json& j, const std::string& where) {
  Tolerances tol;
  const std::set<std::string> known = {"rank_rel", "kernel_rel", "eig_rel", "pattern_rel",
                                       "comm",     "inv",        "solve",   "angle",
                                       "residual", "fixed_point", "dedup",  "stratum"};
  require_keys(j, where, {}, known);
  auto maybe = [&](const char* key, double& slot) {
    if (j.contains(key)) {
      slot = number_at(j.at(key), where + "." + key);
      if (slot <= 0.0) schema_fail(where + "." + key, "must be positive");
    }
  };
  maybe("rank_rel", tol.rank_rel);
  maybe("kernel_rel", tol.kernel_rel);
  maybe("eig_rel", tol.eig_rel);
  maybe("pattern_rel", tol.pattern_rel);
  maybe("comm", tol.comm);
  maybe("inv", tol.inv);
  maybe("solve", tol.solve);
  maybe("angle", tol.angle);
  maybe("residual", tol.residual);
  maybe("fixed_point", tol.fixed_point);
  maybe("dedup", tol.dedup);
  maybe("stratum", tol.stratum);
  return tol;
}

Polydisc parse_region(const Json& j, int n, const std::string& where) {
  require_keys(j, where, {"center", "radii"}, {});
  Polydisc region;
  region.center = parse_cvec(j.at("center"), n, where + ".center");
  const Json& radii = j.at("radii");
  if (!radii.is_array() || static_cast<int>(radii.size()) != n)
    schema_fail(where + ".radii", "expected " + std::to_string(n) + " radii");
  region.radii.resize(n);
  for (int i = 0; i < n; ++i) {
    region.radii(i) = number_at(radii.at(static_cast<std::size_t>(i)),
                                where + ".radii[" + std::to_string(i) + "]");
    if (region.radii(i) <= 0.0) schema_fail(where + ".radii", "radii must be positive");
  }
  return region;
}

}  // namespace

std::string scenario_hash(const Json& canonical) {
  const std::string dump = canonical.dump();
  std::uint64_t h = 1469598103934665603ULL;  // FNV offset basis
  for (const unsigned char c : dump) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ULL;  // FNV prime
  }
  std::ostringstream os;
  os << std::hex << std::setfill('0') << std::setw(16) << h;
  return os.str();
}

Scenario parse_scenario(const Json& j) {
  require_keys(j, "root", {"n", "degree", "generators"},
               {"name", "inverses", "fixed_point", "base_points", "probes", "budget",
                "tolerances", "region", "grid_step", "perturbations", "seed", "commands"});

  Scenario s;
  if (!j.at("n").is_number_integer()) schema_fail("n", "expected an integer");
  s.n = j.at("n").get<int>();
  if (s.n < 1 || s.n > kMaxDim)
    schema_fail("n", "dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  if (!j.at("degree").is_number_integer()) schema_fail("degree", "expected an integer");
  s.degree = j.at("degree").get<int>();
  if (s.degree < 1 || s.degree > 16) schema_fail("degree", "truncation degree must be in [1, 16]");

  if (j.contains("name")) {
    if (!j.at("name").is_string()) schema_fail("name", "expected a string");
    s.name = j.at("name").get<std::string>();
    if (s.name.empty() || s.name.find_first_of("/\\ \t\n") != std::string::npos)
      schema_fail("name", "must be a nonempty token usable in file names");
  }

  const Json& gens = j.at("generators");
  if (!gens.is_array() || gens.empty()) schema_fail("generators", "expected a nonempty array");
  for (std::size_t g = 0; g < gens.size(); ++g)
    s.generators.push_back(parse_jet(gens.at(g), s.n, s.degree, "generators[" + std::to_string(g) + "]"));

  if (j.contains("inverses")) {
    const Json& invs = j.at("inverses");
    if (!invs.is_array() || invs.size() != gens.size())
      schema_fail("inverses", "expected one inverse per generator");
    for (std::size_t g = 0; g < invs.size(); ++g)
      s.inverses.push_back(parse_jet(invs.at(g), s.n, s.degree, "inverses[" + std::to_string(g) + "]"));
  }

  if (j.contains("fixed_point")) s.fixed_point = parse_cvec(j.at("fixed_point"), s.n, "fixed_point");
  if (j.contains("base_points")) s.base_points = parse_points(j.at("base_points"), s.n, "base_points");
  if (j.contains("probes")) s.probes = parse_points(j.at("probes"), s.n, "probes");

  if (j.contains("budget")) {
    if (!j.at("budget").is_number_integer()) schema_fail("budget", "expected an integer");
    s.budget = j.at("budget").get<int>();
    if (s.budget < 1) schema_fail("budget", "must be at least 1");
  }
  if (j.contains("tolerances")) s.tol = parse_tolerances(j.at("tolerances"), "tolerances");
  if (j.contains("region")) s.region = parse_region(j.at("region"), s.n, "region");
  if (j.contains("grid_step")) {
    s.grid_step = number_at(j.at("grid_step"), "grid_step");
    if (s.grid_step <= 0.0) schema_fail("grid_step", "must be positive");
  }
  if (j.contains("perturbations")) {
    if (!j.at("perturbations").is_number_integer() || j.at("perturbations").get<int>() < 0)
      schema_fail("perturbations", "expected a nonnegative integer");
    s.perturbations = j.at("perturbations").get<int>();
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
      schema_fail("seed", "expected a nonnegative integer");
    const auto raw = j.at("seed").get<long long>();
    if (raw < 0) schema_fail("seed", "expected a nonnegative integer");
    s.seed = static_cast<unsigned long long>(raw);
  }
  if (j.contains("commands")) {
    const Json& cmds = j.at("commands");
    if (!cmds.is_array() || cmds.empty()) schema_fail("commands", "expected a nonempty array");
    const std::set<std::string> known = {"normal-form", "dominance", "linearize",
                                         "orbit",       "minimality", "density"};
    for (const Json& c : cmds) {
      if (!c.is_string() || !known.count(c.get<std::string>()))
        schema_fail("commands", "unknown command " + c.dump());
      s.commands.push_back(c.get<std::string>());
    }
  }

  s.hash = scenario_hash(j);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("scenario: cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw SchemaError("scenario: " + path + " is not valid JSON: " + std::string(e.what()));
  }
  return parse_scenario(j);
}

GroupSpec group_from_scenario(const Scenario& s) {
  std::vector<JetMap> gens = s.generators;
  std::vector<JetMap> invs = s.inverses;
  if (s.fixed_point) {
    // The serialized part q carries no constant; the declared fixed point
    // pins it: f = q + (p - q(p)) fixes p exactly.
    const Multi zero(static_cast<std::size_t>(s.n), 0);
    auto pin = [&](JetMap& f) {
      const CVec c = *s.fixed_point - f.evaluate(*s.fixed_point);
      for (int i = 0; i < s.n; ++i) f.add_coeff(i, zero, c(i));
    };
    for (JetMap& f : gens) pin(f);
    for (JetMap& f : invs) pin(f);
  }
  return make_group(s.n, s.degree, gens, invs, s.fixed_point, s.tol);
}

int effective_budget(const Scenario& s, int override_budget) {
  if (override_budget > 0) return override_budget;
  if (s.budget > 0) return s.budget;
  return default_budget(static_cast<int>(s.generators.size()));
}

Json complex_to_json(const Cplx& z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }

Json cvec_to_json(const CVec& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(complex_to_json(v(i)));
  return arr;
}

Json cmat_to_json(const CMat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

Json tolerances_to_json(const Tolerances& t) {
  return Json{{"rank_rel", t.rank_rel},   {"kernel_rel", t.kernel_rel},
              {"eig_rel", t.eig_rel},     {"pattern_rel", t.pattern_rel},
              {"comm", t.comm},           {"inv", t.inv},
              {"solve", t.solve},         {"angle", t.angle},
              {"residual", t.residual},   {"fixed_point", t.fixed_point},
              {"dedup", t.dedup},         {"stratum", t.stratum}};
}

Json word_to_json(const WordExp& w) {
  Json arr = Json::array();
  for (const int k : w) arr.push_back(k);
  return arr;
}

namespace {

std::string current_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

Json report_envelope(const Scenario& s, const std::string& command, int budget,
                     unsigned long long seed) {
  Json rep;
  rep["tool"] = "orbita";
  rep["version"] = "0.1.0";
  rep["schema_version"] = 1;
  rep["command"] = command;
  rep["scenario"] = s.name;
  rep["scenario_hash"] = s.hash;
  rep["timestamp"] = current_timestamp();
  rep["budget"] = budget;
  rep["seed"] = seed;
  rep["tolerances"] = tolerances_to_json(s.tol);
  rep["results"] = Json::object();
  return rep;
}

void write_report(const std::filesystem::path& path, const Json& report) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write report " + path.string());
  out << report.dump(2) << '\n';
}

std::string word_tag(const WordExp& w) {
  std::string tag;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) tag += ';';
    tag += std::to_string(w[i]);
  }
  return tag;
}

namespace {

void write_complex_columns(std::ostream& out, const CVec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out << ',' << v(i).real() << ',' << v(i).imag();
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write CSV " + path.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_cloud_csv(const std::filesystem::path& path, const std::vector<WordExp>& words,
                     const CMat& points) {
  std::ofstream out = open_csv(path);
  out << "word";
  for (Eigen::Index i = 0; i < points.rows(); ++i) out << ",re_" << i << ",im_" << i;
  out << '\n';
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    out << word_tag(words.at(static_cast<std::size_t>(j)));
    write_complex_columns(out, points.col(j));
    out << '\n';
  }
}

void write_triples_csv(const std::filesystem::path& path, const std::vector<WordExp>& words,
                       const CMat& orbit_cols, const CMat& mapped_cols, const CMat& linear_cols) {
  std::ofstream out = open_csv(path);
  const Eigen::Index n = orbit_cols.rows();
  out << "word";
  for (const char* prefix : {"orbit", "mapped", "linear"})
    for (Eigen::Index i = 0; i < n; ++i)
      out << ',' << prefix << "_re_" << i << ',' << prefix << "_im_" << i;
  out << '\n';
  for (Eigen::Index j = 0; j < orbit_cols.cols(); ++j) {
    out << word_tag(words.at(static_cast<std::size_t>(j)));
    write_complex_columns(out, orbit_cols.col(j));
    write_complex_columns(out, mapped_cols.col(j));
    write_complex_columns(out, linear_cols.col(j));
    out << '\n';
  }
}

}  // namespace orbita
