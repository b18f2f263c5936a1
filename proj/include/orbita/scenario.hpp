#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "orbita/group.hpp"
#include "orbita/orbit.hpp"
#include "orbita/types.hpp"

namespace orbita {

using Json = nlohmann::json;

// One experiment description: the group, where to anchor it, what to probe,
// and the sampling knobs. Loaded from a single JSON file; every report embeds
// the hash of the canonical serialization so artifacts are traceable to their
// inputs.
struct Scenario {
  std::string name = "scenario";
  int n = 0;
  int degree = 8;
  std::vector<JetMap> generators;
  std::vector<JetMap> inverses;  // optional, else formal inverses are used
  std::optional<CVec> fixed_point;
  std::vector<CVec> base_points;
  std::vector<CVec> probes;
  int budget = -1;  // -1: default by generator count
  Tolerances tol;
  std::optional<Polydisc> region;  // default: unit polydisc at each base point
  double grid_step = 0.25;
  int perturbations = 4;
  unsigned long long seed = 1;
  std::vector<std::string> commands;  // consumed by the run command
  std::string hash;
};

// FNV-1a 64-bit of the canonical dump (sorted keys, shortest-roundtrip
// floats), as 16 hex digits.
std::string scenario_hash(const Json& canonical);

// Strict parse: unknown keys, shape mismatches, constant generator terms, and
// non-positive knobs all raise SchemaError.
Scenario parse_scenario(const Json& j);
Scenario load_scenario(const std::string& path);

// The validated group. A declared fixed point p implies each generator's
// constant term: f(x) = q(x) + (p - q(p)) for the serialized part q, so that
// f(p) = p exactly. Group-law violations propagate from make_group.
GroupSpec group_from_scenario(const Scenario& s);

// Budget resolution: command-line override, else scenario, else the
// generator-count default.
int effective_budget(const Scenario& s, int override_budget);

// JSON shapes shared by all reports: complex scalars as {re, im}.
Json complex_to_json(const Cplx& z);
Json cvec_to_json(const CVec& v);
Json cmat_to_json(const CMat& m);
Json tolerances_to_json(const Tolerances& t);
Json word_to_json(const WordExp& w);

// Report envelope with tool/version/hash/budget/knobs; the caller fills
// .results. The timestamp is the only field allowed to differ between reruns
// of the same scenario — execution details like the thread count stay out.
Json report_envelope(const Scenario& s, const std::string& command, int budget,
                     unsigned long long seed);
void write_report(const std::filesystem::path& path, const Json& report);

// Point-cloud CSV: word tag column, then re/im interleaved per coordinate.
std::string word_tag(const WordExp& w);
void write_cloud_csv(const std::filesystem::path& path, const std::vector<WordExp>& words,
                     const CMat& points);
// Linearization triples (w(x), M w(x), D0w x) for plotting.
void write_triples_csv(const std::filesystem::path& path, const std::vector<WordExp>& words,
                       const CMat& orbit_cols, const CMat& mapped_cols, const CMat& linear_cols);

}  // namespace orbita
