// orbita: scenario-driven laboratory for commuting polynomial automorphism
// groups around a fixed point. One scenario file in, a directory of JSON
// reports and CSV point clouds out.
//
// Exit codes: 0 success; 1 schema/usage error; 2 group not abelian;
// 3 ill-conditioned spectrum; 4 not dominant / linearization ill defined;
// 5 inconclusive experiment; 6 other validated failure; 70 internal error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "orbita/kernels.hpp"
#include "orbita/linear_core.hpp"
#include "orbita/linearization.hpp"
#include "orbita/orbit.hpp"
#include "orbita/scenario.hpp"

namespace {

using namespace orbita;
namespace fs = std::filesystem;

bool log_enabled() {
  const char* v = std::getenv("ORBITA_LOG");
  return v != nullptr && *v != '\0';
}

void log_line(const std::string& msg) {
  if (log_enabled()) std::cerr << "[orbita] " << msg << '\n';
}

struct Options {
  std::string scenario_path;
  std::string out_dir = "out";
  int jobs = 0;             // <=0: leave the runtime default
  int budget_override = -1; // <=0: scenario / generator-count default
  long long seed = -1;      // <0: scenario seed
};

// All analysis happens in fixed-point-centered coordinates. Scenario points
// and regions are given in the input coordinates and shifted on load; report
// coordinates are shifted back, and every report records origin_shift.
struct Context {
  Scenario scenario;
  GroupSpec normalized;
  std::vector<CVec> bases;   // centered working copies of scenario.base_points
  std::vector<CVec> probes;  // centered working copies of scenario.probes
  std::optional<Polydisc> region;
  int budget = 0;
  unsigned long long seed = 1;
  fs::path out;
};

Context make_context(const Options& opt) {
  Context ctx;
  ctx.scenario = load_scenario(opt.scenario_path);
  log_line("loaded scenario " + ctx.scenario.name + " (hash " + ctx.scenario.hash + ")");
  ctx.normalized = normalize_fixed_point(group_from_scenario(ctx.scenario));
  const CVec& shift = ctx.normalized.origin_shift;
  for (const CVec& x : ctx.scenario.base_points) ctx.bases.push_back(x - shift);
  for (const CVec& y : ctx.scenario.probes) ctx.probes.push_back(y - shift);
  if (ctx.scenario.region) {
    Polydisc r = *ctx.scenario.region;
    r.center -= shift;
    ctx.region = r;
  }
  ctx.budget = effective_budget(ctx.scenario, opt.budget_override);
  ctx.seed = opt.seed >= 0 ? static_cast<unsigned long long>(opt.seed) : ctx.scenario.seed;
  ctx.out = fs::path(opt.out_dir);
  return ctx;
}

fs::path artifact(const Context& ctx, const std::string& stem) {
  return ctx.out / (ctx.scenario.name + "_" + stem);
}

// A centered point expressed back in the scenario's input coordinates.
Json point_json(const Context& ctx, const CVec& centered) {
  return cvec_to_json(centered + ctx.normalized.origin_shift);
}

CMat cloud_in_input_coords(const Context& ctx, CMat centered_points) {
  centered_points.colwise() += ctx.normalized.origin_shift;
  return centered_points;
}

Json envelope(const Context& ctx, const std::string& command) {
  Json rep = report_envelope(ctx.scenario, command, ctx.budget, ctx.seed);
  rep["results"]["origin_shift"] = cvec_to_json(ctx.normalized.origin_shift);
  return rep;
}

const std::vector<CVec>& require_base_points(const Context& ctx, const char* command) {
  if (ctx.bases.empty())
    throw SchemaError(std::string("scenario: command ") + command + " needs base_points");
  return ctx.bases;
}

Polydisc region_at(const Context& ctx, const CVec& x) {
  if (ctx.region) return *ctx.region;
  return unit_polydisc(x);
}

bool is_affine(const GroupSpec& spec) {
  for (const JetMap& g : spec.generators)
    for (int i = 0; i < spec.n; ++i)
      for (const auto& [alpha, coeff] : g.component(i)) {
        (void)coeff;
        if (total_degree(alpha) > 1) return false;
      }
  return true;
}

Json rank_to_json(const RankResult& r) {
  return Json{{"rank", r.rank},
              {"sigma_max", r.sigma_max},
              {"sigma_accepted", r.sigma_accepted},
              {"sigma_rejected", r.sigma_rejected}};
}

Json kernels_to_json(const KernelVerdict& k) {
  Json j{{"consistent", k.consistent},
         {"null_dim_eval", k.null_dim_eval},
         {"null_dim_deriv", k.null_dim_deriv},
         {"min_principal_cosine", k.min_principal_cosine}};
  if (!k.consistent) {
    j["witness_side"] = k.witness_side;
    j["witness"] = cvec_to_json(k.witness);
    j["witness_image"] = cvec_to_json(k.witness_image);
    j["witness_image_norm"] = k.witness_image_norm;
  }
  return j;
}

Json dominance_to_json(const DominanceReport& rep, Json base_point) {
  return Json{{"base_point", std::move(base_point)},
              {"word_count", rep.word_count},
              {"r", rep.r},
              {"r_tilde", rep.r_tilde},
              {"rank_eval", rank_to_json(rep.rank_eval)},
              {"rank_linear", rank_to_json(rep.rank_linear)},
              {"kernels", kernels_to_json(rep.kernels)},
              {"dominant", rep.dominant}};
}

Json stratum_to_json(const Context& ctx, const StratumEntry& e) {
  Json j{{"point", point_json(ctx, e.x)},
         {"r", e.r},
         {"r_tilde", e.r_tilde},
         {"rank_eval", rank_to_json(e.rank_eval)},
         {"rank_linear", rank_to_json(e.rank_linear)},
         {"gram_det", complex_to_json(e.gram_det)},
         {"in_Omega_n", e.in_Omega_n},
         {"in_Omega_tilde_n", e.in_Omega_tilde_n},
         {"in_U", e.in_U}};
  if (e.vh) {
    j["normal_form"] = Json{{"in_V", e.vh->in_V},
                            {"h_block", e.vh->h_block},
                            {"min_leading", e.vh->min_leading},
                            {"normal_coords", cvec_to_json(e.vh->normal_coords)}};
  }
  return j;
}

// ---- commands --------------------------------------------------------------

void cmd_normal_form(const Context& ctx) {
  log_line("normal-form: triangularizing " + std::to_string(ctx.normalized.generators.size()) +
           " generators");
  const std::vector<CMat> jac = generator_jacobians(ctx.normalized);
  const Tolerances& tol = ctx.scenario.tol;
  const BlockStructure bs =
      simultaneous_block_triangularize(jac, tol.eig_rel, tol.comm, tol.pattern_rel);
  const CanonicalVectors canon = canonical_u0(bs);

  Json rep = envelope(ctx, "normal-form");
  Json& res = rep["results"];
  res["eta"] = bs.eta;
  res["block_start"] = bs.block_start;
  res["eigenvalues"] = cmat_to_json(bs.eigenvalues);  // generator x block
  res["P"] = cmat_to_json(bs.P);
  res["max_offpattern_residual"] = bs.max_offpattern_residual;
  res["commutation_defect"] = bs.commutation_defect;
  res["u0_tilde"] = cvec_to_json(canon.u0_tilde);
  res["v0"] = cvec_to_json(canon.v0);
  write_report(artifact(ctx, "normal-form.json"), rep);
}

void cmd_dominance(const Context& ctx) {
  WordRealizer realizer(ctx.normalized);
  Json rep = envelope(ctx, "dominance");
  Json points = Json::array();
  for (const CVec& x : require_base_points(ctx, "dominance")) {
    log_line("dominance: probing a base point at budget " + std::to_string(ctx.budget));
    const DominanceReport d = dominance_report(realizer, x, ctx.budget, ctx.scenario.tol);
    points.push_back(dominance_to_json(d, point_json(ctx, x)));
  }
  rep["results"]["points"] = points;
  write_report(artifact(ctx, "dominance.json"), rep);
}

void cmd_linearize(const Context& ctx) {
  WordRealizer realizer(ctx.normalized);
  Json rep = envelope(ctx, "linearize");
  Json points = Json::array();
  const std::vector<CVec>& bases = require_base_points(ctx, "linearize");
  for (std::size_t i = 0; i < bases.size(); ++i) {
    log_line("linearize: building the orbit isomorphism at base point " + std::to_string(i));
    const SampledOperators ops = build_sampled_operators(realizer, bases[i], ctx.budget);
    const LinearizationMap map = build_phi_x(ops, ctx.scenario.tol);

    Json entry;
    entry["base_point"] = point_json(ctx, bases[i]);
    entry["M"] = cmat_to_json(map.M);
    Json basis = Json::array();
    for (const WordExp& w : map.basis_words) basis.push_back(word_to_json(w));
    entry["basis_words"] = basis;
    entry["basis_residual"] = map.basis_residual;
    entry["well_definedness_residual"] = map.well_definedness_residual;
    entry["max_abs_residual"] = map.max_abs_residual;
    entry["worst_word"] = word_to_json(map.worst_word);
    entry["basis_condition"] = map.basis_condition;
    entry["sigma_min_M"] = map.sigma_min_M;

    const BijectionReport bij = verify_orbit_bijection(map, ops, ctx.scenario.tol.dedup);
    entry["bijection"] = Json{{"max_error", bij.max_error},
                              {"worst_word", word_to_json(bij.worst_word)},
                              {"distinct_points", bij.distinct_points},
                              {"min_source_separation", bij.min_source_separation},
                              {"min_image_separation", bij.min_image_separation},
                              {"injective_on_sample", bij.injective_on_sample}};

    Json pushes = Json::array();
    for (const CVec& y : ctx.probes) {
      const PushforwardReport p = pushforward_orbit_check(map, realizer, y, ctx.budget);
      pushes.push_back(Json{{"y", point_json(ctx, p.y)},
                            {"z", cvec_to_json(p.z)},  // linear model coordinates
                            {"max_error", p.max_error},
                            {"worst_word", word_to_json(p.worst_word)}});
    }
    entry["pushforward"] = pushes;

    if (!ctx.probes.empty()) {
      constexpr double kClosureEps = 1e-6;
      const ClosureCompatReport cc =
          closure_compatibility_check(map, ops, ctx.probes, kClosureEps);
      entry["closure_compatibility"] = Json{{"checked", cc.checked},
                                            {"in_scope", cc.in_scope},
                                            {"out_of_scope", cc.out_of_scope},
                                            {"violations", cc.violations},
                                            {"eps", cc.eps},
                                            {"eps_mapped", cc.eps_mapped},
                                            {"max_mapped_distance", cc.max_mapped_distance}};
    }

    write_triples_csv(artifact(ctx, "linearize_p" + std::to_string(i) + ".csv"), ops.words,
                      ops.eval_matrix, map.M * ops.eval_matrix, linearized_orbit_columns(ops));
    points.push_back(entry);
  }
  rep["results"]["points"] = points;

  if (is_affine(ctx.normalized)) {
    log_line("linearize: running the affine baseline");
    const AffineBaselineReport ab =
        affine_baseline_check(group_from_scenario(ctx.scenario), ctx.budget, ctx.seed);
    rep["results"]["affine_baseline"] = Json{
        {"fixed_point", cvec_to_json(ab.fixed_point)},
        {"max_pointwise_error", ab.max_pointwise_error},
        {"phi_x_identity_error", ab.phi_x_identity_error},
        {"found_dominant_point", ab.found_dominant_point},
        {"pass", ab.pass}};
  }
  write_report(artifact(ctx, "linearize.json"), rep);
}

void cmd_orbit(const Context& ctx) {
  WordRealizer realizer(ctx.normalized);
  const Tolerances& tol = ctx.scenario.tol;
  const BlockStructure bs = simultaneous_block_triangularize(
      generator_jacobians(ctx.normalized), tol.eig_rel, tol.comm, tol.pattern_rel);

  Json rep = envelope(ctx, "orbit");
  Json points = Json::array();
  int r_G = 0;
  const std::vector<CVec>& bases = require_base_points(ctx, "orbit");
  for (std::size_t i = 0; i < bases.size(); ++i) {
    log_line("orbit: sampling base point " + std::to_string(i));
    const OrbitSample sample = sample_orbit(realizer, bases[i], ctx.budget, tol.dedup);
    const fs::path cloud = artifact(ctx, "orbit_p" + std::to_string(i) + ".csv");
    write_cloud_csv(cloud, sample.words, cloud_in_input_coords(ctx, sample.points));

    Json entry;
    entry["base_point"] = point_json(ctx, bases[i]);
    entry["distinct_points"] = static_cast<int>(sample.points.cols());
    entry["cloud_csv"] = cloud.filename().string();
    Json strata = Json::array();
    const StratumEntry own = classify_point(realizer, bases[i], ctx.budget, tol, &bs);
    r_G = std::max(r_G, own.r);
    strata.push_back(stratum_to_json(ctx, own));
    for (const CVec& y : ctx.probes) {
      const StratumEntry e = classify_point(realizer, y, ctx.budget, tol, &bs);
      r_G = std::max(r_G, e.r);
      strata.push_back(stratum_to_json(ctx, e));
    }
    entry["strata"] = strata;
    points.push_back(entry);
  }
  rep["results"]["points"] = points;
  rep["results"]["r_G"] = r_G;  // max sampled rank over base points and probes
  write_report(artifact(ctx, "orbit.json"), rep);
}

void cmd_minimality(const Context& ctx) {
  WordRealizer realizer(ctx.normalized);
  Json rep = envelope(ctx, "minimality");
  Json points = Json::array();
  const std::vector<CVec>& bases = require_base_points(ctx, "minimality");
  for (std::size_t i = 0; i < bases.size(); ++i) {
    log_line("minimality: base point " + std::to_string(i) + " at budget " +
             std::to_string(ctx.budget));
    const Polydisc region = region_at(ctx, bases[i]);
    const MinimalityReport m = relative_minimality_experiment(
        realizer, bases[i], ctx.budget, region, ctx.scenario.tol, ctx.scenario.perturbations,
        ctx.seed, ctx.probes);

    const OrbitSample sample = sample_orbit(realizer, bases[i], ctx.budget, ctx.scenario.tol.dedup);
    const fs::path cloud = artifact(ctx, "minimality_p" + std::to_string(i) + ".csv");
    write_cloud_csv(cloud, sample.words, cloud_in_input_coords(ctx, sample.points));

    points.push_back(Json{{"base_point", point_json(ctx, bases[i])},
                          {"region_center", point_json(ctx, region.center)},
                          {"delta_K", m.delta_K},
                          {"threshold", m.threshold},
                          {"candidates", m.candidates},
                          {"excluded", m.excluded},
                          {"max_distance", m.max_distance},
                          {"worst_candidate", point_json(ctx, m.worst_candidate)},
                          {"pass", m.pass},
                          {"note", m.note},
                          {"cloud_csv", cloud.filename().string()}});
  }
  rep["results"]["points"] = points;
  write_report(artifact(ctx, "minimality.json"), rep);
}

void cmd_density(const Context& ctx) {
  WordRealizer realizer(ctx.normalized);
  Json rep = envelope(ctx, "density");
  Json points = Json::array();
  const std::vector<CVec>& bases = require_base_points(ctx, "density");
  for (std::size_t i = 0; i < bases.size(); ++i) {
    log_line("density: base point " + std::to_string(i) + " up to budget " +
             std::to_string(ctx.budget));
    const Polydisc region = region_at(ctx, bases[i]);
    const DensityReport d =
        density_experiment(realizer, bases[i], ctx.budget, region, ctx.scenario.grid_step);

    const OrbitSample sample = sample_orbit(realizer, bases[i], ctx.budget, ctx.scenario.tol.dedup);
    const fs::path cloud = artifact(ctx, "density_p" + std::to_string(i) + ".csv");
    write_cloud_csv(cloud, sample.words, cloud_in_input_coords(ctx, sample.points));

    points.push_back(Json{{"base_point", point_json(ctx, bases[i])},
                          {"region_center", point_json(ctx, region.center)},
                          {"budgets", d.budgets},
                          {"eps_cover", d.eps_cover},
                          {"grid_points", d.grid_points},
                          {"grid_step", d.grid_step},
                          {"trend", d.trend},
                          {"cloud_csv", cloud.filename().string()}});
  }
  rep["results"]["points"] = points;
  write_report(artifact(ctx, "density.json"), rep);
}

void run_command(const Context& ctx, const std::string& command) {
  if (command == "normal-form") cmd_normal_form(ctx);
  else if (command == "dominance") cmd_dominance(ctx);
  else if (command == "linearize") cmd_linearize(ctx);
  else if (command == "orbit") cmd_orbit(ctx);
  else if (command == "minimality") cmd_minimality(ctx);
  else if (command == "density") cmd_density(ctx);
  else throw SchemaError("unknown command " + command);
}

int guarded(const Options& opt, const std::string& command) {
  try {
    if (opt.jobs >= 1) kernels::set_jobs(opt.jobs);
    const Context ctx = make_context(opt);
    if (command == "run") {
      if (ctx.scenario.commands.empty())
        throw SchemaError("scenario: run needs a nonempty commands list");
      for (const std::string& c : ctx.scenario.commands) run_command(ctx, c);
    } else {
      run_command(ctx, command);
    }
    return 0;
  } catch (const SchemaError& e) {
    std::cerr << "orbita: schema error: " << e.what() << '\n';
    return 1;
  } catch (const NotAbelian& e) {
    std::cerr << "orbita: " << e.what() << '\n';
    return 2;
  } catch (const IllConditionedSpectrum& e) {
    std::cerr << "orbita: " << e.what() << '\n';
    return 3;
  } catch (const NotDominantAtPoint& e) {
    std::cerr << "orbita: " << e.what() << '\n';
    return 4;
  } catch (const IllDefinedLinearization& e) {
    std::cerr << "orbita: " << e.what() << '\n';
    return 4;
  } catch (const InconclusiveExperiment& e) {
    std::cerr << "orbita: " << e.what() << '\n';
    return 5;
  } catch (const Error& e) {
    std::cerr << "orbita: " << e.what() << '\n';
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "orbita: internal error: " << e.what() << '\n';
    return 70;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orbita: dynamics of commuting polynomial automorphism groups at a fixed point"};
  app.require_subcommand(1);

  Options opt;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"normal-form", "simultaneous block-triangular normal form of the linearized group"},
      {"dominance", "evaluation/derivative rank and kernel-consistency verdicts per base point"},
      {"linearize", "build the orbit isomorphism and verify its properties"},
      {"orbit", "orbit sampling and stratum classification"},
      {"minimality", "bounded-budget relative-minimality experiment"},
      {"density", "grid-cover density trend experiment"},
      {"run", "execute the scenario's requested commands in order"},
  };
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--scenario", opt.scenario_path, "scenario JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_dir, "artifact output directory (default: out)");
    sub->add_option("--jobs", opt.jobs, "cap the worker thread count");
    sub->add_option("--budget-override", opt.budget_override, "override the scenario word budget");
    sub->add_option("--seed", opt.seed, "override the scenario seed (probe sampling)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors are schema errors of the invocation
  }

  const std::string command = app.get_subcommands().front()->get_name();
  return guarded(opt, command);
}
