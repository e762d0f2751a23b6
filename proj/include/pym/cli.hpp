/// @file cli.hpp
/// Command-line entry point: JSON experiment configs (versioned schema,
/// unknown keys rejected), six subcommands, deterministic artifact emission.
/// This is the only part of the library with side effects — everything else
/// is pure computation.
///
/// Contract pinned here:
///   * configs merge over built-in defaults; every key is checked against
///     the schema with a field-level message on mismatch;
///   * every artifact embeds the fnv1a64 hash of the effective config and
///     the seed, so a report is traceable to exactly one configuration;
///   * identical effective config + seed reproduce every artifact byte for
///     byte (no timestamps, no paths, no locale dependence);
///   * exit codes: 0 success, 2 invalid config/usage, 3 numerical failure
///     with whatever artifacts were already written left on disk.
#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "pym/experiments.hpp"
#include "pym/inequalities.hpp"
#include "pym/io.hpp"
#include "pym/lorentz.hpp"
#include "pym/neck.hpp"

namespace pym {
namespace cli {

inline constexpr const char* kSchema = "pymlab/1";

// ============================================================
// Config schema
// ============================================================

/// Built-in defaults; doubles as the schema skeleton that user configs are
/// validated against (unknown keys and kind mismatches are rejected).
inline Json default_config() {
  Json j;
  j["schema"] = kSchema;
  j["seed"] = 0;
  j["verify"] = {{"count", 100000},
                 {"lo", 1e-6},
                 {"hi", 1e6},
                 {"p_grid", {2.0, 2.2, 2.5, 2.9}}};
  j["flow"] = {{"domain", {{"kind", "torus"}, {"period", 1.0}, {"n", 6}}},
               {"p", 2.3},
               {"amplitude", 0.4},
               {"max_steps", 200}};
  j["spectrum"] = {{"field", "bubble"}, {"outer", 0.2},   {"spacing", 0.1},
                   {"lambda", 0.45},    {"p", 2.0},       {"eta", 0.25},
                   {"weight", "hat"},   {"delta", 0.03125}, {"form", "qfrak"},
                   {"neigs", 40},       {"tol_zero", 0.0}};
  j["neck"] = {{"p_lo", 2.0},   {"p_hi", 2.1}, {"p_step", 0.01},
               {"eps", 0.0},    {"control", 1.0}, {"r", 0.125},
               {"R", 2.0},      {"rho_samples", 17}};
  j["bubble"] = {{"kmin", 1},
                 {"kmax", 6},
                 {"bound", 1.25},
                 {"schedule_eta", 0.25},
                 {"glue",
                  {{"eta", 1.0},
                   {"core_S", 2.0},
                   {"core_h", 0.25},
                   {"shell_m", 8},
                   {"eps0", 39.478417604357432}}},
                 {"semi",
                  {{"outer", 0.2},
                   {"spacing", 0.1},
                   {"lambda", 0.45},
                   {"eta", 0.25},
                   {"kmin", 1},
                   {"kmax", 4},
                   {"neigs", 40},
                   {"tol_fixed", 0.0},
                   {"adapt_factor", 1.0},
                   {"relax_steps", 25}}}};
  j["lorentz"] = {{"r", 0.3},       {"R", 2.0},        {"spacing", 0.1},
                  {"P", 2.5},       {"neck_p", 2.05},  {"duality_samples", 400},
                  {"neck_ratios", {8, 16, 32, 64}}};
  return j;
}

namespace detail {

inline void check_domain_descriptor(const Json& d, const std::string& where) {
  PYM_REQUIRE(d.is_object(), "config: '" + where + "' must be an object");
  static const std::set<std::string> allowed = {"kind",  "period", "n",
                                                "inner", "outer",  "spacing"};
  for (auto it = d.begin(); it != d.end(); ++it)
    PYM_REQUIRE(allowed.count(it.key()) != 0,
                "config: unknown key '" + where + "." + it.key() + "'");
  PYM_REQUIRE(d.contains("kind") && d.at("kind").is_string(),
              "config: '" + where + ".kind' must name a domain kind");
}

/// Deep-merge user values over the defaults.  Unknown keys and JSON-kind
/// mismatches are rejected with the full key path.  Domain descriptors are
/// replaced wholesale (their key set depends on the kind).
inline void merge_config(Json& base, const Json& user, const std::string& path) {
  PYM_REQUIRE(user.is_object(),
              "config: '" + (path.empty() ? std::string("<root>") : path) +
                  "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string where = path.empty() ? it.key() : path + "." + it.key();
    PYM_REQUIRE(base.contains(it.key()), "config: unknown key '" + where + "'");
    Json& slot = base[it.key()];
    const Json& val = it.value();
    if (it.key() == "domain") {
      check_domain_descriptor(val, where);
      slot = val;
      continue;
    }
    if (slot.is_object()) {
      merge_config(slot, val, where);
      continue;
    }
    const bool ok = (slot.is_number() && val.is_number()) ||
                    (slot.is_string() && val.is_string()) ||
                    (slot.is_boolean() && val.is_boolean()) ||
                    (slot.is_array() && val.is_array());
    PYM_REQUIRE(ok, "config: wrong type for '" + where + "'");
    slot = val;
  }
}

inline double cfg_num(const Json& sec, const char* key, const std::string& path) {
  const Json& v = sec.at(key);
  PYM_REQUIRE(v.is_number(), "config: '" + path + "." + key + "' must be a number");
  return v.get<double>();
}

inline int cfg_int(const Json& sec, const char* key, const std::string& path) {
  const Json& v = sec.at(key);
  PYM_REQUIRE(v.is_number_integer(),
              "config: '" + path + "." + key + "' must be an integer");
  return v.get<int>();
}

inline std::string cfg_str(const Json& sec, const char* key, const std::string& path) {
  const Json& v = sec.at(key);
  PYM_REQUIRE(v.is_string(), "config: '" + path + "." + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace detail

/// Parse a config file (or take the defaults when the path is empty), check
/// the schema tag, and merge over the defaults with full validation.
inline Json load_config(const std::string& path) {
  Json effective = default_config();
  if (path.empty()) return effective;
  Json user;
  try {
    user = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw precondition_error(std::string("config: unparsable JSON: ") + e.what());
  }
  PYM_REQUIRE(user.is_object() && user.contains("schema"),
              "config: missing 'schema' (expected \"" + std::string(kSchema) + "\")");
  PYM_REQUIRE(user.at("schema") == kSchema,
              "config: 'schema' must be \"" + std::string(kSchema) + "\"");
  detail::merge_config(effective, user, "");
  return effective;
}

// ============================================================
// Run context and artifact helpers
// ============================================================

struct Context {
  Json config;  // effective (defaults + file + flag overrides)
  std::string out = ".";
  std::uint64_t seed = 0;
  std::string hash;  // fnv1a64 of the canonical config bytes, 16 hex digits
};

inline Context make_context(Json config, const std::string& out) {
  Context ctx;
  const Json& sd = config.at("seed");
  PYM_REQUIRE(sd.is_number_unsigned() || (sd.is_number_integer() && sd.get<long long>() >= 0),
              "config: 'seed' must be a nonnegative integer");
  ctx.seed = sd.get<std::uint64_t>();
  ctx.hash = hex_u64(fnv1a64(dump_json(config)));
  ctx.config = std::move(config);
  ctx.out = out;
  return ctx;
}

namespace detail {

inline std::string artifact_path(const Context& ctx, const char* name) {
  return (std::filesystem::path(ctx.out) / name).string();
}

inline Json artifact(const Context& ctx, const char* command) {
  Json j;
  j["schema"] = kSchema;
  j["command"] = command;
  j["config_hash"] = ctx.hash;
  j["seed"] = ctx.seed;
  return j;
}

inline void write_artifact(const Context& ctx, const char* name, const Json& j) {
  write_text_file(artifact_path(ctx, name), dump_json(j));
}

/// CSV with a header row; every data row is prefixed by config hash and seed.
struct Csv {
  std::string text;
  std::size_t width = 0;

  Csv(const Context& ctx, std::vector<std::string> columns) : hash_(ctx.hash),
        seed_(std::to_string(ctx.seed)) {
    columns.insert(columns.begin(), {"config_hash", "seed"});
    width = columns.size();
    text += csv_line(columns);
  }
  void row(std::vector<std::string> fields) {
    fields.insert(fields.begin(), {hash_, seed_});
    PYM_REQUIRE(fields.size() == width, "Csv: column count mismatch");
    text += csv_line(fields);
  }

 private:
  std::string hash_, seed_;
};

}  // namespace detail

// ============================================================
// Report serializers
// ============================================================

inline Json json_of(const CheckReport& r) {
  return Json{{"name", r.name},
              {"samples", r.samples},
              {"worst_margin", r.worst_margin},
              {"pass", r.pass},
              {"witness", r.witness}};
}

inline Json json_of(const SpectralReport& r) {
  Json j;
  j["eigenvalues"] = r.eigenvalues;
  j["index"] = r.index;
  j["nullity"] = r.nullity;
  j["extended_index"] = r.extended_index;
  j["tol_zero"] = r.tol_zero;
  j["solver"] = {{"dense", r.dense}, {"ndof", r.ndof}, {"residual", r.residual}};
  if (r.index_tol_up || r.nullity_tol_up || r.index_tol_down || r.nullity_tol_down)
    j["tol_sweep"] = {{"index_tol_up", r.index_tol_up},
                      {"nullity_tol_up", r.nullity_tol_up},
                      {"index_tol_down", r.index_tol_down},
                      {"nullity_tol_down", r.nullity_tol_down}};
  return j;
}

inline Json json_of(const KernelCounts& c) {
  return Json{{"tol", c.tol},
              {"index", c.index},
              {"nullity", c.nullity},
              {"extended", c.extended},
              {"saturated", c.saturated}};
}

inline Json json_of(const SemicontinuityProblem& p) {
  return Json{{"p", p.p},
              {"rel_residual", p.rel_residual},
              {"lowest", p.lowest},
              {"fixed", json_of(p.fixed)},
              {"adaptive", json_of(p.adaptive)}};
}

inline Json json_of(const SemicontinuityTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows)
    rows.push_back(Json{{"k", r.k},
                        {"delta", r.delta},
                        {"product", r.product},
                        {"problem", json_of(r.prob)},
                        {"lower_fixed", r.lower_fixed},
                        {"upper_fixed", r.upper_fixed},
                        {"lower_adaptive", r.lower_adaptive},
                        {"upper_adaptive", r.upper_adaptive}});
  return Json{{"background", json_of(t.background)},
              {"bubble", json_of(t.bubble)},
              {"rows", rows},
              {"admissible", t.admissible},
              {"lower_all_fixed", t.lower_all_fixed},
              {"upper_all_fixed", t.upper_all_fixed},
              {"lower_all_adaptive", t.lower_all_adaptive},
              {"upper_all_adaptive", t.upper_all_adaptive}};
}

// ============================================================
// Subcommands
// ============================================================

inline void run_verify(const Context& ctx) {
  const Json& sec = ctx.config.at("verify");
  FuzzConfig fc;
  fc.count = std::size_t(detail::cfg_int(sec, "count", "verify"));
  fc.lo = detail::cfg_num(sec, "lo", "verify");
  fc.hi = detail::cfg_num(sec, "hi", "verify");
  fc.seed = ctx.seed;
  fc.p_grid.clear();
  for (const Json& v : sec.at("p_grid")) {
    PYM_REQUIRE(v.is_number(), "config: 'verify.p_grid' must hold numbers");
    fc.p_grid.push_back(v.get<double>());
  }

  const std::vector<CheckReport> reports = run_inequality_battery(fc);
  Json j = detail::artifact(ctx, "verify");
  Json checks = Json::array();
  bool all = true;
  for (const CheckReport& r : reports) {
    checks.push_back(json_of(r));
    all = all && r.pass;
  }
  j["checks"] = checks;
  j["all_pass"] = all;
  detail::write_artifact(ctx, "verify_scorecard.json", j);
}

inline void run_flow(const Context& ctx) {
  const Json& sec = ctx.config.at("flow");
  const auto dom = domain_from_descriptor(sec.at("domain"));
  FlowOptions fo;
  fo.p = detail::cfg_num(sec, "p", "flow");
  fo.max_steps = detail::cfg_int(sec, "max_steps", "flow");
  const double amplitude = detail::cfg_num(sec, "amplitude", "flow");
  PYM_REQUIRE(fo.max_steps >= 1, "config: 'flow.max_steps' must be at least 1");
  PYM_REQUIRE(amplitude >= 0.0, "config: 'flow.amplitude' must be nonnegative");

  const LieAlgebra g = LieAlgebra::su2();
  LatticeForm A0(*dom, 1, g.dim);
  Rng rng(ctx.seed);
  for (double& v : A0.data) v = amplitude * rng.normal();

  const FlowResult fr = flow(g, A0, fo);

  detail::Csv log(ctx, {"step", "energy", "residual_l2", "step_size"});
  for (const FlowStepLog& s : fr.log)
    log.row({format_num(s.step), format_num(s.energy), format_num(s.residual_l2),
             format_num(s.step_size)});
  write_text_file(detail::artifact_path(ctx, "flow_log.csv"), log.text);

  Json j = detail::artifact(ctx, "flow");
  j["domain"] = sec.at("domain");
  j["p"] = fo.p;
  j["status"] = to_string(fr.status);
  j["steps"] = fr.log.size();
  j["initial_energy"] = fr.log.empty() ? 0.0 : fr.log.front().energy;
  j["final_energy"] = fr.final_energy;
  j["final_residual"] = fr.final_residual;
  detail::write_artifact(ctx, "flow_summary.json", j);
  write_snapshot(fr.A, detail::artifact_path(ctx, "flow_field.pymf"));

  if (fr.status == FlowStatus::Diverged)
    throw numerical_error("flow: descent stalled (no admissible step)");
}

inline void run_spectrum(const Context& ctx) {
  const Json& sec = ctx.config.at("spectrum");
  const double outer = detail::cfg_num(sec, "outer", "spectrum");
  const double spacing = detail::cfg_num(sec, "spacing", "spectrum");
  const double lambda = detail::cfg_num(sec, "lambda", "spectrum");
  const double p = detail::cfg_num(sec, "p", "spectrum");
  const double eta = detail::cfg_num(sec, "eta", "spectrum");
  const double delta = detail::cfg_num(sec, "delta", "spectrum");
  const int neigs = detail::cfg_int(sec, "neigs", "spectrum");
  const double tol_zero = detail::cfg_num(sec, "tol_zero", "spectrum");
  const std::string field = detail::cfg_str(sec, "field", "spectrum");
  const std::string weight = detail::cfg_str(sec, "weight", "spectrum");
  const std::string form = detail::cfg_str(sec, "form", "spectrum");
  PYM_REQUIRE(neigs >= 1, "config: 'spectrum.neigs' must be at least 1");
  PYM_REQUIRE(eta > 0.0, "config: 'spectrum.eta' must be positive");

  const Domain dom = Domain::ball(outer, spacing);
  const LieAlgebra g = LieAlgebra::su2();
  LatticeForm A(dom, 1, g.dim);
  if (field == "bubble") {
    A = sample_bubble(dom, BubbleProfile{lambda, Eigen::Vector4d::Zero()});
  } else {
    PYM_REQUIRE(field == "flat",
                "config: 'spectrum.field' must be \"flat\" or \"bubble\"");
  }

  WeightField w;
  if (weight == "uniform") {
    w = WeightField::uniform(dom, weight_eta_inf(eta));
  } else if (weight == "two_scale") {
    w = two_scale_weight(dom, eta, delta, Eigen::Vector4d::Zero());
  } else if (weight == "hat") {
    w = WeightField::sample(dom, [&](const Eigen::Vector4d& x) {
      return weight_hat_eta_inf(eta, x.norm() / lambda);
    });
  } else {
    throw precondition_error(
        "config: 'spectrum.weight' must be \"uniform\", \"two_scale\" or \"hat\"");
  }

  StabilityForm sf;
  if (form == "q") sf = StabilityForm::Q;
  else if (form == "qfrak") sf = StabilityForm::Qfrak;
  else if (form == "qcal") sf = StabilityForm::Qcal;
  else
    throw precondition_error(
        "config: 'spectrum.form' must be \"q\", \"qfrak\" or \"qcal\"");

  const StabilityProblem pb = assemble(g, A, p, w, sf);
  const SpectralReport rep = solve(pb, neigs, tol_zero);

  Json j = detail::artifact(ctx, "spectrum");
  j["field"] = field;
  j["weight"] = weight;
  j["form"] = form;
  j["p"] = p;
  j["report"] = json_of(rep);
  detail::write_artifact(ctx, "spectral_report.json", j);
}

inline void run_neck(const Context& ctx) {
  const Json& sec = ctx.config.at("neck");
  const double p_lo = detail::cfg_num(sec, "p_lo", "neck");
  const double p_hi = detail::cfg_num(sec, "p_hi", "neck");
  const double p_step = detail::cfg_num(sec, "p_step", "neck");
  const double eps = detail::cfg_num(sec, "eps", "neck");
  const double control = detail::cfg_num(sec, "control", "neck");
  const double r = detail::cfg_num(sec, "r", "neck");
  const double R = detail::cfg_num(sec, "R", "neck");
  const int rho_samples = detail::cfg_int(sec, "rho_samples", "neck");
  PYM_REQUIRE(p_step > 0.0, "config: 'neck.p_step' must be positive");
  PYM_REQUIRE(p_lo >= 2.0 && p_hi >= p_lo && p_hi < 3.0,
              "config: 'neck' grid needs 2 <= p_lo <= p_hi < 3");
  PYM_REQUIRE(eps >= 0.0, "config: 'neck.eps' must be nonnegative");
  PYM_REQUIRE(r > 0.0 && r < R, "config: 'neck' needs 0 < r < R");
  PYM_REQUIRE(rho_samples >= 2, "config: 'neck.rho_samples' must be at least 2");

  const int npts = int(std::floor((p_hi - p_lo) / p_step + 1e-9)) + 1;
  std::vector<double> grid(static_cast<std::size_t>(npts));
  for (int i = 0; i < npts; ++i) grid[std::size_t(i)] = p_lo + i * p_step;

  // Validate the whole grid before emitting anything, so an inadmissible
  // (eps, p) pair fails as a config error with nothing half-written.
  std::vector<NeckConstants> consts;
  for (const double p : grid) {
    try {
      consts.push_back(neck_constants(p, eps, control));
    } catch (const precondition_error& e) {
      throw precondition_error("config: 'neck' grid point p=" + format_num(p) +
                               ", eps=" + format_num(eps) + ": " + e.what());
    }
  }

  detail::Csv table(ctx, {"p", "eps", "r", "R", "name", "value"});
  const auto put = [&](double p, const char* name, double value) {
    table.row({format_num(p), format_num(eps), format_num(r), format_num(R), name,
               format_num(value)});
  };
  for (const NeckConstants& c : consts) {
    put(c.p, "mu", c.mu);
    put(c.p, "gamma", c.gamma);
    put(c.p, "kappa_gamma", c.kappa_gamma);
    put(c.p, "delta_minus", c.delta_minus);
    put(c.p, "delta_plus", c.delta_plus);
    put(c.p, "sigma_minus", c.sigma_minus);
    put(c.p, "sigma_plus", c.sigma_plus);
    put(c.p, "eps_p", c.eps_p);
  }
  write_text_file(detail::artifact_path(ctx, "neck_constants.csv"), table.text);

  detail::Csv weights(ctx, {"p", "eps", "r", "R", "rho", "name", "value"});
  for (const double p : grid) {
    for (int jx = 0; jx < rho_samples; ++jx) {
      const double t = double(jx) / double(rho_samples - 1);
      const double rho = std::min(R, r * std::pow(R / r, t));
      weights.row({format_num(p), format_num(eps), format_num(r), format_num(R),
                   format_num(rho), "omega",
                   format_num(weight_omega(p, R, r, rho, control))});
      weights.row({format_num(p), format_num(eps), format_num(r), format_num(R),
                   format_num(rho), "omega2",
                   format_num(weight_omega2(R, r, rho))});
    }
  }
  write_text_file(detail::artifact_path(ctx, "neck_weights.csv"), weights.text);
}

namespace detail {

inline void semi_rows(Csv& csv, const char* family, const SemicontinuityTable& t) {
  const auto counts = [](const KernelCounts& c) {
    return std::vector<std::string>{format_num(c.tol), format_num(c.index),
                                    format_num(c.nullity), format_num(c.extended),
                                    c.saturated ? "1" : "0"};
  };
  const auto prob_row = [&](const std::string& member, const std::string& k,
                            const std::string& delta, const SemicontinuityProblem& p,
                            const std::vector<std::string>& verdicts) {
    std::vector<std::string> f{family, member, k, delta, format_num(p.p),
                               format_num(p.rel_residual), format_num(p.lowest)};
    for (const auto& part : {counts(p.fixed), counts(p.adaptive)})
      f.insert(f.end(), part.begin(), part.end());
    f.insert(f.end(), verdicts.begin(), verdicts.end());
    csv.row(f);
  };
  const std::vector<std::string> blank{"", "", "", ""};
  prob_row("background", "", "", t.background, blank);
  prob_row("bubble", "", "", t.bubble, blank);
  for (const auto& r : t.rows)
    prob_row("member", format_num(r.k), format_num(r.delta), r.prob,
             {r.lower_fixed ? "1" : "0", r.upper_fixed ? "1" : "0",
              r.lower_adaptive ? "1" : "0", r.upper_adaptive ? "1" : "0"});
}

}  // namespace detail

inline void run_bubble(const Context& ctx) {
  const Json& sec = ctx.config.at("bubble");
  const int kmin = detail::cfg_int(sec, "kmin", "bubble");
  const int kmax = detail::cfg_int(sec, "kmax", "bubble");
  const double bound = detail::cfg_num(sec, "bound", "bubble");
  const Json& glue = sec.at("glue");
  GluedEnergyParams gp;
  gp.eta = detail::cfg_num(glue, "eta", "bubble.glue");
  gp.core_S = detail::cfg_num(glue, "core_S", "bubble.glue");
  gp.core_h = detail::cfg_num(glue, "core_h", "bubble.glue");
  gp.shell_m = detail::cfg_int(glue, "shell_m", "bubble.glue");
  gp.eps0 = detail::cfg_num(glue, "eps0", "bubble.glue");
  const Json& semi = sec.at("semi");
  SemicontinuityParams sp;
  sp.outer = detail::cfg_num(semi, "outer", "bubble.semi");
  sp.spacing = detail::cfg_num(semi, "spacing", "bubble.semi");
  sp.lambda = detail::cfg_num(semi, "lambda", "bubble.semi");
  sp.eta = detail::cfg_num(semi, "eta", "bubble.semi");
  sp.kmin = detail::cfg_int(semi, "kmin", "bubble.semi");
  sp.kmax = detail::cfg_int(semi, "kmax", "bubble.semi");
  sp.neigs = detail::cfg_int(semi, "neigs", "bubble.semi");
  sp.tol_fixed = detail::cfg_num(semi, "tol_fixed", "bubble.semi");
  sp.adapt_factor = detail::cfg_num(semi, "adapt_factor", "bubble.semi");
  sp.relax_steps = detail::cfg_int(semi, "relax_steps", "bubble.semi");
  sp.bound = bound;
  PYM_REQUIRE(kmin >= 1 && kmax >= kmin, "config: 'bubble' needs 1 <= kmin <= kmax");
  PYM_REQUIRE(std::pow(2.0, -kmin) * gp.core_S <= gp.eta + 1e-12,
              "config: 'bubble.kmin': member scale 2^-kmin must satisfy "
              "2^-kmin * glue.core_S <= glue.eta");

  const LieAlgebra g = LieAlgebra::su2();

  const FamilyResult fam = energy_identity_check(g, kmin, kmax, gp, 1);
  detail::Csv fcsv(ctx, {"k", "lambda", "p", "background", "bubble_energy", "total",
                         "defect", "scale_detected"});
  for (const FamilyMember& m : fam.members) {
    double bub = 0;
    for (const double e : m.bubble_parts) bub += e;
    fcsv.row({format_num(m.k), format_num(m.lambda), format_num(m.p),
              format_num(m.background_energy), format_num(bub), format_num(m.total),
              format_num(m.defect), format_num(m.scale_detected)});
  }
  write_text_file(detail::artifact_path(ctx, "bubble_family.csv"), fcsv.text);

  // The exponent schedule probes concentration scales delta_k = 2^{-k} eta^2;
  // those are much smaller than the glueing scale, so the schedule carries its
  // own eta.  With the glue eta the k = 1 scales would be too coarse for the
  // detected-scale product to stay under the bound.
  GluedEnergyParams sg = gp;
  sg.eta = detail::cfg_num(sec, "schedule_eta", "bubble");
  const ScheduleReport sched = p_schedule_check(g, kmin, kmax, bound, sg, 1.0);
  detail::Csv scsv(ctx, {"k", "delta", "p", "delta_detected", "product_prescribed",
                         "product_detected", "holder_lhs", "holder_rhs"});
  for (const ScheduleRow& row : sched.rows)
    scsv.row({format_num(row.k), format_num(row.delta), format_num(row.p),
              format_num(row.delta_detected), format_num(row.product_prescribed),
              format_num(row.product_detected), format_num(row.holder_lhs),
              format_num(row.holder_rhs)});
  write_text_file(detail::artifact_path(ctx, "bubble_schedule.csv"), scsv.text);

  sp.relax = false;
  const SemicontinuityTable plain = index_semicontinuity_experiment(g, sp);
  sp.relax = true;
  const SemicontinuityTable relaxed = index_semicontinuity_experiment(g, sp);

  detail::Csv mcsv(
      ctx, {"family",        "member",        "k",
            "delta",         "p",             "rel_residual",
            "lowest",        "tol_fixed",     "index_fixed",
            "nullity_fixed", "extended_fixed", "saturated_fixed",
            "tol_adaptive",  "index_adaptive", "nullity_adaptive",
            "extended_adaptive", "saturated_adaptive", "lower_fixed",
            "upper_fixed",   "lower_adaptive", "upper_adaptive"});
  detail::semi_rows(mcsv, "default", plain);
  detail::semi_rows(mcsv, "relaxed", relaxed);
  write_text_file(detail::artifact_path(ctx, "bubble_semicontinuity.csv"), mcsv.text);

  Json j = detail::artifact(ctx, "bubble");
  Json members = Json::array();
  for (const FamilyMember& m : fam.members)
    members.push_back(Json{{"k", m.k},
                           {"lambda", m.lambda},
                           {"total", m.total},
                           {"defect", m.defect},
                           {"scale_detected", m.scale_detected}});
  j["family"] = {{"members", members},
                 {"defects_strictly_decreasing", fam.defects_strictly_decreasing},
                 {"final_defect_rel", fam.final_defect_rel},
                 {"scales_within_factor_two", fam.scales_within_factor_two}};
  Json srows = Json::array();
  for (const ScheduleRow& row : sched.rows)
    srows.push_back(Json{{"k", row.k},
                         {"delta", row.delta},
                         {"p", row.p},
                         {"product_prescribed", row.product_prescribed},
                         {"product_detected", row.product_detected}});
  j["schedule"] = {{"rows", srows},
                   {"bound", sched.bound},
                   {"products_bounded", sched.products_bounded},
                   {"holder_all_ok", sched.holder_all_ok}};
  j["semicontinuity"] = {{"default", json_of(plain)}, {"relaxed", json_of(relaxed)}};
  detail::write_artifact(ctx, "bubble_summary.json", j);
}

inline void run_lorentz(const Context& ctx) {
  const Json& sec = ctx.config.at("lorentz");
  const double r = detail::cfg_num(sec, "r", "lorentz");
  const double R = detail::cfg_num(sec, "R", "lorentz");
  const double spacing = detail::cfg_num(sec, "spacing", "lorentz");
  const double P = detail::cfg_num(sec, "P", "lorentz");
  const double neck_p = detail::cfg_num(sec, "neck_p", "lorentz");
  const int nsamp = detail::cfg_int(sec, "duality_samples", "lorentz");
  PYM_REQUIRE(r > 0.0 && r < R, "config: 'lorentz' needs 0 < r < R");
  PYM_REQUIRE(spacing > 0.0, "config: 'lorentz.spacing' must be positive");
  PYM_REQUIRE(P > 1.0, "config: 'lorentz.P' must exceed 1");
  PYM_REQUIRE(nsamp >= 2, "config: 'lorentz.duality_samples' must be at least 2");
  std::vector<int> ratios;
  for (const Json& v : sec.at("neck_ratios")) {
    PYM_REQUIRE(v.is_number_integer() && v.get<int>() >= 8,
                "config: 'lorentz.neck_ratios' must hold integers >= 8");
    ratios.push_back(v.get<int>());
  }

  const auto window = [&](double scale, const std::function<double(double)>& fn) {
    const Domain d = Domain::annulus(r * scale, R * scale, spacing * scale);
    SampledFunction f;
    const double cell = std::pow(d.h, 4);
    for (std::size_t s = 0; s < d.nsites; ++s)
      if (d.site_in_domain(s)) f.add(fn(d.coord(s).norm()), cell);
    return f;
  };
  const auto inv1 = [](double rho) { return 1.0 / rho; };
  const auto inv2 = [](double rho) { return 1.0 / (rho * rho); };

  Json j = detail::artifact(ctx, "lorentz");

  // L^{P,P} against the direct Lebesgue sum on the same samples.
  const SampledFunction base = window(1.0, inv1);
  double lp = 0;
  for (std::size_t i = 0; i < base.values.size(); ++i)
    lp += std::pow(std::abs(base.values[i]), P) * base.measures[i];
  lp = std::pow(lp, 1.0 / P);
  const double lpp = lorentz_norm(base, P, P);
  j["diagonal"] = {{"P", P},
                   {"lorentz", lpp},
                   {"lebesgue", lp},
                   {"rel_err", std::abs(lpp - lp) / lp}};

  // Scale invariance of ||rho^-1||_{L^{4,2}} across three window scales.
  Json inv1_scales = Json::array();
  double lo42 = std::numeric_limits<double>::infinity(), hi42 = 0;
  for (const double s : {1.0, 2.0, 4.0}) {
    const double n42 = lorentz_norm(window(s, inv1), 4.0, 2.0);
    inv1_scales.push_back(Json{{"scale", s}, {"norm", n42}});
    lo42 = std::min(lo42, n42);
    hi42 = std::max(hi42, n42);
  }
  j["inv1_l42"] = {{"scales", inv1_scales}, {"rel_spread", (hi42 - lo42) / lo42}};

  // ||rho^-2||_{L^{2,infty}} against the closed-form sqrt(pi^2/2).
  const double l2w =
      lorentz_norm(window(1.0, inv2), 2.0, std::numeric_limits<double>::infinity());
  const double analytic = 2.2214414690791831;  // sqrt(pi^2/2)
  j["inv2_l2w"] = {{"norm", l2w},
                   {"analytic", analytic},
                   {"rel_err", std::abs(l2w - analytic) / analytic}};

  // Duality pairing on seeded random samples: ratio must stay <= 1.
  Rng rng(ctx.seed);
  SampledFunction f, h;
  for (int i = 0; i < nsamp; ++i) {
    const double m = rng.uniform(0.5, 2.0) * 1e-3;
    f.add(rng.uniform(-3.0, 3.0), m);
    h.add(rng.uniform(-3.0, 3.0), m);
  }
  const DualityCheck dc = duality_pairing_check(f, h);
  j["duality"] = {{"pairing", dc.pairing},
                  {"bound_product", dc.bound_product},
                  {"ratio", dc.ratio}};

  // Quantization signature on the model neck profile: ratios to the dyadic
  // sup must stay bounded as the neck lengthens (no logarithmic growth).
  Json sweep = Json::array();
  for (const int ratio : ratios) {
    const double rr = R / double(ratio);
    const NeckQuantizationReport q = neck_quantization_radial(
        [&](double rho) { return weight_omega(neck_p, R, rr, rho); }, rr, R);
    sweep.push_back(Json{{"ratio", ratio},
                         {"r", rr},
                         {"dyadic_sup", q.dyadic_sup},
                         {"ratio_l2w", q.ratio_l2w},
                         {"ratio_l2", q.ratio_l2},
                         {"ratio_l21", q.ratio_l21}});
  }
  j["neck_sweep"] = sweep;
  detail::write_artifact(ctx, "lorentz_diagnostics.json", j);
}

// ============================================================
// Entry point
// ============================================================

namespace detail {

inline std::pair<int, int> parse_k_range(const std::string& s) {
  const std::size_t dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const int k = std::stoi(s);
      return {k, k};
    }
    return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
  } catch (const std::exception&) {
    throw precondition_error("--k: expected K or KMIN..KMAX, got '" + s + "'");
  }
}

inline void parse_p_grid(const std::string& s, Json& neck) {
  double lo = 0, hi = 0, step = 0;
  char c1 = 0, c2 = 0;
  std::istringstream is(s);
  if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' ||
      !(is >> std::ws).eof())
    throw precondition_error("--p-grid: expected LO:HI:STEP, got '" + s + "'");
  neck["p_lo"] = lo;
  neck["p_hi"] = hi;
  neck["p_step"] = step;
}

inline int validated_workers() {
  const char* env = std::getenv("PYMLAB_WORKERS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  PYM_REQUIRE(end != env && *end == '\0' && v >= 1,
              "PYMLAB_WORKERS: expected a positive integer");
  return int(v);
}

}  // namespace detail

/// Dispatch a full command line (without argv[0]).  Returns the process exit
/// code; artifacts land in the --out directory (created if missing).
inline int run_cli(std::vector<std::string> args) {
  CLI::App app{"lattice laboratory for curvature energies on flat 4-D domains"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".";
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = app.add_option("--seed", seed, "seed override");
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir, "output directory");

  CLI::App* verify = app.add_subcommand("verify", "inequality battery scorecard");
  int count = -1;
  verify->add_option("--count", count, "fuzz samples per check");

  CLI::App* flow_cmd = app.add_subcommand("flow", "descent log from a random start");
  double flow_p = -1;
  flow_cmd->add_option("--p", flow_p, "exponent");

  CLI::App* spectrum = app.add_subcommand("spectrum", "stability-form spectrum");
  double spec_p = -1;
  spectrum->add_option("--p", spec_p, "exponent");

  CLI::App* neck = app.add_subcommand("neck", "constant sweeps and weight tables");
  std::string p_grid;
  double eps = -1;
  neck->add_option("--p-grid", p_grid, "exponent grid LO:HI:STEP");
  neck->add_option("--eps", eps, "subcriticality parameter");

  CLI::App* bubble = app.add_subcommand("bubble", "concentrating-family bookkeeping");
  std::string k_range;
  bubble->add_option("--k", k_range, "member range K or KMIN..KMAX");

  app.add_subcommand("lorentz", "rearrangement-norm diagnostics");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    detail::validated_workers();  // sweeps merge in sorted order regardless
    Json cfg = load_config(config_path);
    if (seed_opt->count() > 0) cfg["seed"] = seed;
    if (count >= 0) cfg["verify"]["count"] = count;
    if (flow_p > 0) cfg["flow"]["p"] = flow_p;
    if (spec_p > 0) cfg["spectrum"]["p"] = spec_p;
    if (!p_grid.empty()) detail::parse_p_grid(p_grid, cfg["neck"]);
    if (eps >= 0) cfg["neck"]["eps"] = eps;
    if (!k_range.empty()) {
      const auto [klo, khi] = detail::parse_k_range(k_range);
      cfg["bubble"]["kmin"] = klo;
      cfg["bubble"]["kmax"] = khi;
    }

    std::filesystem::create_directories(out_dir);
    const Context ctx = make_context(std::move(cfg), out_dir);

    if (verify->parsed()) run_verify(ctx);
    else if (flow_cmd->parsed()) run_flow(ctx);
    else if (spectrum->parsed()) run_spectrum(ctx);
    else if (neck->parsed()) run_neck(ctx);
    else if (bubble->parsed()) run_bubble(ctx);
    else run_lorentz(ctx);
    return 0;
  } catch (const precondition_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace cli
}  // namespace pym
