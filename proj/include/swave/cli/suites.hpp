#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "swave/cli/config.hpp"
#include "swave/cli/output.hpp"
#include "swave/density/density.hpp"
#include "swave/integrals/norms.hpp"
#include "swave/kernels/conditions.hpp"
#include "swave/malliavin/checks.hpp"

namespace swave::cli {

inline constexpr const char* kArtifactVersion = "0.1.0";

inline std::string config_digest(const RunConfig& c) {
  return sha256_hex(canonical_json(c).dump());
}

// One row per assertion of a suite.
class CheckLog {
 public:
  void check(const std::string& name, bool ok, const std::string& detail = {}) {
    rows_.push_back({name, ok ? "pass" : "fail", detail});
  }
  void skip(const std::string& name, const std::string& why) {
    rows_.push_back({name, "skip", why});
  }
  bool passed() const {
    for (const auto& r : rows_)
      if (r.status == "fail") return false;
    return true;
  }
  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.status == "fail";
    return n;
  }
  CsvTable table(const std::string& digest) const {
    CsvTable t(digest, {"check", "status", "detail"});
    for (const auto& r : rows_) {
      std::string d = r.detail;
      for (char& ch : d)
        if (ch == ',' || ch == '\n') ch = ';';
      t.row({r.name, r.status, d});
    }
    return t;
  }

 private:
  struct Row {
    std::string name, status, detail;
  };
  std::vector<Row> rows_;
};

// Discretization shared by the pipelines of one run.
struct Setup {
  TorusGrid grid;
  DiscreteSpectralMeasure measure;
  TimeGrid time;
  SolverConfig solver;
  Coefficients co;
  Target target;
  ReplicaPlan plan;
  ConsBasis basis;

  explicit Setup(const RunConfig& c)
      : grid(build_grid(c.dim, c.period, c.cutoff)),
        measure(discretize_measure(c.measure_spec(), grid)),
        time(static_cast<std::size_t>(c.steps), c.horizon),
        solver(make_solver_config(measure, time, c.solver_mollifier())),
        co(c.coefficients()),
        target{c.target_step(), static_cast<std::size_t>(c.target_point)},
        plan{static_cast<std::uint64_t>(c.seed), static_cast<std::size_t>(c.replicas),
             static_cast<unsigned>(c.workers)},
        basis(measure) {
    solver.shifted_all_terms = c.shifted_all_terms;
  }

  // Constant sigma (the configured one when constant, else 1) with zero
  // drift: the Gaussian regime.
  Coefficients linear() const {
    Coefficients l;
    l.sigma = co.sigma.is_constant() ? co.sigma : Coefficient::constant(1.0);
    l.drift = Coefficient::zero();
    return l;
  }
  // Constant sigma with the configured drift.
  Coefficients additive() const {
    Coefficients a = co;
    if (!a.sigma.is_constant()) a.sigma = Coefficient::constant(1.0);
    return a;
  }
  std::vector<Mollifier> schedule(const RunConfig& c) const {
    std::vector<Mollifier> out;
    for (double n : c.schedule)
      out.emplace_back(mollifier_kind_from(c.schedule_family), static_cast<int>(n));
    return out;
  }
};

namespace detail {

inline std::string rel(double a, double b) {
  return "value=" + fmt(a) + " reference=" + fmt(b);
}

inline std::string pm(double v, double se) { return fmt(v) + " +- " + fmt(se); }

inline double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

inline nlohmann::json to_json(const ConditionReport& r) {
  nlohmann::json j;
  j["condition"] = to_string(r.condition);
  j["levels"] = nlohmann::json::array();
  for (const auto& l : r.levels) j["levels"].push_back({{"radius", l.radius}, {"value", l.value}});
  j["verdict"] = to_string(r.verdict);
  j["constants"] = nlohmann::json::object();
  for (const auto& [k, v] : r.constants) j["constants"][k] = v;
  j["eta_radii"] = r.eta_radii;
  return j;
}

inline nlohmann::json to_json(const SupMoment& s) {
  return {{"value", s.value}, {"se", s.se}, {"step", s.step}, {"point", s.point}};
}

inline nlohmann::json to_json(const StationarityReport& r) {
  return {{"replicas", r.replicas},       {"tests", r.tests},
          {"critical_z", r.critical_z},   {"worst_z", r.worst_z},
          {"worst_point", r.worst_point}, {"worst_shift", r.worst_shift},
          {"passed", r.passed}};
}

// Z_j = cos(a S_j) + b with S_j the noise accumulated before step j.
inline CausalEvaluator cosine_of_past(double a, double b) {
  auto state = std::make_shared<std::vector<double>>();
  return [=](std::size_t j, const PastNoise& past) {
    if (j == 0) {
      state->assign(past.grid().size(), 0.0);
    } else {
      auto f = past.field(j - 1);
      for (std::size_t m = 0; m < f.size(); ++m) (*state)[m] += f[m];
    }
    std::vector<double> out(state->size());
    for (std::size_t m = 0; m < out.size(); ++m) out[m] = std::cos(a * (*state)[m]) + b;
    return out;
  };
}

}  // namespace detail

// ------------------------------------------------------------ check-kernel

inline void kernel_suite(const RunConfig& c, RunManifest& man, CheckLog& log,
                         const std::string& prefix) {
  const double T = c.horizon;
  nlohmann::json reports = nlohmann::json::array();

  auto sup_mod = check_condition(Condition::sup_modulus, WaveKernel{}, c.measure_spec(), T, {10.0, 100.0});
  reports.push_back(detail::to_json(sup_mod));
  const double cube = T * T * T / 3.0;
  log.check("sup_modulus_equals_cube_over_three", std::abs(sup_mod.levels.back().value - cube) <= 1e-10,
            detail::rel(sup_mod.levels.back().value, cube));

  for (double beta : c.beta_grid) {
    auto rep = check_condition(Condition::dalang, WaveKernel{},
                               SpectralMeasureSpec::riesz(c.verdict_dim, beta), T,
                               decade_schedule(c.radius_first, c.radius_last));
    reports.push_back(detail::to_json(rep));
    const Verdict want = beta < 2.0 ? Verdict::converged : Verdict::diverging;
    log.check("riesz_verdict_beta_" + fmt(beta), rep.verdict == want,
              "verdict=" + to_string(rep.verdict) + " expected=" + to_string(want));
  }

  // inf over |eta| <= R of the squared kernel at s = 0.4, |xi| = 0.2.
  const double s = 0.4, xi = 0.2;
  std::vector<double> radii;
  for (int k = 0; k <= 60; ++k) radii.push_back(0.05 * k);
  auto inf = inf_eta_demo(s, xi, radii);
  CsvTable inf_csv(man.digest(), {"radius", "inf_sq"});
  bool monotone = true;
  for (std::size_t k = 0; k < inf.size(); ++k) {
    inf_csv.row({fmt(radii[k]), fmt(inf[k])});
    if (k > 0 && inf[k] > inf[k - 1]) monotone = false;
  }
  man.emit_csv(prefix + "inf_eta.csv", inf_csv);
  log.check("inf_eta_reaches_zero", monotone && inf.front() > 0.0 && inf.back() == 0.0,
            "first=" + fmt(inf.front()) + " last=" + fmt(inf.back()));

  std::vector<double> ts, rs = {0.0};
  for (int i = 1; i <= 20; ++i) ts.push_back(T * i / 20.0);
  for (double r = 0.01; r < 200.0; r *= 1.2) rs.push_back(r);
  auto sw = time_averaged_sandwich(T, ts, rs);
  log.check("time_averaged_sandwich_constants", sw.passed,
            "c1=" + fmt(sw.c1) + " c2=" + fmt(sw.c2));
  man.emit_json(prefix + "conditions.json",
                {{"reports", reports},
                 {"sandwich",
                  {{"c1", sw.c1},
                   {"c2", sw.c2},
                   {"pointwise_c1", sw.pointwise_c1},
                   {"pointwise_c2", sw.pointwise_c2},
                   {"passed", sw.passed}}}});
}

// ---------------------------------------------------------------- simulate

inline void simulate_suite(const RunConfig& c, RunManifest& man, CheckLog& log,
                           const std::string& prefix) {
  Setup s(c);
  const std::size_t M = s.grid.size();
  const std::size_t cells = (s.time.steps + 1) * M;
  auto acc = run_replicas(s.plan.replicas, s.plan.workers, FieldMoments(1, cells),
                          [&](std::size_t r, FieldMoments& fm) {
                            auto noise = sample_increments(s.measure, s.time, {s.plan.seed, r});
                            fm.add(0, solve_mild(s.solver, s.co, noise).values);
                          });
  CsvTable csv(man.digest(), {"step", "t", "mean", "second_moment", "second_moment_se",
                              "sup_second_moment", "sup_point"});
  bool finite = true;
  for (std::size_t j = 0; j <= s.time.steps; ++j) {
    const auto& at = acc.at(0, j * M + s.target.point);
    double sup = 0.0;
    std::size_t arg = 0;
    for (std::size_t m = 0; m < M; ++m) {
      double v = acc.at(0, j * M + m).second_moment();
      if (v > sup) {
        sup = v;
        arg = m;
      }
    }
    finite = finite && std::isfinite(sup);
    csv.row({std::to_string(j), fmt(s.time.node(j)), fmt(at.mean()), fmt(at.second_moment()),
             fmt(s.plan.replicas > 1 ? at.second_moment_se() : 0.0), fmt(sup),
             std::to_string(arg)});
  }
  man.emit_csv(prefix + "moments.csv", csv);
  log.check("moments_finite", finite);

  // Replica 0 as a binary field.
  auto u = solve_mild(s.solver, s.co, sample_increments(s.measure, s.time, {s.plan.seed, 0}));
  u.digest = man.digest();
  const auto part = man.root() / (prefix + "field_r0.bin.part");
  std::filesystem::create_directories(part.parent_path());
  write_field(part.string(), u);
  auto bytes = read_bytes(part);
  std::filesystem::remove(part);
  man.emit(prefix + "field_r0.bin", bytes);

  if (s.co.sigma.is_constant() && s.co.drift.is_zero() && s.target.step > 0 &&
      s.plan.replicas > 1) {
    const double oracle = linear_oracle_variance(s.solver, s.co, s.target.step);
    const auto& at = acc.at(0, s.target.step * M + s.target.point);
    log.check("linear_variance_within_3se",
              std::abs(at.second_moment() - oracle) <= 3.0 * at.second_moment_se(),
              "mc=" + detail::pm(at.second_moment(), at.second_moment_se()) +
                  " oracle=" + fmt(oracle));
  } else {
    log.skip("linear_variance_within_3se", "needs constant sigma and zero drift");
  }
}

// --------------------------------------------------------------- malliavin

inline void fd_part(const Setup& s, const RunConfig& c, RunManifest& man, CheckLog& log,
                    const std::string& prefix) {
  auto noise = sample_increments(s.measure, s.time, {s.plan.seed, 0});
  auto h = random_unit_direction(s.basis, s.time, s.plan.seed, 0);
  auto fd = fd_check(s.solver, s.co, noise, s.basis, h, s.target,
                     epsilon_schedule(c.eps_max, c.eps_min, c.eps_per_decade));
  CsvTable csv(man.digest(), {"eps", "error_verbatim", "error_all_terms"});
  for (std::size_t k = 0; k < fd.eps.size(); ++k)
    csv.row({fmt(fd.eps[k]), fmt(fd.verbatim.errors[k]), fmt(fd.all_terms.errors[k])});
  man.emit_csv(prefix + "fd_check.csv", csv);
  auto variant = [](const FdVariant& v) {
    return nlohmann::json{{"slope", v.slope},
                          {"slope_all", v.slope_all},
                          {"max_error", v.max_error},
                          {"exact", v.exact},
                          {"valid", v.valid}};
  };
  man.emit_json(prefix + "fd_check.json", {{"derivative", fd.derivative},
                                         {"eps", fd.eps},
                                         {"verbatim", variant(fd.verbatim)},
                                         {"all_terms", variant(fd.all_terms)},
                                         {"validating", fd.validating()}});
  log.check("fd_check_validates", fd.validating() != "none",
            "validating=" + fd.validating() + " slope_verbatim=" + fmt(fd.verbatim.slope) +
                " slope_all_terms=" + fmt(fd.all_terms.slope));
}

inline void nondegeneracy_part(const Setup& s, const Coefficients& co, const RunConfig& c,
                               RunManifest& man, CheckLog& log, const std::string& prefix) {
  if (s.target.step == 0 || c.deltas.empty()) {
    log.skip("nondegeneracy", "needs t > 0 and a delta schedule");
    return;
  }
  if (s.plan.replicas < 2) {
    log.skip("nondegeneracy", "needs at least 2 replicas");
    return;
  }
  auto rep = nondegeneracy(s.solver, co, s.basis, s.target, c.deltas, s.plan);
  CsvTable csv(man.digest(), {"delta", "window", "J", "Jbar", "remainder_mean", "ratio",
                              "ratio_se", "small_probability", "bound_violations"});
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : rep.levels) {
    csv.row({fmt(l.delta), std::to_string(l.window), fmt(l.j), fmt(l.jbar),
             fmt(l.remainder.mean()), fmt(l.ratio()), fmt(l.ratio_se()), fmt(l.small.mean()),
             std::to_string(l.bound_violations)});
    levels.push_back({{"delta", l.delta},
                      {"window", l.window},
                      {"J", l.j},
                      {"Jbar", l.jbar},
                      {"ratio", l.ratio()},
                      {"ratio_se", l.ratio_se()},
                      {"small_probability", l.small.mean()},
                      {"bound_violations", l.bound_violations}});
  }
  man.emit_csv(prefix + "nondegeneracy.csv", csv);
  const double budget = rep.sigma * rep.sigma * rep.j_total;
  man.emit_json(prefix + "nondegeneracy.json",
                {{"target_step", rep.target.step},
                 {"target_point", rep.target.point},
                 {"sigma", rep.sigma},
                 {"J_total", rep.j_total},
                 {"norm_sq_mean", rep.norm_sq.mean()},
                 {"replicas", rep.replicas},
                 {"levels", levels},
                 {"ratio_bounded", rep.ratio_bounded()},
                 {"probability_vanishes", rep.probability_vanishes()}});
  log.check("nondegeneracy_ratio_bounded", rep.ratio_bounded());
  log.check("small_ball_probability_vanishes", rep.probability_vanishes(),
            "last=" + fmt(rep.levels.back().small.mean()));
  if (co.drift.is_zero()) {
    // Deterministic norm: every replica must match.
    const double worst = std::max(std::abs(rep.norm_sq_min - budget),
                                  std::abs(rep.norm_sq_max - budget));
    log.check("additive_norm_equals_sigma_sq_J", worst <= 1e-10 * budget,
              detail::rel(rep.norm_sq.mean(), budget) + " worst_replica_gap=" + fmt(worst));
  }
}

inline void malliavin_suite(const RunConfig& c, RunManifest& man, CheckLog& log,
                            const std::string& prefix) {
  Setup s(c);
  fd_part(s, c, man, log, prefix);
  if (!s.co.sigma.is_constant()) {
    log.skip("nondegeneracy", "needs a constant sigma");
    return;
  }
  nondegeneracy_part(s, s.co, c, man, log, prefix);
}

// ----------------------------------------------------------------- density

inline void density_suite(const RunConfig& c, RunManifest& man, CheckLog& log,
                          const std::string& prefix) {
  Setup s(c);
  nlohmann::json report{{"kind", "proxies"},
                        {"note",
                         "density existence is not decided numerically; the fields below "
                         "are proxies (Gaussian oracle, atoms, small-ball frequencies)"}};
  auto samples = collect_samples(s.solver, s.co, s.target, s.plan);
  CsvTable sample_csv(man.digest(), {"replica", "value"});
  for (std::size_t r = 0; r < samples.values.size(); ++r)
    sample_csv.row({std::to_string(r), fmt(samples.values[r])});
  man.emit_csv(prefix + "samples.csv", sample_csv);

  const bool gaussian = s.co.sigma.is_constant() && s.co.drift.is_zero() &&
                        s.co.sigma(0.0) != 0.0 && s.target.step > 0 &&
                        samples.values.size() >= 2;
  if (gaussian) {
    auto g = gaussian_oracle_check(samples, s.solver, s.co, s.target.step);
    report["gaussian_oracle"] = {{"oracle_variance", g.oracle_variance},
                                 {"second_moment", g.second_moment},
                                 {"second_moment_se", g.second_moment_se},
                                 {"variance_ok", g.variance_ok},
                                 {"ks_statistic", g.ks.statistic},
                                 {"ks_p_value", g.ks.p_value},
                                 {"passed", g.passed()}};
    log.check("gaussian_oracle", g.passed(),
              "m2=" + detail::pm(g.second_moment, g.second_moment_se) +
                  " oracle=" + fmt(g.oracle_variance) + " ks_p=" + fmt(g.ks.p_value));
  } else {
    log.skip("gaussian_oracle", "needs constant nonzero sigma and zero drift");
  }

  if (samples.values.size() >= 1000) {
    auto curve = kde(samples.values, 0.0, static_cast<std::size_t>(c.kde_points));
    CsvTable kcsv(man.digest(), {"x", "density"});
    for (std::size_t p = 0; p < curve.x.size(); ++p)
      kcsv.row({fmt(curve.x[p]), fmt(curve.density[p])});
    man.emit_csv(prefix + "kde.csv", kcsv);
    report["kde"] = {{"bandwidth", curve.bandwidth},
                     {"raw_mass", curve.raw_mass},
                     {"degenerate", curve.degenerate}};
    if (!curve.degenerate)
      log.check("kde_unit_mass", std::abs(kde_mass(curve) - 1.0) <= 1e-6,
                "mass=" + fmt(kde_mass(curve)));
    else
      log.skip("kde_unit_mass", "all samples equal");
  } else {
    log.skip("kde_unit_mass", "KDE needs at least 1000 samples");
  }

  auto atoms = detect_atoms(samples.values);
  report["atoms"] = {{"samples", atoms.samples}, {"repeats", atoms.repeats}};
  if (s.co.sigma(0.0) != 0.0)
    log.check("no_atoms", atoms.continuous(), std::to_string(atoms.repeats) + " repeats");
  else
    log.skip("no_atoms", "sigma(0) = 0 with zero initial data keeps u at 0");

  if (s.target.step > 0) {
    auto bh = bh_probability(s.solver, s.co, s.basis, s.target, c.thresholds, s.plan);
    CsvTable bcsv(man.digest(), {"n", "probability", "se"});
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t k = 0; k < bh.thresholds.size(); ++k) {
      const auto& p = bh.probability[k];
      const double se = p.count() > 1 ? p.mean_se() : 0.0;
      bcsv.row({fmt(bh.thresholds[k]), fmt(p.mean()), fmt(se)});
      rows.push_back({{"n", bh.thresholds[k]}, {"probability", p.mean()}, {"se", se}});
    }
    man.emit_csv(prefix + "small_ball.csv", bcsv);
    report["small_ball"] = {{"event", "||Du||^2 < 1/n"}, {"levels", rows}};
    log.check("small_ball_non_increasing", bh.non_increasing());
  } else {
    log.skip("small_ball_non_increasing", "needs t > 0");
  }
  man.emit_json(prefix + "density_report.json", report);
}

// ------------------------------------------------------------------ verify

inline void verify_noise(const RunConfig& c, RunManifest&, CheckLog& log, const std::string&) {
  Setup s(c);
  auto a = sample_increments(s.measure, s.time, {s.plan.seed, 3});
  auto b = sample_increments(s.measure, s.time, {s.plan.seed, 3});
  log.check("increments_deterministic", a.beta == b.beta);
  bool hermitian = true;
  for (std::size_t j = 0; j < s.time.steps; ++j) {
    auto row = a.step(j);
    for (std::size_t k = 0; k < s.grid.size(); ++k)
      hermitian = hermitian && row[s.grid.pair(k)] == std::conj(row[k]);
  }
  log.check("increments_hermitian", hermitian);
  struct Sum {
    CompensatedSum v;
    void merge(const Sum& o) { v.add(o.v.value()); }
  };
  auto reduce = [&](unsigned workers) {
    return run_replicas(std::min<std::size_t>(s.plan.replicas, 64), workers, Sum{},
                        [&](std::size_t r, Sum& acc) {
                          auto n = sample_increments(s.measure, s.time, {s.plan.seed, r});
                          for (auto z : n.beta) acc.v.add(z.real());
                        })
        .v.value();
  };
  const double one = reduce(1), many = reduce(4);
  log.check("reduction_independent_of_workers", one == many, fmt(one) + " vs " + fmt(many));
}

inline void verify_integrals(const RunConfig& c, RunManifest& man, CheckLog& log,
                             const std::string& prefix) {
  Setup s(c);
  const Mollifier moll(MollifierKind::gaussian, 2);
  const Target tgt = s.target;
  if (tgt.step == 0) {
    log.skip("integrals", "needs t > 0");
    return;
  }
  double worst = 0.0;
  const std::size_t paths = std::min<std::size_t>(s.plan.replicas, 10);
  for (std::size_t r = 0; r < paths; ++r) {
    auto noise = sample_increments(s.measure, s.time, {s.plan.seed, r});
    const double a = 1.0 + 0.1 * static_cast<double>(r);
    auto z = evaluate_adapted(detail::cosine_of_past(a, 0.3), noise, s.measure);
    const double cd = cd_integral(WaveKernel{}, moll, z, noise, s.measure, tgt);
    auto phi = kernel_integrand(WaveKernel{}, moll, z, s.grid, s.time, tgt);
    const double ito = ito_series_integral(phi, s.basis, noise);
    auto value_of = [&](std::size_t j, std::size_t m, const NoiseIncrements& n) {
      if (&n == &noise) return phi.row(j)[m];
      auto zn = evaluate_adapted(detail::cosine_of_past(a, 0.3), n, s.measure);
      return kernel_integrand(WaveKernel{}, moll, zn, s.grid, s.time, tgt).row(j)[m];
    };
    const double sk = skorohod_lattice_sum(value_of, tgt.step, s.basis, noise);
    worst = std::max({worst, detail::rel_diff(cd, ito), detail::rel_diff(cd, sk)});
  }
  log.check("cd_ito_skorohod_agree", worst <= 1e-10, "worst relative difference " + fmt(worst));

  // Isometry for Z = 1 and Z = sigma(u).
  auto tables = NormTables(WaveKernel{}, moll.on_grid(s.grid), s.measure, s.time, tgt.step);
  struct Acc {
    IsometryAccumulator constant, solution;
    void merge(const Acc& o) {
      constant.merge(o.constant);
      solution.merge(o.solution);
    }
  };
  auto unit = constant_integrand(s.grid, s.time, 1.0);
  auto eval = solution_evaluator(s.solver, s.co, s.co.sigma);
  auto acc = run_replicas(s.plan.replicas, s.plan.workers, Acc{}, [&](std::size_t r, Acc& a) {
    auto noise = sample_increments(s.measure, s.time, {s.plan.seed, r});
    add_isometry_sample(a.constant, tables, WaveKernel{}, moll, unit, noise, s.measure, tgt);
    auto z = evaluate_adapted(eval, noise, s.measure);
    add_isometry_sample(a.solution, tables, WaveKernel{}, moll, z, noise, s.measure, tgt);
  });
  nlohmann::json iso;
  for (auto [name, a] : {std::pair{"constant", &acc.constant}, std::pair{"solution", &acc.solution}}) {
    auto rep = finish_isometry(*a);
    const bool ok = std::abs(rep.mc_second_moment - rep.norm0_sq) <= 3.0 * rep.mc_se;
    log.check(std::string("isometry_") + name, ok && rep.isometry_holds(),
              "mc=" + detail::pm(rep.mc_second_moment, rep.mc_se) + " norm=" + fmt(rep.norm0_sq) +
                  " gap=" + detail::pm(rep.gap_mean, rep.gap_se));
    iso[name] = {{"norm0_sq", rep.norm0_sq},         {"norm1_sq", rep.norm1_sq},
                 {"mc_second_moment", rep.mc_second_moment}, {"mc_se", rep.mc_se},
                 {"gap_mean", rep.gap_mean},         {"gap_se", rep.gap_se},
                 {"replicas", rep.replicas}};
  }
  man.emit_json(prefix + "isometry.json", iso);

  auto nu = IntegrandSpectrum::constant(s.grid, s.time, 1.0);
  std::vector<int> ns;
  for (double n : c.schedule) ns.push_back(static_cast<int>(n));
  auto gauss = mollifier_convergence(WaveKernel{}, MollifierKind::gaussian, ns, s.measure, s.time,
                                     tgt.step, nu);
  bool decreasing = true;
  for (std::size_t k = 1; k < gauss.size(); ++k) decreasing = decreasing && gauss[k] < gauss[k - 1];
  log.check("gaussian_mollifier_norm_decreasing", decreasing);
  if (c.cutoff >= 1) {
    std::vector<int> band;
    for (int n = 1; n <= c.cutoff + 1; ++n) band.push_back(n);
    auto bl = mollifier_convergence(WaveKernel{}, MollifierKind::band_limit, band, s.measure,
                                    s.time, tgt.step, nu);
    bool exact = true;
    for (std::size_t k = static_cast<std::size_t>(c.cutoff) - 1; k < bl.size(); ++k)
      exact = exact && bl[k] == 0.0;
    log.check("band_limit_norm_exactly_zero_from_cutoff", exact);
  }
  CsvTable csv(man.digest(), {"n", "gaussian_norm"});
  for (std::size_t k = 0; k < ns.size(); ++k) csv.row({std::to_string(ns[k]), fmt(gauss[k])});
  man.emit_csv(prefix + "mollifier_norms.csv", csv);
}

inline void verify_solver(const RunConfig& c, RunManifest& man, CheckLog& log,
                          const std::string& prefix) {
  Setup s(c);
  {
    auto noise = sample_increments(s.measure, s.time, {s.plan.seed, 0});
    SolverConfig p = s.solver;
    p.scheme = Scheme::picard;
    p.picard_depth = s.time.steps;
    log.check("picard_full_depth_equals_direct",
              solve_mild(p, s.co, noise).values == solve_mild(s.solver, s.co, noise).values);
  }
  if (s.target.step > 0 && s.plan.replicas > 1) {
    auto lin = s.linear();
    const double oracle = linear_oracle_variance(s.solver, lin, s.target.step);
    auto samples = collect_samples(s.solver, lin, s.target, s.plan);
    Moments m;
    for (double v : samples.values) m.add(v);
    log.check("linear_variance_within_3se",
              std::abs(m.second_moment() - oracle) <= 3.0 * m.second_moment_se(),
              "mc=" + detail::pm(m.second_moment(), m.second_moment_se()) +
                  " oracle=" + fmt(oracle));
  }
  auto sched = s.schedule(c);
  auto conv = convergence_report(s.solver, s.co, sched, s.plan);
  log.check("mollified_error_monotone", conv.monotone);
  CsvTable csv(man.digest(), {"mollifier", "sup_error_sq", "se"});
  for (std::size_t l = 0; l < sched.size(); ++l)
    csv.row({sched[l].describe(), fmt(conv.levels[l].value), fmt(conv.levels[l].se)});
  man.emit_csv(prefix + "convergence.csv", csv);
  if (c.cutoff >= 1) {
    std::vector<Mollifier> band;
    for (int n = 1; n <= c.cutoff + 1; ++n) band.emplace_back(MollifierKind::band_limit, n);
    auto bl = convergence_report(s.solver, s.co, band, {s.plan.seed, 2, s.plan.workers});
    log.check("band_limit_error_exactly_zero_from_cutoff",
              bl.exact_zero_from <= static_cast<std::size_t>(c.cutoff) - 1,
              "zero from level " + std::to_string(bl.exact_zero_from));
  }
  if (s.plan.replicas >= 100) {
    auto mr = moment_report(s.solver, s.co, sched, s.plan);
    CsvTable mcsv(man.digest(), {"mollifier", "sup_second_moment", "se"});
    for (std::size_t l = 0; l < sched.size(); ++l)
      mcsv.row({sched[l].describe(), fmt(mr.levels[l].value), fmt(mr.levels[l].se)});
    man.emit_csv(prefix + "moments_by_mollifier.csv", mcsv);
    log.check("second_moments_uniform_in_mollifier", mr.uniform,
              "gronwall_c=" + fmt(mr.gronwall_c));
  } else {
    log.skip("second_moments_uniform_in_mollifier", "needs at least 100 replicas");
  }
  if (s.plan.replicas >= 2) {
    auto st = solution_stationarity(s.solver, s.co, s.target.step, s.plan);
    man.emit_json(prefix + "stationarity.json",
                  {{"u", detail::to_json(st.field)}, {"sin_u", detail::to_json(st.sine)}});
    log.check("stationary_u", st.field.passed, "worst_z=" + fmt(st.field.worst_z));
    log.check("stationary_sin_u", st.sine.passed, "worst_z=" + fmt(st.sine.worst_z));
  }
}

inline void verify_malliavin(const RunConfig& c, RunManifest& man, CheckLog& log,
                             const std::string& prefix) {
  Setup s(c);
  if (s.target.step == 0) {
    log.skip("malliavin", "needs t > 0");
    return;
  }
  fd_part(s, c, man, log, prefix);
  {
    auto lin = s.linear();
    auto noise = sample_increments(s.measure, s.time, {s.plan.seed, 0});
    auto u = solve_mild(s.solver, lin, noise);
    const double norm = solve_derivative_full(s.solver, lin, noise, u, s.basis, s.target).norm_sq();
    const double sigma = lin.sigma(0.0);
    const double oracle = sigma * sigma * linear_oracle_variance(s.solver, Coefficients{}, s.target.step);
    log.check("additive_norm_equals_sigma_sq_J", std::abs(norm - oracle) <= 1e-10 * oracle,
              detail::rel(norm, oracle));
  }
  nondegeneracy_part(s, s.additive(), c, man, log, prefix);
  if (s.plan.replicas >= 2) {
    auto sched = s.schedule(c);
    // Stability is judged on the last two levels: the per-level SE is small
    // enough to resolve the mollification bias of the coarse ones.
    auto dm = derivative_moment_report(s.solver, s.co, s.basis, s.target, sched, s.plan,
                                       sched.size() >= 2 ? sched.size() - 2 : 0);
    CsvTable csv(man.digest(), {"mollifier", "mean_norm_sq", "se"});
    for (std::size_t l = 0; l < sched.size(); ++l)
      csv.row({sched[l].describe(), fmt(dm.levels[l].value), fmt(dm.levels[l].se)});
    man.emit_csv(prefix + "derivative_moments.csv", csv);
    log.check("derivative_moments_stable", dm.stable && dm.bounded);
    auto st = stationarity_check_DBu(s.solver, s.co, s.basis, s.target.step, Coefficient::sine(),
                                     s.plan);
    man.emit_json(prefix + "derivative_stationarity.json", detail::to_json(st.report));
    log.check("stationary_derivative_of_sin_u", st.report.passed,
              "worst_z=" + fmt(st.report.worst_z));
  }
}

inline void verify_density(const RunConfig& c, RunManifest& man, CheckLog& log,
                           const std::string& prefix) {
  Setup s(c);
  if (s.target.step == 0) {
    log.skip("density", "needs t > 0");
    return;
  }
  auto lin = s.linear();
  if (lin.sigma(0.0) != 0.0 && s.plan.replicas >= 2) {
    auto samples = collect_samples(s.solver, lin, s.target, s.plan);
    auto g = gaussian_oracle_check(samples, s.solver, lin, s.target.step);
    log.check("gaussian_oracle", g.passed(),
              "m2=" + detail::pm(g.second_moment, g.second_moment_se) +
                  " oracle=" + fmt(g.oracle_variance) + " ks_p=" + fmt(g.ks.p_value));
    log.check("no_atoms_linear", detect_atoms(samples.values).continuous());
    if (samples.values.size() >= 1000) {
      auto curve = kde(samples.values);
      log.check("kde_unit_mass", !curve.degenerate && std::abs(kde_mass(curve) - 1.0) <= 1e-6);
    }
  }
  auto bh = bh_probability(s.solver, s.co, s.basis, s.target, c.thresholds, s.plan);
  CsvTable csv(man.digest(), {"n", "probability"});
  for (std::size_t k = 0; k < bh.thresholds.size(); ++k)
    csv.row({fmt(bh.thresholds[k]), fmt(bh.probability[k].mean())});
  man.emit_csv(prefix + "small_ball.csv", csv);
  log.check("small_ball_non_increasing", bh.non_increasing());
}

// ------------------------------------------------------------- orchestration

using SuiteBody =
    std::function<void(const RunConfig&, RunManifest&, CheckLog&, const std::string&)>;

// `prefix` is prepended to every file the suite writes.
struct SuiteSpec {
  std::string name;
  std::string prefix;
  SuiteBody body;
};

inline std::vector<SuiteSpec> suites_for(const std::string& command) {
  if (command == "check-kernel") return {{"check-kernel", "", kernel_suite}};
  if (command == "simulate") return {{"simulate", "", simulate_suite}};
  if (command == "malliavin") return {{"malliavin", "", malliavin_suite}};
  if (command == "density") return {{"density", "", density_suite}};
  if (command == "verify")
    return {{"kernels", "kernels/", kernel_suite},
            {"noise", "noise/", verify_noise},
            {"integrals", "integrals/", verify_integrals},
            {"solver", "solver/", verify_solver},
            {"malliavin", "malliavin/", verify_malliavin},
            {"density", "density/", verify_density}};
  throw ConfigError("unknown subcommand '" + command + "'");
}

// Runs the pipelines of a subcommand under `root`.  Each suite flushes its
// check table even when it stops on an exception; the manifest is written
// last.  Returns true when every suite passed.
inline bool run_suite(const RunConfig& cfg, const std::string& command,
                      const std::filesystem::path& root,
                      const std::function<void(const SuiteOutcome&, const CheckLog&)>& on_done = {}) {
  validate(cfg);
  auto specs = suites_for(command);
  RunManifest man(root, config_digest(cfg), kArtifactVersion);
  for (const auto& spec : specs) {
    CheckLog log;
    SuiteOutcome out{spec.name, false, {}};
    try {
      spec.body(cfg, man, log, spec.prefix);
      out.passed = log.passed();
    } catch (const std::exception& e) {
      log.check("completed", false, e.what());
      out.error = e.what();
    }
    man.emit_csv(spec.prefix + "checks.csv", log.table(man.digest()));
    man.record(out);
    if (on_done) on_done(out, log);
  }
  man.write();
  return man.all_passed();
}

}  // namespace swave::cli
