#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "kfl/functionals.hpp"
#include "kfl/io.hpp"
#include "kfl/metric.hpp"
#include "kfl/models.hpp"
#include "kfl/quotient.hpp"
#include "kfl/rng.hpp"
#include "kfl/svg.hpp"

namespace kfl {

// Each experiment builds its own models, runs a fixed deterministic sweep and
// writes three artifacts into out_dir: <name>-summary.json, <name>-data.csv,
// <name>-plot.svg.  `pass` gates the CLI exit code.
struct ExperimentConfig {
  std::string name;
  int grid = 0;  // 0 = per-experiment default; otherwise a power of two plus one
  std::uint64_t seed = 7;
  std::string out_dir = ".";
  double tol = 0.0;  // 0 = per-experiment default headline tolerance
};

struct ExperimentResult {
  std::string name;
  bool pass = false;
  nlohmann::json summary;
  std::vector<std::string> files;
};

namespace exp_detail {

inline std::string join_path(const std::string& dir, const std::string& leaf) {
  if (dir.empty() || dir == ".") return leaf;
  return dir.back() == '/' ? dir + leaf : dir + "/" + leaf;
}

inline void check_grid_arg(int grid) {
  if (grid == 0) return;
  const int m = grid - 1;
  if (grid < 5 || (m & (m - 1)) != 0)
    fail(ErrorCode::ParameterOutOfRange, "grid must be a power of two plus one");
}

// One row per sweep point; every number with full precision so runs diff cleanly.
inline std::string csv_table(const std::vector<std::string>& header,
                             const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ",";
    out += header[i];
  }
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      out += csv_num(row[i]);
    }
    out += "\n";
  }
  return out;
}

inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) fail(ErrorCode::InsufficientSpread, "slope fit needs two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= (double)x.size();
  my /= (double)x.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  if (den <= 0) fail(ErrorCode::InsufficientSpread, "slope fit needs spread in x");
  return num / den;
}

inline void emit(ExperimentResult& r, const ExperimentConfig& cfg, nlohmann::json summary,
                 const std::vector<std::string>& csv_header,
                 const std::vector<std::vector<double>>& csv_rows,
                 const std::vector<PlotSeries>& series, const std::string& title,
                 const std::string& xlabel, const std::string& ylabel) {
  summary["experiment"] = r.name;
  summary["pass"] = r.pass;
  summary["seed"] = cfg.seed;
  const std::string base = join_path(cfg.out_dir, r.name);
  const std::string json_path = base + "-summary.json";
  const std::string csv_path = base + "-data.csv";
  const std::string svg_path = base + "-plot.svg";
  io_detail::write_file(json_path, summary.dump(2) + "\n");
  io_detail::write_file(csv_path, csv_table(csv_header, csv_rows));
  write_svg_plot(svg_path, series, title, xlabel, ylabel);
  r.summary = std::move(summary);
  r.files = {json_path, csv_path, svg_path};
}

// Mean of phi against the first moment coordinate over the reference measure;
// vanishes identically for even potentials on a centrally symmetric model.
inline double eigenfunction_constraint(const SymplecticPotential& u) {
  const ToricModel& M = *u.model;
  DualPotential D = DualPotential::build(u);
  const MaskedGrid& g = M.excised(2);
  const GridSpec& s = M.spec();
  double num = 0.0, mass = 0.0, mag = 0.0;
  std::size_t warm = g.support.empty() ? 0 : g.support.front();
  for (std::size_t k : g.support) {
    const double w = g.weight[k];
    if (w <= 0.0) continue;
    const Vec2 y = s.node(k);
    const double phi = phi_tilde_ref(M, D, y, warm);
    num += w * phi * y[0];
    mass += w;
    mag += w * std::fabs(phi);
  }
  if (mass <= 0.0) fail(ErrorCode::GridTooCoarse, "no interior nodes for the constraint");
  return std::fabs(num / mass) / std::max(1.0, mag / mass);
}

}  // namespace exp_detail

// Torus orbit on the hexagonal del Pezzo model: the K-energy stays flat and the
// quotient distance collapses while J grows linearly, so a J lower bound for E
// cannot hold without passing to the group quotient.
inline ExperimentResult run_dp3_counterexample(const ExperimentConfig& cfg, ModelCache& cache) {
  ExperimentResult r;
  r.name = "dp3-counterexample";
  const int grid = cfg.grid > 0 ? cfg.grid : 257;
  const double tol = cfg.tol > 0 ? cfg.tol : 1e-3;
  ModelPtr m = cache.get(make_polytope("dp3"), grid);
  SymplecticPotential u0 = SymplecticPotential::zero(m);
  const Vec2 b{1.0, 0.0};

  std::vector<double> ts, es, js, dgs;
  std::vector<std::vector<double>> rows;
  for (int i = 0; i <= 12; ++i) {
    const double t = 0.25 * i;
    SymplecticPotential ut = torus_act(u0, AffineFunction{scale(b, t), 0.0});
    const double e = k_energy(ut);
    const double j = j_energy(ut).j;
    const double dg = d1_quotient(u0, ut).value;
    ts.push_back(t);
    es.push_back(e);
    js.push_back(j);
    dgs.push_back(dg);
    rows.push_back({t, e, j, dg});
  }
  double e_drift = 0.0, dg_max = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    e_drift = std::max(e_drift, std::fabs(es[i] - es[0]));
    dg_max = std::max(dg_max, dgs[i]);
  }
  std::vector<double> tx, ty;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (ts[i] >= 1.0 - 1e-12) {
      tx.push_back(ts[i]);
      ty.push_back(js[i]);
    }
  const double j_slope = exp_detail::ls_slope(tx, ty);
  r.pass = e_drift <= tol && j_slope >= 0.2 && dg_max <= tol;

  nlohmann::json s;
  s["grid"] = grid;
  s["orbit_direction"] = {b[0], b[1]};
  s["k_energy_drift"] = e_drift;
  s["j_tail_slope"] = j_slope;
  s["quotient_distance_max"] = dg_max;
  s["thresholds"] = {{"k_energy_drift", tol}, {"j_tail_slope_min", 0.2}, {"quotient_distance_max", tol}};
  exp_detail::emit(r, cfg, std::move(s), {"t", "k_energy", "j_energy", "d1_quotient"}, rows,
                   {{ts, es, "K-energy", true}, {ts, js, "J", true}, {ts, dgs, "d1 quotient", true}},
                   "Torus orbit on dP3", "t", "value");
  return r;
}

// Finite-difference orbit derivative of the K-energy on the non-symmetric del
// Pezzo model against the closed-form boundary pairing, at two grids.
inline ExperimentResult run_dp1_futaki(const ExperimentConfig& cfg, ModelCache& cache) {
  ExperimentResult r;
  r.name = "dp1-futaki";
  const int fine = cfg.grid > 0 ? cfg.grid : 257;
  if ((fine - 1) % 2 != 0 || fine < 9)
    fail(ErrorCode::ParameterOutOfRange, "grid too coarse for a refinement pair");
  const int coarse = (fine - 1) / 2 + 1;
  const double tol = cfg.tol > 0 ? cfg.tol : 1e-3;
  const Vec2 dir = scale(Vec2{1.0, 1.0}, 1.0 / std::sqrt(2.0));
  const Polytope P = make_polytope("dp1");

  auto energy_at = [&](ModelPtr m, double t) {
    return k_energy(torus_act(SymplecticPotential::zero(m), AffineFunction{scale(dir, t), 0.0}));
  };
  auto slope_at = [&](ModelPtr m) {
    const double h = 0.05;
    return (8.0 * (energy_at(m, h) - energy_at(m, -h)) - (energy_at(m, 2 * h) - energy_at(m, -2 * h))) /
           (12.0 * h);
  };
  ModelPtr mc = cache.get(P, coarse);
  ModelPtr mf = cache.get(P, fine);
  const double d_coarse = slope_at(mc);
  const double d_fine = slope_at(mf);
  const double uncertainty = std::fabs(d_fine - d_coarse);
  const double oracle = futaki_linear(mf, dir);
  const double ricci_route = futaki_ricci_route(mf, dir);
  const double rel = std::fabs(d_fine - oracle) / std::max(std::fabs(oracle), 1e-300);
  r.pass = std::fabs(d_fine) >= 10.0 * uncertainty && rel <= tol;

  std::vector<double> ts, efine;
  std::vector<std::vector<double>> rows;
  const double e0 = energy_at(mf, 0.0);
  for (int i = -5; i <= 5; ++i) {
    const double t = 0.1 * i;
    const double e = energy_at(mf, t);
    ts.push_back(t);
    efine.push_back(e);
    rows.push_back({t, e, e0 + oracle * t});
  }
  std::vector<double> line;
  for (double t : ts) line.push_back(e0 + oracle * t);

  nlohmann::json s;
  s["grid_coarse"] = coarse;
  s["grid_fine"] = fine;
  s["direction"] = {dir[0], dir[1]};
  s["dEdt_coarse"] = d_coarse;
  s["dEdt_fine"] = d_fine;
  s["uncertainty"] = uncertainty;
  s["futaki_linear"] = oracle;
  s["futaki_ricci_route"] = ricci_route;
  s["relative_gap"] = rel;
  s["thresholds"] = {{"relative_gap", tol}, {"signal_over_uncertainty_min", 10.0}};
  exp_detail::emit(r, cfg, std::move(s), {"t", "k_energy", "futaki_line"}, rows,
                   {{ts, efine, "K-energy", true}, {ts, line, "Futaki slope", true}},
                   "Orbit derivative on dP1", "t", "K-energy");
  return r;
}

// Properness probe on the symmetric sector of the Fano segment model: the Ding
// functional against J over samples orthogonal to the first eigenfunction.
inline ExperimentResult run_moser_trudinger(const ExperimentConfig& cfg, ModelCache& cache) {
  ExperimentResult r;
  r.name = "moser-trudinger";
  const int grid = cfg.grid > 0 ? cfg.grid : 4097;
  ModelPtr m = cache.get(make_polytope("p1-fano"), grid);
  Rng root(cfg.seed);
  const int n_samples = 300;

  std::vector<double> ds, fs;
  std::vector<std::vector<double>> rows;
  double constraint_max = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    Rng ri = root.split(1000 + (std::uint64_t)i);
    const double frac = (double)(i + 1) / (double)n_samples;
    const double target = 50.0 * frac * frac;
    SymplecticPotential u = sample_potential(m, ri, 1.0, 3, true);
    double jcur = j_energy(u).j;
    for (int it = 0; it < 2 && jcur > 1e-12; ++it) {
      const double f = std::clamp(target / jcur, 0.05, 20.0);
      for (std::size_t k : m->grid().support) u.dev[k] *= f;
      jcur = j_energy(u).j;
    }
    const double f_val = ding(u, 1.0);
    const double cres = exp_detail::eigenfunction_constraint(u);
    constraint_max = std::max(constraint_max, cres);
    ds.push_back(jcur);
    fs.push_back(f_val);
    rows.push_back({(double)i, jcur, f_val, cres});
  }
  PropernessReport fit = properness_fit(ds, fs, "ding vs J, even sector of the Fano segment");
  r.pass = fit.proper && fit.C > 0.0 && fit.min_margin >= 0.0 && constraint_max <= 1e-8;

  std::vector<double> lx = {0.0, *std::max_element(ds.begin(), ds.end())};
  std::vector<double> ly = {-fit.D, fit.C * lx[1] - fit.D};
  nlohmann::json s;
  s["grid"] = grid;
  s["n_samples"] = n_samples;
  s["C"] = fit.C;
  s["D"] = fit.D;
  s["min_margin"] = fit.min_margin;
  s["proper"] = fit.proper;
  s["constraint_residual_max"] = constraint_max;
  s["thresholds"] = {{"constraint_residual_max", 1e-8}, {"c_positive", true}};
  exp_detail::emit(r, cfg, std::move(s), {"sample", "j_energy", "ding", "constraint_residual"}, rows,
                   {{ds, fs, "samples", false}, {lx, ly, "C*J-D", true}},
                   "Ding functional vs J on the even sector", "J", "Ding");
  return r;
}

// Distance-to-envelope identities: for mean-normalized u, the metric to the
// base point equals -2 AM of the rooftop envelope and is dominated by twice
// the sup of the Kaehler-side potential.
inline ExperimentResult run_j_sandwich(const ExperimentConfig& cfg, ModelCache& cache) {
  ExperimentResult r;
  r.name = "j-sandwich";
  const int grid = cfg.grid > 0 ? cfg.grid : 4097;
  const double tol = cfg.tol > 0 ? cfg.tol : 1e-3;
  ModelPtr m = cache.get(make_polytope("p1-fano"), grid);
  SymplecticPotential ref = SymplecticPotential::zero(m);
  Rng root(cfg.seed);
  const int n_samples = 200;

  double id_rel_max = 0.0, slack_min = std::numeric_limits<double>::infinity(), agree_max = 0.0;
  std::vector<double> xs, ys;
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < n_samples; ++i) {
    Rng ri = root.split(2000 + (std::uint64_t)i);
    const double amp = 0.2 + 1.2 * ri.uniform();
    SymplecticPotential u = sample_potential(m, ri, amp, 3, false).normalize();
    DistanceReport rep = d1(ref, u, true, false, 1e9);
    SymplecticPotential roof = rooftop_envelope(ref, u);
    const double minus2am = 2.0 * m->grid().mean(roof.dev);
    const double sp = sup_phi(u);
    const double id_rel = std::fabs(rep.d1_l1 - minus2am) / std::max(1.0, rep.d1_l1);
    const double slack = 2.0 * sp - rep.d1_l1;
    id_rel_max = std::max(id_rel_max, id_rel);
    slack_min = std::min(slack_min, slack);
    agree_max = std::max(agree_max, rep.agreement);
    xs.push_back(rep.d1_l1);
    ys.push_back(minus2am);
    rows.push_back({(double)i, rep.d1_l1, rep.d1_pythagorean, minus2am, sp, slack});
  }
  r.pass = id_rel_max <= tol && slack_min >= -1e-9 && agree_max <= tol;

  std::vector<double> lx = {0.0, *std::max_element(xs.begin(), xs.end())};
  nlohmann::json s;
  s["grid"] = grid;
  s["n_samples"] = n_samples;
  s["envelope_identity_rel_max"] = id_rel_max;
  s["sup_bound_slack_min"] = slack_min;
  s["route_agreement_max"] = agree_max;
  s["thresholds"] = {{"envelope_identity_rel_max", tol}, {"sup_bound_slack_min", -1e-9},
                     {"route_agreement_max", tol}};
  exp_detail::emit(r, cfg, std::move(s),
                   {"sample", "d1", "d1_pythagorean", "minus_2am_rooftop", "sup_phi", "sup_slack"},
                   rows, {{xs, ys, "samples", false}, {lx, lx, "identity", true}},
                   "Envelope identity for d1 to the base point", "d1(0,u)", "-2 AM(rooftop)");
  return r;
}

// Soliton vector field on dP1: vanishes on symmetric models, and the modified
// Ding functional is stationary at the reference along the torus directions.
inline ExperimentResult run_soliton_stationarity(const ExperimentConfig& cfg, ModelCache& cache) {
  ExperimentResult r;
  r.name = "soliton-stationarity";
  const int grid = cfg.grid > 0 ? cfg.grid : 129;
  const double tol = cfg.tol > 0 ? cfg.tol : 1e-3;
  ModelPtr m = cache.get(make_polytope("dp1"), grid);
  SolitonField sf = soliton_field(m);
  const double bnorm = std::sqrt(dot(2, sf.b, sf.b));
  const double b_p1 = std::fabs(soliton_field(cache.get(make_polytope("p1-fano"), 1025)).b[0]);
  SolitonField sf3 = soliton_field(cache.get(make_polytope("dp3"), grid));
  const double b_dp3 = std::sqrt(dot(2, sf3.b, sf3.b));

  SymplecticPotential u0 = SymplecticPotential::zero(m);
  Rng root(cfg.seed);
  const double h = 0.02;
  auto f_at = [&](const Vec2& dir, double t) {
    return soliton_functionals(torus_act(u0, AffineFunction{scale(dir, t), 0.0}), sf.b).f_x;
  };
  double deriv_max = 0.0;
  std::vector<std::vector<double>> rows;
  std::vector<Vec2> dirs;
  for (int k = 0; k < 5; ++k) {
    Rng rk = root.split(300 + (std::uint64_t)k);
    const double ang = rk.uniform(0.0, 2.0 * 3.14159265358979323846);
    const Vec2 dir{std::cos(ang), std::sin(ang)};
    dirs.push_back(dir);
    const double d =
        (8.0 * (f_at(dir, h) - f_at(dir, -h)) - (f_at(dir, 2 * h) - f_at(dir, -2 * h))) / (12.0 * h);
    deriv_max = std::max(deriv_max, std::fabs(d));
    rows.push_back({(double)k, dir[0], dir[1], d});
  }
  double jensen_margin_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 5; ++i) {
    Rng ri = root.split(600 + (std::uint64_t)i);
    SymplecticPotential ui = sample_potential(m, ri, 0.5, 3, false);
    SolitonFunctionals s2 = soliton_functionals(ui, sf.b);
    jensen_margin_min = std::min(jensen_margin_min, s2.e_x - (s2.f_x - s2.jensen_c));
  }
  r.pass = bnorm > 0.1 && sf.residual <= 1e-10 && deriv_max <= tol && b_p1 <= 1e-8 &&
           b_dp3 <= 1e-8 && jensen_margin_min >= -1e-8;

  std::vector<double> ts, fvals;
  for (int i = -4; i <= 4; ++i) {
    const double t = 0.025 * i;
    ts.push_back(t);
    fvals.push_back(f_at(dirs[0], t));
  }
  nlohmann::json s;
  s["grid"] = grid;
  s["soliton_b"] = {sf.b[0], sf.b[1]};
  s["soliton_b_norm"] = bnorm;
  s["soliton_residual"] = sf.residual;
  s["directional_derivative_max"] = deriv_max;
  s["symmetric_b_p1"] = b_p1;
  s["symmetric_b_dp3"] = b_dp3;
  s["jensen_margin_min"] = jensen_margin_min;
  s["thresholds"] = {{"directional_derivative_max", tol}, {"symmetric_b_max", 1e-8},
                     {"jensen_margin_min", -1e-8}};
  exp_detail::emit(r, cfg, std::move(s), {"direction", "dir_x", "dir_y", "derivative"}, rows,
                   {{ts, fvals, "modified Ding along dir 0", true}},
                   "Modified Ding near the reference on dP1", "t", "F^b");
  return r;
}

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"dp3-counterexample", "dp1-futaki",
                                                 "moser-trudinger", "j-sandwich",
                                                 "soliton-stationarity"};
  return names;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, ModelCache& cache) {
  exp_detail::check_grid_arg(cfg.grid);
  if (cfg.name == "dp3-counterexample") return run_dp3_counterexample(cfg, cache);
  if (cfg.name == "dp1-futaki") return run_dp1_futaki(cfg, cache);
  if (cfg.name == "moser-trudinger") return run_moser_trudinger(cfg, cache);
  if (cfg.name == "j-sandwich") return run_j_sandwich(cfg, cache);
  if (cfg.name == "soliton-stationarity") return run_soliton_stationarity(cfg, cache);
  fail(ErrorCode::ParameterOutOfRange, "unknown experiment: " + cfg.name);
  return {};
}

}  // namespace kfl
