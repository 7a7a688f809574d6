// kfl: batch front-end for the toric Kahler-metric laboratory.
// Exit codes: 0 success (or experiment pass), 2 experiment failure,
// 1 usage or IO error.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kfl/experiments.hpp"
#include "kfl/functionals.hpp"
#include "kfl/io.hpp"
#include "kfl/metric.hpp"
#include "kfl/models.hpp"
#include "kfl/principle.hpp"
#include "kfl/quotient.hpp"
#include "kfl/svg.hpp"

namespace {

kfl::ModelCache g_cache;

void emit_text(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::fputs(text.c_str(), stdout);
    if (text.empty() || text.back() != '\n') std::fputc('\n', stdout);
  } else {
    kfl::io_detail::write_file(out_path, text.empty() || text.back() == '\n' ? text : text + "\n");
  }
}

void emit_json(const nlohmann::json& j, const std::string& out_path) {
  emit_text(j.dump(2), out_path);
}

kfl::Vec2 parse_vec2(const std::string& s, int n) {
  kfl::Vec2 v{0.0, 0.0};
  const auto comma = s.find(',');
  try {
    if (comma == std::string::npos) {
      v[0] = std::stod(s);
    } else {
      v[0] = std::stod(s.substr(0, comma));
      v[1] = std::stod(s.substr(comma + 1));
    }
  } catch (const std::exception&) {
    kfl::fail(kfl::ErrorCode::ParameterOutOfRange, "cannot parse vector: " + s);
  }
  if (n == 1 && comma != std::string::npos && v[1] != 0.0)
    kfl::fail(kfl::ErrorCode::ParameterOutOfRange, "second component must vanish for n=1");
  return v;
}

int default_grid(const kfl::Polytope& P) { return P.n() == 1 ? 4097 : 129; }

std::string report_csv(const nlohmann::json& j) {
  std::string out = "key,value\n";
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.value().is_number()) {
      out += it.key() + "," + kfl::csv_num(it.value().get<double>()) + "\n";
    } else if (it.value().is_boolean()) {
      out += it.key() + "," + (it.value().get<bool>() ? std::string("true") : std::string("false")) + "\n";
    } else if (it.value().is_array()) {
      int idx = 0;
      for (const auto& e : it.value()) {
        if (e.is_number()) out += it.key() + "_" + std::to_string(idx) + "," + kfl::csv_num(e.get<double>()) + "\n";
        ++idx;
      }
    } else if (it.value().is_string()) {
      out += it.key() + "," + it.value().get<std::string>() + "\n";
    }
  }
  return out;
}

kfl::HypothesisReport run_principle_named(const std::string& name, int grid, std::uint64_t seed,
                                          const kfl::HarnessBudget& budget) {
  if (name == "euclid" || name == "broken-p4" || name == "broken-p5" || name == "broken-p7") {
    kfl::EuclidToy toy;
    toy.kind = name;
    return kfl::check_hypotheses(toy, seed, budget);
  }
  const kfl::Polytope P = kfl::make_polytope(name);
  kfl::ToricPrincipleModel tm;
  tm.model = g_cache.get(P, grid > 0 ? grid : (P.n() == 1 ? 1025 : 65));
  tm.label = "toric-" + name;
  return kfl::check_hypotheses(tm, seed, budget);
}

nlohmann::json run_existence_named(const std::string& name, int grid, std::uint64_t seed) {
  auto pack = [](const kfl::ExistenceVerdict& v) {
    nlohmann::json j;
    j["verdict"] = v.verdict;
    j["invariance_gap"] = v.invariance_gap;
    j["fit"] = kfl::to_json(v.fit);
    return j;
  };
  if (name == "euclid" || name == "broken-p4" || name == "broken-p5" || name == "broken-p7") {
    kfl::EuclidToy toy;
    toy.kind = name;
    return pack(kfl::existence_properness_test(toy, seed));
  }
  const kfl::Polytope P = kfl::make_polytope(name);
  kfl::ToricPrincipleModel tm;
  tm.model = g_cache.get(P, grid > 0 ? grid : (P.n() == 1 ? 513 : 33));
  tm.label = "toric-" + name;
  return pack(kfl::existence_properness_test(tm, seed, 24));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toric laboratory for the L1 Finsler geometry of Kahler metrics"};
  app.require_subcommand(1);
  int rc = 0;

  // ---- build-polytope ----
  auto* sub_poly = app.add_subcommand("build-polytope", "construct a registered polytope and print its data");
  std::string poly_name, poly_out;
  sub_poly->add_option("name", poly_name, "registered model name")->required();
  sub_poly->add_option("--out", poly_out, "output JSON path (default stdout)");
  sub_poly->callback([&] {
    const kfl::Polytope P = kfl::make_polytope(poly_name);
    nlohmann::json j;
    j["name"] = poly_name;
    j["n"] = P.n();
    j["polytope"] = P.to_json();
    j["volume"] = P.volume();
    j["boundary_measure"] = P.boundary_measure();
    j["barycenter"] = {P.barycenter()[0], P.barycenter()[1]};
    j["default_beta"] = kfl::default_beta(poly_name);
    j["hash"] = P.hash();
    emit_json(j, poly_out);
  });

  // ---- potential ----
  auto* sub_pot = app.add_subcommand("potential", "generate a symplectic potential file");
  std::string pot_model = "p1", pot_family = "random", pot_out, pot_dir = "1,0", pot_center;
  int pot_grid = 0, pot_pieces = 3;
  std::uint64_t pot_seed = 7;
  double pot_amp = 0.6, pot_t = 1.0, pot_shift = 0.0, pot_coeff = 1.0;
  bool pot_even = false;
  sub_pot->add_option("--model", pot_model, "registered model name");
  sub_pot->add_option("--grid", pot_grid, "nodes per axis (power of two plus one)");
  sub_pot->add_option("--family", pot_family, "random | orbit | quadratic");
  sub_pot->add_option("--seed", pot_seed, "random family seed");
  sub_pot->add_option("--amplitude", pot_amp, "random family amplitude");
  sub_pot->add_option("--pieces", pot_pieces, "random family ridge count");
  sub_pot->add_flag("--even", pot_even, "mirror-symmetric random sample");
  sub_pot->add_option("--direction", pot_dir, "orbit direction bx,by");
  sub_pot->add_option("--t", pot_t, "orbit parameter");
  sub_pot->add_option("--shift", pot_shift, "orbit constant part");
  sub_pot->add_option("--coeff", pot_coeff, "quadratic coefficient");
  sub_pot->add_option("--center", pot_center, "quadratic center x,y (default barycenter)");
  sub_pot->add_option("--out", pot_out, "output potential path")->required();
  sub_pot->callback([&] {
    const kfl::Polytope P = kfl::make_polytope(pot_model);
    kfl::ModelPtr m = g_cache.get(P, pot_grid > 0 ? pot_grid : default_grid(P));
    kfl::SymplecticPotential u;
    if (pot_family == "random") {
      kfl::Rng rng(pot_seed);
      u = kfl::sample_potential(m, rng, pot_amp, pot_pieces, pot_even);
    } else if (pot_family == "orbit") {
      const kfl::Vec2 b = parse_vec2(pot_dir, P.n());
      u = kfl::torus_act(kfl::SymplecticPotential::zero(m),
                         kfl::AffineFunction{kfl::scale(b, pot_t), pot_shift * pot_t});
    } else if (pot_family == "quadratic") {
      const kfl::Vec2 y0 = pot_center.empty() ? P.barycenter() : parse_vec2(pot_center, P.n());
      u = kfl::quadratic_potential(m, pot_coeff, y0);
    } else {
      kfl::fail(kfl::ErrorCode::ParameterOutOfRange, "unknown family: " + pot_family);
    }
    kfl::write_potential(pot_out, u);
  });

  // ---- report ----
  auto* sub_rep = app.add_subcommand("report", "evaluate the energy functionals of a potential");
  std::string rep_path, rep_out, rep_format = "json";
  double rep_beta = 0.0;
  sub_rep->add_option("potential", rep_path, "potential file")->required();
  sub_rep->add_option("--beta", rep_beta, "cone angle parameter (default: model default)");
  sub_rep->add_option("--format", rep_format, "json | csv");
  sub_rep->add_option("--out", rep_out, "output path (default stdout)");
  sub_rep->callback([&] {
    kfl::SymplecticPotential u = kfl::read_potential(rep_path, g_cache);
    const double beta = rep_beta > 0.0 ? rep_beta : 1.0;
    const kfl::EnergyReport r = kfl::energy_report(u, beta);
    const nlohmann::json j = kfl::to_json(r, u.model->n());
    if (rep_format == "csv")
      emit_text(report_csv(j), rep_out);
    else if (rep_format == "json")
      emit_json(j, rep_out);
    else
      kfl::fail(kfl::ErrorCode::ParameterOutOfRange, "unknown format: " + rep_format);
  });

  // ---- dist ----
  auto* sub_dist = app.add_subcommand("dist", "d1 distance between potentials");
  std::string dist_a, dist_b, dist_manifest, dist_out;
  bool dist_mixed = false, dist_no_path = false;
  double dist_route_tol = 1e-3;
  sub_dist->add_option("a", dist_a, "first potential");
  sub_dist->add_option("b", dist_b, "second potential");
  sub_dist->add_option("--manifest", dist_manifest, "JSON manifest {\"potentials\": [...]} for a matrix");
  sub_dist->add_option("--out", dist_out, "output path (default stdout)");
  sub_dist->add_flag("--mixed", dist_mixed, "include the mixed Legendre route");
  sub_dist->add_flag("--no-pathlength", dist_no_path, "skip the path-length route");
  sub_dist->add_option("--tol.route", dist_route_tol, "route agreement tolerance");
  sub_dist->callback([&] {
    if (!dist_manifest.empty()) {
      nlohmann::json man = nlohmann::json::parse(kfl::io_detail::read_file(dist_manifest));
      if (!man.contains("potentials") || !man["potentials"].is_array() || man["potentials"].size() < 2)
        kfl::fail(kfl::ErrorCode::IOError, "manifest needs a \"potentials\" array of two or more paths");
      std::vector<std::string> paths = man["potentials"].get<std::vector<std::string>>();
      std::vector<kfl::SymplecticPotential> pots;
      for (const auto& p : paths) pots.push_back(kfl::read_potential(p, g_cache));
      std::string csv = "file";
      for (const auto& p : paths) csv += "," + p;
      csv += "\n";
      for (std::size_t i = 0; i < pots.size(); ++i) {
        csv += paths[i];
        for (std::size_t j = 0; j < pots.size(); ++j)
          csv += "," + kfl::csv_num(i == j ? 0.0 : kfl::d1_l1_route(pots[i], pots[j]));
        csv += "\n";
      }
      emit_text(csv, dist_out);
      return;
    }
    if (dist_a.empty() || dist_b.empty())
      kfl::fail(kfl::ErrorCode::ParameterOutOfRange, "need two potential files or --manifest");
    kfl::SymplecticPotential u = kfl::read_potential(dist_a, g_cache);
    kfl::SymplecticPotential v = kfl::read_potential(dist_b, g_cache);
    const kfl::DistanceReport r = kfl::d1(u, v, !dist_no_path, dist_mixed, dist_route_tol);
    emit_json(kfl::to_json(r), dist_out);
  });

  // ---- quotient ----
  auto* sub_quot = app.add_subcommand("quotient", "torus-quotient distance between potentials");
  std::string quot_a, quot_b, quot_out;
  bool quot_brute = false;
  sub_quot->add_option("a", quot_a, "first potential")->required();
  sub_quot->add_option("b", quot_b, "second potential")->required();
  sub_quot->add_option("--out", quot_out, "output path (default stdout)");
  sub_quot->add_flag("--brute", quot_brute, "also run the coarse grid-search oracle");
  sub_quot->callback([&] {
    kfl::SymplecticPotential u = kfl::read_potential(quot_a, g_cache);
    kfl::SymplecticPotential v = kfl::read_potential(quot_b, g_cache);
    const kfl::QuotientResult q = kfl::d1_quotient(u, v);
    nlohmann::json j = kfl::to_json(q, u.model->n());
    if (quot_brute) j["brute"] = kfl::to_json(kfl::brute_force_quotient(u, v), u.model->n());
    emit_json(j, quot_out);
  });

  // ---- properness ----
  auto* sub_prop = app.add_subcommand("properness", "linear-growth fit over (distance, functional) samples");
  std::string prop_manifest, prop_out, prop_svg, prop_family;
  double prop_threshold = 1e-3;
  sub_prop->add_option("--manifest", prop_manifest, "JSON manifest {\"d\": [...], \"f\": [...]}")->required();
  sub_prop->add_option("--out", prop_out, "report path (default stdout)");
  sub_prop->add_option("--svg", prop_svg, "scatter plot path");
  sub_prop->add_option("--family", prop_family, "family descriptor recorded in the report");
  sub_prop->add_option("--threshold", prop_threshold, "properness slope threshold");
  sub_prop->callback([&] {
    nlohmann::json man = nlohmann::json::parse(kfl::io_detail::read_file(prop_manifest));
    if (!man.contains("d") || !man.contains("f"))
      kfl::fail(kfl::ErrorCode::IOError, "manifest needs \"d\" and \"f\" arrays");
    const std::vector<double> d = man["d"].get<std::vector<double>>();
    const std::vector<double> f = man["f"].get<std::vector<double>>();
    const std::string family = !prop_family.empty() ? prop_family : man.value("family", "");
    const kfl::PropernessReport r = kfl::properness_fit(d, f, family, prop_threshold);
    if (!prop_svg.empty()) {
      std::vector<double> lx = {0.0, *std::max_element(d.begin(), d.end())};
      std::vector<double> ly = {-r.D, r.C * lx[1] - r.D};
      kfl::write_svg_plot(prop_svg, {{d, f, "samples", false}, {lx, ly, "C*d-D", true}},
                          "properness fit", "d", "f");
    }
    emit_json(kfl::to_json(r), prop_out);
  });

  // ---- principle ----
  auto* sub_prin = app.add_subcommand("principle", "property-test the existence/properness hypotheses");
  std::string prin_model = "euclid", prin_out;
  int prin_grid = 0;
  std::uint64_t prin_seed = 7;
  bool prin_exist = false;
  kfl::HarnessBudget budget;
  sub_prin->add_option("model", prin_model, "euclid | broken-p4 | broken-p5 | broken-p7 | polytope name")
      ->required();
  sub_prin->add_option("--grid", prin_grid, "grid for toric models");
  sub_prin->add_option("--seed", prin_seed, "harness seed");
  sub_prin->add_option("--pairs", budget.pairs, "sample pairs per property");
  sub_prin->add_option("--geodesic-points", budget.geodesic_points, "segment discretization");
  sub_prin->add_option("--minimizer-pairs", budget.minimizer_pairs, "minimizer samples for P5");
  sub_prin->add_option("--tol.convexity", budget.tol_convexity, "P1 tolerance");
  sub_prin->add_option("--tol.isometry", budget.tol_isometry, "P4 tolerance");
  sub_prin->add_option("--tol.quotient", budget.tol_quotient, "P6 tolerance");
  sub_prin->add_option("--tol.invariance", budget.tol_invariance, "P7 tolerance");
  sub_prin->add_flag("--existence", prin_exist, "also run the properness existence test");
  sub_prin->add_option("--out", prin_out, "output path (default stdout)");
  sub_prin->callback([&] {
    const kfl::HypothesisReport rep = run_principle_named(prin_model, prin_grid, prin_seed, budget);
    nlohmann::json j = kfl::to_json(rep);
    if (prin_exist) j["existence"] = run_existence_named(prin_model, prin_grid, prin_seed);
    emit_json(j, prin_out);
  });

  // ---- experiment ----
  auto* sub_exp = app.add_subcommand("experiment", "run a named desk experiment");
  kfl::ExperimentConfig ecfg;
  sub_exp->add_option("name", ecfg.name, "dp3-counterexample | dp1-futaki | moser-trudinger | j-sandwich | soliton-stationarity")
      ->required();
  sub_exp->add_option("--grid", ecfg.grid, "nodes per axis (power of two plus one)");
  sub_exp->add_option("--seed", ecfg.seed, "experiment seed");
  sub_exp->add_option("--out", ecfg.out_dir, "output directory");
  sub_exp->add_option("--tol", ecfg.tol, "headline tolerance override");
  sub_exp->callback([&] {
    if (!ecfg.out_dir.empty() && ecfg.out_dir != ".")
      std::filesystem::create_directories(ecfg.out_dir);
    const kfl::ExperimentResult r = kfl::run_experiment(ecfg, g_cache);
    for (const auto& f : r.files) std::fprintf(stdout, "wrote %s\n", f.c_str());
    std::fprintf(stdout, "%s: %s\n", r.name.c_str(), r.pass ? "pass" : "FAIL");
    if (!r.pass) rc = 2;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const kfl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
