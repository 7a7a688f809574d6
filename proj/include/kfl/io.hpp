#pragma once

// Serialization: potential files (JSON header with inline values or a binary
// little-endian sidecar), report JSON, and a cache so repeated grid/polytope
// combinations share one model build.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kfl/functionals.hpp"
#include "kfl/metric.hpp"
#include "kfl/principle.hpp"
#include "kfl/quotient.hpp"

namespace kfl {

// Grid functions with at most this many support values are stored inline in
// the JSON header; larger ones go to a raw little-endian double sidecar.
inline constexpr std::size_t kInlineValueLimit = 16384;

struct ModelCache {
  std::map<std::string, ModelPtr> entries;

  ModelPtr get(const Polytope& P, int nodes_per_axis) {
    const std::string key = P.hash() + ":" + std::to_string(nodes_per_axis);
    auto it = entries.find(key);
    if (it != entries.end()) return it->second;
    ModelPtr m = ToricModel::create(P, nodes_per_axis);
    entries.emplace(key, m);
    return m;
  }
};

namespace io_detail {

inline void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IOError, "cannot open " + path + " for writing");
  out.write(data.data(), (std::streamsize)data.size());
  if (!out) fail(ErrorCode::IOError, "short write to " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IOError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string sidecar_path(const std::string& path) { return path + ".bin"; }

// raw little-endian doubles; byte order is asserted at build time
inline std::string pack_doubles(const std::vector<double>& v) {
  static_assert(sizeof(double) == 8, "ieee754 doubles required");
  std::string s(v.size() * 8, '\0');
  std::memcpy(s.data(), v.data(), s.size());
  return s;
}

inline std::vector<double> unpack_doubles(const std::string& s) {
  if (s.size() % 8 != 0) fail(ErrorCode::IOError, "sidecar size is not a multiple of 8");
  std::vector<double> v(s.size() / 8);
  std::memcpy(v.data(), s.data(), s.size());
  return v;
}

}  // namespace io_detail

inline void write_potential(const std::string& path, const SymplecticPotential& u) {
  const ToricModel& M = *u.model;
  nlohmann::json j;
  j["kind"] = "symplectic-potential";
  j["polytope"] = M.polytope().to_json();
  j["polytope_hash"] = M.polytope().hash();
  j["grid"] = M.spec().shape[0];
  j["normalized"] = u.normalized;
  std::vector<double> vals;
  vals.reserve(M.grid().support.size());
  for (std::size_t k : M.grid().support) vals.push_back(u.dev[k]);
  if (vals.size() <= kInlineValueLimit) {
    j["format"] = "inline";
    j["values"] = vals;
  } else {
    j["format"] = "binary";
    j["sidecar"] = io_detail::sidecar_path(path).substr(path.find_last_of('/') + 1);
    io_detail::write_file(io_detail::sidecar_path(path), io_detail::pack_doubles(vals));
  }
  io_detail::write_file(path, j.dump(2) + "\n");
}

inline SymplecticPotential read_potential(const std::string& path, ModelCache& cache) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io_detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IOError, std::string("cannot parse ") + path + ": " + e.what());
  }
  if (j.value("kind", "") != "symplectic-potential")
    fail(ErrorCode::IOError, path + " is not a potential file");
  const Polytope P = Polytope::from_json(j.at("polytope"));
  const int grid = j.at("grid").get<int>();
  ModelPtr m = cache.get(P, grid);
  if (j.contains("polytope_hash") && j.at("polytope_hash").get<std::string>() != P.hash())
    fail(ErrorCode::IOError, "polytope hash mismatch in " + path);
  std::vector<double> vals;
  const std::string fmt = j.at("format").get<std::string>();
  if (fmt == "inline") {
    vals = j.at("values").get<std::vector<double>>();
  } else if (fmt == "binary") {
    const std::string dir =
        path.find_last_of('/') == std::string::npos ? "" : path.substr(0, path.find_last_of('/') + 1);
    vals = io_detail::unpack_doubles(io_detail::read_file(dir + j.at("sidecar").get<std::string>()));
  } else {
    fail(ErrorCode::IOError, "unknown potential format: " + fmt);
  }
  const auto& support = m->grid().support;
  if (vals.size() != support.size())
    fail(ErrorCode::IOError, "value count does not match the grid support");
  SymplecticPotential u = SymplecticPotential::zero(m);
  for (std::size_t t = 0; t < support.size(); ++t) u.dev[support[t]] = vals[t];
  u.normalized = j.value("normalized", false);
  return u;
}

// ---------------------------------------------------------------------------
// JSON views of the report types (sorted keys come from nlohmann's map)
// ---------------------------------------------------------------------------
inline nlohmann::json to_json(const EnergyReport& r, int n) {
  nlohmann::json j;
  j["am"] = r.am;
  j["j"] = r.j;
  j["i"] = r.i;
  j["i_minus_j"] = r.i_minus_j;
  j["entropy"] = r.entropy;
  j["k_energy"] = r.k_energy;
  if (r.ding) j["ding"] = *r.ding;
  if (r.modified_ding) j["modified_ding"] = *r.modified_ding;
  if (r.modified_k_energy) j["modified_k_energy"] = *r.modified_k_energy;
  if (r.soliton_b) {
    std::vector<double> b((*r.soliton_b).begin(), (*r.soliton_b).begin() + n);
    j["soliton_b"] = b;
  }
  j["beta"] = r.beta;
  j["grid_resolution"] = n == 1 ? nlohmann::json::array({r.grid_resolution[0]})
                                : nlohmann::json::array({r.grid_resolution[0], r.grid_resolution[1]});
  j["extrapolated"] = r.extrapolated;
  return j;
}

inline nlohmann::json to_json(const DistanceReport& r) {
  nlohmann::json j;
  j["d1_l1"] = r.d1_l1;
  j["d1_pythagorean"] = r.d1_pythagorean;
  if (r.d1_pathlength) j["d1_pathlength"] = *r.d1_pathlength;
  if (r.mixed_l1) j["mixed_l1"] = *r.mixed_l1;
  j["agreement"] = r.agreement;
  return j;
}

inline nlohmann::json to_json(const QuotientResult& r, int n) {
  nlohmann::json j;
  j["value"] = r.value;
  std::vector<double> b(r.minimizer.b.begin(), r.minimizer.b.begin() + n);
  j["minimizer"] = {{"b", b}, {"c", r.minimizer.c}};
  j["iterations"] = r.iterations;
  j["residual"] = r.residual;
  return j;
}

inline nlohmann::json to_json(const PropernessReport& r) {
  nlohmann::json j;
  j["C"] = r.C;
  j["D"] = r.D;
  j["n_samples"] = r.n_samples;
  j["min_margin"] = r.min_margin;
  j["family_descriptor"] = r.family_descriptor;
  j["proper"] = r.proper;
  return j;
}

inline nlohmann::json to_json(const HypothesisReport& r) {
  nlohmann::json j;
  j["model"] = r.model_name;
  j["seed"] = r.seed;
  nlohmann::json props;
  for (const auto& kv : r.properties) {
    nlohmann::json p;
    p["status"] = kv.second.status;
    p["samples"] = kv.second.samples;
    p["tolerance"] = kv.second.tolerance;
    p["worst"] = kv.second.worst;
    if (!kv.second.note.empty()) p["note"] = kv.second.note;
    if (kv.second.status == "fail") p["witness_seed"] = kv.second.witness_seed;
    props[kv.first] = p;
  }
  j["properties"] = props;
  return j;
}

// CSV cell with enough digits to round-trip
inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace kfl
