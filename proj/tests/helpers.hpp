#pragma once

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <memory>
#include <string>

#include "kfl/models.hpp"

namespace kfltest {

// Shared model cache: building fine grids is the expensive part of the suite,
// so every test that needs e.g. p1 @ 4097 reuses one instance.
inline kfl::ModelPtr model(const std::string& name, int nodes) {
  static std::map<std::pair<std::string, int>, kfl::ModelPtr> cache;
  auto key = std::make_pair(name, nodes);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  kfl::ModelPtr m = kfl::ToricModel::create(kfl::make_polytope(name), nodes);
  cache.emplace(key, m);
  return m;
}

inline bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

inline double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max(1e-300, std::fabs(want));
}

}  // namespace kfltest
