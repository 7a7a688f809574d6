// Potential files (inline and sidecar formats) and the JSON report views.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "helpers.hpp"
#include "kfl/io.hpp"

using namespace kfl;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("small potentials round-trip bit-exactly through inline JSON") {
  ModelPtr m = kfltest::model("dp3", 33);
  Rng rng(3);
  SymplecticPotential u = sample_potential(m, rng, 0.5);
  const std::string path = "io-test-inline.json";
  write_potential(path, u);

  const std::string text = slurp(path);
  REQUIRE(text.find("\"format\": \"inline\"") != std::string::npos);
  REQUIRE(text.find("\"kind\": \"symplectic-potential\"") != std::string::npos);

  ModelCache cache;
  SymplecticPotential v = read_potential(path, cache);
  REQUIRE(v.dev == u.dev);
  REQUIRE(v.normalized == u.normalized);
  REQUIRE(v.model->polytope().hash() == m->polytope().hash());
  std::remove(path.c_str());
}

TEST_CASE("large potentials use the binary sidecar and still round-trip") {
  ModelPtr m = kfltest::model("p1", 32769);  // support exceeds the inline limit
  REQUIRE(m->grid().support.size() > kInlineValueLimit);
  Rng rng(4);
  SymplecticPotential u = sample_potential(m, rng, 0.4);
  const std::string path = "io-test-binary.json";
  write_potential(path, u);

  const std::string text = slurp(path);
  REQUIRE(text.find("\"format\": \"binary\"") != std::string::npos);
  REQUIRE(text.find("io-test-binary.json.bin") != std::string::npos);

  ModelCache cache;
  SymplecticPotential v = read_potential(path, cache);
  REQUIRE(v.dev == u.dev);
  std::remove(path.c_str());
  std::remove((path + ".bin").c_str());
}

TEST_CASE("reading validates the kind and the polytope hash") {
  ModelPtr m = kfltest::model("p1", 33);
  SymplecticPotential u = SymplecticPotential::zero(m);
  const std::string path = "io-test-tamper.json";
  write_potential(path, u);

  ModelCache cache;
  {
    std::string text = slurp(path);
    const std::string key = "\"kind\": \"symplectic-potential\"";
    text.replace(text.find(key), key.size(), "\"kind\": \"something-else\"");
    std::ofstream(path, std::ios::binary) << text;
    try {
      read_potential(path, cache);
      FAIL("expected a kind failure");
    } catch (const Error& e) {
      REQUIRE(e.code() == ErrorCode::IOError);
    }
  }
  {
    write_potential(path, u);
    std::string text = slurp(path);
    const std::size_t pos = text.find("\"polytope_hash\": \"");
    REQUIRE(pos != std::string::npos);
    text[pos + std::string("\"polytope_hash\": \"").size()] ^= 1;  // flip one hash char
    std::ofstream(path, std::ios::binary) << text;
    REQUIRE_THROWS_AS(read_potential(path, cache), Error);
  }
  std::remove(path.c_str());
  REQUIRE_THROWS_AS(read_potential("io-no-such-file.json", cache), Error);
}

TEST_CASE("the model cache reuses one model per polytope and grid") {
  ModelCache cache;
  Polytope P = make_polytope("dp3");
  ModelPtr a = cache.get(P, 33);
  ModelPtr b = cache.get(make_polytope("dp3"), 33);
  ModelPtr c = cache.get(P, 65);
  REQUIRE(a.get() == b.get());
  REQUIRE(a.get() != c.get());
}

TEST_CASE("JSON report views expose the expected keys") {
  ModelPtr m = kfltest::model("p1-fano", 257);
  Rng rng(8);
  SymplecticPotential u = sample_potential(m, rng, 0.4);

  nlohmann::json e = to_json(energy_report(u), 1);
  for (const char* k : {"am", "j", "i", "i_minus_j", "entropy", "k_energy", "ding",
                        "modified_ding", "soliton_b", "beta", "grid_resolution", "extrapolated"})
    REQUIRE(e.contains(k));
  REQUIRE(e["grid_resolution"].size() == 1);

  nlohmann::json d = to_json(d1(SymplecticPotential::zero(m), u));
  for (const char* k : {"d1_l1", "d1_pythagorean", "d1_pathlength", "agreement"})
    REQUIRE(d.contains(k));

  nlohmann::json q = to_json(d1_quotient(SymplecticPotential::zero(m), u), 1);
  REQUIRE(q.contains("value"));
  REQUIRE(q["minimizer"].contains("b"));
  REQUIRE(q["minimizer"]["b"].size() == 1);

  std::vector<double> ds, fs;
  for (int i = 0; i < 20; ++i) {
    ds.push_back(0.1 * (i + 1));
    fs.push_back(ds.back());
  }
  nlohmann::json p = to_json(properness_fit(ds, fs, "probe"));
  for (const char* k : {"C", "D", "n_samples", "min_margin", "family_descriptor", "proper"})
    REQUIRE(p.contains(k));

  nlohmann::json h = to_json(check_hypotheses(EuclidToy{}, 1));
  REQUIRE(h["model"] == "euclid");
  REQUIRE(h["properties"].contains("P1"));
  REQUIRE(h["properties"]["P2"]["status"] == "skipped");
}

TEST_CASE("csv numbers carry seventeen significant digits") {
  REQUIRE(csv_num(1.0) == "1");
  const std::string pi = csv_num(3.141592653589793);
  REQUIRE(pi == "3.1415926535897931");
  // round-trip: parsing the text recovers the exact double
  REQUIRE(std::stod(csv_num(0.1)) == 0.1);
  REQUIRE(std::stod(csv_num(1.0 / 3.0)) == 1.0 / 3.0);
}
