#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "modeflux/config.hpp"
#include "modeflux/errors.hpp"
#include "modeflux/runner.hpp"

using namespace modeflux;

namespace {
std::string presets_dir() {
#ifdef MODEFLUX_SOURCE_DIR
  return std::string(MODEFLUX_SOURCE_DIR) + "/presets";
#else
  return "presets";
#endif
}

const char* kMinimal = R"(
[geometry]
profile = constant
d = 2.62
z_max = 5

[physics]
sigma = 0.1
epsilon = 0.003
)";
}

TEST_CASE("preset fig3 parses to the documented values") {
  RunConfig cfg = load_config(presets_dir() + "/paper-fig3.cfg");
  CHECK(cfg.physics.k == doctest::Approx(2 * M_PI).epsilon(1e-15));
  CHECK(cfg.physics.epsilon == 0.003);
  CHECK(cfg.physics.sigma * cfg.physics.sigma == doctest::Approx(0.003).epsilon(1e-14));
  CHECK(cfg.source.rho_fraction == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
  CHECK(cfg.geometry.d_start == 20.0);
  CHECK(cfg.geometry.d_end == 20.49);

  WidthProfile p = make_profile(cfg, presets_dir());
  CHECK(p.evaluate(0.0).d == 20.49);
  Excitation exc = make_excitation(cfg, p);
  CHECK(exc.rho_star == doctest::Approx(20.49 / 7.0).epsilon(1e-14));
}

TEST_CASE("config validation errors") {
  CHECK_THROWS_AS(parse_config("[physics]\nepsilon = 0.01\n"), ValidationError);  // k/sigma missing
  CHECK_THROWS_AS(parse_config("[physics]\nsigma = -1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[physics]\nsigma = 0.1\nepsilon = 0.5\n"), ValidationError);
  // unknown key carries its line number
  try {
    parse_config("[physics]\nsigma = 0.1\nbogus_key = 3\n");
    FAIL("expected a parse error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("sigma = 0.1\n"), ValidationError);      // key before section
  CHECK_THROWS_AS(parse_config("[nosuch]\nx = 1\n"), ValidationError);  // unknown section
}

TEST_CASE("canonical round-trip: serialize then parse gives an identical config") {
  RunConfig a = parse_config(kMinimal);
  std::string text = serialize_config(a);
  RunConfig b = parse_config(text);
  CHECK(a == b);
  CHECK(serialize_config(b) == text);

  RunConfig c = load_config(presets_dir() + "/paper-fig6-right.cfg");
  RunConfig d = parse_config(serialize_config(c));
  CHECK(c == d);
  CHECK(config_hash(c) == config_hash(d));
}

TEST_CASE("two-column csv loader") {
  const char* path = "/tmp/modeflux_test_table.csv";
  {
    std::ofstream out(path);
    out << "z,D\n0,1.0\n1,1.5\n2,2.0\n";
  }
  auto [z, d] = load_two_column_csv(path);
  REQUIRE(z.size() == 3);
  CHECK(z[1] == 1.0);
  CHECK(d[2] == 2.0);
  std::remove(path);
}

TEST_CASE("mc section resolves the first left sector by default") {
  RunConfig cfg = parse_config(kMinimal);
  WidthProfile p = make_profile(cfg);
  SectorLayout lay = find_turning_points(cfg.physics.k, p, cfg.geometry.z_max);
  McConfig mc = make_mc_config(cfg, lay);
  CHECK(mc.z_right == 0.0);
  CHECK(mc.z_left == -5.0);  // no turning point, no collar
  CHECK(mc.n_modes == 5);
  CHECK(mc.step == doctest::Approx(0.003 / 10).epsilon(1e-15));
}

TEST_CASE("subcommand drivers produce their artifacts end to end") {
  const std::string dir = "/tmp/modeflux_runner_test";
  std::string text = std::string(kMinimal) +
                     "\n[mc]\nn_trajectories = 8\nseed = 3\nz_left = -0.5\nz_right = 0\n"
                     "n_checkpoints = 4\n\n[source]\nkind = point\nrho_fraction = 0.2\n";
  RunConfig cfg = parse_config(text);

  SUBCASE("layout") {
    CHECK(run_subcommand("layout", cfg, ".", dir) == 0);
    std::ifstream in(dir + "/layout.json");
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str().find("\"n0\": 5") != std::string::npos);
  }
  SUBCASE("coefficients") {
    CHECK(run_subcommand("coefficients", cfg, ".", dir) == 0);
    CHECK(std::ifstream(dir + "/coefficients.csv").good());
    CHECK(std::ifstream(dir + "/kappa.csv").good());
    CHECK(std::ifstream(dir + "/summary.json").good());
  }
  SUBCASE("transport") {
    RunConfig fast = cfg;
    fast.numerics.output_grid = 8;
    CHECK(run_subcommand("transport", fast, ".", dir) == 0);
    std::ifstream in(dir + "/powers.csv");
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "z,side,sector,j,mean_power");
    // 17 significant digits on data cells
    std::string row;
    std::getline(in, row);
    CHECK(row.size() > 20);
    // the emitted manifest's config text re-parses to the same RunConfig
    std::ifstream mf(dir + "/manifest.json");
    REQUIRE(mf.good());
    auto j = nlohmann::json::parse(mf);
    RunConfig back = parse_config(j["config_text"].get<std::string>());
    CHECK(back == fast);
    CHECK(j["config_hash"].get<std::string>() == config_hash(fast));
    CHECK(j["kappa_sigma2_second_sum"].get<bool>());
  }
  SUBCASE("montecarlo") {
    CHECK(run_subcommand("montecarlo", cfg, ".", dir) == 0);
    CHECK(std::ifstream(dir + "/ensemble.csv").good());
    CHECK(std::ifstream(dir + "/compare.json").good());
  }
}
