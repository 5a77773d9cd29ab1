#include "dbc/study.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace dbc;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::filesystem::path temp(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

ConvergenceRecord sample(int level) {
  ConvergenceRecord r;
  r.level = level;
  r.h = 0.5 / (1 << level);
  r.ndof_total = 100 * (level + 1);
  r.ndof_boundary = 40 * (level + 1);
  r.err_q_L2 = 0.0123456789 / (1 << level);
  r.err_u_L2 = 3.14159e-5 / (1 << level);
  r.cg_iters_total = 17 + level;
  r.wall_seconds = 0.25;
  return r;
}

} // namespace

TEST_CASE("observed rates") {
  const std::vector<double> h{0.1, 0.05};
  CHECK(*compute_rates(std::vector<double>{1e-2, 2.5e-3}, h)[1] == doctest::Approx(2.0));
  CHECK(*compute_rates(std::vector<double>{1e-2, 5e-3}, h)[1] == doctest::Approx(1.0));
  CHECK(*compute_rates(std::vector<double>{1e-2, 1e-2}, h)[1] == doctest::Approx(0.0));
  const auto r = compute_rates(std::vector<double>{1.0, 0.5, 0.25}, std::vector<double>{1.0, 0.5, 0.25});
  CHECK_FALSE(r[0].has_value());
  CHECK(*r[2] == doctest::Approx(1.0));
  CHECK_THROWS_AS(compute_rates(std::vector<double>{1.0}, h), std::invalid_argument);
}

TEST_CASE("scientific number format") {
  CHECK(format_scientific(0.0123456) == "1.234560e-2");
  CHECK(format_scientific(1.0) == "1.000000e+0");
  CHECK(format_scientific(123456.0) == "1.234560e+5");
  CHECK(format_scientific(-2.5e-12) == "-2.500000e-12");
  CHECK(format_scientific(0.0) == "0.000000e+0");
  CHECK(format_scientific(1e300) == "1.000000e+300");
}

TEST_CASE("CSV writing and parsing") {
  SUBCASE("empty record list") {
    CHECK(format_csv({}) == std::string(csv_header) + "\n");
  }
  SUBCASE("one record has empty rate fields") {
    const std::string text = format_csv({sample(0)});
    CHECK(text == std::string(csv_header) + "\n0,5.000000e-1,100,40,1.234568e-2,3.141590e-5,,,17,2.500000e-1\n");
  }
  SUBCASE("round trip through a file") {
    std::vector<ConvergenceRecord> recs{sample(2), sample(3)};
    recs[1].rate_q = 0.83333333;
    recs[1].rate_u = 1.5;
    const auto path = temp("dbc_test_roundtrip.csv");
    write_csv(recs, path);
    const auto back = read_csv(path);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(back[i].level == recs[i].level);
      CHECK(back[i].ndof_total == recs[i].ndof_total);
      CHECK(back[i].ndof_boundary == recs[i].ndof_boundary);
      CHECK(back[i].cg_iters_total == recs[i].cg_iters_total);
      CHECK(back[i].h == doctest::Approx(recs[i].h).epsilon(1e-6));
      CHECK(back[i].err_q_L2 == doctest::Approx(recs[i].err_q_L2).epsilon(1e-6));
      CHECK(back[i].err_u_L2 == doctest::Approx(recs[i].err_u_L2).epsilon(1e-6));
      CHECK(back[i].rate_q.has_value() == recs[i].rate_q.has_value());
    }
    CHECK(*back[1].rate_q == doctest::Approx(0.83333333).epsilon(1e-6));
    CHECK(format_csv(back) == format_csv(std::vector<ConvergenceRecord>(back)));
    std::filesystem::remove(path);
  }
  SUBCASE("malformed input") {
    CHECK_THROWS(parse_csv("level,h\n"));
    CHECK_THROWS(parse_csv(std::string(csv_header) + "\n1,2,3\n"));
  }
}

TEST_CASE("study configuration validation") {
  StudyConfig c;
  CHECK_NOTHROW(c.validate());
  c.levels = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.levels = 2;
  c.omega_num = 1;
  c.omega_den = 3;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.omega_den = 2;
  c.kappa = 0.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("small study: monotone columns, determinism and VTK output") {
  StudyConfig c;
  c.omega_num = 2;
  c.omega_den = 3;
  c.levels = 3;
  c.start_level = 1;
  c.perturb_sigma = 0.2;
  c.seed = 5;
  c.output = temp("dbc_test_study_a.csv");
  c.vtk_dir = temp("dbc_test_study_vtk");
  const auto recs = run_study(c);
  REQUIRE(recs.size() == 3);
  for (std::size_t i = 1; i < recs.size(); ++i) {
    CHECK(recs[i].h < recs[i - 1].h);
    CHECK(recs[i].ndof_total > recs[i - 1].ndof_total);
    CHECK(recs[i].rate_q.has_value());
  }
  CHECK_FALSE(recs[0].rate_q.has_value());
  for (const auto& r : recs) {
    CHECK(r.err_q_L2 >= 0.0);
    CHECK(r.err_u_L2 >= 0.0);
    CHECK(r.wall_seconds >= 0.0);
  }
  CHECK(std::filesystem::exists(c.vtk_dir / "level_3.vtk"));

  StudyConfig c2 = c;
  c2.output = temp("dbc_test_study_b.csv");
  c2.vtk_dir.clear();
  run_study(c2);
  auto strip_time = [](std::vector<ConvergenceRecord> r) {
    for (auto& x : r) x.wall_seconds = 0.0;
    return format_csv(r);
  };
  CHECK(strip_time(read_csv(c.output)) == strip_time(read_csv(c2.output)));
  CHECK(slurp(c.output).find('\r') == std::string::npos);

  std::filesystem::remove(c.output);
  std::filesystem::remove(c2.output);
  std::filesystem::remove_all(c.vtk_dir);
}

TEST_CASE("partial CSV survives a failing level") {
  StudyConfig c;
  c.levels = 3;
  c.start_level = 1;
  c.output = temp("dbc_test_study_partial.csv");
  int seen = 0;
  CHECK_THROWS_AS(run_study(c,
                            [&](const ConvergenceRecord&) {
                              if (++seen == 2) throw std::runtime_error("stop");
                            }),
                  std::runtime_error);
  CHECK(read_csv(c.output).size() == 2);
  std::filesystem::remove(c.output);
}

TEST_CASE("stability study ratios stay bounded") {
  const ScalarField q = [](const Vector3d& x) { return 1.0 + x[0] * x[1] + x[2] * x[2]; };
  const auto rec = run_stability_study(3 * std::numbers::pi / 4, 1, 3, 1.0, q);
  REQUIRE(rec.size() == 3);
  for (const auto& r : rec) CHECK(std::isfinite(r.ratio()));
  CHECK(rec.back().ratio() <= 1.5 * rec.front().ratio());
}
