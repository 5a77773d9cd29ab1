#include "dbc/selftest.hpp"
#include "dbc/study.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet boundary control convergence studies on edge-singular prisms"};
  app.require_subcommand(1);

  dbc::StudyConfig config;
  std::string concept_name = "p1";
  std::string out = "study.csv";
  std::string vtk_dir;

  auto* study = app.add_subcommand("study", "run a mesh-refinement study for the manufactured benchmark");
  study->add_option("--omega-num", config.omega_num, "edge angle numerator (omega = num/den * pi)")
      ->capture_default_str();
  study->add_option("--omega-den", config.omega_den, "edge angle denominator")->capture_default_str();
  study->add_option("--levels", config.levels, "number of refinement levels (>= 2)")->capture_default_str();
  study->add_option("--start-level", config.start_level, "refinement level of the coarsest mesh")
      ->capture_default_str();
  study->add_option("--concept", concept_name, "control discretization")
      ->check(CLI::IsMember({"variational", "p1"}))
      ->capture_default_str();
  study->add_option("--alpha", config.alpha, "control cost weight")->capture_default_str();
  study->add_option("--qa", config.q_a, "lower control bound")->capture_default_str();
  study->add_option("--qb", config.q_b, "upper control bound")->capture_default_str();
  study->add_option("--perturb", config.perturb_sigma, "interior vertex perturbation, fraction of local h")
      ->capture_default_str();
  study->add_option("--seed", config.seed, "perturbation seed")->capture_default_str();
  study->add_option("--kappa", config.kappa, "weight parameter kappa >= 1")->capture_default_str();
  study->add_option("--tol", config.tol_grad, "relative optimality tolerance")->capture_default_str();
  study->add_option("--out", out, "CSV output path")->capture_default_str();
  study->add_option("--vtk-dir", vtk_dir, "directory for per-level VTK files");

  auto* selftest = app.add_subcommand("selftest", "run the built-in property checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*selftest) return dbc::run_selftest(std::cout) == 0 ? 0 : 1;

    config.control_concept = dbc::parse_concept(concept_name);
    config.output = out;
    config.vtk_dir = vtk_dir;
    std::cout << dbc::csv_header << '\n';
    dbc::run_study(config, [](const dbc::ConvergenceRecord& r) {
      std::cout << dbc::format_csv({r}).substr(std::string(dbc::csv_header).size() + 1) << std::flush;
    });
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
