#pragma once

#include "dbc/control_problem.hpp"
#include "dbc/optimizer.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dbc {

struct StudyConfig {
  int omega_num = 3; ///< omega = omega_num / omega_den * pi
  int omega_den = 4;
  int levels = 4;      ///< number of refinement levels, at least 2
  int start_level = 3; ///< refinement level of the coarsest mesh in the sequence
  Concept control_concept = Concept::p1;
  double alpha = 1.0;
  double q_a = -1e3;
  double q_b = 1e3;
  double perturb_sigma = 0.0;
  std::uint64_t seed = 0;
  double kappa = 1.0;
  double tol_grad = 1e-10;
  std::filesystem::path output;  ///< CSV target; empty disables writing
  std::filesystem::path vtk_dir; ///< empty disables VTK export

  double omega() const;
  /// Throws std::invalid_argument on an unusable configuration.
  void validate() const;
};

struct ConvergenceRecord {
  int level = 0;
  double h = 0.0;
  long ndof_total = 0;
  long ndof_boundary = 0;
  double err_q_L2 = 0.0;
  double err_u_L2 = 0.0;
  std::optional<double> rate_q;
  std::optional<double> rate_u;
  long cg_iters_total = 0;
  double wall_seconds = 0.0;
};

/// Mesh of the study at `level`: uniform refinement of the fan mesh, then an
/// independent perturbation of the interior vertices when sigma > 0.
Mesh study_mesh(std::shared_ptr<const HalfSpaceDomain> domain, int level, double sigma, std::uint64_t seed);

/// Solves the manufactured benchmark on every level and records errors and
/// observed rates. The CSV (if configured) is rewritten after each level, so a
/// failure leaves the completed levels on disk.
std::vector<ConvergenceRecord> run_study(const StudyConfig& config,
                                         const std::function<void(const ConvergenceRecord&)>& on_level = {});

/// rate_l = ln(e_{l-1} / e_l) / ln(h_{l-1} / h_l); the first entry is empty.
std::vector<std::optional<double>> compute_rates(std::span<const double> errors, std::span<const double> hs);

/// "%.6e" with the exponent written without padding: 1.234560e-2, 1.000000e+0.
std::string format_scientific(double value);

extern const char* const csv_header;
std::string format_csv(const std::vector<ConvergenceRecord>& records);
void write_csv(const std::vector<ConvergenceRecord>& records, const std::filesystem::path& path);
std::vector<ConvergenceRecord> parse_csv(const std::string& text);
std::vector<ConvergenceRecord> read_csv(const std::filesystem::path& path);

/// State error for boundary data P_h q of the exact control with the
/// benchmark source, on levels start_level .. start_level + levels - 1.
struct StateErrorRecord {
  int level = 0;
  double h = 0.0;
  double err_u_L2 = 0.0;
};
std::vector<StateErrorRecord> run_state_study(double omega, int start_level, int levels, double sigma = 0.0,
                                              std::uint64_t seed = 0);

/// ||rho_tilde^{1/2} grad u_h|| / ||P_h q||_{L2(boundary)} with u_h the
/// discrete harmonic extension of P_h q, per level.
struct StabilityRecord {
  int level = 0;
  double h = 0.0;
  double weighted_norm = 0.0;
  double boundary_norm = 0.0;
  double ratio() const { return weighted_norm / boundary_norm; }
};
std::vector<StabilityRecord> run_stability_study(double omega, int start_level, int levels, double kappa,
                                                 const ScalarField& q);

} // namespace dbc
