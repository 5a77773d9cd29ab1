#include "dbc/study.hpp"

#include "dbc/manufactured.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dbc {

double StudyConfig::omega() const { return static_cast<double>(omega_num) / omega_den * std::numbers::pi; }

void StudyConfig::validate() const {
  if (omega_den <= 0 || omega_num <= 0) throw std::invalid_argument("omega numerator and denominator must be positive");
  const double w = omega();
  if (!(w >= 0.5 * std::numbers::pi - 1e-14 && w < std::numbers::pi))
    throw std::invalid_argument("omega must lie in [pi/2, pi)");
  if (levels < 2) throw std::invalid_argument("a study needs at least 2 levels");
  if (start_level < 0) throw std::invalid_argument("start level must be nonnegative");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(q_a <= 0.0 && 0.0 <= q_b)) throw std::invalid_argument("bounds must satisfy q_a <= 0 <= q_b");
  if (!(perturb_sigma >= 0.0 && perturb_sigma <= 0.3)) throw std::invalid_argument("perturbation must lie in [0, 0.3]");
  if (!(kappa >= 1.0)) throw std::invalid_argument("kappa must be at least 1");
  if (!(tol_grad > 0.0)) throw std::invalid_argument("tol_grad must be positive");
}

Mesh study_mesh(std::shared_ptr<const HalfSpaceDomain> domain, int level, double sigma, std::uint64_t seed) {
  Mesh mesh = build_prism_mesh(std::move(domain), level);
  if (sigma > 0.0) mesh = perturb_interior(mesh, sigma, seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(level));
  return mesh;
}

namespace {

// Yields the meshes of levels start .. start + count - 1, refining in place.
template <typename Fn>
void for_each_level(std::shared_ptr<const HalfSpaceDomain> domain, int start, int count, double sigma,
                    std::uint64_t seed, Fn&& fn) {
  Mesh base = build_prism_mesh(domain, start);
  for (int l = start; l < start + count; ++l) {
    if (l > start) base = refine_uniform(base);
    if (sigma > 0.0)
      fn(perturb_interior(base, sigma, seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(l)));
    else
      fn(Mesh(base));
  }
}

} // namespace

std::vector<ConvergenceRecord> run_study(const StudyConfig& config,
                                         const std::function<void(const ConvergenceRecord&)>& on_level) {
  config.validate();
  const auto exact = exact_fields(config.omega());
  auto domain = std::make_shared<const HalfSpaceDomain>(make_prism_domain(config.omega()));
  if (!config.vtk_dir.empty()) std::filesystem::create_directories(config.vtk_dir);

  std::vector<ConvergenceRecord> records;
  std::vector<double> hs, eq, eu;
  for_each_level(domain, config.start_level, config.levels, config.perturb_sigma, config.seed, [&](Mesh mesh) {
    const auto t0 = std::chrono::steady_clock::now();
    const int level = mesh.level;
    ProblemData data;
    data.alpha = config.alpha;
    data.q_a = config.q_a;
    data.q_b = config.q_b;
    data.source = exact.source_field();
    data.desired_state = exact.desired_state_field();
    const ControlProblem problem(std::move(mesh), std::move(data));

    OptimizerConfig opt;
    opt.tol_grad = config.tol_grad;
    opt.control_concept = config.control_concept;
    const Solution solution = solve_control(problem, opt);

    ConvergenceRecord rec;
    rec.level = level;
    rec.h = problem.mesh().h;
    rec.ndof_total = problem.mesh().num_vertices();
    rec.ndof_boundary = problem.dofs().num_boundary();
    rec.err_q_L2 = control_error(problem, solution, exact.control_field(), 4);
    rec.err_u_L2 = integrate_L2_error_domain(problem.mesh(), solution.state, exact.state_field(),
                                             problem.settings().quad_degree);
    rec.cg_iters_total = problem.cg_iterations();

    hs.push_back(rec.h);
    eq.push_back(rec.err_q_L2);
    eu.push_back(rec.err_u_L2);
    if (records.size() >= 1) {
      rec.rate_q = compute_rates(std::span(eq).last(2), std::span(hs).last(2))[1];
      rec.rate_u = compute_rates(std::span(eu).last(2), std::span(hs).last(2))[1];
    }

    if (!config.vtk_dir.empty()) {
      const PointField fields[] = {{"state", std::span<const double>(solution.state.data(), solution.state.size())},
                                   {"adjoint", std::span<const double>(solution.adjoint.data(), solution.adjoint.size())}};
      write_vtk(problem.mesh(), config.vtk_dir / ("level_" + std::to_string(level) + ".vtk"), fields);
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    records.push_back(rec);
    if (!config.output.empty()) write_csv(records, config.output);
    if (on_level) on_level(rec);
  });
  return records;
}

std::vector<std::optional<double>> compute_rates(std::span<const double> errors, std::span<const double> hs) {
  if (errors.size() != hs.size()) throw std::invalid_argument("errors and mesh sizes differ in length");
  std::vector<std::optional<double>> rates(errors.size());
  for (std::size_t l = 1; l < errors.size(); ++l) {
    if (!(errors[l - 1] > 0.0 && errors[l] > 0.0) || hs[l - 1] == hs[l]) continue;
    rates[l] = std::log(errors[l - 1] / errors[l]) / std::log(hs[l - 1] / hs[l]);
  }
  return rates;
}

std::string format_scientific(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", value);
  std::string s(buf);
  const auto e = s.find('e');
  if (e == std::string::npos) return s; // inf or nan
  const char sign = s[e + 1];
  std::size_t digits = e + 2;
  while (digits + 1 < s.size() && s[digits] == '0') ++digits;
  return s.substr(0, e + 1) + sign + s.substr(digits);
}

const char* const csv_header = "level,h,ndof_total,ndof_boundary,err_q_L2,err_u_L2,rate_q,rate_u,cg_iters_total,wall_seconds";

std::string format_csv(const std::vector<ConvergenceRecord>& records) {
  std::string out = csv_header;
  out += '\n';
  const auto opt = [](const std::optional<double>& v) { return v ? format_scientific(*v) : std::string(); };
  for (const auto& r : records) {
    out += std::to_string(r.level) + ',' + format_scientific(r.h) + ',' + std::to_string(r.ndof_total) + ',' +
           std::to_string(r.ndof_boundary) + ',' + format_scientific(r.err_q_L2) + ',' +
           format_scientific(r.err_u_L2) + ',' + opt(r.rate_q) + ',' + opt(r.rate_u) + ',' +
           std::to_string(r.cg_iters_total) + ',' + format_scientific(r.wall_seconds) + '\n';
  }
  return out;
}

void write_csv(const std::vector<ConvergenceRecord>& records, const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");
  file << format_csv(records);
  file.flush();
  if (!file) throw std::runtime_error("failed writing " + path.string());
}

std::vector<ConvergenceRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != csv_header) throw std::runtime_error("missing or unexpected CSV header");
  std::vector<ConvergenceRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 10) throw std::runtime_error("CSV row with " + std::to_string(cells.size()) + " fields");
    const auto opt = [](const std::string& c) { return c.empty() ? std::optional<double>() : std::stod(c); };
    ConvergenceRecord r;
    r.level = std::stoi(cells[0]);
    r.h = std::stod(cells[1]);
    r.ndof_total = std::stol(cells[2]);
    r.ndof_boundary = std::stol(cells[3]);
    r.err_q_L2 = std::stod(cells[4]);
    r.err_u_L2 = std::stod(cells[5]);
    r.rate_q = opt(cells[6]);
    r.rate_u = opt(cells[7]);
    r.cg_iters_total = std::stol(cells[8]);
    r.wall_seconds = std::stod(cells[9]);
    records.push_back(r);
  }
  return records;
}

std::vector<ConvergenceRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << file.rdbuf();
  return parse_csv(buf.str());
}

std::vector<StateErrorRecord> run_state_study(double omega, int start_level, int levels, double sigma,
                                              std::uint64_t seed) {
  const auto exact = exact_fields(omega);
  auto domain = std::make_shared<const HalfSpaceDomain>(make_prism_domain(omega));
  std::vector<StateErrorRecord> out;
  for_each_level(domain, start_level, levels, sigma, seed, [&](Mesh mesh) {
    ProblemData data;
    data.source = exact.source_field();
    const ControlProblem problem(std::move(mesh), std::move(data));
    const VectorXd q = problem.boundary_projection(exact.control_field());
    const VectorXd u = problem.solve_state(q);
    out.push_back({problem.mesh().level, problem.mesh().h,
                   integrate_L2_error_domain(problem.mesh(), u, exact.state_field(), problem.settings().quad_degree)});
  });
  return out;
}

std::vector<StabilityRecord> run_stability_study(double omega, int start_level, int levels, double kappa,
                                                 const ScalarField& q) {
  auto domain = std::make_shared<const HalfSpaceDomain>(make_prism_domain(omega));
  std::vector<StabilityRecord> out;
  for_each_level(domain, start_level, levels, 0.0, 0, [&](Mesh mesh) {
    const ControlProblem problem(std::move(mesh), ProblemData{});
    const VectorXd qh = problem.boundary_projection(q);
    const VectorXd u = problem.solve_state_homogeneous(qh);
    out.push_back({problem.mesh().level, problem.mesh().h, weighted_gradient_norm(problem.mesh(), u, kappa),
                   problem.boundary_norm(qh)});
  });
  return out;
}

} // namespace dbc
