#include "dmpcut/experiment.hpp"
#include "dmpcut/analytics.hpp"
#include "dmpcut/convexproj.hpp"
#include "dmpcut/errors.hpp"
#include "dmpcut/expression.hpp"
#include "dmpcut/plap.hpp"
#include "dmpcut/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace dmpcut {

namespace {

class IoError : public Error {
public:
  using Error::Error;
};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos)
    return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    out.push_back(trim(item));
  return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); }

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    bad(key, "expected a number, got '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(d))
    bad(key, "expected a number, got '" + v + "'");
  return d;
}

long long to_integer(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception&) {
    bad(key, "expected an integer, got '" + v + "'");
  }
  if (used != v.size())
    bad(key, "expected an integer, got '" + v + "'");
  return i;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes")
    return true;
  if (v == "false" || v == "0" || v == "no")
    return false;
  bad(key, "expected true or false, got '" + v + "'");
}

ExperimentKind parse_experiment(const std::string& v) {
  for (ExperimentKind k : {ExperimentKind::scalar_rd, ExperimentKind::scalar_laplace, ExperimentKind::vector_laplace,
                           ExperimentKind::p_laplace, ExperimentKind::dmp_search, ExperimentKind::convergence})
    if (to_string(k) == v)
      return k;
  bad("experiment", "unknown experiment '" + v + "'");
}

CutoffMode parse_mode(const std::string& v) {
  if (v == "positive_part_sup")
    return CutoffMode::positive_part_sup;
  if (v == "plain_sup")
    return CutoffMode::plain_sup;
  bad("cutoff.mode", "expected positive_part_sup or plain_sup, got '" + v + "'");
}

bool is_spike(const std::string& text) { return text.rfind("spike", 0) == 0; }

struct Spike {
  int vertex;
  double amplitude;
};

Spike parse_spike(const std::string& key, const std::string& text) {
  std::istringstream ss(text);
  std::string word;
  long long vertex = -1;
  double amplitude = 0.0;
  std::string rest;
  if (!(ss >> word >> vertex >> amplitude) || word != "spike" || (ss >> rest) || vertex < 0 ||
      !std::isfinite(amplitude))
    bad(key, "expected 'spike <vertex> <amplitude>', got '" + text + "'");
  return {static_cast<int>(vertex), amplitude};
}

void check_expression(const std::string& key, const std::string& text) {
  try {
    Expression::parse(text);
  } catch (const ConfigError& e) {
    bad(key, e.what());
  }
}

bool identically_zero(const std::string& text) {
  const Expression e = Expression::parse(text);
  return e.is_constant() && e({0.0, 0.0}) == 0.0;
}

ScalarFunction to_function(const std::string& text) {
  const Expression e = Expression::parse(text);
  return [e](const Eigen::Vector2d& x) { return e(x); };
}

std::string format_double(double v) { return format_number(v); }

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.close();
  if (!out)
    throw IoError("failed writing '" + path.string() + "'");
}

// Sign conditions at vertices and centroids, before anything is assembled.
void check_sign_conditions(const ProblemSpec& spec, const Mesh& mesh) {
  auto check = [&](const Eigen::Vector2d& x) {
    if (spec.c(x) < 0.0)
      bad("problem.c", "sign condition c >= 0 fails at (" + format_double(x.x()) + ", " + format_double(x.y()) +
                           "): c = " + format_double(spec.c(x)));
    if (spec.f(x) > 0.0)
      bad("problem.f", "sign condition f <= 0 fails at (" + format_double(x.x()) + ", " + format_double(x.y()) +
                           "): f = " + format_double(spec.f(x)));
  };
  for (Index v = 0; v < mesh.vertex_count(); ++v)
    check(mesh.vertex(v));
  for (Index t = 0; t < mesh.triangle_count(); ++t)
    check(triangle_geometry(mesh, t).point(Eigen::Vector3d::Constant(1.0 / 3.0)));
}

std::string mesh_columns_header() { return "experiment,mesh_kind,n,perturbation,seed,degree"; }

std::string mesh_columns(const ExperimentConfig& cfg) {
  std::ostringstream s;
  s << to_string(cfg.experiment) << ',' << (cfg.mesh_file ? "file" : to_string(cfg.mesh.kind)) << ',' << cfg.mesh.n
    << ',' << format_double(cfg.mesh.perturbation) << ',' << cfg.mesh.seed << ',' << cfg.degree;
  return s.str();
}

struct Outcome {
  std::ostringstream report;
  std::ostringstream csv;
  std::vector<Inequality> checks;
  std::vector<std::pair<std::string, std::string>> files; // extra outputs
};

void write_checks(Outcome& out) {
  for (std::size_t i = 0; i < out.checks.size(); ++i) {
    const Inequality& q = out.checks[i];
    out.report << "check." << i << ".name=" << q.name << '\n'
               << "check." << i << ".lhs=" << format_double(q.lhs) << '\n'
               << "check." << i << ".rhs=" << format_double(q.rhs) << '\n'
               << "check." << i << ".holds=" << (q.holds() ? 1 : 0) << '\n';
  }
}

std::string violation_heatmap(const FEFunction& U, double level, const std::string& title) {
  const Mesh& mesh = U.space().mesh();
  const PointLocator locator(mesh);
  const auto grid = sample_grid(mesh, kViolationGrid);
  Eigen::MatrixXd values(kViolationGrid, kViolationGrid);
  for (int j = 0; j < kViolationGrid; ++j)
    for (int i = 0; i < kViolationGrid; ++i) {
      const auto loc = locator.locate(grid[static_cast<std::size_t>(j * kViolationGrid + i)]);
      values(j, i) = loc ? std::max(0.0, eval(U, loc->triangle, loc->barycentric)(0) - level)
                         : std::numeric_limits<double>::quiet_NaN();
    }
  std::ostringstream s;
  svg::heatmap(s, title, values);
  return s.str();
}

void run_scalar(const ExperimentConfig& cfg, Outcome& out, std::ostream& log) {
  auto mesh = std::make_shared<const Mesh>(build_mesh(cfg));
  const ProblemSpec spec = build_problem(cfg, *mesh);
  auto space = make_space(mesh, cfg.degree);
  SolveInfo info;
  const FEFunction U = solve(assemble(space, spec), cfg.solver_tol, &info);
  log << "solved " << space->dof_count() << " dofs in " << info.iterations << " CG iterations\n";
  const ReferenceSolution ref = reference_solution(mesh, spec, cfg.reference_level);
  log << "reference: level " << cfg.reference_level << ", " << ref.solution.space().dof_count()
      << " P2 dofs, estimate " << ref.error_estimate << '\n';
  const EnergyReport report = certify(U, spec, cfg.mode, &ref);
  const CutoffField Ustar = make_cutoff(U, cfg.mode);

  out.checks = report_inequalities(report);
  out.checks.push_back({"dmp_violation(U*) <= 0", dmp_violation(Ustar), 0.0});

  const FEFunction U_fine = ref.prolong(U);
  const auto grid = sample_grid(*mesh, kViolationGrid);
  std::string pointwise = "skipped (reference exceeds the level)";
  try {
    const bool ok = pointwise_error_bound_check(ref.solution, U_fine, Ustar.level(), grid);
    out.checks.push_back({"|u - U*| <= |u - U| pointwise", ok ? 0.0 : 1.0, 0.0});
    pointwise = ok ? "holds" : "fails";
  } catch (const PreconditionError&) {
  }

  out.report << "cg_iterations=" << info.iterations << '\n' << "cutoff.mode=" << to_string(cfg.mode) << '\n';
  report.write_key_values(out.report, "report.");
  out.report << "pointwise_check=" << pointwise << '\n';
  out.csv << mesh_columns_header() << ",cg_iterations," << EnergyReport::csv_header() << '\n'
          << mesh_columns(cfg) << ',' << info.iterations << ',';
  report.write_csv_row(out.csv);
  out.csv << '\n';
  if (cfg.plots)
    out.files.push_back({"violation.svg", violation_heatmap(U, Ustar.level(), "(U - M)+ before cutoff")});
}

void run_vector(const ExperimentConfig& cfg, Outcome& out, std::ostream& log) {
  auto mesh = std::make_shared<const Mesh>(build_mesh(cfg));
  auto space = make_space(mesh, 1);
  const ScalarFunction g1 = boundary_function(cfg.g1, *mesh), g2 = boundary_function(cfg.g2, *mesh);
  FEFunction harmonic = solve_harmonic_vector(
      space, [&](const Eigen::Vector2d& x) { return Eigen::Vector2d(g1(x), g2(x)).eval(); }, 2, cfg.solver_tol);

  Eigen::MatrixXd values = harmonic.coefficients();
  const std::vector<Index> interior = space->free_dofs();
  std::mt19937_64 rng(cfg.vector_seed);
  for (int s = 0; s < cfg.vector_spikes && !interior.empty(); ++s) {
    const Index v = interior[rng() % interior.size()];
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    values(v, 0) += cfg.spike_amplitude * std::cos(angle);
    values(v, 1) += cfg.spike_amplitude * std::sin(angle);
  }
  const FEFunction U(space, values);
  const ProjectedField Ustar = make_projected(U, cfg.include_origin);
  int outside = 0;
  for (Index v = 0; v < values.rows(); ++v)
    outside += Ustar.region().contains(values.row(v).transpose(), 0.0) ? 0 : 1;
  log << "hull with " << Ustar.region().vertices().size() << " vertices, " << outside << " dofs outside\n";

  const double dU = integrate_vector(U, VectorIntegral::dirichlet_energy);
  const Integral dUs = integrate_projected(Ustar, VectorIntegral::dirichlet_energy);
  const double lU = integrate_vector(U, VectorIntegral::l2_sq);
  const Integral lUs = integrate_projected(Ustar, VectorIntegral::l2_sq);
  out.checks.push_back(
      {"int |grad U*|^2 <= int |grad U|^2", dUs.value, dU + dUs.error_estimate + 1e-12 * (1.0 + dU)});
  if (cfg.include_origin) {
    out.checks.push_back({"int |U*|^2 <= int |U|^2", lUs.value, lU + lUs.error_estimate + 1e-12 * (1.0 + lU)});
    double worst = -std::numeric_limits<double>::infinity();
    const PointLocator locator(*mesh);
    for (const Eigen::Vector2d& x : sample_grid(*mesh, kViolationGrid))
      if (const auto loc = locator.locate(x))
        worst = std::max(worst, Ustar.eval(loc->triangle, loc->barycentric).norm() -
                                    eval(U, loc->triangle, loc->barycentric).norm());
    out.checks.push_back({"|U*| <= |U| on the sample grid", worst, 1e-12});
  }
  out.report << "dirichlet_U=" << format_double(dU) << '\n'
             << "dirichlet_Ustar=" << format_double(dUs.value) << '\n'
             << "l2sq_U=" << format_double(lU) << '\n'
             << "l2sq_Ustar=" << format_double(lUs.value) << '\n'
             << "quadrature_error_estimate=" << format_double(dUs.error_estimate + lUs.error_estimate) << '\n'
             << "hull_vertices=" << Ustar.region().vertices().size() << '\n'
             << "outside_dofs=" << outside << '\n';
  out.csv << mesh_columns_header()
          << ",dirichlet_U,dirichlet_Ustar,l2sq_U,l2sq_Ustar,quadrature_error_estimate,hull_vertices,outside_dofs\n"
          << mesh_columns(cfg) << ',' << format_double(dU) << ',' << format_double(dUs.value) << ','
          << format_double(lU) << ',' << format_double(lUs.value) << ','
          << format_double(dUs.error_estimate + lUs.error_estimate) << ',' << Ustar.region().vertices().size()
          << ',' << outside << '\n';
}

void run_plaplace(const ExperimentConfig& cfg, Outcome& out, std::ostream& log) {
  auto mesh = std::make_shared<const Mesh>(build_mesh(cfg));
  const ProblemSpec linear = build_problem(cfg, *mesh);
  PLaplaceSpec spec;
  spec.p = cfg.p;
  spec.f = linear.f;
  spec.g = linear.g;
  spec.epsilon = cfg.epsilon;
  const PLaplaceCompareReport r = plap_cutoff_compare(make_space(mesh, cfg.degree), spec, cfg.solver_tol,
                                                      cfg.reference_level);
  log << "p = " << cfg.p << ": " << r.iterations << " Kacanov iterations\n";
  out.checks.push_back({"J_p(U*) <= J_p(U)", r.energy_Ustar,
                        r.energy_U + 1e-9 * (1.0 + std::abs(r.energy_U)) + r.quadrature_error});
  const std::pair<const char*, double> rows[] = {
      {"p", r.p},
      {"level", r.level},
      {"energy_U", r.energy_U},
      {"energy_Ustar", r.energy_Ustar},
      {"energy_reference", r.energy_reference},
      {"gap_U", r.gap_U},
      {"gap_Ustar", r.gap_Ustar},
      {"quasi_norm_U", r.quasi_norm_U},
      {"quasi_norm_Ustar", r.quasi_norm_Ustar},
      {"quadrature_error", r.quadrature_error},
      {"iterations", r.iterations}};
  out.csv << mesh_columns_header();
  for (const auto& [key, value] : rows) {
    out.report << "report." << key << '=' << format_double(value) << '\n';
    out.csv << ',' << key;
  }
  out.csv << '\n' << mesh_columns(cfg);
  for (const auto& row : rows)
    out.csv << ',' << format_double(row.second);
  out.csv << '\n';
}

void run_search(const ExperimentConfig& cfg, Outcome& out, std::ostream& log) {
  const std::vector<SearchFixture> found = dmp_search(cfg);
  log << "search: " << found.size() << " violating fixtures\n";
  out.report << "trials=" << cfg.trials << '\n' << "families=";
  for (std::size_t i = 0; i < cfg.search_families.size(); ++i)
    out.report << (i ? "," : "") << to_string(cfg.search_families[i]);
  out.report << '\n'
             << "fixtures=" << found.size() << '\n'
             << "max_violation=" << format_double(found.empty() ? 0.0 : found.front().violation) << '\n';
  out.csv << "rank,mesh_kind,n,perturbation,seed,degree,vertex,amplitude,violation\n";
  for (std::size_t i = 0; i < found.size(); ++i) {
    const SearchFixture& fx = found[i];
    out.csv << i + 1 << ',' << to_string(fx.family.kind) << ',' << fx.family.n << ','
            << format_double(fx.family.perturbation) << ',' << fx.family.seed << ',' << cfg.degree << ','
            << fx.vertex << ',' << format_double(fx.amplitude) << ',' << format_double(fx.violation) << '\n';
    ExperimentConfig fixture = cfg;
    fixture.experiment = identically_zero(cfg.c) ? ExperimentKind::scalar_laplace : ExperimentKind::scalar_rd;
    fixture.mesh = fx.family;
    fixture.mesh_file.reset();
    fixture.g = "spike " + std::to_string(fx.vertex) + " " + format_double(fx.amplitude);
    std::ostringstream text;
    text << "# dmp_search fixture " << i + 1 << ", violation " << format_double(fx.violation) << '\n';
    write_config(text, fixture);
    std::ostringstream name;
    name << "fixtures/fixture_" << std::setw(3) << std::setfill('0') << i + 1 << ".cfg";
    out.files.push_back({name.str(), text.str()});
  }
}

void run_convergence(const ExperimentConfig& cfg, Outcome& out, std::ostream& log) {
  ExperimentConfig base_cfg = cfg;
  base_cfg.mesh.n = cfg.sizes.front();
  auto base = std::make_shared<const Mesh>(build_mesh(base_cfg));
  const ProblemSpec spec = build_problem(cfg, *base);
  const ReferenceSolution ref = reference_solution(base, spec, cfg.reference_level);
  log << "reference: level " << cfg.reference_level << ", estimate " << ref.error_estimate << '\n';

  std::vector<double> h, energy_err, l2_err;
  out.csv << "n,h,dofs,energy_err,l2_err,energy_rate,l2_rate\n";
  for (std::size_t k = 0; k < cfg.sizes.size(); ++k) {
    const int levels = static_cast<int>(k);
    auto mesh = std::make_shared<const Mesh>(refine(*base, levels).fine);
    auto space = make_space(mesh, cfg.degree);
    const FEFunction U = solve(assemble(space, spec), cfg.solver_tol);
    const ReferenceSolution view = reference_on(ref, mesh, cfg.reference_level - levels);
    const FEFunction U_fine = view.prolong(U);
    h.push_back(1.0 / cfg.sizes[k]);
    energy_err.push_back(std::sqrt(energy_norm_sq(FieldView(ref.solution), FieldView(U_fine), spec.c).value));
    l2_err.push_back(std::sqrt(l2_norm_sq(FieldView(ref.solution), FieldView(U_fine)).value));
    const double er = k ? std::log2(energy_err[k - 1] / energy_err[k]) : 0.0;
    const double lr = k ? std::log2(l2_err[k - 1] / l2_err[k]) : 0.0;
    out.csv << cfg.sizes[k] << ',' << format_double(h.back()) << ',' << space->dof_count() << ','
            << format_double(energy_err.back()) << ',' << format_double(l2_err.back()) << ','
            << format_double(er) << ',' << format_double(lr) << '\n';
  }
  // least-squares slope of log(err) against log(h)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double x = std::log(h[k]), y = std::log(energy_err[k]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double rate = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  for (std::size_t k = 1; k < h.size(); ++k)
    out.checks.push_back({"energy error decreases from n=" + std::to_string(cfg.sizes[k - 1]) + " to n=" +
                              std::to_string(cfg.sizes[k]),
                          energy_err[k], energy_err[k - 1]});
  out.checks.push_back({"energy-norm rate >= 0.9 * degree", 0.9 * cfg.degree, rate});
  out.report << "reference_error_estimate=" << format_double(ref.error_estimate) << '\n'
             << "energy_rate=" << format_double(rate) << '\n';
  if (cfg.plots) {
    std::ostringstream plot;
    svg::line_plot(plot, "error against the reference", "h", "error",
                   {{"energy norm", h, energy_err}, {"L2", h, l2_err}});
    out.files.push_back({"convergence.svg", plot.str()});
  }
}

} // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
  case ExperimentKind::scalar_rd: return "scalar_rd";
  case ExperimentKind::scalar_laplace: return "scalar_laplace";
  case ExperimentKind::vector_laplace: return "vector_laplace";
  case ExperimentKind::p_laplace: return "p_laplace";
  case ExperimentKind::dmp_search: return "dmp_search";
  case ExperimentKind::convergence: return "convergence";
  }
  return "?";
}

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  std::map<std::string, std::string> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ParseError(line_no, "empty key");
    if (!values.emplace(key, value).second)
      bad(key, "duplicate key (line " + std::to_string(line_no) + ")");
  }

  ExperimentConfig cfg;
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = values.find(key);
    if (it == values.end())
      return std::nullopt;
    std::string v = it->second;
    values.erase(it);
    if (v.empty())
      bad(key, "empty value");
    return v;
  };

  if (auto v = take("experiment"))
    cfg.experiment = parse_experiment(*v);
  if (auto v = take("mesh.kind")) {
    try {
      cfg.mesh.kind = parse_mesh_kind(*v);
    } catch (const ConfigError& e) {
      bad("mesh.kind", e.what());
    }
  }
  if (auto v = take("mesh.n")) {
    const long long n = to_integer("mesh.n", *v);
    if (n < 1 || n > 1024)
      bad("mesh.n", "must lie in [1, 1024]");
    cfg.mesh.n = static_cast<int>(n);
  }
  if (auto v = take("mesh.perturbation")) {
    cfg.mesh.perturbation = to_double("mesh.perturbation", *v);
    if (!(cfg.mesh.perturbation >= 0.0 && cfg.mesh.perturbation < 0.5))
      bad("mesh.perturbation", "must lie in [0, 0.5)");
  }
  if (auto v = take("mesh.seed")) {
    const long long s = to_integer("mesh.seed", *v);
    if (s < 0)
      bad("mesh.seed", "must be >= 0");
    cfg.mesh.seed = static_cast<std::uint64_t>(s);
  }
  if (auto v = take("mesh.file")) {
    std::filesystem::path p(*v);
    cfg.mesh_file = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  if (auto v = take("fe.degree")) {
    const long long d = to_integer("fe.degree", *v);
    if (d != 1 && d != 2)
      bad("fe.degree", "must be 1 or 2");
    cfg.degree = static_cast<int>(d);
  }
  for (auto [key, field] : {std::pair{"problem.c", &cfg.c}, {"problem.f", &cfg.f}}) {
    if (auto v = take(key)) {
      check_expression(key, *v);
      *field = *v;
    }
  }
  for (auto [key, field] : {std::pair{"problem.g", &cfg.g}, {"problem.g1", &cfg.g1}, {"problem.g2", &cfg.g2}}) {
    if (auto v = take(key)) {
      if (is_spike(*v))
        parse_spike(key, *v);
      else
        check_expression(key, *v);
      *field = *v;
    }
  }
  if (auto v = take("problem.p")) {
    cfg.p = to_double("problem.p", *v);
    if (!(cfg.p >= 1.2 && cfg.p <= 8.0))
      bad("problem.p", "must lie in [1.2, 8]");
  }
  if (auto v = take("problem.epsilon")) {
    cfg.epsilon = to_double("problem.epsilon", *v);
    if (cfg.epsilon < 0.0)
      bad("problem.epsilon", "must be >= 0");
  }
  const bool mode_set = values.count("cutoff.mode") > 0;
  if (auto v = take("cutoff.mode"))
    cfg.mode = parse_mode(*v);
  if (auto v = take("solver.tol")) {
    cfg.solver_tol = to_double("solver.tol", *v);
    if (!(cfg.solver_tol > 0.0 && cfg.solver_tol <= 1e-4))
      bad("solver.tol", "must lie in (0, 1e-4]");
  }
  const bool level_set = values.count("reference.level") > 0;
  if (auto v = take("reference.level")) {
    const long long l = to_integer("reference.level", *v);
    if (l < 0 || l > 7)
      bad("reference.level", "must lie in [0, 7]");
    cfg.reference_level = static_cast<int>(l);
  }
  if (auto v = take("output.dir"))
    cfg.output_dir = *v;
  if (auto v = take("output.plots"))
    cfg.plots = to_bool("output.plots", *v);
  if (auto v = take("vector.include_origin"))
    cfg.include_origin = to_bool("vector.include_origin", *v);
  if (auto v = take("vector.spikes")) {
    const long long s = to_integer("vector.spikes", *v);
    if (s < 0 || s > 1000)
      bad("vector.spikes", "must lie in [0, 1000]");
    cfg.vector_spikes = static_cast<int>(s);
  }
  if (auto v = take("vector.spike_amplitude"))
    cfg.spike_amplitude = to_double("vector.spike_amplitude", *v);
  if (auto v = take("vector.seed")) {
    const long long s = to_integer("vector.seed", *v);
    if (s < 0)
      bad("vector.seed", "must be >= 0");
    cfg.vector_seed = static_cast<std::uint64_t>(s);
  }
  if (auto v = take("search.families")) {
    cfg.search_families.clear();
    for (const std::string& name : split(*v, ',')) {
      try {
        cfg.search_families.push_back(parse_mesh_kind(name));
      } catch (const ConfigError& e) {
        bad("search.families", e.what());
      }
    }
    if (cfg.search_families.empty())
      bad("search.families", "needs at least one family");
  }
  if (auto v = take("search.trials")) {
    const long long t = to_integer("search.trials", *v);
    if (t < 0 || t > 10000)
      bad("search.trials", "must lie in [0, 10000]");
    cfg.trials = static_cast<int>(t);
  }
  if (auto v = take("search.top_k")) {
    const long long k = to_integer("search.top_k", *v);
    if (k < 0 || k > 10000)
      bad("search.top_k", "must lie in [0, 10000]");
    cfg.top_k = static_cast<int>(k);
  }
  if (auto v = take("search.amplitude"))
    cfg.search_amplitude = to_double("search.amplitude", *v);
  if (auto v = take("convergence.sizes")) {
    cfg.sizes.clear();
    for (const std::string& s : split(*v, ','))
      cfg.sizes.push_back(static_cast<int>(to_integer("convergence.sizes", s)));
    if (cfg.sizes.size() < 2)
      bad("convergence.sizes", "needs at least two sizes");
    for (std::size_t k = 1; k < cfg.sizes.size(); ++k)
      if (cfg.sizes[k] != 2 * cfg.sizes[k - 1])
        bad("convergence.sizes", "each size must double the previous one");
    if (cfg.sizes.front() < 1)
      bad("convergence.sizes", "sizes must be positive");
  }
  if (!values.empty())
    bad(values.begin()->first, "unknown key");

  // cross-field rules
  const bool no_reaction = identically_zero(cfg.c);
  switch (cfg.experiment) {
  case ExperimentKind::scalar_laplace:
    if (!no_reaction)
      bad("problem.c", "scalar_laplace has no reaction term; use scalar_rd");
    break;
  case ExperimentKind::scalar_rd:
    break;
  case ExperimentKind::vector_laplace:
    if (cfg.degree != 1)
      bad("fe.degree", "vector_laplace supports P1 only");
    if (!no_reaction)
      bad("problem.c", "vector_laplace has no reaction term");
    break;
  case ExperimentKind::p_laplace:
    if (!no_reaction)
      bad("problem.c", "p_laplace has no reaction term");
    if (mode_set && cfg.mode != CutoffMode::plain_sup)
      bad("cutoff.mode", "p_laplace uses plain_sup");
    cfg.mode = CutoffMode::plain_sup;
    if (!level_set)
      cfg.reference_level = 2;
    break;
  case ExperimentKind::dmp_search:
    break;
  case ExperimentKind::convergence: {
    if (cfg.mesh_file)
      bad("mesh.file", "convergence generates its meshes from mesh.kind");
    if (cfg.mesh.kind == MeshKind::obtuse_band && cfg.sizes.front() < 2)
      bad("convergence.sizes", "obtuse_band meshes need n >= 2");
    const int span = static_cast<int>(cfg.sizes.size()) - 1;
    if (!level_set)
      cfg.reference_level = std::min(7, span + 3);
    if (cfg.reference_level <= span)
      bad("reference.level", "must exceed the number of refinements (" + std::to_string(span) + ")");
    break;
  }
  }
  if (cfg.mode == CutoffMode::plain_sup && !no_reaction)
    bad("cutoff.mode", "plain_sup requires c = 0");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot read config '" + path.string() + "'");
  return parse_config(in, path.parent_path());
}

void write_config(std::ostream& out, const ExperimentConfig& cfg) {
  out << "experiment = " << to_string(cfg.experiment) << '\n';
  if (cfg.mesh_file)
    out << "mesh.file = " << cfg.mesh_file->string() << '\n';
  out << "mesh.kind = " << to_string(cfg.mesh.kind) << '\n'
      << "mesh.n = " << cfg.mesh.n << '\n'
      << "mesh.perturbation = " << format_double(cfg.mesh.perturbation) << '\n'
      << "mesh.seed = " << cfg.mesh.seed << '\n'
      << "fe.degree = " << cfg.degree << '\n'
      << "problem.c = " << cfg.c << '\n'
      << "problem.f = " << cfg.f << '\n'
      << "problem.g = " << cfg.g << '\n'
      << "cutoff.mode = " << to_string(cfg.mode) << '\n'
      << "solver.tol = " << format_double(cfg.solver_tol) << '\n'
      << "reference.level = " << cfg.reference_level << '\n';
}

ScalarFunction boundary_spike(const Mesh& mesh, int vertex, double amplitude) {
  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> edges; // (vertex, other end)
  for (Index e = 0; e < mesh.boundary_edges.rows(); ++e) {
    const int a = mesh.boundary_edges(e, 0), b = mesh.boundary_edges(e, 1);
    if (a == vertex)
      edges.emplace_back(mesh.vertex(a), mesh.vertex(b));
    else if (b == vertex)
      edges.emplace_back(mesh.vertex(b), mesh.vertex(a));
  }
  if (edges.empty())
    throw ConfigError("problem.g: vertex " + std::to_string(vertex) + " is not on the boundary");
  return [edges, amplitude](const Eigen::Vector2d& x) {
    for (const auto& [p, q] : edges) {
      const Eigen::Vector2d d = q - p;
      const double t = (x - p).dot(d) / d.squaredNorm();
      if (t >= 0.0 && t <= 1.0 && (p + t * d - x).norm() <= 1e-12 * (1.0 + d.norm()))
        return amplitude * (1.0 - t);
    }
    return 0.0;
  };
}

ScalarFunction boundary_function(const std::string& text, const Mesh& mesh) {
  if (is_spike(text)) {
    const Spike s = parse_spike("problem.g", text);
    if (s.vertex >= mesh.vertex_count())
      bad("problem.g", "vertex " + std::to_string(s.vertex) + " out of range");
    return boundary_spike(mesh, s.vertex, s.amplitude);
  }
  return to_function(text);
}

Mesh build_mesh(const ExperimentConfig& cfg) {
  if (cfg.mesh_file) {
    std::ifstream in(*cfg.mesh_file);
    if (!in)
      throw IoError("cannot read mesh file '" + cfg.mesh_file->string() + "'");
    return read_mesh(in);
  }
  return generate(cfg.mesh);
}

ProblemSpec build_problem(const ExperimentConfig& cfg, const Mesh& mesh) {
  ProblemSpec spec;
  spec.c = to_function(cfg.c);
  spec.f = to_function(cfg.f);
  spec.g = boundary_function(cfg.g, mesh);
  spec.p = cfg.p;
  check_sign_conditions(spec, mesh);
  return spec;
}

int thread_count() {
  if (const char* env = std::getenv("DMPCUT_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0)
      return static_cast<int>(std::min(n, 256L));
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads)
          fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool)
    t.join();
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

std::vector<SearchFixture> dmp_search(const ExperimentConfig& cfg) {
  const std::size_t families = cfg.search_families.size();
  const std::size_t jobs = families * static_cast<std::size_t>(cfg.trials);
  std::vector<std::vector<SearchFixture>> per_job(jobs);
  // values below this are rounding in the solve, not violations
  constexpr double kThreshold = 1e-10;
  parallel_for(jobs, [&](std::size_t job) {
    MeshFamily family = cfg.mesh;
    family.kind = cfg.search_families[job % families];
    family.seed = job / families;
    auto mesh = std::make_shared<const Mesh>(generate(family));
    auto space = make_space(mesh, cfg.degree);
    ProblemSpec spec;
    spec.c = to_function(cfg.c);
    spec.f = to_function(cfg.f);
    check_sign_conditions(spec, *mesh);
    for (int v : boundary_vertices(*mesh)) {
      spec.g = boundary_spike(*mesh, v, cfg.search_amplitude);
      const FEFunction U = direct_solve(assemble(space, spec));
      const double violation = dmp_violation(U, cfg.mode);
      if (violation > kThreshold)
        per_job[job].push_back({family, v, cfg.search_amplitude, violation});
    }
  });
  std::vector<SearchFixture> all;
  for (auto& list : per_job)
    all.insert(all.end(), list.begin(), list.end());
  std::stable_sort(all.begin(), all.end(), [](const SearchFixture& a, const SearchFixture& b) {
    return a.violation > b.violation; // per_job order already breaks ties
  });
  if (all.size() > static_cast<std::size_t>(cfg.top_k))
    all.resize(static_cast<std::size_t>(cfg.top_k));
  return all;
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  Outcome out;
  try {
    std::filesystem::create_directories(cfg.output_dir);
  } catch (const std::exception& e) {
    log << "error: cannot create output directory: " << e.what() << '\n';
    return kExitIo;
  }
  std::ostringstream config_text;
  write_config(config_text, cfg);
  out.report << "# " << to_string(cfg.experiment) << '\n';
  try {
    switch (cfg.experiment) {
    case ExperimentKind::scalar_rd:
    case ExperimentKind::scalar_laplace:
      run_scalar(cfg, out, log);
      break;
    case ExperimentKind::vector_laplace:
      run_vector(cfg, out, log);
      break;
    case ExperimentKind::p_laplace:
      run_plaplace(cfg, out, log);
      break;
    case ExperimentKind::dmp_search:
      run_search(cfg, out, log);
      break;
    case ExperimentKind::convergence:
      run_convergence(cfg, out, log);
      break;
    }
  } catch (const IoError& e) {
    log << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SignConditionError& e) {
    log << "config error: sign condition violated: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    log << "config error: mesh file " << e.what() << '\n';
    return kExitConfig;
  } catch (const ValidationError& e) {
    log << "config error: invalid mesh: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    log << "failed: " << e.what() << '\n';
    return kExitInequality;
  }

  write_checks(out);
  const auto failed = std::find_if(out.checks.begin(), out.checks.end(), [](const Inequality& q) { return !q.holds(); });
  out.report << "status=" << (failed == out.checks.end() ? "ok" : "failed") << '\n';
  try {
    write_file(cfg.output_dir / "report.txt", config_text.str() + out.report.str());
    write_file(cfg.output_dir / "results.csv", out.csv.str());
    for (const auto& [name, content] : out.files) {
      const std::filesystem::path path = cfg.output_dir / name;
      std::filesystem::create_directories(path.parent_path());
      write_file(path, content);
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitIo;
  }
  if (failed != out.checks.end()) {
    log << "inequality failed: " << failed->name << " (" << format_double(failed->lhs) << " > "
        << format_double(failed->rhs) << ")\n";
    return kExitInequality;
  }
  log << "all " << out.checks.size() << " checks hold; results in " << cfg.output_dir.string() << '\n';
  return kExitOk;
}

int run_config_file(const std::filesystem::path& path, std::ostream& log,
                    const std::optional<std::filesystem::path>& output_dir, std::optional<ExperimentKind> experiment) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(path);
  } catch (const IoError& e) {
    log << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ParseError& e) {
    log << "config error: " << path.string() << ' ' << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (output_dir)
    cfg.output_dir = *output_dir;
  if (experiment)
    cfg.experiment = *experiment;
  return run_experiment(cfg, log);
}

} // namespace dmpcut
