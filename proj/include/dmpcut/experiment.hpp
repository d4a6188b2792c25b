#pragma once

#include "dmpcut/assembly.hpp"
#include "dmpcut/cutoff.hpp"
#include "dmpcut/mesh.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dmpcut {

enum class ExperimentKind { scalar_rd, scalar_laplace, vector_laplace, p_laplace, dmp_search, convergence };

std::string to_string(ExperimentKind kind);

/// Flat key=value configuration; see README for the key list.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::scalar_laplace;
  MeshFamily mesh{MeshKind::structured, 4, 0.0, 0};
  std::optional<std::filesystem::path> mesh_file;
  int degree = 1;

  std::string c = "0";
  std::string f = "0";
  std::string g = "0";
  std::string g1 = "x";
  std::string g2 = "y";
  double p = 2.0;
  double epsilon = 1e-7;

  CutoffMode mode = CutoffMode::positive_part_sup;
  double solver_tol = 1e-9;
  int reference_level = 5;
  std::filesystem::path output_dir = "out";
  bool plots = true;

  bool include_origin = false;
  int vector_spikes = 3;
  double spike_amplitude = 2.0;
  std::uint64_t vector_seed = 0;

  std::vector<MeshKind> search_families{MeshKind::obtuse_band};
  int trials = 50;
  int top_k = 20;
  double search_amplitude = -1.0;

  std::vector<int> sizes{2, 4, 8, 16};
};

/// Parses and validates a configuration. Unknown keys, duplicate keys and
/// invalid values raise ConfigError whose message starts with the key;
/// malformed lines raise ParseError. Relative mesh.file paths are resolved
/// against `base_dir`.
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const ExperimentConfig& config);

/// Continuous boundary data that interpolates to amplitude at `vertex` and 0
/// at every other boundary vertex of `mesh`: linear along the two boundary
/// edges at the vertex, zero elsewhere.
ScalarFunction boundary_spike(const Mesh& mesh, int vertex, double amplitude);

/// "spike <vertex> <amplitude>" or an expression in x, y.
ScalarFunction boundary_function(const std::string& text, const Mesh& mesh);

/// Mesh of the configuration (generated, or read from mesh.file).
Mesh build_mesh(const ExperimentConfig& config);

/// c, f, g of the configuration on `mesh`.
ProblemSpec build_problem(const ExperimentConfig& config, const Mesh& mesh);

struct SearchFixture {
  MeshFamily family;
  int vertex = 0;
  double amplitude = -1.0;
  double violation = 0.0;
};

/// Deterministic scan: for every family and seed 0..trials-1, every boundary
/// vertex gets spike data with the given amplitude; the P1/P2 solution's
/// dmp_violation is recorded. Returns the top_k fixtures with positive
/// violation, largest first (ties by family, seed, vertex).
std::vector<SearchFixture> dmp_search(const ExperimentConfig& config);

/// DMPCUT_THREADS if set to a positive integer, else the hardware count.
int thread_count();

/// Runs fn(i) for i in [0, n) on thread_count() threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

enum ExitCode { kExitOk = 0, kExitInequality = 1, kExitConfig = 2, kExitIo = 3 };

/// Runs the configured experiment, writes report.txt, results.csv and
/// plots into output_dir, and returns the exit code. Progress and failure
/// messages go to `log`.
int run_experiment(const ExperimentConfig& config, std::ostream& log);

/// load_config + run_experiment with the exit-code mapping for config and
/// I/O failures. `output_dir` and `experiment` override the file's values.
int run_config_file(const std::filesystem::path& path, std::ostream& log,
                    const std::optional<std::filesystem::path>& output_dir = std::nullopt,
                    std::optional<ExperimentKind> experiment = std::nullopt);

} // namespace dmpcut
