// dmpcut: run cutoff experiments from key=value configs, search for
// maximum-principle violations, and write generated meshes.

#include "dmpcut/errors.hpp"
#include "dmpcut/experiment.hpp"
#include "dmpcut/mesh.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Posterior cutoff experiments for discrete maximum principles"};
  app.require_subcommand(1);

  std::string config, output;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config, "key=value config file")->required();
  run->add_option("-o,--output", output, "output directory (overrides output.dir)");

  std::string search_config, search_output;
  auto* search = app.add_subcommand("search", "scan mesh families for maximum-principle violations");
  search->add_option("config", search_config, "key=value config file")->required();
  search->add_option("-o,--output", search_output, "output directory (overrides output.dir)");

  dmpcut::MeshFamily family;
  std::string kind = "structured", mesh_path;
  auto* mesh = app.add_subcommand("mesh", "write a generated unit-square mesh");
  mesh->add_option("--kind", kind, "structured, perturbed or obtuse_band")->capture_default_str();
  mesh->add_option("--n", family.n, "cells per side")->capture_default_str();
  mesh->add_option("--perturbation", family.perturbation, "in [0, 0.5)")->capture_default_str();
  mesh->add_option("--seed", family.seed, "random seed")->capture_default_str();
  mesh->add_option("-o,--output", mesh_path, "mesh file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dmpcut::kExitConfig;
  }

  auto out_dir = [](const std::string& dir) {
    return dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(dir);
  };
  if (*run)
    return dmpcut::run_config_file(config, std::cerr, out_dir(output));
  if (*search)
    return dmpcut::run_config_file(search_config, std::cerr, out_dir(search_output),
                                   dmpcut::ExperimentKind::dmp_search);

  try {
    family.kind = dmpcut::parse_mesh_kind(kind);
    const dmpcut::Mesh m = dmpcut::generate(family);
    std::ofstream out(mesh_path);
    if (!out) {
      std::cerr << "error: cannot write '" << mesh_path << "'\n";
      return dmpcut::kExitIo;
    }
    dmpcut::write_mesh(out, m);
    if (!out)
      return dmpcut::kExitIo;
    std::cerr << "wrote " << m.vertex_count() << " vertices, " << m.triangle_count() << " triangles to "
              << mesh_path << '\n';
  } catch (const dmpcut::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return dmpcut::kExitConfig;
  }
  return 0;
}
