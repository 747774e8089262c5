#pragma once

#include "shapeopt/descent.hpp"
#include "shapeopt/flow.hpp"
#include "shapeopt/optimizer.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace shapeopt::cli {

struct GradientCheckConfig {
  int n_fields = 5;
  double eps_fd = 1e-3;
  double bound = 0.10;

  void validate() const;
};

struct CaseConfig {
  // Either a mesh file or the built-in cylinder-in-channel generator at `cylinder_level`.
  std::filesystem::path mesh_file;
  int cylinder_level = -1;

  FluidProps fluid;
  FlowConfig flow;
  DescentConfig descent;
  OptimizerConfig optimizer;
  GradientCheckConfig gradient_check;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;

  void validate() const;
};

// INI text with sections [mesh], [case], [fluid], [flow], [descent], [optimizer], [gradient_check].
// Relative paths are resolved against base_dir. Unknown sections or keys are errors.
CaseConfig parse_case_config(std::istream& in, const std::filesystem::path& base_dir);
CaseConfig load_case_config(const std::filesystem::path& path);

Mesh load_case_mesh(const CaseConfig& cfg);

}  // namespace shapeopt::cli
