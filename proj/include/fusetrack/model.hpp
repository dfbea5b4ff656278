#pragma once

#include <cstdint>

#include "fusetrack/mcf.hpp"
#include "fusetrack/mga.hpp"

namespace fusetrack {

/// Every learnable tensor of the engine.
struct ModelParams {
  mcf::McfParams mcf;
  mga::MgaParams mga;

  int dim() const { return mcf.dim(); }
  void check() const;

  /// Seeded uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per tensor.
  static ModelParams init(int d, int h, std::uint64_t seed);

  /// Deterministic untrained preset: zero gating network (gates 0.5), a
  /// fusion network that computes app + 0.5*loc + 0.5*sem exactly (hidden
  /// width 2d), a small tiled location projection, and identity attention
  /// projections. Useful as a sane operating point without training.
  static ModelParams reference(int d);
};

/// Gradients (or any accumulator) shaped like ModelParams.
using ParamGrads = ModelParams;

/// Fixed enumeration of the 13 parameter tensors; order is part of the
/// checkpoint and optimizer-state layout.
std::vector<Eigen::MatrixXd*> tensor_list(ModelParams& p);
std::vector<const Eigen::MatrixXd*> tensor_list(const ModelParams& p);
std::vector<std::string> tensor_names();

}  // namespace fusetrack
