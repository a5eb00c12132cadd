#pragma once

// Data-parallel kernels over batches of states.
//
// Each kernel has a serial reference and an OpenMP variant selected by Exec.
// Reductions follow a fixed order (contiguous chunks of kChunk samples summed
// in sequence, then chunk partials summed in chunk order), so the two variants
// agree bit for bit regardless of thread count.

#include <span>
#include <vector>

#include "moeguide/exec.hpp"
#include "moeguide/moe.hpp"

namespace moeguide::kernels {

inline constexpr std::size_t kChunk = 32;

/// L for every raw state.
std::vector<double> batch_loss(const moe::MoEModel& model, std::span<const moe::Vector> raw_states, Exec exec);

/// L for every already-normalized state.
std::vector<double> batch_loss_normalized(const moe::MoEModel& model, std::span<const moe::Vector> states, Exec exec);

/// Reusable per-chunk gradient buffers.
class GradientWorkspace {
 public:
  explicit GradientWorkspace(const moe::MoEModel& model) : model_(&model) {}
  std::vector<moe::MoEGradients>& partials(std::size_t n_chunks);

 private:
  const moe::MoEModel* model_;
  std::vector<moe::MoEGradients> partials_;
};

/// Sums per-sample gradients of samples[indices[i]] into `out` (overwritten)
/// and returns the summed loss.
double accumulate_gradients(const moe::MoEModel& model, std::span<const moe::Vector> samples,
                            std::span<const std::size_t> indices, moe::MoEGradients& out, GradientWorkspace& workspace,
                            Exec exec);

}  // namespace moeguide::kernels
