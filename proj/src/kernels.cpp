#include "moeguide/kernels.hpp"

#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace moeguide {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace moeguide

namespace moeguide::kernels {

namespace {

// Runs body(i) for i in [0, n), in parallel when requested. The first
// exception thrown by any iteration is rethrown on the calling thread.
template <class Body>
void for_each_index(std::size_t n, Exec exec, Body&& body) {
  if (exec == Exec::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(moeguide_kernel_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<double> batch_loss(const moe::MoEModel& model, std::span<const moe::Vector> raw_states, Exec exec) {
  std::vector<double> out(raw_states.size());
  for_each_index(raw_states.size(), exec, [&](std::size_t i) { out[i] = model.loss(raw_states[i]); });
  return out;
}

std::vector<double> batch_loss_normalized(const moe::MoEModel& model, std::span<const moe::Vector> states, Exec exec) {
  std::vector<double> out(states.size());
  for_each_index(states.size(), exec, [&](std::size_t i) { out[i] = model.loss_normalized(states[i]); });
  return out;
}

std::vector<moe::MoEGradients>& GradientWorkspace::partials(std::size_t n_chunks) {
  if (partials_.size() < n_chunks) partials_.resize(n_chunks, model_->zero_gradients());
  return partials_;
}

double accumulate_gradients(const moe::MoEModel& model, std::span<const moe::Vector> samples,
                            std::span<const std::size_t> indices, moe::MoEGradients& out, GradientWorkspace& workspace,
                            Exec exec) {
  const std::size_t n_chunks = (indices.size() + kChunk - 1) / kChunk;
  auto& partials = workspace.partials(n_chunks);
  std::vector<double> chunk_loss(n_chunks, 0.0);
  for_each_index(n_chunks, exec, [&](std::size_t c) {
    auto& g = partials[c];
    g.zero();
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(indices.size(), begin + kChunk);
    double loss = 0.0;
    for (std::size_t i = begin; i < end; ++i) loss += model.accumulate_gradient(samples[indices[i]], g);
    chunk_loss[c] = loss;
  });
  out.zero();
  double total = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    out += partials[c];
    total += chunk_loss[c];
  }
  return total;
}

}  // namespace moeguide::kernels
