#pragma once

// Loss-landscape rendering, the expert-count ablation and CSV emitters for
// agent runs.

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "moeguide/agents.hpp"
#include "moeguide/io.hpp"
#include "moeguide/moe.hpp"

namespace moeguide::experiments {

/// Plain-PPM heatmap. Values are clipped to [0, 1] and mapped through a
/// five-stop viridis ramp: 0 is dark purple (68, 1, 84), 1 is yellow
/// (253, 231, 37).
struct Heatmap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;  // row-major, row = y
  int slice_index = 0;

  std::string to_ppm() const;
};

std::array<unsigned char, 3> palette(double v);

struct LandscapeResult {
  std::vector<Heatmap> slices;
  std::vector<double> losses;  // every cell of the world, in cell-index order
};

/// Evaluates v = clip(L / l_max, 0, 1) on every `stride`-th depth slice of a
/// 3D world (or the single slice of a 2D one). When out_dir is non-empty,
/// writes slice_<z>.ppm per slice and landscape.csv with all raw losses.
LandscapeResult render_landscape(const moe::MoEModel& model, const env::GridWorld& world, double l_max,
                                 const std::filesystem::path& out_dir, std::size_t stride = 2);

/// Smallest expert hidden width whose parameter count reaches `budget`.
std::size_t matched_hidden(std::size_t state_dim, moe::MoEArch arch, std::size_t budget);

struct AblationRow {
  std::size_t num_experts = 0;
  std::size_t expert_hidden = 0;
  std::size_t parameters = 0;
  double final_train_loss = 0.0;
  double path_mean_v = 0.0;
  double off_path_mean_v = 0.0;
};

struct AblationSpec {
  moe::MoEArch base;
  moe::TrainConfig train;
  std::vector<std::size_t> expert_counts{1, 2, 5, 11};
  bool match_budget = false;  // widen smaller mixtures to the largest one's budget
  double l_max = 1.0;
  std::size_t slice_stride = 2;
};

/// Trains one mixture per expert count on the same demos and seed. With a
/// 3D world the landscape of each model is rendered under out_dir/N<count>
/// and path/off-path mean v are filled in (path = cells holding a demo).
std::vector<AblationRow> ablate_experts(const moe::DemoSet& demos, const env::GridWorld* world,
                                        const AblationSpec& spec, const std::filesystem::path& out_dir);

io::CsvTable ablation_csv(const std::vector<AblationRow>& rows);
io::CsvTable history_csv(const std::vector<double>& history);
io::CsvTable curve_csv(const std::vector<agents::CurveRow>& curve);
io::CsvTable trace_csv(const agents::ExplorerTrace& trace);

/// One line per state: "S<k> <actions...>" with actions named a0, a1, ...
std::string policy_table(const agents::PolicySet& policy);

/// Cells of a grid world that hold a demo state (decoded from [0,1] coords).
std::vector<env::Cell> demo_cells(const env::GridWorld& world, const moe::DemoSet& demos);

}  // namespace moeguide::experiments
