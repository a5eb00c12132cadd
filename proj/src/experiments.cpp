#include "moeguide/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "moeguide/error.hpp"
#include "moeguide/kernels.hpp"

namespace moeguide::experiments {

namespace fs = std::filesystem;

std::array<unsigned char, 3> palette(double v) {
  static constexpr std::array<std::array<double, 3>, 5> stops{
      {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  v = std::clamp(std::isnan(v) ? 1.0 : v, 0.0, 1.0);
  const double pos = v * 4.0;
  const std::size_t i = std::min<std::size_t>(3, static_cast<std::size_t>(pos));
  const double t = pos - static_cast<double>(i);
  std::array<unsigned char, 3> rgb{};
  for (std::size_t c = 0; c < 3; ++c) {
    rgb[c] = static_cast<unsigned char>(std::lround(stops[i][c] + t * (stops[i + 1][c] - stops[i][c])));
  }
  return rgb;
}

std::string Heatmap::to_ppm() const {
  std::ostringstream out;
  out << "P3\n# moeguide-heatmap v1 slice=" << slice_index << "\n" << width << ' ' << height << "\n255\n";
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const auto rgb = palette(values[y * width + x]);
      out << static_cast<int>(rgb[0]) << ' ' << static_cast<int>(rgb[1]) << ' ' << static_cast<int>(rgb[2])
          << (x + 1 == width ? '\n' : ' ');
    }
  }
  return out.str();
}

LandscapeResult render_landscape(const moe::MoEModel& model, const env::GridWorld& world, double l_max,
                                 const fs::path& out_dir, std::size_t stride) {
  if (!(l_max > 0.0)) throw ConfigError("landscape.l_max must be > 0");
  if (stride == 0) throw ConfigError("landscape.slice_stride must be >= 1");
  if (model.state_dim() != world.rank()) throw ShapeError("model state_dim does not match world rank");
  std::vector<moe::Vector> states;
  states.reserve(world.num_cells());
  for (std::size_t i = 0; i < world.num_cells(); ++i) states.push_back(world.encode(world.cell_at(i)));
  LandscapeResult result;
  result.losses = kernels::batch_loss(model, states, Exec::Parallel);

  const std::size_t w = static_cast<std::size_t>(world.dims()[0]);
  const std::size_t h = static_cast<std::size_t>(world.dims()[1]);
  const int depth = world.rank() == 3 ? world.dims()[2] : 1;
  for (int z = 0; z < depth; z += static_cast<int>(stride)) {
    Heatmap hm;
    hm.width = w;
    hm.height = h;
    hm.slice_index = z;
    hm.values.resize(w * h);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const env::Cell c{static_cast<int>(x), static_cast<int>(y), z};
        hm.values[y * w + x] = std::clamp(result.losses[world.index(c)] / l_max, 0.0, 1.0);
      }
    }
    result.slices.push_back(std::move(hm));
  }

  if (!out_dir.empty()) {
    for (const auto& hm : result.slices) {
      io::write_text_file(out_dir / ("slice_" + std::to_string(hm.slice_index) + ".ppm"), hm.to_ppm());
    }
    io::CsvTable csv({"x", "y", "z", "loss", "v"});
    for (std::size_t i = 0; i < world.num_cells(); ++i) {
      const auto c = world.cell_at(i);
      csv.row()
          .add(static_cast<long long>(c[0]))
          .add(static_cast<long long>(c[1]))
          .add(static_cast<long long>(c[2]))
          .add(result.losses[i])
          .add(std::clamp(result.losses[i] / l_max, 0.0, 1.0));
    }
    csv.save(out_dir / "landscape.csv");
  }
  return result;
}

std::size_t matched_hidden(std::size_t state_dim, moe::MoEArch arch, std::size_t budget) {
  for (std::size_t h = 1;; ++h) {
    arch.expert_hidden = h;
    if (moe::parameter_count(state_dim, arch) >= budget) return h;
  }
}

std::vector<env::Cell> demo_cells(const env::GridWorld& world, const moe::DemoSet& demos) {
  std::vector<env::Cell> cells;
  for (const auto& rec : demos.records) {
    if (rec.state.size() != world.rank()) throw ShapeError("demo state dimension does not match world rank");
    env::Cell c{0, 0, 0};
    for (std::size_t k = 0; k < world.rank(); ++k) {
      c[k] = static_cast<int>(std::lround(rec.state[k] * (world.dims()[k] - 1)));
    }
    cells.push_back(c);
  }
  return cells;
}

std::vector<AblationRow> ablate_experts(const moe::DemoSet& demos, const env::GridWorld* world,
                                        const AblationSpec& spec, const fs::path& out_dir) {
  if (spec.expert_counts.empty()) throw ConfigError("ablation.expert_counts must not be empty");
  const std::size_t d = demos.state_dim();
  std::size_t budget = 0;
  if (spec.match_budget) {
    for (std::size_t n : spec.expert_counts) {
      moe::MoEArch a = spec.base;
      a.num_experts = n;
      budget = std::max(budget, moe::parameter_count(d, a));
    }
  }
  std::set<std::size_t> path_index;
  if (world != nullptr) {
    for (const auto& c : demo_cells(*world, demos)) path_index.insert(world->index(c));
  }

  std::vector<AblationRow> rows;
  for (std::size_t n : spec.expert_counts) {
    moe::MoEArch arch = spec.base;
    arch.num_experts = n;
    if (spec.match_budget) arch.expert_hidden = matched_hidden(d, arch, budget);
    const auto trained = moe::train_moe(demos, arch, spec.train);
    AblationRow row;
    row.num_experts = n;
    row.expert_hidden = arch.expert_hidden;
    row.parameters = moe::parameter_count(d, arch);
    row.final_train_loss = trained.history.empty() ? std::nan("") : trained.history.back();
    if (world != nullptr) {
      const fs::path dir = out_dir.empty() ? fs::path() : out_dir / ("N" + std::to_string(n));
      const auto land = render_landscape(trained.model, *world, spec.l_max, dir, spec.slice_stride);
      double on = 0.0, off = 0.0;
      std::size_t n_on = 0, n_off = 0;
      for (std::size_t i = 0; i < land.losses.size(); ++i) {
        if (world->is_wall(world->cell_at(i))) continue;
        const double v = std::clamp(land.losses[i] / spec.l_max, 0.0, 1.0);
        if (path_index.contains(i)) {
          on += v;
          ++n_on;
        } else {
          off += v;
          ++n_off;
        }
      }
      row.path_mean_v = n_on ? on / static_cast<double>(n_on) : std::nan("");
      row.off_path_mean_v = n_off ? off / static_cast<double>(n_off) : std::nan("");
    } else {
      row.path_mean_v = std::nan("");
      row.off_path_mean_v = std::nan("");
    }
    rows.push_back(row);
  }
  return rows;
}

io::CsvTable ablation_csv(const std::vector<AblationRow>& rows) {
  io::CsvTable csv(
      {"num_experts", "expert_hidden", "parameters", "final_train_loss", "path_mean_v", "off_path_mean_v"});
  for (const auto& r : rows) {
    csv.row()
        .add(r.num_experts)
        .add(r.expert_hidden)
        .add(r.parameters)
        .add(r.final_train_loss)
        .add(r.path_mean_v)
        .add(r.off_path_mean_v);
  }
  return csv;
}

io::CsvTable history_csv(const std::vector<double>& history) {
  io::CsvTable csv({"epoch", "mean_loss"});
  for (std::size_t i = 0; i < history.size(); ++i) csv.row().add(i + 1).add(history[i]);
  return csv;
}

io::CsvTable curve_csv(const std::vector<agents::CurveRow>& curve) {
  io::CsvTable csv({"step", "episode", "r_env_sum", "r_int_sum", "beta", "coverage"});
  for (const auto& r : curve) {
    csv.row().add(r.step).add(r.episode).add(r.r_env_sum).add(r.r_int_sum).add(r.beta).add(r.coverage);
  }
  return csv;
}

io::CsvTable trace_csv(const agents::ExplorerTrace& trace) {
  io::CsvTable csv({"step", "x", "y", "z", "action", "r_int"});
  for (std::size_t i = 0; i < trace.actions.size(); ++i) {
    const auto& c = trace.cells[i + 1];
    csv.row()
        .add(i + 1)
        .add(static_cast<long long>(c[0]))
        .add(static_cast<long long>(c[1]))
        .add(static_cast<long long>(c[2]))
        .add(static_cast<long long>(trace.actions[i]))
        .add(trace.rewards[i]);
  }
  return csv;
}

std::string policy_table(const agents::PolicySet& policy) {
  std::ostringstream out;
  out << "moeguide-policy v1 states=" << policy.size() << "\n";
  for (std::size_t s = 0; s < policy.size(); ++s) {
    out << 'S' << s + 1;
    for (std::size_t a : policy[s]) out << " a" << a;
    out << "\n";
  }
  return out.str();
}

}  // namespace moeguide::experiments
