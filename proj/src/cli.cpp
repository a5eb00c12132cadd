#include "moeguide/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <memory>
#include <optional>
#include <sstream>

#include "moeguide/agents.hpp"
#include "moeguide/baselines.hpp"
#include "moeguide/config.hpp"
#include "moeguide/envs.hpp"
#include "moeguide/error.hpp"
#include "moeguide/experiments.hpp"
#include "moeguide/io.hpp"

namespace moeguide::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::string world_file;
  std::string demos_file;
  std::string model_file;
};

class Session {
 public:
  Session(const Options& opt, std::ostream& out) : out_(out) {
    if (opt.config_path.empty()) {
      cfg_.validate();
    } else {
      cfg_ = config::load_config(opt.config_path);
    }
    if (opt.seed) cfg_.seed = *opt.seed;
    if (opt.out_dir) cfg_.outputs.directory = *opt.out_dir;
    world_file_ = pick(opt.world_file, cfg_.world.file);
    demos_file_ = pick(opt.demos_file, cfg_.demos.file);
    model_file_ = pick(opt.model_file, cfg_.moe.model_file);
    out_dir_ = cfg_.output_dir();
  }

  const config::ExperimentConfig& cfg() const { return cfg_; }
  fs::path path(const std::string& name) const { return out_dir_ / name; }

  const env::GridWorld& world() {
    if (!world_) {
      if (!world_file_.empty()) {
        world_ = io::load_world(world_file_);
      } else {
        world_ = env::make_gridworld(cfg_.world.dims, cfg_.world.wall_density, cfg_.seed, cfg_.world.max_steps);
      }
    }
    return *world_;
  }

  const moe::DemoSet& demos() {
    if (!demos_) {
      if (!demos_file_.empty()) {
        demos_ = io::load_demos(demos_file_);
      } else if (cfg_.world.kind == "grid3d") {
        demos_ = moe::subsample_demos(env::expert_path_3d(cfg_.world.dims, cfg_.seed), cfg_.demos.gap);
      } else {
        demos_ = env::generate_expert_demo(world(), cfg_.demos.gap, cfg_.seed, cfg_.demos.episodes);
      }
      demos_->validate();
      if (demos_->records.empty()) throw ConfigError("demos: demo set is empty");
    }
    return *demos_;
  }

  const moe::MoEModel& model() {
    if (!model_) {
      if (!model_file_.empty()) {
        model_ = io::load_model(model_file_);
      } else {
        model_ = train().model;
      }
    }
    return *model_;
  }

  moe::TrainResult train() { return moe::train_moe(demos(), cfg_.arch(), cfg_.train_config()); }

  void wrote(const fs::path& p) { out_ << "wrote " << p.string() << "\n"; }

 private:
  std::string pick(const std::string& flag, const std::string& configured) const {
    if (!flag.empty()) return flag;
    return configured.empty() ? std::string() : cfg_.resolve(configured).string();
  }

  std::ostream& out_;
  config::ExperimentConfig cfg_;
  std::string world_file_;
  std::string demos_file_;
  std::string model_file_;
  fs::path out_dir_;
  std::optional<env::GridWorld> world_;
  std::optional<moe::DemoSet> demos_;
  std::optional<moe::MoEModel> model_;
};

void gen_world(Session& s) {
  const auto p = s.path("world.txt");
  io::save_world(p, s.world());
  s.wrote(p);
}

void gen_demos(Session& s) {
  const auto p = s.path("demos.txt");
  io::save_demos(p, s.demos());
  s.wrote(p);
}

void train_moe(Session& s) {
  const auto result = s.train();
  const auto ckpt = s.path("model.ckpt");
  io::save_model(ckpt, result.model);
  s.wrote(ckpt);
  const auto hist = s.path("train_history.csv");
  experiments::history_csv(result.history).save(hist);
  s.wrote(hist);
}

void check_rank(Session& s) {
  if (s.model().state_dim() != s.world().rank()) {
    throw ShapeError("model state_dim " + std::to_string(s.model().state_dim()) + " does not match world rank " +
                     std::to_string(s.world().rank()));
  }
}

void landscape(Session& s) {
  check_rank(s);
  const auto dir = s.path("landscape");
  const auto result =
      experiments::render_landscape(s.model(), s.world(), s.cfg().landscape.l_max, dir, s.cfg().landscape.slice_stride);
  for (const auto& hm : result.slices) s.wrote(dir / ("slice_" + std::to_string(hm.slice_index) + ".ppm"));
  s.wrote(dir / "landscape.csv");
}

void explore(Session& s) {
  const auto& cfg = s.cfg();
  const auto& world = s.world();
  const auto cells = experiments::demo_cells(world, s.demos());
  std::unique_ptr<agents::BonusSource> bonus;
  if (cfg.agent.kind == "moe_guide") {
    check_rank(s);
    bonus = std::make_unique<agents::MoEGuideBonus>(world, s.model(), cfg.mapping, cfg.decay_schedule());
  } else {
    bonus = std::make_unique<baselines::BaselineExplorerBonus>(
        world, baselines::baseline_kind_from_string(cfg.agent.kind), cfg.seed);
  }
  const auto trace = agents::greedy_intrinsic_explore(world, *bonus, cfg.agent.steps, cfg.seed, cells);
  const auto tp = s.path("trace_" + cfg.agent.kind + ".csv");
  experiments::trace_csv(trace).save(tp);
  s.wrote(tp);
  io::CsvTable summary({"kind", "steps", "demo_coverage", "cell_coverage"});
  summary.row().add(cfg.agent.kind).add(cfg.agent.steps).add(trace.demo_coverage).add(trace.cell_coverage);
  const auto sp = s.path("explore_summary.csv");
  summary.save(sp);
  s.wrote(sp);
}

env::ChainVariant chain_variant(const config::ExperimentConfig& cfg) {
  return cfg.agent.chain_variant == "prose" ? env::ChainVariant::Prose : env::ChainVariant::Table;
}

void qlearn(Session& s) {
  const auto& cfg = s.cfg();
  const auto mdp = env::chain_mdp(cfg.agent.gamma, chain_variant(cfg));
  const auto result = agents::q_learn(mdp, cfg.qlearn_config());
  const auto cp = s.path("learning_curve.csv");
  experiments::curve_csv(result.curve).save(cp);
  s.wrote(cp);
  const auto pp = s.path("qlearn_policy.txt");
  io::write_text_file(pp, experiments::policy_table(result.greedy));
  s.wrote(pp);
}

std::string join_values(const std::vector<double>& v) {
  std::string line;
  for (std::size_t i = 0; i < v.size(); ++i) line += (i ? " " : "") + io::format_double(v[i]);
  return line;
}

void verify_mdp(Session& s) {
  const auto& cfg = s.cfg();
  const auto mdp = env::chain_mdp(cfg.agent.gamma, chain_variant(cfg));
  const auto report = agents::verify_invariance(mdp, mdp.r_int, cfg.agent.beta, cfg.agent.gamma);
  std::ostringstream text;
  text << "moeguide-invariance v1\n"
       << "gamma " << io::format_double(cfg.agent.gamma) << "\n"
       << "beta " << io::format_double(cfg.agent.beta) << "\n"
       << "policies_equal " << (report.policies_equal ? "true" : "false") << "\n"
       << "diff_states";
  for (auto st : report.diff_states) text << " S" << st + 1;
  text << "\n"
       << "v_env_optimal " << join_values(report.v_env_optimal) << "\n"
       << "v_env_of_total_policy " << join_values(report.v_env_of_total_policy) << "\n"
       << "v_env_gap " << io::format_double(report.v_env_gap) << "\n"
       << "total_policy_reaches_goal "
       << (agents::greedy_reaches_terminal(mdp, report.total_policy, 0) ? "true" : "false") << "\n";
  const auto rp = s.path("invariance_report.txt");
  io::write_text_file(rp, text.str());
  s.wrote(rp);
  const auto ep = s.path("policy_env.txt");
  io::write_text_file(ep, experiments::policy_table(report.env_policy));
  s.wrote(ep);
  const auto tp = s.path("policy_total.txt");
  io::write_text_file(tp, experiments::policy_table(report.total_policy));
  s.wrote(tp);
}

void ablate(Session& s) {
  const auto& cfg = s.cfg();
  experiments::AblationSpec spec;
  spec.base = cfg.arch();
  spec.train = cfg.train_config();
  spec.expert_counts = cfg.ablation.expert_counts;
  spec.match_budget = cfg.ablation.match_budget;
  spec.l_max = cfg.landscape.l_max;
  spec.slice_stride = cfg.landscape.slice_stride;
  const auto& demos = s.demos();
  const env::GridWorld* world = nullptr;
  if (demos.state_dim() == s.world().rank()) world = &s.world();
  const auto rows = experiments::ablate_experts(demos, world, spec, s.path("ablation"));
  const auto p = s.path("ablation.csv");
  experiments::ablation_csv(rows).save(p);
  s.wrote(p);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Expert-similarity intrinsic rewards: desk-scale experiment runner", "moeguide"};
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  Options opt;
  std::uint64_t seed = 0;
  std::string out_dir;
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed")->check(CLI::NonNegativeNumber);
  auto* out_opt = app.add_option("--out", out_dir, "Override outputs.directory");

  using Handler = void (*)(Session&);
  const std::vector<std::tuple<const char*, const char*, Handler>> commands{
      {"gen-world", "Generate a gridworld and write world.txt", gen_world},
      {"gen-demos", "Generate expert demonstrations and write demos.txt", gen_demos},
      {"train-moe", "Train the expert mixture and write model.ckpt", train_moe},
      {"landscape", "Render loss-landscape heatmaps", landscape},
      {"explore", "Run the greedy intrinsic explorer on a gridworld", explore},
      {"qlearn", "Q-learning on the six-state chain", qlearn},
      {"verify-mdp", "Value-iteration policy comparison on the six-state chain", verify_mdp},
      {"ablate-experts", "Train one mixture per expert count", ablate},
  };
  std::map<CLI::App*, Handler> handlers;
  for (const auto& [name, help, handler] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", opt.config_path, "Experiment config (JSON)");
    sub->add_option("--world", opt.world_file, "World file (overrides world.file)");
    sub->add_option("--demos", opt.demos_file, "Demo file (overrides demos.file)");
    sub->add_option("--model", opt.model_file, "Model checkpoint (overrides moe.model_file)");
    sub->fallthrough();
    handlers[sub] = handler;
  }
  app.require_subcommand(1, 1);

  if (argc <= 1) {
    err << app.help();
    return 2;
  }
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--seed" || arg == "--out") {
      ++i;
      continue;
    }
    if (arg.rfind('-', 0) == 0) continue;
    if (std::none_of(commands.begin(), commands.end(), [&](const auto& c) { return arg == std::get<0>(c); })) {
      err << "error: unknown subcommand '" << arg << "'\n" << "Run with --help for usage.\n";
      return 2;
    }
    break;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }
  if (*seed_opt) opt.seed = seed;
  if (*out_opt) opt.out_dir = out_dir;

  try {
    Session session(opt, out);
    for (auto* sub : app.get_subcommands()) handlers.at(sub)(session);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace moeguide::cli
