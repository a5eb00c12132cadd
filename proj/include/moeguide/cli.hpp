#pragma once

// Command-line front end. Subcommands:
//
//   gen-world       world.txt
//   gen-demos       demos.txt
//   train-moe       model.ckpt, train_history.csv
//   landscape       landscape/slice_<z>.ppm, landscape/landscape.csv
//   explore         trace_<kind>.csv, explore_summary.csv
//   qlearn          learning_curve.csv, qlearn_policy.txt
//   verify-mdp      invariance_report.txt, policy_env.txt, policy_total.txt
//   ablate-experts  ablation.csv, ablation/N<count>/...
//
// Every subcommand reads --config and honors the global --seed and --out
// overrides. Inputs that are not given as files are regenerated from the
// config, so each subcommand also runs on its own.

#include <ostream>

namespace moeguide::cli {

/// Returns the process exit code. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace moeguide::cli
