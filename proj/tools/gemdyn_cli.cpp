// Copyright 2026 The gemdyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// gemdyn command-line driver: collect, train, eval, plan, mbrl, selftest.
//
// Exit codes: 0 success, 1 runtime failure (divergence, numeric errors,
// failed selftest), 2 usage or configuration errors, unknown environments and
// missing inputs.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gemdyn/gemdyn.hpp"

namespace fs = std::filesystem;
using namespace gemdyn;

namespace {

class MissingInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config_path;
  std::string env, model, out, policy, data, checkpoint;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> sets;
  int n = -1;
  int iterations = -1;
  int samples = -1;
};

RunConfig resolve(const Flags& f) {
  RunConfig c;
  if (!f.config_path.empty()) c = load_config(f.config_path);
  for (const std::string& s : f.sets) c = apply_override(c, s);
  if (!f.env.empty()) c.env = f.env;
  if (!f.model.empty()) c.model = f.model;
  if (!f.out.empty()) c.out = f.out;
  if (!f.policy.empty()) c.data.policy = f.policy;
  if (!f.seeds.empty()) c.seeds = f.seeds;
  if (f.n >= 0) c.data.n_transitions = f.n;
  if (f.iterations >= 0) c.train.iterations = f.iterations;
  c.validate();
  return c;
}

std::string stem(const RunConfig& c, std::uint64_t seed) {
  return c.env + "-" + c.model + "-seed" + std::to_string(seed);
}

std::string dataset_path(const RunConfig& c, const Flags& f, std::uint64_t seed) {
  if (!f.data.empty()) return f.data;
  return (fs::path(c.out) / (c.env + "-seed" + std::to_string(seed) + ".jsonl")).string();
}

std::string checkpoint_path(const RunConfig& c, const Flags& f, std::uint64_t seed) {
  if (!f.checkpoint.empty()) return f.checkpoint;
  return (fs::path(c.out) / (stem(c, seed) + ".ckpt")).string();
}

std::string output_path(const RunConfig& c, std::uint64_t seed, const std::string& suffix) {
  return (fs::path(c.out) / (stem(c, seed) + suffix)).string();
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw MissingInput(what + " not found: " + path);
}

Dataset load_data(const RunConfig& c, const Flags& f, std::uint64_t seed) {
  const std::string path = dataset_path(c, f, seed);
  require_file(path, "dataset");
  return load_dataset(path, c.env);
}

// A learned model from its checkpoint, or the true dynamics for model "true".
struct ModelHandle {
  std::shared_ptr<const Env> env;
  std::unique_ptr<TrainableModel> trained;
  std::unique_ptr<TrueDynamics> oracle;
  const DynamicsModel& get() const {
    return trained ? static_cast<const DynamicsModel&>(*trained) : *oracle;
  }
};

ModelHandle load_handle(const RunConfig& c, const Flags& f, std::uint64_t seed) {
  ModelHandle h;
  h.env = make_env(c.env, c.env_constants);
  if (c.model_type() == ModelType::kTrue) {
    h.oracle = std::make_unique<TrueDynamics>(h.env);
    return h;
  }
  const std::string path = checkpoint_path(c, f, seed);
  require_file(path, "checkpoint");
  require_file(path + ".json", "checkpoint metadata");
  LoadedModel lm = load_model(path);
  if (lm.env != c.env)
    throw ConfigError("checkpoint " + path + " was trained on '" + lm.env + "', not '" + c.env + "'");
  if (lm.model->tag() != c.model)
    throw ConfigError("checkpoint " + path + " holds a '" + lm.model->tag() + "' model, not '" +
                      c.model + "'");
  h.trained = std::move(lm.model);
  return h;
}

void write_config(const RunConfig& c, const std::string& command) {
  fs::create_directories(c.out);
  std::ofstream out = open_output((fs::path(c.out) / (command + ".config.json")).string());
  out << dump_config(c);
}

// Runs `job(seed, log)` for every seed on up to GEM_NUM_WORKERS threads.
// Logs are printed in seed order and the first failure is rethrown, so the
// output does not depend on scheduling.
void for_each_seed(const RunConfig& c,
                   const std::function<void(std::uint64_t, std::ostream&)>& job) {
  const std::size_t n = c.seeds.size();
  std::vector<std::ostringstream> logs(n);
  int workers = 1;
  try {
    workers = worker_limit();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  std::exception_ptr failure;
  try {
    parallel_for(n, workers, [&](std::size_t i) { job(c.seeds[i], logs[i]); });
  } catch (...) {
    failure = std::current_exception();
  }
  for (const std::ostringstream& log : logs) std::cout << log.str();
  if (failure) std::rethrow_exception(failure);
}

void cmd_collect(const RunConfig& c) {
  write_config(c, "collect");
  for_each_seed(c, [&](std::uint64_t seed, std::ostream& log) {
    auto env = make_env(c.env, c.env_constants);
    Dataset ds = collect(*env, c.data.resolved_policy(c.env),
                         static_cast<std::size_t>(c.data.n_transitions), seed, c.data.ou);
    split(ds, c.data.fractions());
    const std::string path = (fs::path(c.out) / (c.env + "-seed" + std::to_string(seed) + ".jsonl")).string();
    save_dataset(ds, path);
    log << "collect seed " << seed << ": " << ds.size() << " transitions (train "
        << ds.count(Split::kTrain) << ", val " << ds.count(Split::kVal) << ", test "
        << ds.count(Split::kTest) << ") -> " << path << "\n";
  });
}

void cmd_train(const RunConfig& c, const Flags& f) {
  if (c.model_type() == ModelType::kTrue) throw ConfigError("the true-dynamics model is not trainable");
  if (!f.data.empty() && c.seeds.size() > 1) throw ConfigError("--data needs a single seed");
  write_config(c, "train");
  for_each_seed(c, [&](std::uint64_t seed, std::ostream& log) {
    const Dataset ds = load_data(c, f, seed);
    auto env = make_env(c.env, c.env_constants);
    const StateLayout& layout = env->spec().layout;
    const TransitionBatch tr = to_batch(ds, layout, Split::kTrain);
    const TransitionBatch va = to_batch(ds, layout, Split::kVal);
    auto model = make_model(c.model_type(), layout, env->spec().action_dim, c.network, seed);
    model->fit_normalization(tr);
    TrainResult r;
    try {
      r = train(*model, tr, va, c.train_config(seed));
    } catch (const NumericError& e) {
      throw NumericError("training " + stem(c, seed) + " aborted: " + e.what());
    }
    save_model(checkpoint_path(c, f, seed), *model, c.env, c.network, seed);
    std::ofstream out = open_output(output_path(c, seed, ".train.csv"));
    CsvWriter csv(out, {"iter", "train_loss", "val_loss", "L_alpha", "L_velocity"});
    for (const TrainLogRow& row : r.log)
      csv.row({std::to_string(row.iter), fmt17(row.train_loss), fmt17(row.val_loss),
               fmt17(row.l_alpha), fmt17(row.l_velocity)});
    log << "train " << stem(c, seed) << ": best val " << fmt17(r.best_val) << " at iteration "
        << r.best_iter << "\n";
  });
}

void cmd_eval(const RunConfig& c, const Flags& f) {
  if ((!f.data.empty() || !f.checkpoint.empty()) && c.seeds.size() > 1)
    throw ConfigError("--data and --checkpoint need a single seed");
  write_config(c, "eval");
  for_each_seed(c, [&](std::uint64_t seed, std::ostream& log) {
    const Dataset ds = load_data(c, f, seed);
    const ModelHandle h = load_handle(c, f, seed);
    HorizonReport r = horizon_errors(h.get(), ds, Split::kTest, c.horizons);
    r.model = c.model;
    std::ofstream out = open_output(output_path(c, seed, ".eval.csv"));
    CsvWriter csv(out, horizon_csv_columns());
    write_horizon_rows(csv, c.env, seed, r);
    log << "eval " << stem(c, seed) << ": " << r.starts << " starts, mse@" << r.horizons.back()
        << " = " << fmt17(r.mse_total.back()) << "\n";
  });
}

void cmd_plan(const RunConfig& c, const Flags& f) {
  if (!f.checkpoint.empty() && c.seeds.size() > 1) throw ConfigError("--checkpoint needs a single seed");
  write_config(c, "plan");
  for_each_seed(c, [&](std::uint64_t seed, std::ostream& log) {
    const ModelHandle h = load_handle(c, f, seed);
    const PlanTrace t = open_loop_eval(h.get(), *h.env, c.planner_config(seed), seed, c.plan.steps);
    std::ofstream out = open_output(output_path(c, seed, ".plan.csv"));
    CsvWriter csv(out, {"env", "model", "seed", "step", "reward"});
    for (std::size_t s = 0; s < t.rewards.size(); ++s)
      csv.row({c.env, c.model, std::to_string(seed), std::to_string(s), fmt17(t.rewards[s])});
    log << "plan " << stem(c, seed) << ": mean reward " << fmt17(t.mean()) << "\n";
  });
}

int cmd_mbrl(const RunConfig& c) {
  write_config(c, "mbrl");
  std::atomic<int> diverged{0};
  for_each_seed(c, [&](std::uint64_t seed, std::ostream& log) {
    auto env = make_env(c.env, c.env_constants);
    std::unique_ptr<TrainableModel> model;
    if (c.model_type() != ModelType::kTrue)
      model = make_model(c.model_type(), env->spec().layout, env->spec().action_dim, c.network, seed);
    const MbrlCurve curve = mbrl_loop(model.get(), *env, c.mbrl_config(seed));
    std::ofstream out = open_output(output_path(c, seed, ".mbrl.csv"));
    CsvWriter csv(out, {"env", "model", "seed", "samples_trained", "mean_final_reward"});
    for (const MbrlPoint& p : curve.points)
      csv.row({c.env, c.model, std::to_string(seed), std::to_string(p.samples_trained),
               fmt17(p.mean_final_reward)});
    log << "mbrl " << stem(c, seed) << ": " << curve.points.size() << " iterations";
    if (!curve.points.empty()) log << ", final reward " << fmt17(curve.points.back().mean_final_reward);
    log << "\n";
    if (curve.diverged) {
      log << "mbrl " << stem(c, seed) << ": diverged (" << curve.diagnostic << ")\n";
      ++diverged;
    }
  });
  return diverged ? 1 : 0;
}

int cmd_selftest(const Flags& f) {
  selftest::Options o;
  if (f.samples > 0) o.lie_samples = f.samples;
  const std::vector<selftest::CheckResult> r = selftest::run(o);
  selftest::print_report(std::cout, r);
  const bool ok = selftest::all_passed(r);
  std::cout << (ok ? "selftest: all checks passed" : "selftest: FAILED") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gemdyn: group-enhanced dynamics models, evaluation and planning"};
  app.require_subcommand(1, 1);
  Flags f;

  auto common = [&](CLI::App* sub, bool data_flags) {
    sub->add_option("--config", f.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--env", f.env, "environment name");
    sub->add_option("--model", f.model, "gem, baseline, gem_ensemble, baseline_ensemble or true");
    sub->add_option("--seed,--seeds", f.seeds, "one or more seeds")->delimiter(',');
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--set", f.sets, "override a config key: section.key=value");
    if (data_flags) {
      sub->add_option("--data", f.data, "dataset file (default: <out>/<env>-seed<s>.jsonl)");
      sub->add_option("--checkpoint", f.checkpoint, "checkpoint (default: <out>/<env>-<model>-seed<s>.ckpt)");
    }
  };

  CLI::App* collect_cmd = app.add_subcommand("collect", "collect a transition dataset");
  common(collect_cmd, false);
  collect_cmd->add_option("--n", f.n, "number of transitions");
  collect_cmd->add_option("--policy", f.policy, "uniform_random, ou_noise, energy_swingup or default");

  CLI::App* train_cmd = app.add_subcommand("train", "train a model on a dataset");
  common(train_cmd, true);
  train_cmd->add_option("--iterations", f.iterations, "training iterations");

  CLI::App* eval_cmd = app.add_subcommand("eval", "multi-horizon prediction error on the test split");
  common(eval_cmd, true);
  CLI::App* plan_cmd = app.add_subcommand("plan", "open-loop MPPI planning with a model");
  common(plan_cmd, true);
  CLI::App* mbrl_cmd = app.add_subcommand("mbrl", "model-based RL loop");
  common(mbrl_cmd, false);
  CLI::App* self_cmd = app.add_subcommand("selftest", "run the invariant battery");
  self_cmd->add_option("--samples", f.samples, "random samples per Lie check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (self_cmd->parsed()) return cmd_selftest(f);
    const RunConfig c = resolve(f);
    if (collect_cmd->parsed()) cmd_collect(c);
    if (train_cmd->parsed()) cmd_train(c, f);
    if (eval_cmd->parsed()) cmd_eval(c, f);
    if (plan_cmd->parsed()) cmd_plan(c, f);
    if (mbrl_cmd->parsed()) return cmd_mbrl(c);
    return 0;
  } catch (const UnknownEnvError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const MissingInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
