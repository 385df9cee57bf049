// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

// lcumini: train, sample, evaluate and benchmark the miniature LCU++ model.
//
// Exit codes: 0 ok, 1 internal error, 2 usage/config error, 3 dataset, stage
// or geometry mismatch, 4 non-finite loss, 5 corrupt checkpoint.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lcumini/lcumini.hpp"

namespace fs = std::filesystem;
using namespace lcumini;

namespace {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kMismatch = 3,
  kNonFinite = 4,
  kCorrupt = 5,
};

/// LCUMINI_SEED, when set, wins over --seed.
std::uint64_t effective_seed(std::uint64_t flag_seed) {
  const char* env = std::getenv("LCUMINI_SEED");
  if (env == nullptr || *env == '\0') return flag_seed;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("LCUMINI_SEED is not an unsigned integer: '") + env + "'");
  }
}

struct TrainArgs {
  int stage = 1;
  std::string config;
  std::string init;
  std::string out = "runs";
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& args) {
  if (args.stage != 1 && args.stage != 2) throw ConfigError("--stage must be 1 or 2");
  if (args.stage == 2 && args.init.empty()) {
    throw StageError("two-stage rule: stage 2 fine-tunes a stage-1 checkpoint; pass --init PATH");
  }
  RunConfig base;
  base.train.tasks = default_stage_tasks(args.stage);
  RunConfig cfg = args.config.empty() ? base : load_config_file(args.config, base);
  cfg.train.stage = args.stage;
  if (args.seed) cfg.train.seed = *args.seed;
  cfg.train.seed = effective_seed(cfg.train.seed);
  cfg.train.validate();

  ModelWeights<float> weights;
  InitKind init = InitKind::fresh;
  if (!args.init.empty()) {
    auto loaded = load_checkpoint(args.init);
    cfg.model = loaded.config.model;
    weights = std::move(loaded.weights);
    init = InitKind::checkpoint;
    std::cerr << "init: " << args.init << "\n";
  } else {
    cfg.model.validate();
    weights = init_weights<float>(cfg.model, cfg.train.seed);
  }
  if (cfg.train.adapter) {
    const auto linears = weights.linears();
    const bool attached =
        std::any_of(linears.begin(), linears.end(), [](const Linear<float>* l) { return l->adapter.has_value(); });
    if (!attached) {
      const auto n = attach_lora(weights, *cfg.train.adapter, cfg.train.seed);
      std::cerr << "adapter: " << n << " trainable parameters\n";
    }
  }

  const auto dataset = make_split(cfg.train.tasks, cfg.train.n_train, 1, cfg.train.seed, cfg.model.image_size).train;
  StageOptions options;
  options.out_dir = fs::path(args.out);
  options.run_config = cfg;
  options.on_step = [&cfg](const StepRecord& r) {
    if ((r.step + 1) % 100 == 0 || r.step + 1 == cfg.train.steps) {
      std::cerr << "step " << r.step + 1 << "/" << cfg.train.steps << " loss " << r.loss.total << " grad_norm "
                << r.grad_norm_preclip << "\n";
    }
  };
  const auto report = run_stage(args.stage, weights, init, dataset, cfg.train, options);

  const fs::path csv = fs::path(args.out) / ("stage" + std::to_string(args.stage) + "_report.csv");
  std::ofstream f(csv);
  if (!f) throw std::runtime_error("cannot write " + csv.string());
  report.write_csv(f, cfg.train);
  std::cerr << "checkpoint: " << (fs::path(args.out) / report.checkpoint_id).string() << "\nreport: " << csv.string()
            << "\nwall_seconds: " << report.wall_seconds << "\n";
  return kOk;
}

struct SampleArgs {
  std::string ckpt;
  std::string image;
  std::string mask;
  std::vector<std::string> refs;
  std::string prompt;
  std::string out = "sample.ppm";
  std::size_t steps = 20;
  double omega = 1.0;
  std::uint64_t seed = 0;
};

Tensor<float> load_rgb(const std::string& path, std::size_t size, const char* what) {
  const auto t = rgb_tensor(read_pnm_file(path));
  if (t.dim(1) != size || t.dim(2) != size) {
    throw ShapeError(std::string(what) + " " + path + " is " + std::to_string(t.dim(2)) + "x" +
                     std::to_string(t.dim(1)) + ", model expects " + std::to_string(size) + "x" + std::to_string(size));
  }
  return t;
}

int cmd_sample(const SampleArgs& args) {
  const auto loaded = load_checkpoint(args.ckpt);
  const std::size_t size = loaded.config.model.image_size;
  GenerateRequest<float> req;
  const auto ids = vocab::encode(args.prompt);
  req.instruction = ids.empty() ? TextInstruction::null() : TextInstruction::of(ids);
  req.input_image = load_rgb(args.image, size, "image");
  req.mask = mask_tensor(read_pnm_file(args.mask));
  if (req.mask.dim(1) != size || req.mask.dim(2) != size) throw ShapeError("mask " + args.mask + " does not match the image");
  for (const auto& r : args.refs) req.references.push_back(load_rgb(r, size, "reference"));
  if (req.references.size() + 1 > loaded.config.model.max_cus) {
    throw ShapeError("too many references for max_cus " + std::to_string(loaded.config.model.max_cus));
  }

  const SampleConfig cfg{args.steps, args.omega, effective_seed(args.seed)};
  if (cfg.steps == 0) throw ConfigError("--steps must be at least 1");
  const auto result = generate(loaded.weights, req, cfg);
  std::cerr << "forward passes per step: " << result.forward_calls / cfg.steps << "\n";
  write_ppm_file(args.out, result.image);
  std::cerr << "wrote " << args.out << "\n";
  return kOk;
}

struct EvalArgs {
  std::string ckpt;
  std::string task = "inpaint";
  std::size_t n_test = 64;
  std::size_t steps = 20;
  double omega = 1.0;
  std::optional<std::uint64_t> seed;
};

/// Test seeds follow the checkpoint's training seeds, so the split is held out.
int cmd_eval(const EvalArgs& args) {
  const auto loaded = load_checkpoint(args.ckpt);
  const auto& tc = loaded.config.train;
  const auto kind = parse_task_kind(args.task);
  const std::uint64_t split_seed = effective_seed(args.seed.value_or(tc.seed));
  const auto split = make_split({kind}, tc.n_train, args.n_test, split_seed, loaded.config.model.image_size);
  if (args.steps == 0) throw ConfigError("--steps must be at least 1");
  const auto summary = evaluate_split(loaded.weights, split.test, SampleConfig{args.steps, args.omega, 0});
  std::cout << "task,samples,steps,guidance_scale,mse,psnr_db\n"
            << args.task << ',' << summary.samples << ',' << args.steps << ',' << args.omega << ',' << summary.mse
            << ',' << summary.psnr_db << '\n';
  return kOk;
}

struct BenchArgs {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t patch = 4;
  std::size_t dim = 64;
  std::size_t repeats = 5;
};

int cmd_bench(const BenchArgs& args) {
  AttentionBenchRow row;
  try {
    row = bench_attention(args.height, args.width, args.patch, args.dim, args.repeats);
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  write_bench_csv(std::cout, {row});
  return kOk;
}

struct ExportArgs {
  std::vector<std::string> tasks{"inpaint"};
  std::size_t count = 16;
  std::size_t size = 16;
  std::uint64_t seed = 0;
  std::string out = "dataset";
};

int cmd_export(const ExportArgs& args) {
  std::vector<TaskKind> kinds;
  for (const auto& t : args.tasks) kinds.push_back(parse_task_kind(t));
  const auto split = make_split(kinds, args.count, 1, effective_seed(args.seed), args.size);
  export_dataset(args.out, split.train);
  std::cerr << "wrote " << split.train.size() << " samples to " << args.out << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lcumini: miniature LCU++ diffusion transformer"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "run one training stage");
  train_cmd->add_option("--stage", train.stage, "1 (0-ref only) or 2 (fine-tune a stage-1 checkpoint)")->required();
  train_cmd->add_option("--config", train.config, "key = value or JSON config file");
  train_cmd->add_option("--init", train.init, "checkpoint to start from");
  train_cmd->add_option("--out", train.out, "output directory")->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "seed (LCUMINI_SEED overrides)");

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "mask-fill generation from a checkpoint");
  sample_cmd->add_option("--ckpt", sample.ckpt)->required();
  sample_cmd->add_option("--image", sample.image, "input P6 image")->required();
  sample_cmd->add_option("--mask", sample.mask, "P5/P6 mask, nonzero = generate")->required();
  sample_cmd->add_option("--ref", sample.refs, "reference P6 image (repeatable)");
  sample_cmd->add_option("--prompt", sample.prompt, "instruction words; empty = null instruction");
  sample_cmd->add_option("--steps", sample.steps)->capture_default_str();
  sample_cmd->add_option("--omega", sample.omega, "guidance scale")->capture_default_str();
  sample_cmd->add_option("--seed", sample.seed)->capture_default_str();
  sample_cmd->add_option("--out", sample.out)->capture_default_str();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "masked-region PSNR/MSE on a held-out split (CSV on stdout)");
  eval_cmd->add_option("--ckpt", eval.ckpt)->required();
  eval_cmd->add_option("--task", eval.task)->capture_default_str();
  eval_cmd->add_option("--n-test", eval.n_test)->capture_default_str();
  eval_cmd->add_option("--steps", eval.steps)->capture_default_str();
  eval_cmd->add_option("--omega", eval.omega)->capture_default_str();
  eval_cmd->add_option("--seed", eval.seed, "split seed; defaults to the checkpoint's training seed");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench-attention", "legacy vs LCU++ attention cost for a 0-ref input (CSV)");
  bench_cmd->add_option("--height", bench.height)->capture_default_str();
  bench_cmd->add_option("--width", bench.width)->capture_default_str();
  bench_cmd->add_option("--patch", bench.patch)->capture_default_str();
  bench_cmd->add_option("--dim", bench.dim)->capture_default_str();
  bench_cmd->add_option("--repeats", bench.repeats, "timed runs per layout (at least 5)")
      ->check(CLI::Range(5, 1000000))
      ->capture_default_str();

  ExportArgs exp;
  auto* export_cmd = app.add_subcommand("export-dataset", "write synthetic samples as PPM files plus index.jsonl");
  export_cmd->add_option("--task", exp.tasks, "task kinds, interleaved")->capture_default_str();
  export_cmd->add_option("--count", exp.count)->capture_default_str();
  export_cmd->add_option("--size", exp.size)->capture_default_str();
  export_cmd->add_option("--seed", exp.seed)->capture_default_str();
  export_cmd->add_option("--out", exp.out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train);
    if (sample_cmd->parsed()) return cmd_sample(sample);
    if (eval_cmd->parsed()) return cmd_eval(eval);
    if (bench_cmd->parsed()) return cmd_bench(bench);
    if (export_cmd->parsed()) return cmd_export(exp);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const ImageFormatError& e) {
    std::cerr << "image error: " << e.what() << "\n";
    return kUsage;
  } catch (const StageError& e) {
    std::cerr << "stage error: " << e.what() << "\n";
    return kMismatch;
  } catch (const ShapeError& e) {
    std::cerr << "geometry error: " << e.what() << "\n";
    return kMismatch;
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return kNonFinite;
  } catch (const EvaluationError& e) {
    std::cerr << "evaluation error: " << e.what() << "\n";
    return kNonFinite;
  } catch (const CorruptCheckpointError& e) {
    std::cerr << "corrupt checkpoint: " << e.what() << "\n";
    return kCorrupt;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
