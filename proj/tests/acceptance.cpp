// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run. Usage: acceptance <path-to-lcumini-cli>
// Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "lcumini/bench.hpp"
#include "lcumini/checkpoint.hpp"
#include "lcumini/gradcheck.hpp"
#include "lcumini/lora.hpp"
#include "lcumini/metrics.hpp"
#include "lcumini/ppm.hpp"
#include "lcumini/sampler.hpp"
#include "lcumini/trainer.hpp"
#include "test_util.hpp"

using namespace lcumini;
using lcumini::testing::bitwise_equal;
using lcumini::testing::random_lcu;
using lcumini::testing::random_mask;
using lcumini::testing::random_tensor;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ModelConfig tiny_model() {
  ModelConfig c;
  c.model_dim = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.patch = 4;
  c.image_size = 8;
  return c;
}

// State shared between criteria.
struct Context {
  std::string cli;
  fs::path work;
  std::vector<StepRecord> all_records;  // every recorded training step, for the clip invariant
  std::optional<ModelWeights<float>> stage1;

  int run_cli(const std::string& args) const {
    const std::string cmd = "cd '" + work.string() + "' && '" + cli + "' " + args + " > cli.stdout 2> cli.stderr";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  void keep(const TrainReport& r) { all_records.insert(all_records.end(), r.records.begin(), r.records.end()); }
};

Outcome gradient_oracle(Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto w = init_weights<double>(tiny_model(), 13);
  const auto lcu = random_lcu(2, 8, 14);
  std::vector<Tensor<double>> targets;
  for (std::uint64_t i = 0; i < 2; ++i) targets.push_back(random_tensor<double>({3, 8, 8}, 15 + i, false, -2, 2));
  std::vector<Tensor<double>> params;
  for (const auto& [name, p] : w.named_parameters()) params.push_back(p);
  const double err = finite_diff_check<double>(
      [&]() { return compute_loss(forward(w, lcu, 0.35), targets, 1).total; }, params, 1e-5);
  const double secs = seconds_since(t0);
  return {err < 1e-4 && secs < 120.0, fmt("max relative error %.3g (< 1e-4), %.1f s (< 120 s)", err, secs)};
}

Outcome loss_decomposition(Context&) {
  auto w = init_weights<float>(tiny_model(), 2);
  TrainConfig cfg;
  cfg.stage = 2;
  cfg.batch_size = 4;
  auto opt = make_optimizer(w, cfg);
  Rng rng(5);
  double worst = 0.0;
  std::size_t zero_ref_batches = 0, nonzero_ref_on_zero = 0;
  for (std::size_t b = 0; b < 100; ++b) {
    std::vector<TaskSample> batch;
    const bool zero_ref = b % 2 == 0;
    for (std::size_t i = 0; i < cfg.batch_size; ++i) {
      const TaskKind kind = zero_ref ? (i % 2 ? TaskKind::edge_cond : TaskKind::inpaint)
                                     : (i % 2 ? TaskKind::subject_ref : TaskKind::inpaint);
      batch.push_back(gen_sample(kind, 1000 * b + i, 8));
    }
    if (!zero_ref) batch[0] = gen_subject_ref_sample(1000 * b + 99, 8);
    const auto rec = train_step(w, std::span<const TaskSample>(batch), cfg, opt, rng);
    worst = std::max(worst, std::abs(rec.loss.total - (rec.loss.ref + rec.loss.tar)));
    if (zero_ref) {
      ++zero_ref_batches;
      nonzero_ref_on_zero += rec.loss.ref != 0.0;
    }
  }
  return {worst <= 1e-6 && nonzero_ref_on_zero == 0,
          fmt("max |total-(ref+tar)| %.3g over 100 batches; ref != 0 on %zu of %zu 0-ref batches", worst,
              nonzero_ref_on_zero, zero_ref_batches)};
}

Outcome cfg_collapse(Context&) {
  std::size_t mismatched = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto c = random_tensor<float>({3, 16, 16}, s), u = random_tensor<float>({3, 16, 16}, s + 7777);
    mismatched += !bitwise_equal(cfg_combine(c, u, 1.0), c);
  }
  const auto w = init_weights<float>(tiny_model(), 4);
  const auto sample = gen_inpaint_sample(3, 8);
  std::size_t bad_calls = 0;
  for (std::size_t steps : {1u, 5u, 20u}) {
    const auto r = generate(w, request_for(sample), SampleConfig{steps, 1.0, 0});
    bad_calls += r.forward_calls != steps;
  }
  return {mismatched == 0 && bad_calls == 0,
          fmt("omega=1 combine differs on %zu/100 cases; wrong forward count on %zu/3 step settings", mismatched,
              bad_calls)};
}

Outcome interpolation_identities(Context&) {
  std::size_t endpoint_bad = 0, velocity_bad = 0;
  double worst_dt = 0.0;
  Rng rng(3);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto x0 = random_tensor<double>({3, 8, 8}, s, false, -3, 3);
    const auto x1 = random_tensor<double>({3, 8, 8}, s + 500, false, 0, 1);
    endpoint_bad += !bitwise_equal(interpolate(x0, x1, 0.0), x0) || !bitwise_equal(interpolate(x0, x1, 1.0), x1);
    const auto u = velocity_target(x0, x1);
    for (std::size_t i = 0; i < u.numel(); ++i) velocity_bad += u.data()[i] != x1.data()[i] - x0.data()[i];
    const double t = std::uniform_real_distribution<double>(0.05, 0.95)(rng), h = 1e-5;
    const auto hi = interpolate(x0, x1, t + h), lo = interpolate(x0, x1, t - h);
    for (std::size_t i = 0; i < u.numel(); ++i) {
      worst_dt = std::max(worst_dt, std::abs((hi.data()[i] - lo.data()[i]) / (2 * h) - u.data()[i]));
    }
  }
  return {endpoint_bad == 0 && velocity_bad == 0 && worst_dt < 1e-6,
          fmt("endpoint mismatches %zu, velocity mismatches %zu, max |d/dt - u| %.3g (< 1e-6)", endpoint_bad,
              velocity_bad, worst_dt)};
}

Outcome cost_accounting(Context&) {
  std::size_t geometries = 0, bad = 0;
  for (std::size_t patch : {1u, 2u, 4u, 8u}) {
    for (std::size_t gh = 1; gh <= 4; ++gh) {
      for (std::size_t gw = 1; gw <= 4; ++gw) {
        const std::size_t h = gh * patch, w = gw * patch;
        ConditionUnit<float> unit{Tensor<float>::zeros({3, h, w}), Tensor<float>::full({1, h, w}, 1.0f),
                                  Tensor<float>::zeros({3, h, w}), CuRole::target};
        LcuPlusPlus<float> lcu{TextInstruction::of({vocab::kFill}), {unit}};
        const auto pp = assemble_lcu_pp(lcu, patch);
        const auto legacy = assemble_legacy_lcu_0ref(unit, patch);
        for (std::uint64_t d : {8u, 64u}) {
          ++geometries;
          bad += legacy.total_tokens != 2 * pp.total_tokens || attention_cost(legacy, d) != 4 * attention_cost(pp, d);
        }
      }
    }
  }
  const auto row = bench_attention(64, 64, 4, 64, 9);
  return {bad == 0 && row.time_ratio() > 1.5,
          fmt("%zu/%zu geometries with token ratio 2 and FLOP ratio 4; time ratio %.2f at 64x64 d64 (> 1.5)",
              geometries - bad, geometries, row.time_ratio())};
}

Outcome mask_fill(Context& ctx) {
  std::size_t broken = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const std::size_t size = 4 + s % 13;
    const auto gen = random_tensor<float>({3, size, size}, s, false, -5, 5);
    const auto in = random_tensor<float>({3, size, size}, s + 100000, false, 0, 1);
    const auto mask = random_mask(size, s + 200000);
    const auto out = composite_masked(gen, in, mask);
    const std::size_t plane = size * size;
    for (std::size_t i = 0; i < out.numel(); ++i) {
      const float expected = mask.data()[i % plane] == 0.0f ? in.data()[i] : gen.data()[i];
      broken += std::memcmp(&out.data()[i], &expected, sizeof(float)) != 0;
    }
  }
  write_file((ctx.work / "black.pgm").string(), encode_ppm({1, 8, 8, std::vector<std::uint8_t>(64, 0)}));
  const int code = ctx.run_cli("sample --ckpt tiny/stage1_final.ckpt --image ds/000000_target.ppm --mask black.pgm "
                               "--steps 4 --omega 2 --out roundtrip.ppm");
  const bool same = code == 0 && slurp(ctx.work / "roundtrip.ppm") == slurp(ctx.work / "ds" / "000000_target.ppm");
  return {broken == 0 && same, fmt("%zu mismatched pixels over 1000 cases; CLI all-black mask round-trip %s", broken,
                                   same ? "byte-identical" : "differs")};
}

Outcome toy_convergence(Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig rc;
  rc.train.steps = 5000;
  rc.train.batch_size = 16;
  rc.train.seed = 0;
  const auto split = make_split({TaskKind::inpaint}, 2048, 64, 0, rc.model.image_size);
  auto w = init_weights<float>(rc.model, rc.train.seed);
  const SampleConfig eval_cfg{20, 1.0, 0};
  const auto before = evaluate_split(w, split.test, eval_cfg);
  StageOptions opts;
  opts.out_dir = ctx.work / "stage1";
  opts.run_config = rc;
  const auto report = run_stage(1, w, InitKind::fresh, split.train, rc.train, opts);
  ctx.keep(report);
  const auto after = evaluate_split(w, split.test, eval_cfg);
  ctx.stage1 = w.clone();
  const auto smooth = smoothed_losses(report.records, 200);
  const double first = smooth.front(), last = smooth.back();
  const double gain = after.psnr_db - before.psnr_db;
  return {last < 0.5 * first && gain >= 6.0,
          fmt("smoothed loss %.4f -> %.4f (ratio %.3f < 0.5); PSNR %.2f -> %.2f dB (gain %.2f >= 6); %.0f s", first,
              last, last / first, before.psnr_db, after.psnr_db, gain, seconds_since(t0))};
}

// First step index (window end) whose smoothed loss is at or below `level`.
std::optional<std::size_t> first_reach(const std::vector<double>& smooth, double level, std::size_t window) {
  for (std::size_t i = 0; i < smooth.size(); ++i) {
    if (smooth[i] <= level) return i + window - 1;
  }
  return std::nullopt;
}

Outcome two_stage_benefit(Context& ctx) {
  if (!ctx.stage1) return {false, "no stage-1 weights (toy convergence run failed to produce them)"};
  const std::size_t window = 200;
  std::size_t wins = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    TrainConfig tc;
    tc.steps = 1000;
    tc.batch_size = 16;
    tc.seed = seed;
    const auto data = make_split({TaskKind::subject_ref}, 512, 1, 100 + seed, 16).train;
    auto from_ckpt = ctx.stage1->clone();
    const auto a = run_stage(2, from_ckpt, InitKind::checkpoint, data, tc);
    auto scratch = init_weights<float>(ModelConfig{}, seed);
    StageOptions opts;
    opts.allow_fresh_stage2 = true;
    const auto b = run_stage(2, scratch, InitKind::fresh, data, tc, opts);
    ctx.keep(a);
    ctx.keep(b);
    const auto sa = smoothed_losses(a.records, window), sb = smoothed_losses(b.records, window);
    const double target = sb.back();
    const auto reach_ckpt = first_reach(sa, target, window), reach_scratch = first_reach(sb, target, window);
    const bool win = reach_ckpt && *reach_ckpt < *reach_scratch;
    wins += win;
    detail += fmt("seed %llu: scratch final %.4f at step %zu, checkpoint %s; ", static_cast<unsigned long long>(seed),
                  target, *reach_scratch,
                  reach_ckpt ? fmt("reaches it at step %zu", *reach_ckpt).c_str() : "never reaches it");
  }
  return {wins == 3, detail + fmt("%zu/3 seeds", wins)};
}

Outcome hyperparameters(Context& ctx) {
  std::ostringstream echo;
  TrainReport{}.write_csv(echo, TrainConfig{});
  const bool echo_ok =
      echo.str().rfind("# lr=0.001 weight_decay=0.01 clip_norm=1 uncond_prob=0.1 guidance_scale=1\n", 0) == 0;

  // Dedicated dropout run: one sample per step so the step count is the draw count.
  TrainConfig tc;
  tc.steps = 10000;
  tc.batch_size = 1;
  tc.seed = 11;
  ModelConfig mc = tiny_model();
  auto w = init_weights<float>(mc, 11);
  const auto report = run_stage(1, w, InitKind::fresh, make_split({TaskKind::inpaint}, 64, 1, 11, 8).train, tc);
  ctx.keep(report);
  std::size_t dropped = 0;
  for (const auto& r : report.records) dropped += r.unconditional;
  const double n = static_cast<double>(report.records.size());
  const double freq = static_cast<double>(dropped) / n;
  const double sigma = std::sqrt(0.1 * 0.9 / n);

  double worst_clip = 0.0;
  for (const auto& r : ctx.all_records) worst_clip = std::max(worst_clip, r.grad_norm_postclip);
  const bool clip_ok = worst_clip <= 1.0 + 1e-6;
  const bool freq_ok = std::abs(freq - 0.1) <= 3.0 * sigma;
  return {echo_ok && clip_ok && freq_ok,
          fmt("default echo %s; max post-clip norm %.6f over %zu steps; dropout %.4f over %.0f steps (|d| <= %.4f)",
              echo_ok ? "ok" : "wrong", worst_clip, ctx.all_records.size(), freq, n, 3.0 * sigma)};
}

Outcome lora_contract(Context&) {
  const ModelConfig mc;
  const auto base = init_weights<float>(mc, 2);
  auto adapted = base.clone();
  const std::size_t rank = 4, d = mc.model_dim, p2 = mc.patch * mc.patch;
  const std::size_t trainable = attach_lora(adapted, LoraSpec{rank, 8.0, {"attn.q", "mlp.fc1", "head"}}, 3);
  const std::size_t closed_form = mc.n_layers * rank * (d + d) + mc.n_layers * rank * (d + 4 * d) + rank * (d + 3 * p2);
  const auto sample = gen_subject_ref_sample(4, 16);
  const auto req = request_for(sample);
  const auto a = generate(base, req, SampleConfig{3, 2.0, 1}), b = generate(adapted, req, SampleConfig{3, 2.0, 1});
  const bool zero_init = bitwise_equal(a.image, b.image);

  const auto frozen = adapted.clone();
  TrainConfig tc;
  tc.steps = 20;
  tc.batch_size = 2;
  run_stage(1, adapted, InitKind::fresh, make_split({TaskKind::inpaint}, 8, 1, 4, 16).train, tc);
  std::size_t base_changed = 0;
  const auto before = frozen.named_parameters(), after = adapted.named_parameters();
  for (std::size_t i = 0; i < before.size(); ++i) {
    const bool adapter = before[i].first.ends_with(".lora_down") || before[i].first.ends_with(".lora_up");
    if (!adapter) base_changed += !bitwise_equal(before[i].second, after[i].second);
  }
  return {zero_init && base_changed == 0 && trainable == closed_form && count_trainable(adapted) == closed_form,
          fmt("zero-init outputs %s; %zu base tensors changed; trainable %zu vs closed form %zu",
              zero_init ? "bit-identical" : "differ", base_changed, trainable, closed_form)};
}

Outcome sampler_numerics(Context&) {
  const VelocityFn<double> constant = [](const std::vector<Tensor<double>>& x, double) {
    return std::vector<Tensor<double>>{Tensor<double>::full(x[0].shape(), 0.375)};
  };
  const auto one = euler_integrate(constant, {Tensor<double>::full({3, 2, 2}, -1.25)}, 1);
  bool exact = true;
  for (double v : one[0].data()) exact = exact && v == -0.875;

  const VelocityFn<double> linear = [](const std::vector<Tensor<double>>& x, double) {
    return std::vector<Tensor<double>>{scale(x[0], -1.0)};
  };
  double lo = 1e9, hi = -1e9;
  double prev = -1.0;
  for (std::size_t n = 10; n <= 640; n *= 2) {
    const auto x = euler_integrate(linear, {Tensor<double>::full({1}, 1.0)}, n);
    const double err = std::abs(x[0].data()[0] - std::exp(-1.0));
    if (prev > 0) {
      const double order = std::log2(prev / err);
      lo = std::min(lo, order);
      hi = std::max(hi, order);
    }
    prev = err;
  }
  return {exact && lo >= 0.8 && hi <= 1.2,
          fmt("one-step constant field %s; empirical order in [%.4f, %.4f] for n = 10..640", exact ? "exact" : "inexact",
              lo, hi)};
}

Outcome reproducibility(Context& ctx) {
  bool ckpt_ok = false;
  if (ctx.stage1) {
    const auto loaded = load_checkpoint((ctx.work / "stage1" / "stage1_final.ckpt").string());
    const auto a = ctx.stage1->named_parameters(), b = loaded.weights.named_parameters();
    ckpt_ok = a.size() == b.size();
    for (std::size_t i = 0; ckpt_ok && i < a.size(); ++i) ckpt_ok = a[i].first == b[i].first && bitwise_equal(a[i].second, b[i].second);
  }
  const int c1 = ctx.run_cli("train --stage 1 --config tiny.cfg --out tiny_again");
  const bool csv_same = c1 == 0 && slurp(ctx.work / "tiny" / "stage1_report.csv") ==
                                       slurp(ctx.work / "tiny_again" / "stage1_report.csv");
  const std::string args = "sample --ckpt tiny/stage1_final.ckpt --image ds/000000_input.ppm "
                           "--mask ds/000000_mask.ppm --steps 5 --omega 2 --seed 9 ";
  const int s1 = ctx.run_cli(args + "--out repro1.ppm"), s2 = ctx.run_cli(args + "--out repro2.ppm");
  const bool img_same = s1 == 0 && s2 == 0 && slurp(ctx.work / "repro1.ppm") == slurp(ctx.work / "repro2.ppm");
  return {ckpt_ok && csv_same && img_same,
          fmt("checkpoint round-trip %s; training CSVs %s; sampled images %s", ckpt_ok ? "bitwise" : "differs",
              csv_same ? "identical" : "differ", img_same ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <path-to-lcumini-cli>\n";
    return 2;
  }
  Context ctx;
  ctx.cli = fs::absolute(argv[1]).string();
  ctx.work = fs::temp_directory_path() / "lcumini_acceptance";
  fs::remove_all(ctx.work);
  fs::create_directories(ctx.work);
  std::ofstream(ctx.work / "tiny.cfg") << "steps = 20\nn_train = 16\nbatch_size = 4\nmodel_dim = 16\n"
                                          "n_layers = 1\nn_heads = 2\nimage_size = 8\n";
  if (ctx.run_cli("train --stage 1 --config tiny.cfg --out tiny") != 0 ||
      ctx.run_cli("export-dataset --task inpaint --count 1 --size 8 --out ds") != 0) {
    std::cerr << "acceptance: CLI setup failed; see " << (ctx.work / "cli.stderr") << "\n";
    return 1;
  }

  const std::vector<std::pair<const char*, std::function<Outcome(Context&)>>> criteria = {
      {"gradient oracle", gradient_oracle},
      {"loss decomposition", loss_decomposition},
      {"guidance collapse", cfg_collapse},
      {"interpolation and velocity", interpolation_identities},
      {"token and cost accounting", cost_accounting},
      {"mask-fill contract", mask_fill},
      {"toy convergence", toy_convergence},
      {"two-stage benefit", two_stage_benefit},
      {"hyperparameter conformance", hyperparameters},
      {"adapter contract", lora_contract},
      {"sampler numerics", sampler_numerics},
      {"reproducibility", reproducibility},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2zu %s: %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(ctx.work);
  return failures == 0 ? 0 : 1;
}
