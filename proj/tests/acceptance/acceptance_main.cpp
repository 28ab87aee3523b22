// Acceptance gate: one PASS/FAIL line per criterion. Exits 0 only if every
// criterion passes, except ids named with --known-failure, which still print
// FAIL but do not fail the run.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sys/wait.h>

#include "fcaide/checkpoint.hpp"
#include "fcaide/denoiser.hpp"
#include "fcaide/gradcheck.hpp"
#include "fcaide/losses.hpp"
#include "fcaide/metrics.hpp"
#include "fcaide/pgm.hpp"
#include "fcaide/pixelwise.hpp"
#include "fcaide/training.hpp"
#include "fcaide/verification.hpp"
#include "textures.hpp"
#include "CLI11.hpp"

using namespace fcaide;
using fcaide::testing::random_tensor;
using fcaide::testing::randomized_network;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;
int known_failures = 0;
std::set<std::string> expected_failures;

void report(const char* id, bool pass, const std::string& detail) {
  const bool known = !pass && expected_failures.contains(id);
  std::printf("%-5s %s  %s%s\n", id, pass ? "PASS" : "FAIL", detail.c_str(),
              known ? " [known failure]" : "");
  std::fflush(stdout);
  failures += !pass && !known;
  known_failures += known;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

void ac1_estimator_identity() {
  const auto t0 = Clock::now();
  Rng rng(1);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Shape s{1 + rng.index(16), 1 + rng.index(16)};
    const int d = 1 + static_cast<int>(rng.index(2));
    const Tensor z = random_tensor(s, rng.next_u64(), -0.5, 1.5);
    CoefficientMaps c;
    for (int m = 0; m <= 2; ++m) c.a.push_back(m <= d ? random_tensor(s, rng.next_u64(), -2.0, 2.0) : Tensor(s, 0.0));
    const double s2 = rng.uniform(0.0, 0.1);
    worst = std::max(worst, std::abs(estimated_loss(z, c, s2, d) - sure_gaussian(z, c, s2, d)));
  }
  const double t = seconds_since(t0);
  report("AC1", worst <= 1e-12 && t < 5.0, fmt("max|est-sure|=%.3g (<=1e-12) over 1000 tuples, %.2fs (<5s)", worst, t));
}

void ac2_unbiasedness() {
  const auto t0 = Clock::now();
  const NetworkParams p = build_network({2, 8, 2, 8}, 2);
  const GrayImage x = probe_image(16, 16);
  std::string detail;
  bool pass = true;
  for (auto dist : {NoiseDistribution::Gaussian, NoiseDistribution::Laplacian}) {
    Rng rng(20 + static_cast<int>(dist));
    const UnbiasednessResult r = unbiasedness_check(x, p, {25.0, dist}, 2000, rng);
    pass = pass && r.pass;
    detail += fmt("%s |diff|/SE=%.2f; ", to_string(dist).c_str(), std::abs(r.mean_diff) / r.se_diff);
  }
  Rng rng(30);
  const EstimatorFn no_minus_one = [](const Tensor& z, const CoefficientMaps& c, double s2, int d) {
    return estimated_loss(z, c, s2, d) + s2;
  };
  const UnbiasednessResult neg = unbiasedness_check(x, p, {25.0, NoiseDistribution::Gaussian}, 2000, rng, no_minus_one);
  const double t = seconds_since(t0);
  pass = pass && !neg.pass && t < 120.0;
  report("AC2", pass,
         detail + fmt("negative control |diff|/SE=%.1f (%s), %.1fs (<120s)", std::abs(neg.mean_diff) / neg.se_diff,
                      neg.pass ? "NOT detected" : "detected", t));
}

void ac3_independence() {
  const Tensor z = probe_image(8, 8).to_unit().to_tensor();
  const NetworkParams p = randomized_network({3, 4, 2, 4}, 3);
  Rng rng(3);
  const ProbeResult good = independence_probe(p, z, 64, rng);
  QedMasks leaky = canonical_masks();
  leaky[0].input_taps.push_back({0, 0});
  const NetworkParams bad_p = build_network({3, 4, 2, 4}, 3, leaky);
  const ProbeResult bad = independence_probe(bad_p, z, 64, rng, leaky);
  report("AC3", good.pass && good.probed_pixels == 64 && !bad.pass && bad.worst > 0.0,
         fmt("exhaustive 8x8: worst |da/dZ_i|=%g; center-tap control worst=%.3g", good.worst, bad.worst));
}

void ac4_receptive_field() {
  bool pass = true;
  std::string detail;
  for (int depth = 1; depth <= 4; ++depth) {
    const NetworkParams p = randomized_network({depth, 3, 2, 3}, 40 + static_cast<std::uint64_t>(depth));
    const int k = receptive_field_extent(depth);
    const std::size_t side = static_cast<std::size_t>(k) + 6;
    const int measured = receptive_field_probe(p, probe_image(side, side).to_unit().to_tensor(), side / 2, side / 2);
    pass = pass && measured == k;
    detail += fmt("L=%d k=%d(expect %d) ", depth, measured, k);
  }
  report("AC4", pass, detail);
}

void ac5_gradient_check() {
  const auto t0 = Clock::now();
  const NetworkParams anchor = randomized_network({2, 2, 2, 2}, 5);
  const NetworkParams params = randomized_network({2, 2, 2, 2}, 6);
  const Tensor z = probe_image(6, 6).to_unit().to_tensor();
  const double sigma2 = (25.0 / 255.0) * (25.0 / 255.0);
  const double lambda = 3e-4;

  // PReLU is only piecewise smooth: a 1e-3 step can straddle a kink where a
  // hidden pre-activation is that close to zero, so use a smaller step.
  constexpr double kFdStep = 1e-4;
  auto objective = [&](const NetworkParams& p) {
    return augmented_estimated_loss(z, p, sigma2) + l2sp_penalty(p, anchor, lambda);
  };
  Tape tape;
  const BoundParams bound = bind_parameters(tape, params, true);
  Var loss = tape.add(augmented_estimated_loss(tape, bound, params.config, z, sigma2),
                      l2sp_penalty(tape, bound, anchor, lambda));
  const Gradients g = tape.backward(loss);

  double worst = 0.0;
  std::size_t coords = 0;
  bool pass = std::abs(loss.value().item() - objective(params)) <= 1e-14;
  for (const auto& [name, value] : params.tensors) {
    const Tensor fd = finite_diff_grad(
        [&, n = name](const Tensor& t) {
          NetworkParams q = params;
          q.at(n) = t;
          return objective(q);
        },
        value, kFdStep);
    double w = 0.0;
    pass = gradients_close(g.at(name), fd, 1e-4, 1e-12, &w) && pass;
    worst = std::max(worst, w);
    coords += value.size();
  }
  const double t = seconds_since(t0);
  report("AC5", pass && t < 60.0,
         fmt("%zu coordinates, worst rel err %.2e (rtol 1e-4, eps %.0e), %.1fs (<60s)", coords, worst, kFdStep, t));
}

void ac6_moments() {
  bool pass = true;
  std::string detail;
  for (auto dist : {NoiseDistribution::Gaussian, NoiseDistribution::Laplacian}) {
    Rng rng(60 + static_cast<int>(dist));
    for (const MomentIdentityResult& r : moment_identity_check(2.0, {1.0, dist}, 1'000'000, rng)) {
      pass = pass && r.pass;
      detail += fmt("%c:%.3f/%.3f(t=%g) ", to_string(dist)[0], r.lhs_mean, r.rhs_mean, r.target);
    }
  }
  report("AC6", pass, detail);
}

struct DeskModel {
  NetworkParams params;
  std::vector<GrayImage> held_out;
};

DeskModel train_desk_model() {
  const auto t0 = Clock::now();
  const auto train = fcaide::testing::texture_set(20, 64, 64, 700);
  const auto val = fcaide::testing::texture_set(2, 64, 64, 701);
  TrainConfig cfg;
  cfg.patch_size = 40;
  cfg.patches_total = 1000;
  cfg.batch_size = 8;
  cfg.epochs = 10;
  cfg.sigma = 25.0;
  cfg.seed = 7;
  cfg.on_epoch = [&](const EpochMetrics& m) {
    std::printf("      train epoch %2d loss %.6f val %.3f dB (%.0fs)\n", m.epoch, m.loss, m.val_psnr, seconds_since(t0));
    std::fflush(stdout);
  };
  const TrainResult r = supervised_train(train, val, NetworkConfig{4, 16, 2, 16}, cfg);
  std::printf("      best epoch %d, %.0fs\n", r.best_epoch, seconds_since(t0));
  return {r.params, fcaide::testing::texture_set(5, 64, 64, 702)};
}

void ac7_finetune_gain(const DeskModel& model) {
  const auto t0 = Clock::now();
  int wins = 0;
  std::string detail;
  for (std::size_t i = 0; i < model.held_out.size(); ++i) {
    const GrayImage& clean = model.held_out[i];
    Rng rng(7000 + i);
    const GrayImage noisy = corrupt(clean, {25.0, NoiseDistribution::Laplacian}, rng);
    const FineTuneResult ft = fine_tune(model.params, noisy, fine_tune_schedule(25.0));
    // Default inference mode per model: plain for S, flip-averaged for FT.
    const GrayImage s_out = denoise(model.params, noisy, DenoiseMode::Plain);
    const GrayImage f_out = denoise(ft.params, noisy, DenoiseMode::FlipAveraged);
    const double s = psnr(clean, s_out);
    const double f = psnr(clean, f_out);
    wins += f > s;
    detail += fmt("%.2f->%.2f ", s, f);
    // Same-mode numbers for reference; not part of the criterion.
    std::printf("      image %zu: noisy %.2f dB, S plain %.2f, FT flip %.2f | S flip %.2f, FT plain %.2f | "
                "SSIM %.4f->%.4f\n",
                i, psnr(clean, clip_to_range(noisy)), s, f,
                psnr(clean, denoise(model.params, noisy, DenoiseMode::FlipAveraged)),
                psnr(clean, denoise(ft.params, noisy, DenoiseMode::Plain)), ssim(clean, s_out), ssim(clean, f_out));
    std::fflush(stdout);
  }
  report("AC7", wins >= 4, fmt("FT(flip) beats S(plain) on %d/5 (need >=4); PSNR S->FT: %s(%.0fs)", wins, detail.c_str(), seconds_since(t0)));
}

void ac8_l2sp(const DeskModel& model) {
  const auto t0 = Clock::now();
  const GrayImage& clean = model.held_out[0];
  FineTuneConfig cfg = fine_tune_schedule(25.0);
  cfg.epochs *= 5;
  bool all_le = true;
  int diverged = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(8000 + seed);
    const GrayImage noisy = corrupt(clean, {25.0, NoiseDistribution::Gaussian}, rng);
    cfg.lambda = 0.0;
    const FineTuneResult free_run = fine_tune(model.params, noisy, cfg, &clean);
    cfg.lambda = 3e-4;
    const FineTuneResult reg_run = fine_tune(model.params, noisy, cfg, &clean);
    double min_mse = INFINITY;
    int min_epoch = 0;
    for (const FineTuneRecord& r : free_run.history) {
      if (*r.mse < min_mse) {
        min_mse = *r.mse;
        min_epoch = r.epoch;
      }
    }
    const double free_end = *free_run.history.back().mse;
    const double reg_end = *reg_run.history.back().mse;
    all_le = all_le && reg_end <= free_end;
    const bool div = free_end > min_mse;
    diverged += div;
    detail += fmt("seed %d: mse(l=3e-4)=%.4e vs mse(l=0)=%.4e, l=0 min %.4e@%d%s; ", static_cast<int>(seed), reg_end,
                  free_end, min_mse, min_epoch, div ? " diverged" : "");
    std::printf("      seed %d est_loss(l=0) %.4e -> %.4e, mse %.4e -> %.4e\n", static_cast<int>(seed),
                free_run.history.front().est_loss, free_run.history.back().est_loss, *free_run.history.front().mse,
                free_end);
    std::fflush(stdout);
  }
  report("AC8", all_le && diverged >= 1,
         detail + fmt("diverged in %d/3 (need >=1), %.0fs", diverged, seconds_since(t0)));
}

void ac9_flip_average() {
  const NetworkParams p = randomized_network({3, 4, 2, 4}, 9);
  const GrayImage noisy = fcaide::testing::synthetic_texture(20, 17, 9);
  const Tensor z = noisy.to_unit().to_tensor();
  std::array<Tensor, 4> passes;
  for (std::size_t k = 0; k < 4; ++k) {
    const Tensor zf = flip(z, kAllFlips[k]);
    passes[k] = flip(apply_polynomial_map(zf, forward(p, zf)), kAllFlips[k]);
  }
  GrayImage expected(noisy.height(), noisy.width(), 0.0, PixelScale::Unit);
  for (std::size_t i = 0; i < z.size(); ++i) {
    std::array<double, 4> t{passes[0][i], passes[1][i], passes[2][i], passes[3][i]};
    std::sort(t.begin(), t.end());
    expected.pixels()[i] = (((t[0] + t[1]) + t[2]) + t[3]) * 0.25;
  }
  const bool bitwise = denoise(p, noisy, DenoiseMode::FlipAveraged) == clip_to_range(expected.to_raw());

  const Tensor sym = fcaide::testing::symmetric_image(16, 16, 10).to_unit().to_tensor();
  const double s2 = 0.01;
  const double diff = std::abs(augmented_estimated_loss(sym, p, s2) - estimated_loss(sym, forward(p, sym), s2, 2));
  report("AC9", bitwise && diff <= 1e-12,
         fmt("four-pass oracle %s; symmetric |aug-plain|=%.2e (<=1e-12)", bitwise ? "bit-identical" : "DIFFERS", diff));
}

void ac10_persistence() {
  const fs::path dir = fs::temp_directory_path() / "fcaide_acceptance";
  fs::create_directories(dir);
  const NetworkParams p = randomized_network({4, 16, 2, 16}, 10);
  save_checkpoint(p, dir / "a.ckpt");
  const NetworkParams loaded = load_checkpoint(dir / "a.ckpt");
  save_checkpoint(loaded, dir / "b.ckpt");
  auto bytes = [](const fs::path& f) {
    std::ifstream in(f, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const bool ckpt = loaded.tensors == round_to_f32(p).tensors && bytes(dir / "a.ckpt") == bytes(dir / "b.ckpt") &&
                    load_checkpoint(dir / "b.ckpt").tensors == loaded.tensors;

  GrayImage img(31, 29);
  Rng rng(10);
  for (double& v : img.pixels()) v = static_cast<double>(rng.index(256));
  write_pgm(img, dir / "x.pgm");
  const bool pgm = read_pgm(dir / "x.pgm") == img;

  int verify_code = -1;
#ifdef FCAIDE_CLI_PATH
  const int status = std::system((std::string(FCAIDE_CLI_PATH) + " verify --suite all > " + (dir / "verify.txt").string()).c_str());
  verify_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#endif
  report("AC10", ckpt && pgm && verify_code == 0,
         fmt("checkpoint round-trip %s, PGM round-trip %s, `fcaide verify --suite all` exit %d", ckpt ? "bit-exact" : "MISMATCH",
             pgm ? "bit-exact" : "MISMATCH", verify_code));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FC-AIDE acceptance criteria"};
  bool quick = false;
  std::vector<std::string> known;
  app.add_flag("--quick", quick, "skip the desk-scale training experiments (AC7, AC8)");
  app.add_option("--known-failure", known, "criterion id whose FAIL does not fail the run");
  CLI11_PARSE(app, argc, argv);
  expected_failures.insert(known.begin(), known.end());
  ac1_estimator_identity();
  ac2_unbiasedness();
  ac3_independence();
  ac4_receptive_field();
  ac5_gradient_check();
  ac6_moments();
  if (!quick) {
    const DeskModel model = train_desk_model();
    ac7_finetune_gain(model);
    ac8_l2sp(model);
  }
  ac9_flip_average();
  ac10_persistence();
  if (failures > 0) {
    std::printf("ACCEPTANCE FAILURES\n");
  } else if (known_failures > 0) {
    std::printf("ALL OTHER ACCEPTANCE CRITERIA PASS (%d known failure%s)\n", known_failures,
                known_failures == 1 ? "" : "s");
  } else {
    std::printf("ALL ACCEPTANCE CRITERIA PASS\n");
  }
  return failures == 0 ? 0 : 1;
}
