// fcaide: train, fine-tune, denoise, evaluate and self-verify QED denoisers.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fcaide/checkpoint.hpp"
#include "fcaide/denoiser.hpp"
#include "fcaide/metrics.hpp"
#include "fcaide/pgm.hpp"
#include "fcaide/training.hpp"
#include "fcaide/verification.hpp"

namespace fs = std::filesystem;
using namespace fcaide;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct TrainArgs {
  std::string data, out, log, blind, noise = "gaussian";
  double sigma = 25.0;
  NetworkConfig net;
  TrainConfig train;
  double val_fraction = 0.1;
};

struct FineTuneArgs {
  std::string ckpt, image, out, clean, log;
  double sigma = 25.0;
  std::optional<double> lambda;
  std::optional<int> epochs;
  double lr = 3e-4;
  bool no_augment = false;
};

struct DenoiseArgs {
  std::string ckpt, image, out;
  bool flip_average = false;
  std::optional<int> degree;
};

struct EvalArgs {
  std::string clean, denoised;
};

std::pair<double, double> parse_range(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("--blind expects LO:HI, got '" + s + "'");
  return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
}

std::vector<GrayImage> load_directory(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no .pgm files in " + dir);
  std::vector<GrayImage> images;
  for (const auto& f : files) images.push_back(read_pgm(f));
  return images;
}

int run_train(const TrainArgs& a) {
  TrainConfig cfg = a.train;
  cfg.noise = parse_noise_distribution(a.noise);
  if (!a.blind.empty()) {
    cfg.blind = true;
    std::tie(cfg.sigma_lo, cfg.sigma_hi) = parse_range(a.blind);
  } else {
    cfg.sigma = a.sigma;
  }
  std::vector<GrayImage> images = load_directory(a.data);
  std::vector<GrayImage> val;
  const auto n_val = static_cast<std::size_t>(a.val_fraction * static_cast<double>(images.size()));
  if (images.size() >= 2) {
    const std::size_t k = std::clamp<std::size_t>(n_val, 1, images.size() - 1);
    val.assign(images.end() - static_cast<long>(k), images.end());
    images.resize(images.size() - k);
  }

  std::ofstream log;
  if (!a.log.empty()) {
    log.open(a.log);
    if (!log) throw std::runtime_error("cannot open log " + a.log);
    log << "epoch,loss,val_psnr\n";
  }
  cfg.on_epoch = [&](const EpochMetrics& m) {
    char line[128];
    std::snprintf(line, sizeof(line), "%d,%.10g,%.6f", m.epoch, m.loss, m.val_psnr);
    if (log) log << line << "\n" << std::flush;
    std::cerr << "epoch " << line << "\n";
  };
  TrainResult r = supervised_train(images, val, a.net, cfg);
  save_checkpoint(r.params, a.out);
  std::cerr << "best epoch " << r.best_epoch << ", wrote " << a.out << "\n";
  return 0;
}

int run_finetune(const FineTuneArgs& a) {
  FineTuneConfig cfg = fine_tune_schedule(a.sigma);
  if (a.lambda) cfg.lambda = *a.lambda;
  if (a.epochs) cfg.epochs = *a.epochs;
  cfg.lr = a.lr;
  cfg.use_augmentation = !a.no_augment;
  const NetworkParams w = load_checkpoint(a.ckpt);
  const GrayImage noisy = read_pgm(a.image);
  std::optional<GrayImage> clean;
  if (!a.clean.empty()) clean = read_pgm(a.clean);
  const FineTuneResult r = fine_tune(w, noisy, cfg, clean ? &*clean : nullptr);
  if (!a.log.empty()) {
    std::ofstream log(a.log);
    if (!log) throw std::runtime_error("cannot open log " + a.log);
    log << "epoch,est_loss,mse\n";
    for (const FineTuneRecord& rec : r.history) {
      char line[128];
      std::snprintf(line, sizeof(line), "%d,%.10g,", rec.epoch, rec.est_loss);
      log << line;
      if (rec.mse) {
        std::snprintf(line, sizeof(line), "%.10g", *rec.mse);
        log << line;
      }
      log << "\n";
    }
  }
  save_checkpoint(r.params, a.out);
  return 0;
}

int run_denoise(const DenoiseArgs& a) {
  const NetworkParams p = load_checkpoint(a.ckpt);
  if (a.degree && *a.degree != p.config.degree) {
    throw std::runtime_error("structural mismatch: checkpoint has degree " + std::to_string(p.config.degree) +
                             ", --degree " + std::to_string(*a.degree) + " requested");
  }
  const GrayImage noisy = read_pgm(a.image);
  write_pgm(denoise(p, noisy, a.flip_average ? DenoiseMode::FlipAveraged : DenoiseMode::Plain), a.out);
  return 0;
}

int run_eval(const EvalArgs& a) {
  const GrayImage x = read_pgm(a.clean);
  const GrayImage y = read_pgm(a.denoised);
  std::printf("PSNR=%.3fdB SSIM=%.4f\n", psnr(x, y), ssim(x, y));
  return 0;
}

int run_verify(const VerificationOptions& o) {
  bool all = true;
  for (const CheckReport& r : run_verification(o)) {
    std::cout << format_report_line(r) << "\n";
    all = all && r.pass;
  }
  std::cout << (all ? "ALL PASS" : "SOME CHECKS FAILED") << std::endl;
  return all ? 0 : kRuntimeError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FC-AIDE: QED-network pixelwise-affine denoiser with adaptive fine-tuning"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "supervised training on clean PGM images");
  train->add_option("--data", ta.data, "directory of clean .pgm images")->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", ta.out, "output checkpoint")->required();
  auto* sigma_opt = train->add_option("--sigma", ta.sigma, "fixed noise std (0-255 units)")->capture_default_str();
  train->add_option("--blind", ta.blind, "blind training over sigma in LO:HI, usually 0:55")->excludes(sigma_opt);
  train->add_option("--noise", ta.noise, "gaussian|laplacian|uniform")->capture_default_str();
  train->add_option("--depth", ta.net.depth, "Block-1 layers L")->capture_default_str();
  train->add_option("--width", ta.net.width, "channels W")->capture_default_str();
  train->add_option("--hidden", ta.net.resnet_hidden, "ResNet hidden channels")->capture_default_str();
  train->add_option("--degree", ta.net.degree, "polynomial degree d (1 or 2)")->capture_default_str();
  train->add_option("--epochs", ta.train.epochs)->capture_default_str();
  train->add_option("--lr", ta.train.lr, "Adam rate, halved every third of the epochs")->capture_default_str();
  train->add_option("--patch-size", ta.train.patch_size)->capture_default_str();
  train->add_option("--patches", ta.train.patches_total)->capture_default_str();
  train->add_option("--batch-size", ta.train.batch_size)->capture_default_str();
  train->add_option("--val-fraction", ta.val_fraction, "share of images held out for validation")
      ->capture_default_str();
  train->add_option("--seed", ta.train.seed)->capture_default_str();
  train->add_option("--log", ta.log, "CSV log: epoch,loss,val_psnr");

  FineTuneArgs fa;
  auto* ft = app.add_subcommand(
      "finetune",
      "adaptive fine-tuning on one noisy image.\nDefaults for --lambda/--epochs by sigma: "
      "15: 1e-4/25, 25: 3e-4/20, 30: 5e-4/16, 50: 2e-3/13, 75: 5e-3/10 (nearest row otherwise)");
  ft->add_option("--ckpt", fa.ckpt)->required()->check(CLI::ExistingFile);
  ft->add_option("--image", fa.image, "noisy .pgm")->required()->check(CLI::ExistingFile);
  ft->add_option("--sigma", fa.sigma, "noise std (0-255 units)")->required();
  ft->add_option("--lambda", fa.lambda, "l2-SP strength");
  ft->add_option("--epochs", fa.epochs, "full-image Adam steps");
  ft->add_option("--lr", fa.lr)->capture_default_str();
  ft->add_flag("--no-augment", fa.no_augment, "use the plain estimated loss instead of the flip-averaged one");
  ft->add_option("--clean", fa.clean, "clean .pgm, only used for the mse log column");
  ft->add_option("--log", fa.log, "CSV log: epoch,est_loss,mse");
  ft->add_option("--out", fa.out)->required();

  DenoiseArgs da;
  auto* dn = app.add_subcommand("denoise", "denoise a PGM image");
  dn->add_option("--ckpt", da.ckpt)->required()->check(CLI::ExistingFile);
  dn->add_option("--image", da.image)->required()->check(CLI::ExistingFile);
  dn->add_option("--out", da.out)->required();
  dn->add_flag("--flip-average", da.flip_average, "average the four flipped reconstructions");
  dn->add_option("--degree", da.degree, "expected polynomial degree of the checkpoint");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "PSNR and SSIM between two PGM images");
  ev->add_option("--clean", ea.clean)->required()->check(CLI::ExistingFile);
  ev->add_option("--denoised", ea.denoised)->required()->check(CLI::ExistingFile);

  VerificationOptions vo;
  auto* vf = app.add_subcommand("verify", "statistical and structural self-checks");
  vf->add_option("--suite", vo.suite)
      ->check(CLI::IsMember({"moments", "unbiasedness", "independence", "rf", "all"}))
      ->capture_default_str();
  vf->add_option("--seed", vo.seed)->capture_default_str();
  vf->add_option("--moment-trials", vo.moment_trials)->capture_default_str();
  vf->add_option("--trials", vo.unbiasedness_trials, "unbiasedness noise draws")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*train) return run_train(ta);
    if (*ft) return run_finetune(fa);
    if (*dn) return run_denoise(da);
    if (*ev) return run_eval(ea);
    if (*vf) return run_verify(vo);
  } catch (const std::exception& e) {
    std::cerr << "fcaide: error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
