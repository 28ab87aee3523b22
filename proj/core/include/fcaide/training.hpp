#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fcaide/adam.hpp"
#include "fcaide/image.hpp"
#include "fcaide/network.hpp"
#include "fcaide/noise.hpp"
#include "fcaide/rng.hpp"

namespace fcaide {

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;      // mean training MSE over the epoch's mini-batches (unit scale)
  double val_psnr = 0.0;  // dB, plain denoising of the validation set
};

struct TrainConfig {
  std::size_t patch_size = 40;
  std::size_t patches_total = 256;
  std::size_t batch_size = 8;
  int epochs = 10;
  double lr = 1e-3;
  bool lr_decay = true;  // halve the rate after every third of the epochs
  bool blind = false;
  double sigma = 25.0;   // raw units; used when !blind
  double sigma_lo = 0.0;
  double sigma_hi = 55.0;
  NoiseDistribution noise = NoiseDistribution::Gaussian;
  std::uint64_t seed = 0;

  /// Called with every per-patch noise level drawn during training.
  std::function<void(double)> on_sigma;
  /// Called after each epoch.
  std::function<void(const EpochMetrics&)> on_epoch;

  void validate() const;
};

/// Learning rate in effect during `epoch` (0-based).
double scheduled_lr(const TrainConfig& cfg, int epoch);

/// cfg.patches_total clean patches of cfg.patch_size, each from a uniformly
/// chosen image at a uniformly chosen top-left offset.
std::vector<GrayImage> sample_patches(const std::vector<GrayImage>& images, const TrainConfig& cfg,
                                      Rng& rng);

struct TrainResult {
  NetworkParams params;               // best validation checkpoint
  int best_epoch = 0;                 // 0 = initial parameters
  std::vector<EpochMetrics> metrics;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, NetworkParams last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const NetworkParams& last_good() const { return last_good_; }

 private:
  NetworkParams last_good_;
};

/// Supervised MSE training on freshly corrupted patches; returns the
/// parameters with the best validation PSNR (the initial parameters compete
/// too). Images may be in either scale; training runs in unit scale.
TrainResult supervised_train(const std::vector<GrayImage>& train_images,
                             const std::vector<GrayImage>& val_images,
                             const NetworkConfig& net_config, const TrainConfig& cfg);

/// Same, starting from given parameters.
TrainResult supervised_train(const std::vector<GrayImage>& train_images,
                             const std::vector<GrayImage>& val_images, NetworkParams initial,
                             const TrainConfig& cfg);

struct FineTuneConfig {
  double lr = 3e-4;
  int epochs = 20;
  double lambda = 3e-4;
  double sigma = 25.0;  // raw units
  bool use_augmentation = true;

  void validate() const;
};

/// Regularization strength and stopping epoch selected per noise level
/// (sigma = 15, 25, 30, 50, 75); other sigmas use the nearest entry.
FineTuneConfig fine_tune_schedule(double sigma);

struct FineTuneRecord {
  int epoch = 0;               // parameters after `epoch` updates
  double est_loss = 0.0;       // (augmented) estimated loss, unit scale
  std::optional<double> mse;   // matching true MSE, only when the clean image is known
};

struct FineTuneResult {
  NetworkParams params;
  std::vector<FineTuneRecord> history;  // epochs 0..cfg.epochs
};

/// Adaptive fine-tuning on one noisy image: Adam on the (flip-augmented)
/// estimated loss plus lambda ||w - w_sup||^2, one full-image step per epoch.
/// `clean` is only used to fill the mse column of the history.
FineTuneResult fine_tune(const NetworkParams& w_sup, const GrayImage& noisy,
                         const FineTuneConfig& cfg, const GrayImage* clean = nullptr);

}  // namespace fcaide
