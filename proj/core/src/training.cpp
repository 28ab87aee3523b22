#include "fcaide/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fcaide/denoiser.hpp"
#include "fcaide/losses.hpp"
#include "fcaide/metrics.hpp"
#include "fcaide/pixelwise.hpp"

namespace fcaide {

void TrainConfig::validate() const {
  if (patch_size == 0) throw std::invalid_argument("TrainConfig: patch_size must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be positive");
  if (blind) {
    if (!(sigma_lo >= 0.0) || sigma_lo > sigma_hi) throw std::invalid_argument("TrainConfig: bad blind sigma range");
  } else if (!(sigma >= 0.0)) {
    throw std::invalid_argument("TrainConfig: sigma must be >= 0");
  }
}

double scheduled_lr(const TrainConfig& cfg, int epoch) {
  if (!cfg.lr_decay || cfg.epochs <= 0) return cfg.lr;
  const int period = std::max(1, (cfg.epochs + 2) / 3);
  return cfg.lr * std::pow(0.5, epoch / period);
}

std::vector<GrayImage> sample_patches(const std::vector<GrayImage>& images, const TrainConfig& cfg,
                                      Rng& rng) {
  if (images.empty()) throw std::invalid_argument("sample_patches: no images");
  for (const GrayImage& img : images) {
    if (img.height() < cfg.patch_size || img.width() < cfg.patch_size) {
      throw std::invalid_argument("sample_patches: image " + std::to_string(img.height()) + "x" +
                                  std::to_string(img.width()) + " is smaller than patch size " +
                                  std::to_string(cfg.patch_size));
    }
  }
  std::vector<GrayImage> patches;
  patches.reserve(cfg.patches_total);
  for (std::size_t k = 0; k < cfg.patches_total; ++k) {
    const GrayImage& img = images[rng.index(images.size())];
    const std::size_t top = rng.index(img.height() - cfg.patch_size + 1);
    const std::size_t left = rng.index(img.width() - cfg.patch_size + 1);
    patches.push_back(img.crop(top, left, cfg.patch_size, cfg.patch_size));
  }
  return patches;
}

namespace {

double validation_psnr(const NetworkParams& params, const std::vector<GrayImage>& clean,
                       const std::vector<GrayImage>& noisy) {
  if (clean.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    total += psnr(clean[i], denoise(params, noisy[i], DenoiseMode::Plain));
  }
  return total / static_cast<double>(clean.size());
}

bool better(double candidate, double best) { return candidate > best; }

}  // namespace

TrainResult supervised_train(const std::vector<GrayImage>& train_images,
                             const std::vector<GrayImage>& val_images,
                             const NetworkConfig& net_config, const TrainConfig& cfg) {
  return supervised_train(train_images, val_images, build_network(net_config, cfg.seed), cfg);
}

TrainResult supervised_train(const std::vector<GrayImage>& train_images,
                             const std::vector<GrayImage>& val_images, NetworkParams initial,
                             const TrainConfig& cfg) {
  cfg.validate();
  initial.config.validate();
  TrainResult result;
  result.params = initial;
  if (cfg.epochs == 0) return result;

  std::vector<GrayImage> train_unit;
  for (const GrayImage& img : train_images) train_unit.push_back(img.to_unit());

  Rng root(cfg.seed);
  Rng patch_rng = root.substream(1);
  Rng noise_rng = root.substream(2);
  Rng order_rng = root.substream(3);
  Rng val_rng = root.substream(4);

  const std::vector<GrayImage> patches = sample_patches(train_unit, cfg, patch_rng);

  const double val_sigma = cfg.blind ? 0.5 * (cfg.sigma_lo + cfg.sigma_hi) : cfg.sigma;
  std::vector<GrayImage> val_noisy;
  for (const GrayImage& img : val_images) {
    val_noisy.push_back(corrupt(img.to_raw(), NoiseSpec{val_sigma, cfg.noise}, val_rng));
  }

  NetworkParams params = std::move(initial);
  AdamState adam;
  double best_psnr = validation_psnr(params, val_images, val_noisy);

  std::vector<std::size_t> order(patches.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = scheduled_lr(cfg, epoch);
    // Fisher-Yates with the portable generator.
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.index(i)]);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::map<std::string, Tensor> grads;
      for (const auto& [name, t] : params.tensors) grads.emplace(name, Tensor(t.shape(), 0.0));
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const GrayImage& clean = patches[order[k]];
        const double sigma = cfg.blind ? sample_blind_sigma(noise_rng, cfg.sigma_lo, cfg.sigma_hi) : cfg.sigma;
        if (cfg.on_sigma) cfg.on_sigma(sigma);
        const GrayImage noisy = corrupt(clean, NoiseSpec{sigma, cfg.noise}, noise_rng);

        Tape tape;
        BoundParams bound = bind_parameters(tape, params, true);
        Var z = tape.constant(noisy.to_tensor());
        Var x = tape.constant(clean.to_tensor());
        std::vector<Var> coeffs = forward(tape, bound, params.config, z);
        Var loss = mse(tape, x, apply_polynomial_map(tape, z, coeffs));
        batch_loss += loss.value().item() * scale;
        const Gradients g = tape.backward(loss);
        for (auto& [name, acc] : grads) {
          const Tensor& gi = g.at(name);
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * gi[i];
        }
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingDiverged("supervised_train: non-finite loss in epoch " + std::to_string(epoch + 1),
                               result.params);
      }
      try {
        adam_step(params.tensors, grads, adam, lr);
      } catch (const NonFiniteGradient& e) {
        throw TrainingDiverged(e.what(), result.params);
      }
      loss_sum += batch_loss;
      ++batches;
    }

    EpochMetrics m;
    m.epoch = epoch + 1;
    m.loss = loss_sum / static_cast<double>(batches);
    m.val_psnr = validation_psnr(params, val_images, val_noisy);
    result.metrics.push_back(m);
    if (cfg.on_epoch) cfg.on_epoch(m);
    if (val_images.empty() || better(m.val_psnr, best_psnr)) {
      best_psnr = m.val_psnr;
      result.params = params;
      result.best_epoch = m.epoch;
    }
  }
  return result;
}

void FineTuneConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("FineTuneConfig: lr must be positive");
  if (epochs < 0) throw std::invalid_argument("FineTuneConfig: epochs must be >= 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("FineTuneConfig: lambda must be >= 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("FineTuneConfig: sigma must be positive");
}

FineTuneConfig fine_tune_schedule(double sigma) {
  struct Row {
    double sigma, lambda;
    int epochs;
  };
  static constexpr Row kRows[] = {
      {15.0, 1e-4, 25}, {25.0, 3e-4, 20}, {30.0, 5e-4, 16}, {50.0, 2e-3, 13}, {75.0, 5e-3, 10}};
  const Row* best = &kRows[0];
  for (const Row& r : kRows) {
    if (std::abs(r.sigma - sigma) < std::abs(best->sigma - sigma)) best = &r;
  }
  FineTuneConfig cfg;
  cfg.sigma = sigma;
  cfg.lambda = best->lambda;
  cfg.epochs = best->epochs;
  return cfg;
}

namespace {

struct Objective {
  Var data;       // estimated loss term
  Var total;      // data + l2sp
  double mse = 0.0;
  bool has_mse = false;
};

Objective record_objective(Tape& tape, const BoundParams& bound, const NetworkParams& anchor,
                           const NetworkConfig& config, const Tensor& z, const Tensor* clean,
                           const FineTuneConfig& cfg, double sigma2) {
  Objective obj;
  if (cfg.use_augmentation) {
    AugmentedTrace trace;
    obj.data = augmented_estimated_loss(tape, bound, config, z, sigma2, &trace);
    if (clean) {
      double total = 0.0;
      for (std::size_t k = 0; k < kAllFlips.size(); ++k) {
        total += mse(flip(*clean, kAllFlips[k]), trace.reconstructions[k].value());
      }
      obj.mse = total / 4.0;
      obj.has_mse = true;
    }
  } else {
    Var zv = tape.constant(z);
    std::vector<Var> coeffs = forward(tape, bound, config, zv);
    obj.data = estimated_loss(tape, zv, coeffs, sigma2);
    if (clean) {
      obj.mse = mse(*clean, apply_polynomial_map(tape, zv, coeffs).value());
      obj.has_mse = true;
    }
  }
  obj.total = obj.data;
  if (cfg.lambda > 0.0) obj.total = tape.add(obj.data, l2sp_penalty(tape, bound, anchor, cfg.lambda));
  return obj;
}

}  // namespace

FineTuneResult fine_tune(const NetworkParams& w_sup, const GrayImage& noisy,
                         const FineTuneConfig& cfg, const GrayImage* clean) {
  cfg.validate();
  if (clean && (clean->height() != noisy.height() || clean->width() != noisy.width())) {
    throw std::invalid_argument("fine_tune: clean image dimensions differ from the noisy image");
  }
  const Tensor z = noisy.to_unit().to_tensor();
  std::optional<Tensor> x;
  if (clean) x = clean->to_unit().to_tensor();
  const double sigma_unit = cfg.sigma / kPixelPeak;
  const double sigma2 = sigma_unit * sigma_unit;

  FineTuneResult result;
  result.params = w_sup;
  AdamState adam;
  for (int epoch = 0; epoch <= cfg.epochs; ++epoch) {
    Tape tape;
    const bool step = epoch < cfg.epochs;
    BoundParams bound = bind_parameters(tape, result.params, step);
    Objective obj = record_objective(tape, bound, w_sup, result.params.config, z,
                                     x ? &*x : nullptr, cfg, sigma2);
    FineTuneRecord rec;
    rec.epoch = epoch;
    rec.est_loss = obj.data.value().item();
    if (obj.has_mse) rec.mse = obj.mse;
    result.history.push_back(rec);
    if (!std::isfinite(obj.total.value().item())) {
      throw std::runtime_error("fine_tune: non-finite objective at step " + std::to_string(epoch));
    }
    if (!step) break;
    adam_step(result.params.tensors, tape.backward(obj.total).named(), adam, cfg.lr);
  }
  return result;
}

}  // namespace fcaide
