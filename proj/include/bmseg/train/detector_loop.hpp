#pragma once

#include <algorithm>
#include <filesystem>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "bmseg/models/densenet.hpp"
#include "bmseg/nn/optim.hpp"
#include "bmseg/pipeline/model_io.hpp"
#include "bmseg/train/augment.hpp"
#include "bmseg/train/data.hpp"
#include "bmseg/train/log.hpp"
#include "bmseg/train/loss.hpp"
#include "bmseg/train/schedule.hpp"

namespace bmseg {

// rng stream ids; sampling is a pure function of (seed, stream, step) so
// resumed runs draw exactly the same data.
enum : uint64_t {
  kStreamCrops = 1,
  kStreamShuffle = 2,
  kStreamAugment = 3,
  kStreamVal = 4,
  kStreamCases = 5,
};

struct DetectorTrainConfig {
  int epochs = 400;
  int batch_size = 2;
  int crops_per_patient = 5;
  double fg_fraction = 0.5;
  int min_fg = 1;
  Shape3 patch_size{64, 64, 64};
  nn::AdamConfig adam;
  WarmupCosineConfig schedule;  // max_epoch is overwritten with `epochs`
  AugmentationConfig augment;
  int val_every = 10;                // epochs between validation passes
  int val_crops_per_patient = 16;
  uint64_t seed = 1;
  std::string out_dir;  // empty: keep everything in memory
};

struct DetectorTrainResult {
  std::unique_ptr<DenseNetDetector> model;
  std::vector<double> loss_trace;
  std::vector<double> lr_by_epoch;
  double best_val_accuracy = 0.0;
  int best_epoch = -1;
  std::string checkpoint_path;
};

namespace detect_detail {

inline nn::Tensor batch_tensor(const std::vector<const PatchSample*>& samples) {
  const PatchSample& first = *samples.front();
  const int64_t per = static_cast<int64_t>(first.channels) * shape_numel(first.size);
  nn::Tensor t({static_cast<int>(samples.size()), first.channels, first.size[0], first.size[1],
                first.size[2]});
  for (size_t i = 0; i < samples.size(); ++i)
    std::copy(samples[i]->data.begin(), samples[i]->data.end(), t.ptr() + i * per);
  return t;
}

// Validation probe: half the crops forced onto foreground, half rejection-
// sampled to be background (plain uniform crops are almost always positive on
// small volumes, which would make accuracy meaningless).
inline std::vector<PatchSample> validation_crops(const LoadedCase& c, int n, const Shape3& size,
                                                 int min_fg, Rng& rng) {
  std::vector<PatchSample> out;
  const int n_pos = n / 2;
  auto pos = sample_training_crops(c.image, c.labels, n_pos, 1.0, size, rng, min_fg);
  out.insert(out.end(), std::make_move_iterator(pos.begin()), std::make_move_iterator(pos.end()));
  const Shape3 vs = c.image.shape;
  for (int i = n_pos; i < n; ++i) {
    PatchSample best;
    bool found = false;
    for (int attempt = 0; attempt < 50 && !found; ++attempt) {
      PatchCoord coord;
      coord.origin = {rand_int(rng, 0, std::max(0, vs[0] - size[0])),
                      rand_int(rng, 0, std::max(0, vs[1] - size[1])),
                      rand_int(rng, 0, std::max(0, vs[2] - size[2]))};
      PatchSample s = make_patch_sample(c.image, c.labels, coord, size, min_fg);
      if (!s.positive || attempt == 49) {
        best = std::move(s);
        found = true;
      }
    }
    out.push_back(std::move(best));
  }
  return out;
}

inline double patch_accuracy(DenseNetDetector& model, const std::vector<LoadedCase>& cases,
                             const DetectorTrainConfig& cfg) {
  if (cases.empty()) return 0.0;
  int correct = 0, total = 0;
  for (size_t ci = 0; ci < cases.size(); ++ci) {
    Rng rng = make_rng(cfg.seed, kStreamVal, ci);
    const auto crops = validation_crops(cases[ci], cfg.val_crops_per_patient, cfg.patch_size,
                                        cfg.min_fg, rng);
    for (const auto& crop : crops) {
      nn::Tape tape(false);
      const nn::Tensor batch = batch_tensor({&crop});
      const float p = model.forward(tape, batch)->value.data[0];
      correct += (p >= 0.5f) == crop.positive;
      ++total;
    }
  }
  return total ? static_cast<double>(correct) / total : 0.0;
}

}  // namespace detect_detail

// One epoch = one pass over every training patient's freshly sampled crops.
// BCE on patch positivity, Adam with the linear-warmup cosine schedule, the
// best-validation-accuracy checkpoint retained.
inline DetectorTrainResult train_detector(const std::vector<LoadedCase>& train_cases,
                                          const std::vector<LoadedCase>& val_cases,
                                          const DetectorConfig& model_cfg,
                                          DetectorTrainConfig cfg) {
  require(!train_cases.empty(), "train_detector: empty training split");
  cfg.schedule.max_epoch = std::max(cfg.epochs, cfg.schedule.warmup_epochs + 1);
  cfg.schedule.validate();
  cfg.adam.validate();

  DetectorTrainResult result;
  result.model = std::make_unique<DenseNetDetector>(model_cfg);
  DenseNetDetector& model = *result.model;
  nn::AdamOptimizer opt(model.parameters(), cfg.adam);

  const bool persist = !cfg.out_dir.empty();
  if (persist) std::filesystem::create_directories(cfg.out_dir);
  TrainLogger logger(persist ? cfg.out_dir + "/detector_loss.csv" : "");

  nn::TensorStore best_snapshot;
  int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = warmup_cosine_lr(epoch, cfg.schedule);
    result.lr_by_epoch.push_back(lr);

    // re-draw crops each epoch
    std::vector<PatchSample> samples;
    for (size_t ci = 0; ci < train_cases.size(); ++ci) {
      Rng rng = make_rng(cfg.seed, kStreamCrops, static_cast<uint64_t>(epoch) * 100003 + ci);
      auto crops = sample_training_crops(train_cases[ci].image, train_cases[ci].labels,
                                         cfg.crops_per_patient, cfg.fg_fraction, cfg.patch_size,
                                         rng, cfg.min_fg);
      Rng arng = make_rng(cfg.seed, kStreamAugment, static_cast<uint64_t>(epoch) * 100003 + ci);
      for (auto& c : crops) samples.push_back(augment(c, cfg.augment, arng, cfg.min_fg));
    }
    Rng shuffle_rng = make_rng(cfg.seed, kStreamShuffle, epoch);
    std::shuffle(samples.begin(), samples.end(), shuffle_rng);

    for (size_t at = 0; at < samples.size(); at += cfg.batch_size) {
      const size_t end = std::min(samples.size(), at + cfg.batch_size);
      std::vector<const PatchSample*> batch;
      for (size_t i = at; i < end; ++i) batch.push_back(&samples[i]);

      nn::Tape tape(true);
      const nn::Tensor input = detect_detail::batch_tensor(batch);
      nn::Node* probs = model.forward(tape, input);
      nn::Tensor target({static_cast<int>(batch.size()), 1});
      for (size_t i = 0; i < batch.size(); ++i) target.data[i] = batch[i]->positive ? 1.f : 0.f;
      nn::Node* loss = nnops::bce_loss(tape, probs, target, 1e-7f);

      model.registry().zero_grad();
      tape.backward(loss);
      opt.step(lr);

      const double lv = loss->value.data[0];
      logger.check_finite(lv, step, lr);
      logger.log(step++, epoch, lr, lv);
    }

    const bool last = epoch + 1 == cfg.epochs;
    if ((cfg.val_every > 0 && (epoch + 1) % cfg.val_every == 0) || last) {
      const auto& probe_cases = val_cases.empty() ? train_cases : val_cases;
      const double acc = detect_detail::patch_accuracy(model, probe_cases, cfg);
      if (acc >= result.best_val_accuracy) {
        result.best_val_accuracy = acc;
        result.best_epoch = epoch;
        best_snapshot = nn::TensorStore{};
        model.registry().export_to(best_snapshot);
      }
    }
  }

  if (!best_snapshot.tensors.empty()) model.registry().import_from(best_snapshot);
  result.loss_trace = logger.loss_trace();

  if (persist) {
    nn::TensorStore store;
    model.registry().export_to(store);
    store.meta["kind"] = "detector";
    store.meta["config"] = to_json(model_cfg);
    store.meta["fingerprint"] = model.fingerprint();
    store.meta["epochs"] = cfg.epochs;
    store.meta["best_epoch"] = result.best_epoch;
    store.meta["best_val_accuracy"] = result.best_val_accuracy;
    store.meta["seed"] = cfg.seed;
    result.checkpoint_path = cfg.out_dir + "/detector_best.ckpt";
    nn::save_store(store, result.checkpoint_path);
    // JSON sidecar mirrors the metadata for tooling that won't parse the store
    std::ofstream side(result.checkpoint_path + ".json");
    side << store.meta.dump(2) << "\n";
  }
  return result;
}

}  // namespace bmseg
