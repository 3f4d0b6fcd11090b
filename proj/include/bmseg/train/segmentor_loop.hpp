#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "bmseg/models/decode.hpp"
#include "bmseg/models/resunet.hpp"
#include "bmseg/nn/optim.hpp"
#include "bmseg/pipeline/model_io.hpp"
#include "bmseg/train/augment.hpp"
#include "bmseg/train/data.hpp"
#include "bmseg/train/detector_loop.hpp"
#include "bmseg/train/log.hpp"
#include "bmseg/train/loss.hpp"
#include "bmseg/train/schedule.hpp"

namespace bmseg {

struct SegmentorTrainConfig {
  int iterations = 250000;
  int batch_size = 2;
  double fg_fraction = 0.5;
  int min_fg = 1;
  Shape3 patch_size{64, 64, 64};
  nn::SgdConfig sgd;
  PolyScheduleConfig schedule;  // base_lr mirrors sgd.base_lr; epochs derived below
  int iters_per_epoch = 250;    // schedule bookkeeping: 250k iterations = 1000 epochs
  LossConfig loss;
  AugmentationConfig augment;
  int val_every = 0;  // iterations between validation passes; 0 = none
  int64_t stop_after = 0;  // pause after this iteration (0 = run to completion)
  uint64_t seed = 2;
  std::string out_dir;
  std::string resume_from;

  int max_epoch() const { return std::max(1, iterations / std::max(1, iters_per_epoch)); }
};

struct SegmentorTrainResult {
  std::unique_ptr<ResUNetSegmentor> model;
  std::vector<double> loss_trace;
  std::vector<double> lr_by_epoch;
  double best_val_metric = -1.0;
  std::string checkpoint_path;
};

// Optional validation hook: returns a score (higher better), e.g. DSC(WT)
// from a sliding-window pass; supplied by the orchestration layer.
using SegmentorValidator = std::function<double(ResUNetSegmentor&)>;

namespace seg_detail {

inline PatchSample draw_crop(const LoadedCase& c, bool force_fg, const Shape3& patch, int min_fg,
                             Rng& rng) {
  auto crops =
      sample_training_crops(c.image, c.labels, 1, force_fg ? 1.0 : 0.0, patch, rng, min_fg);
  return std::move(crops.front());
}

inline void save_checkpoint(ResUNetSegmentor& model, nn::SgdOptimizer& opt,
                            const SegmentorTrainConfig& cfg, int64_t iter,
                            const std::vector<double>& loss_trace, const std::string& path) {
  nn::TensorStore store;
  model.registry().export_to(store);
  auto& bufs = opt.state();
  for (size_t i = 0; i < bufs.size(); ++i)
    store.tensors["opt/momentum/" + std::to_string(i)] = bufs[i];
  store.meta["kind"] = "segmentor";
  store.meta["config"] = to_json(model.config());
  store.meta["fingerprint"] = model.fingerprint();
  store.meta["iteration"] = iter;
  store.meta["seed"] = cfg.seed;
  store.meta["iters_per_epoch"] = cfg.iters_per_epoch;
  nlohmann::json history = nlohmann::json::array();  // epoch-boundary loss samples
  for (size_t i = 0; i < loss_trace.size(); i += std::max(1, cfg.iters_per_epoch))
    history.push_back(loss_trace[i]);
  if (!loss_trace.empty()) history.push_back(loss_trace.back());
  store.meta["loss_history"] = history;
  nn::save_store(store, path);
  std::ofstream side(path + ".json");
  side << store.meta.dump(2) << "\n";
}

}  // namespace seg_detail

// Foreground-biased crops, deep-supervision Dice+BCE, Nesterov SGD under the
// poly schedule (epoch = a fixed block of iterations). Deterministic per seed:
// every random draw is keyed on (seed, stream, iteration).
inline SegmentorTrainResult train_segmentor(const std::vector<LoadedCase>& train_cases,
                                            const SegmentorConfig& model_cfg,
                                            SegmentorTrainConfig cfg,
                                            SegmentorValidator validator = nullptr) {
  require(!train_cases.empty(), "train_segmentor: empty training split");
  cfg.schedule.base_lr = cfg.sgd.base_lr;
  cfg.schedule.max_epoch = cfg.max_epoch();
  cfg.sgd.validate();

  SegmentorTrainResult result;
  result.model = std::make_unique<ResUNetSegmentor>(model_cfg);
  ResUNetSegmentor& model = *result.model;
  nn::SgdOptimizer opt(model.parameters(), cfg.sgd);

  int64_t start_iter = 0;
  if (!cfg.resume_from.empty()) {
    const nn::TensorStore store = nn::load_store(cfg.resume_from);
    require(store.meta.value("fingerprint", "") == model.fingerprint(),
            "resume checkpoint was produced by a different segmentor configuration");
    model.registry().import_from(store);
    auto& bufs = opt.state();
    for (size_t i = 0; i < bufs.size(); ++i) {
      auto it = store.tensors.find("opt/momentum/" + std::to_string(i));
      require(it != store.tensors.end(), "resume checkpoint missing optimizer state");
      bufs[i] = it->second;
    }
    start_iter = store.meta.value("iteration", 0);
  }

  const bool persist = !cfg.out_dir.empty();
  if (persist) std::filesystem::create_directories(cfg.out_dir);
  TrainLogger logger(persist ? cfg.out_dir + "/segmentor_loss.csv" : "");

  const int n_aux = model_cfg.aux_heads();
  const auto weights = LossConfig::deep_supervision_weights(1 + n_aux);
  const int forced_fg = static_cast<int>(std::ceil(cfg.fg_fraction * cfg.batch_size));

  nn::TensorStore best_snapshot;
  int last_epoch = -1;
  const int64_t end_iter =
      cfg.stop_after > 0 ? std::min<int64_t>(cfg.stop_after, cfg.iterations) : cfg.iterations;
  for (int64_t iter = start_iter; iter < end_iter; ++iter) {
    const int epoch = static_cast<int>(iter / cfg.iters_per_epoch);
    const double lr = poly_lr(std::min(epoch, cfg.schedule.max_epoch), cfg.schedule);
    if (epoch != last_epoch) {
      result.lr_by_epoch.push_back(lr);
      last_epoch = epoch;
    }

    // assemble batch
    std::vector<PatchSample> samples;
    Rng case_rng = make_rng(cfg.seed, kStreamCases, static_cast<uint64_t>(iter));
    for (int j = 0; j < cfg.batch_size; ++j) {
      const auto& c = train_cases[static_cast<size_t>(
          rand_int(case_rng, 0, static_cast<int>(train_cases.size()) - 1))];
      Rng crop_rng = make_rng(cfg.seed, kStreamCrops, static_cast<uint64_t>(iter) * 64 + j);
      PatchSample s = seg_detail::draw_crop(c, j < forced_fg, cfg.patch_size, cfg.min_fg,
                                            crop_rng);
      Rng aug_rng = make_rng(cfg.seed, kStreamAugment, static_cast<uint64_t>(iter) * 64 + j);
      samples.push_back(augment(s, cfg.augment, aug_rng, cfg.min_fg));
    }

    const int64_t vox = shape_numel(cfg.patch_size);
    nn::Tensor input({cfg.batch_size, model_cfg.in_channels, cfg.patch_size[0],
                      cfg.patch_size[1], cfg.patch_size[2]});
    nn::Tensor target({cfg.batch_size, 3, cfg.patch_size[0], cfg.patch_size[1],
                       cfg.patch_size[2]});
    for (int j = 0; j < cfg.batch_size; ++j) {
      std::copy(samples[j].data.begin(), samples[j].data.end(),
                input.ptr() + static_cast<int64_t>(j) * model_cfg.in_channels * vox);
      LabelVolume patch_labels;
      patch_labels.vol = samples[j].label_patch;
      const auto rt = region_targets(patch_labels);
      std::copy(rt.begin(), rt.end(), target.ptr() + static_cast<int64_t>(j) * 3 * vox);
    }

    nn::Tape tape(true);
    const SegmentorOutput out = model.forward(tape, input);
    std::vector<std::pair<nn::Node*, nn::Tensor>> heads;
    heads.emplace_back(out.primary, target);
    for (int l = 1; l <= static_cast<int>(out.aux.size()); ++l)
      heads.emplace_back(out.aux[l - 1], downsample_max(target, 1 << l));
    nn::Node* loss = total_segmentation_loss(tape, heads, cfg.loss, weights);

    model.registry().zero_grad();
    tape.backward(loss);
    opt.step(lr);

    const double lv = loss->value.data[0];
    logger.check_finite(lv, iter, lr);
    logger.log(iter, epoch, lr, lv);

    if (validator && cfg.val_every > 0 &&
        ((iter + 1) % cfg.val_every == 0 || iter + 1 == cfg.iterations)) {
      const double score = validator(model);
      if (score >= result.best_val_metric) {
        result.best_val_metric = score;
        best_snapshot = nn::TensorStore{};
        model.registry().export_to(best_snapshot);
      }
    }
  }

  if (!best_snapshot.tensors.empty()) model.registry().import_from(best_snapshot);
  result.loss_trace = logger.loss_trace();

  if (persist) {
    result.checkpoint_path =
        end_iter < cfg.iterations
            ? cfg.out_dir + "/segmentor_iter" + std::to_string(end_iter) + ".ckpt"
            : cfg.out_dir + "/segmentor_final.ckpt";
    seg_detail::save_checkpoint(model, opt, cfg, end_iter, result.loss_trace,
                                result.checkpoint_path);
  }
  return result;
}

}  // namespace bmseg
