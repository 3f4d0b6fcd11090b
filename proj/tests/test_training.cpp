#include <catch2/catch.hpp>

#include <filesystem>

#include "bmseg/io/synthetic.hpp"
#include "bmseg/train/augment.hpp"
#include "bmseg/train/detector_loop.hpp"
#include "bmseg/train/segmentor_loop.hpp"
#include "test_helpers.hpp"

using namespace bmseg;

namespace {

std::vector<LoadedCase> micro_cases(int n, Shape3 shape, int channels, uint64_t seed,
                                    int max_lesions = 2) {
  SyntheticSpec spec;
  spec.n_cases = n;
  spec.shape = shape;
  spec.n_channels = channels;
  spec.lesion_count_min = 1;
  spec.lesion_count_max = max_lesions;
  spec.lesion_radius_min = 2.0;
  spec.lesion_radius_max = 3.0;
  spec.seed = seed;
  std::vector<LoadedCase> out;
  for (auto& c : generate_synthetic(spec))
    out.push_back({c.id, normalize(std::move(c.image)), std::move(c.labels)});
  return out;
}

DetectorConfig micro_detector(int channels) {
  DetectorConfig cfg;
  cfg.in_channels = channels;
  cfg.growth_rate = 4;
  cfg.block_layers = {2};
  cfg.init_features = 8;
  cfg.bn_size = 2;
  cfg.stem_kernel = 3;
  return cfg;
}

SegmentorConfig micro_segmentor(int channels) {
  SegmentorConfig cfg;
  cfg.in_channels = channels;
  cfg.n_stages = 2;
  cfg.base_features = 4;
  cfg.max_features = 8;
  cfg.deep_supervision_levels = 1;
  return cfg;
}

PatchSample make_sample(const LoadedCase& c, Shape3 patch, uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  return sample_training_crops(c.image, c.labels, 1, 1.0, patch, rng).front();
}

}  // namespace

TEST_CASE("augmentation contracts") {
  const auto cases = micro_cases(1, {24, 24, 24}, 2, 5);
  const PatchSample sample = make_sample(cases[0], {16, 16, 16}, 3);

  SECTION("disabled config is the identity") {
    Rng rng = make_rng(1, 0);
    const PatchSample out = augment(sample, AugmentationConfig::disabled(), rng);
    REQUIRE(out.data == sample.data);
    REQUIRE(out.label_patch.data == sample.label_patch.data);
    REQUIRE(out.positive == sample.positive);
  }
  SECTION("mirror twice on the same axis restores the sample") {
    for (int axis = 0; axis < 3; ++axis) {
      const PatchSample twice = mirror_axis(mirror_axis(sample, axis), axis);
      REQUIRE(twice.data == sample.data);
      REQUIRE(twice.label_patch.data == sample.label_patch.data);
    }
  }
  SECTION("shapes preserved, labels stay in {0..3}, flag recomputed") {
    AugmentationConfig cfg;  // everything enabled
    cfg.p_rotation = cfg.p_scale = cfg.p_noise = cfg.p_smooth = cfg.p_lowres = 1.0;
    Rng rng = make_rng(2, 0);
    for (int trial = 0; trial < 10; ++trial) {
      const PatchSample out = augment(sample, cfg, rng);
      REQUIRE(out.data.size() == sample.data.size());
      REQUIRE(out.label_patch.shape == sample.label_patch.shape);
      for (uint8_t v : out.label_patch.data) REQUIRE(v <= 3);
    }
  }
  SECTION("rotating an all-background patch keeps it negative") {
    PatchSample bg = sample;
    std::fill(bg.label_patch.data.begin(), bg.label_patch.data.end(), 0);
    bg.positive = true;  // stale flag must be recomputed
    AugmentationConfig cfg;
    cfg.p_rotation = 1.0;
    Rng rng = make_rng(3, 0);
    const PatchSample out = augment(bg, cfg, rng);
    for (uint8_t v : out.label_patch.data) REQUIRE(v == 0);
    REQUIRE_FALSE(out.positive);
  }
  SECTION("same rng seed gives identical augmented samples") {
    AugmentationConfig cfg;
    Rng a = make_rng(4, 0), b = make_rng(4, 0);
    const PatchSample oa = augment(sample, cfg, a);
    const PatchSample ob = augment(sample, cfg, b);
    REQUIRE(oa.data == ob.data);
    REQUIRE(oa.label_patch.data == ob.label_patch.data);
  }
}

TEST_CASE("detector training loop") {
  const auto train_cases = micro_cases(3, {24, 24, 24}, 2, 11);
  const auto val_cases = micro_cases(1, {24, 24, 24}, 2, 12);

  DetectorTrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 2;
  cfg.crops_per_patient = 2;
  cfg.patch_size = {16, 16, 16};
  cfg.schedule.warmup_epochs = 2;
  cfg.val_every = 3;
  cfg.val_crops_per_patient = 2;
  cfg.augment = AugmentationConfig::disabled();
  cfg.seed = 9;

  SECTION("loss finite, lr starts at 1e-6, runs deterministic") {
    const auto a = train_detector(train_cases, val_cases, micro_detector(2), cfg);
    REQUIRE_FALSE(a.loss_trace.empty());
    for (double l : a.loss_trace) REQUIRE(std::isfinite(l));
    REQUIRE(a.lr_by_epoch[0] == Approx(1e-6).epsilon(1e-12));

    const auto b = train_detector(train_cases, val_cases, micro_detector(2), cfg);
    REQUIRE(a.loss_trace.size() == b.loss_trace.size());
    for (size_t i = 0; i < a.loss_trace.size(); ++i)
      REQUIRE(a.loss_trace[i] == b.loss_trace[i]);  // bitwise
  }
  SECTION("empty training split rejected") {
    REQUIRE_THROWS_AS(train_detector({}, val_cases, micro_detector(2), cfg), Error);
  }
}

TEST_CASE("segmentor training loop") {
  const auto train_cases = micro_cases(2, {16, 16, 16}, 1, 13, 1);

  SegmentorTrainConfig cfg;
  cfg.iterations = 8;
  cfg.batch_size = 2;
  cfg.patch_size = {16, 16, 16};
  cfg.iters_per_epoch = 2;
  cfg.sgd.base_lr = 0.01;
  cfg.augment = AugmentationConfig::disabled();
  cfg.seed = 14;

  SECTION("deterministic loss trace and poly lr in the log") {
    const auto a = train_segmentor(train_cases, micro_segmentor(1), cfg);
    const auto b = train_segmentor(train_cases, micro_segmentor(1), cfg);
    REQUIRE(a.loss_trace.size() == 8);
    for (size_t i = 0; i < 8; ++i) REQUIRE(a.loss_trace[i] == b.loss_trace[i]);

    PolyScheduleConfig poly;
    poly.base_lr = 0.01;
    poly.max_epoch = 4;  // 8 iters / 2 per epoch
    REQUIRE(a.lr_by_epoch.size() == 4);
    for (int e = 0; e < 4; ++e) REQUIRE(a.lr_by_epoch[e] == Approx(poly_lr(e, poly)).epsilon(1e-12));
  }

  SECTION("resume continues the loss trace within 1e-6") {
    namespace fs = std::filesystem;
    const std::string dir =
        (fs::temp_directory_path() / "bmseg-resume-test").string();
    fs::remove_all(dir);

    SegmentorTrainConfig first = cfg;
    first.stop_after = 4;
    first.out_dir = dir;
    const auto part1 = train_segmentor(train_cases, micro_segmentor(1), first);

    SegmentorTrainConfig second = cfg;
    second.resume_from = part1.checkpoint_path;
    const auto part2 = train_segmentor(train_cases, micro_segmentor(1), second);

    const auto full = train_segmentor(train_cases, micro_segmentor(1), cfg);
    REQUIRE(part2.loss_trace.size() == 4);  // iterations 4..7
    for (size_t i = 0; i < 4; ++i)
      REQUIRE(part2.loss_trace[i] == Approx(full.loss_trace[4 + i]).margin(1e-6));
    fs::remove_all(dir);
  }

  SECTION("exploding lr aborts on non-finite loss") {
    SegmentorTrainConfig bad = cfg;
    bad.sgd.base_lr = 1e14;
    bad.iterations = 30;
    REQUIRE_THROWS_WITH(train_segmentor(train_cases, micro_segmentor(1), bad),
                        Catch::Contains("non-finite"));
  }

  SECTION("fingerprint mismatch on resume is refused") {
    namespace fs = std::filesystem;
    const std::string dir = (fs::temp_directory_path() / "bmseg-resume-mismatch").string();
    fs::remove_all(dir);
    SegmentorTrainConfig first = cfg;
    first.stop_after = 2;
    first.out_dir = dir;
    const auto part1 = train_segmentor(train_cases, micro_segmentor(1), first);

    SegmentorConfig other = micro_segmentor(1);
    other.base_features = 8;
    SegmentorTrainConfig second = cfg;
    second.resume_from = part1.checkpoint_path;
    REQUIRE_THROWS_AS(train_segmentor(train_cases, other, second), Error);
    fs::remove_all(dir);
  }
}
