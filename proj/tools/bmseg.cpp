// bmseg: two-stage brain-metastasis segmentation toolkit.
//
// Subcommands: synth, prepare, train-detector, train-segmentor, infer,
// evaluate, ablate, report. Every subcommand accepts --config with a flat
// key=value file ([section] per subcommand) that flags override.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "bmseg/core/version.hpp"
#include "bmseg/io/stats.hpp"
#include "bmseg/io/synthetic.hpp"
#include "bmseg/pipeline/ablation.hpp"
#include "bmseg/pipeline/inference.hpp"
#include "bmseg/pipeline/model_io.hpp"
#include "bmseg/report/manifest.hpp"
#include "bmseg/report/report_io.hpp"
#include "bmseg/train/detector_loop.hpp"
#include "bmseg/train/segmentor_loop.hpp"

namespace fs = std::filesystem;
using namespace bmseg;

namespace {

struct DataOpts {
  std::string root;
  std::string modalities = "t1c,t1,f";
  std::string suffix_map;  // "t1n=t1,t1c=t1c,t2w=t2,t2f=f"
  double train_frac = 0.85, val_frac = 0.05, test_frac = 0.10;

  void attach(CLI::App* cmd, bool required = true) {
    auto* opt = cmd->add_option("--data", root, "dataset root directory");
    if (required) opt->required();
    cmd->add_option("--modalities", modalities, "modality subset, e.g. t1c,t1,f");
    cmd->add_option("--suffix-map", suffix_map,
                    "file-suffix to modality map, e.g. t1n=t1,t1c=t1c,t2w=t2,t2f=f");
    cmd->add_option("--train-frac", train_frac, "training split fraction");
    cmd->add_option("--val-frac", val_frac, "validation split fraction");
    cmd->add_option("--test-frac", test_frac, "test split fraction");
  }

  std::map<ModalityId, std::string> suffixes() const {
    if (suffix_map.empty()) return default_suffix_map();
    std::map<ModalityId, std::string> out;
    for (const auto& pair : CLI::detail::split(suffix_map, ',')) {
      const auto eq = pair.find('=');
      require(eq != std::string::npos, "bad --suffix-map entry '", pair,
              "' (expected suffix=modality)");
      out[parse_modality(pair.substr(eq + 1))] = pair.substr(0, eq);
    }
    return out;
  }

  DatasetIndex index() const {
    SplitSpec split;
    split.fractions = {train_frac, val_frac, test_frac};
    return discover_dataset(root, parse_modality_set(modalities), split, suffixes());
  }
  ModalitySet mods() const { return parse_modality_set(modalities); }
};

Shape3 cube(int n) { return {n, n, n}; }

nlohmann::json cost_to_json(const CostReport& c) {
  return {{"total_patches", c.total_patches},
          {"flagged_patches", c.flagged_patches},
          {"segmentor_invocations", c.segmentor_invocations},
          {"detector_gflops", c.detector_gflops},
          {"segmentor_gflops", c.segmentor_gflops},
          {"baseline_gflops", c.baseline_gflops},
          {"reduction", c.reduction}};
}

int run_synth(const SyntheticSpec& spec, const std::string& out, bool gzip) {
  write_synthetic_dataset(spec, out, gzip);
  std::cout << "wrote " << spec.n_cases << " synthetic cases to " << out << "\n";
  return 0;
}

int run_prepare(const DataOpts& data, const std::string& out_dir, int connectivity,
                int min_size) {
  fs::create_directories(out_dir);
  const DatasetIndex index = data.index();

  nlohmann::json idx;
  for (const auto& c : index.cases) {
    nlohmann::json files;
    for (const auto& [m, path] : c.modality_files) files[modality_name(m)] = path;
    files["label"] = c.label_file;
    idx["cases"][c.id] = files;
  }
  for (const auto& [split, ids] : index.splits) idx["splits"][split] = ids;
  write_file(out_dir + "/index.json", idx.dump(2) + "\n");

  const DatasetStats stats = dataset_stats(index, connectivity, min_size);
  write_file(out_dir + "/stats.json", stats_to_json(stats).dump(2) + "\n");
  write_stats_plot(stats, out_dir + "/stats.svg");
  std::cout << "indexed " << index.cases.size() << " cases; reports in " << out_dir << "\n";
  if (!stats.failures.empty()) {
    std::cerr << stats.failures.size() << " case(s) failed during stats:\n";
    for (const auto& f : stats.failures) std::cerr << "  " << f << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kVersion) + " - two-stage brain metastasis segmentation"};
  app.set_config("--config", "", "flat key=value config file (INI sections per subcommand)");
  app.allow_config_extras(true);  // config_version and sections of other subcommands
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // ---- synth ----------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  SyntheticSpec synth_spec;
  std::string synth_out = "synthetic";
  std::string synth_mods = "t1,t1c,t2,f";
  bool synth_no_gzip = false;
  int synth_shape = 48;
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--cases", synth_spec.n_cases, "number of cases");
  synth->add_option("--shape", synth_shape, "cubic volume edge length");
  synth->add_option("--modalities", synth_mods, "modalities to generate");
  synth->add_option("--lesions-min", synth_spec.lesion_count_min, "min lesions per case");
  synth->add_option("--lesions-max", synth_spec.lesion_count_max, "max lesions per case");
  synth->add_option("--radius-min", synth_spec.lesion_radius_min, "min lesion radius (voxels)");
  synth->add_option("--radius-max", synth_spec.lesion_radius_max, "max lesion radius (voxels)");
  synth->add_option("--noise", synth_spec.noise_std, "background noise std");
  synth->add_option("--seed", synth_spec.seed, "generation seed");
  synth->add_flag("--no-gzip", synth_no_gzip, "write plain .nii files");

  // ---- prepare --------------------------------------------------------
  auto* prepare = app.add_subcommand("prepare", "index a dataset and report statistics");
  DataOpts prepare_data;
  prepare_data.attach(prepare);
  std::string prepare_out = "prepared";
  int prepare_conn = 26, prepare_min_size = 2;
  prepare->add_option("--out", prepare_out, "output directory");
  prepare->add_option("--connectivity", prepare_conn, "lesion counting connectivity (6/18/26)");
  prepare->add_option("--min-size", prepare_min_size, "minimum lesion size in voxels");

  // ---- train-detector -------------------------------------------------
  auto* traind = app.add_subcommand("train-detector", "train the patch detector");
  DataOpts traind_data;
  traind_data.attach(traind);
  DetectorConfig det_cfg;
  DetectorTrainConfig det_train;
  std::string traind_out = "runs/detector";
  int traind_patch = 64;
  bool traind_no_augment = false;
  std::string det_blocks = "6,12,24,16";
  traind->add_option("--out", traind_out, "run output directory");
  traind->add_option("--epochs", det_train.epochs, "training epochs");
  traind->add_option("--batch", det_train.batch_size, "batch size");
  traind->add_option("--crops", det_train.crops_per_patient, "crop samples per patient");
  traind->add_option("--patch", traind_patch, "cubic patch size");
  traind->add_option("--fg-fraction", det_train.fg_fraction, "forced-foreground crop fraction");
  traind->add_option("--lr", det_train.schedule.peak_lr, "peak learning rate");
  traind->add_option("--warmup-epochs", det_train.schedule.warmup_epochs, "warmup epochs");
  traind->add_option("--val-every", det_train.val_every, "epochs between validations");
  traind->add_option("--seed", det_train.seed, "training seed");
  traind->add_flag("--no-augment", traind_no_augment, "disable data augmentation");
  traind->add_option("--growth", det_cfg.growth_rate, "dense growth rate");
  traind->add_option("--blocks", det_blocks, "dense block layers, e.g. 6,12,24,16");
  traind->add_option("--init-features", det_cfg.init_features, "stem output features");
  traind->add_option("--stem-kernel", det_cfg.stem_kernel, "stem kernel size");
  traind->add_option("--bn-size", det_cfg.bn_size, "bottleneck width multiplier");

  // ---- train-segmentor --------------------------------------------------
  auto* trains = app.add_subcommand("train-segmentor", "train the region segmentor");
  DataOpts trains_data;
  trains_data.attach(trains);
  SegmentorConfig seg_cfg;
  SegmentorTrainConfig seg_train;
  std::string trains_out = "runs/segmentor";
  int trains_patch = 64;
  bool trains_no_augment = false;
  trains->add_option("--out", trains_out, "run output directory");
  trains->add_option("--iterations", seg_train.iterations, "training iterations");
  trains->add_option("--iters-per-epoch", seg_train.iters_per_epoch,
                     "iterations per schedule epoch");
  trains->add_option("--batch", seg_train.batch_size, "batch size");
  trains->add_option("--patch", trains_patch, "cubic patch size");
  trains->add_option("--fg-fraction", seg_train.fg_fraction, "forced-foreground crop fraction");
  trains->add_option("--base-lr", seg_train.sgd.base_lr, "initial learning rate");
  trains->add_option("--momentum", seg_train.sgd.momentum, "Nesterov momentum");
  trains->add_option("--weight-decay", seg_train.sgd.weight_decay, "weight decay");
  trains->add_option("--seed", seg_train.seed, "training seed");
  trains->add_option("--resume", seg_train.resume_from, "checkpoint to resume from");
  trains->add_option("--stop-after", seg_train.stop_after, "pause after this iteration");
  trains->add_flag("--no-augment", trains_no_augment, "disable data augmentation");
  trains->add_option("--stages", seg_cfg.n_stages, "encoder stages");
  trains->add_option("--base-features", seg_cfg.base_features, "first-stage features");
  trains->add_option("--max-features", seg_cfg.max_features, "feature cap");
  trains->add_option("--ds-levels", seg_cfg.deep_supervision_levels,
                     "deep supervision levels");

  // ---- infer ------------------------------------------------------------
  auto* infer = app.add_subcommand("infer", "gated two-stage inference");
  DataOpts infer_data;
  infer_data.attach(infer);
  std::string infer_det, infer_seg, infer_out = "predictions", infer_split = "test";
  GatedInferenceConfig infer_cfg;
  int infer_patch = 64, infer_stride = 32;
  bool infer_uniform = false, infer_blend_zeros = false;
  infer->add_option("--detector", infer_det, "detector checkpoint")->required();
  infer->add_option("--segmentor", infer_seg, "segmentor checkpoint")->required();
  infer->add_option("--out", infer_out, "prediction output directory");
  infer->add_option("--split", infer_split, "split to run (train/val/test/all)");
  infer->add_option("--threshold", infer_cfg.detector_threshold, "detector gate threshold");
  infer->add_option("--patch", infer_patch, "cubic patch size");
  infer->add_option("--stride", infer_stride, "cubic patch stride");
  infer->add_flag("--uniform-blend", infer_uniform, "uniform instead of gaussian blending");
  infer->add_flag("--blend-unflagged-zeros", infer_blend_zeros,
                  "blend explicit zeros for unflagged patches");

  // ---- evaluate -----------------------------------------------------------
  auto* evaluate = app.add_subcommand("evaluate", "score predictions against ground truth");
  std::string eval_pred, eval_gt, eval_out = "report.json";
  MatchConfig eval_match;
  evaluate->add_option("--pred", eval_pred, "directory of predicted label volumes")->required();
  evaluate->add_option("--gt", eval_gt, "ground-truth directory")->required();
  evaluate->add_option("--out", eval_out, "output report JSON");
  evaluate->add_option("--connectivity", eval_match.connectivity, "component connectivity");
  evaluate->add_option("--dilation", eval_match.gt_dilation, "gt dilation radius (voxels)");
  evaluate->add_option("--min-size", eval_match.min_size, "minimum lesion size (voxels)");
  evaluate->add_option("--penalty", eval_match.hd95_penalty, "HD95 penalty (mm)");

  // ---- ablate -------------------------------------------------------------
  auto* ablate = app.add_subcommand("ablate", "modality ablation harness");
  DataOpts ablate_data;
  ablate_data.attach(ablate);
  std::string ablate_subsets = "all", ablate_seeds = "1,2,3", ablate_out = "ablation";
  DetectorConfig ab_det_cfg;
  SegmentorConfig ab_seg_cfg;
  int ab_det_epochs = 10, ab_seg_iters = 200, ab_patch = 32, ab_stride = 16;
  ablate->add_option("--subsets", ablate_subsets,
                     "semicolon-separated subsets (e.g. 't1c,t1;f') or 'all'");
  // --modalities restricts the harness to that single subset
  ablate->add_option("--seeds", ablate_seeds, "comma-separated seeds");
  ablate->add_option("--out", ablate_out, "output directory");
  ablate->add_option("--det-epochs", ab_det_epochs, "detector epochs per run");
  ablate->add_option("--seg-iterations", ab_seg_iters, "segmentor iterations per run");
  ablate->add_option("--patch", ab_patch, "cubic patch size");
  ablate->add_option("--stride", ab_stride, "cubic patch stride");
  ablate->add_option("--det-growth", ab_det_cfg.growth_rate, "detector growth rate");
  std::string ab_det_blocks = "2,4";
  ablate->add_option("--det-blocks", ab_det_blocks, "detector block layers");
  ablate->add_option("--det-init-features", ab_det_cfg.init_features, "detector stem features");
  ablate->add_option("--seg-stages", ab_seg_cfg.n_stages, "segmentor stages");
  ablate->add_option("--seg-base-features", ab_seg_cfg.base_features, "segmentor base width");
  ablate->add_option("--seg-ds-levels", ab_seg_cfg.deep_supervision_levels,
                     "segmentor deep-supervision levels");

  // ---- report ---------------------------------------------------------------
  auto* report = app.add_subcommand("report", "render tables from evaluation reports");
  std::vector<std::string> report_in;
  std::string report_out = "tables", report_name = "ours";
  report->add_option("--in", report_in, "evaluation report JSON files (one per seed)")
      ->required();
  report->add_option("--out", report_out, "output directory");
  report->add_option("--name", report_name, "row label");

  // --config may appear after the subcommand name
  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      synth_spec.shape = cube(synth_shape);
      synth_spec.modalities = parse_modality_set(synth_mods);
      return run_synth(synth_spec, synth_out, !synth_no_gzip);
    }

    if (*prepare) return run_prepare(prepare_data, prepare_out, prepare_conn, prepare_min_size);

    if (*traind) {
      RunManifest manifest;
      manifest.started_at = iso8601_now();
      const DatasetIndex index = traind_data.index();
      const ModalitySet mods = traind_data.mods();
      det_cfg.in_channels = static_cast<int>(mods.size());
      det_cfg.block_layers.clear();
      for (const auto& tok : CLI::detail::split(det_blocks, ','))
        det_cfg.block_layers.push_back(std::stoi(tok));
      det_train.patch_size = cube(traind_patch);
      det_train.out_dir = traind_out;
      if (traind_no_augment) det_train.augment = AugmentationConfig::disabled();

      const auto train_cases = load_split(index, "train", mods);
      const auto val_cases = load_split(index, "val", mods);
      const auto result = train_detector(train_cases, val_cases, det_cfg, det_train);

      manifest.finished_at = iso8601_now();
      manifest.seed = det_train.seed;
      manifest.config = {{"model", to_json(det_cfg)},
                         {"epochs", det_train.epochs},
                         {"batch", det_train.batch_size},
                         {"crops_per_patient", det_train.crops_per_patient},
                         {"patch", traind_patch},
                         {"modalities", modality_set_name(mods)}};
      manifest.artifacts["checkpoint"] = result.checkpoint_path;
      manifest.artifacts["loss_log"] = traind_out + "/detector_loss.csv";
      manifest.metrics["best_val_accuracy"] = result.best_val_accuracy;
      manifest.metrics["best_epoch"] = result.best_epoch;
      manifest.write(traind_out + "/manifest.json");
      std::cout << "detector: best val accuracy " << result.best_val_accuracy << " (epoch "
                << result.best_epoch << ") -> " << result.checkpoint_path << "\n";
      return 0;
    }

    if (*trains) {
      RunManifest manifest;
      manifest.started_at = iso8601_now();
      const DatasetIndex index = trains_data.index();
      const ModalitySet mods = trains_data.mods();
      seg_cfg.in_channels = static_cast<int>(mods.size());
      seg_train.patch_size = cube(trains_patch);
      seg_train.out_dir = trains_out;
      if (trains_no_augment) seg_train.augment = AugmentationConfig::disabled();

      const auto train_cases = load_split(index, "train", mods);
      const auto result = train_segmentor(train_cases, seg_cfg, seg_train);

      manifest.finished_at = iso8601_now();
      manifest.seed = seg_train.seed;
      manifest.config = {{"model", to_json(seg_cfg)},
                         {"iterations", seg_train.iterations},
                         {"batch", seg_train.batch_size},
                         {"patch", trains_patch},
                         {"modalities", modality_set_name(mods)}};
      manifest.artifacts["checkpoint"] = result.checkpoint_path;
      manifest.artifacts["loss_log"] = trains_out + "/segmentor_loss.csv";
      manifest.metrics["final_loss"] =
          result.loss_trace.empty() ? 0.0 : result.loss_trace.back();
      manifest.write(trains_out + "/manifest.json");
      std::cout << "segmentor: " << result.loss_trace.size() << " iterations -> "
                << result.checkpoint_path << "\n";
      return 0;
    }

    if (*infer) {
      RunManifest manifest;
      manifest.started_at = iso8601_now();
      fs::create_directories(infer_out);
      const DatasetIndex index = infer_data.index();
      const ModalitySet mods = infer_data.mods();
      auto detector = load_detector(infer_det);
      auto segmentor = load_segmentor(infer_seg);
      infer_cfg.patch = PatchSpec{cube(infer_patch), cube(infer_stride)};
      if (infer_uniform) infer_cfg.weighting = BlendWeighting::Uniform;
      infer_cfg.blend_unflagged_zeros = infer_blend_zeros;

      std::vector<std::string> splits;
      if (infer_split == "all")
        splits = {"train", "val", "test"};
      else
        splits = {infer_split};

      nlohmann::json costs;
      for (const auto& split : splits) {
        for (const CaseEntry* entry : index.split_cases(split)) {
          auto [vol, labels] = load_case(*entry, mods);
          const NiftiVolume ref = read_nifti(entry->label_file);
          const auto result =
              run_gated_inference(normalize(std::move(vol)), *detector, *segmentor, infer_cfg);
          for (const auto& w : result.warnings)
            std::cerr << entry->id << ": warning: " << w << "\n";
          const std::string pred_path = infer_out + "/" + entry->id + "-pred.nii.gz";
          write_nifti_labels(pred_path, result.labels.shape(), ref.spacing,
                             result.labels.vol.data.data(), ref.raw_header.data());
          costs[entry->id] = cost_to_json(result.cost);
        }
      }
      write_file(infer_out + "/cost_report.json", costs.dump(2) + "\n");
      manifest.finished_at = iso8601_now();
      manifest.config = {{"detector", infer_det},
                         {"segmentor", infer_seg},
                         {"threshold", infer_cfg.detector_threshold},
                         {"patch", infer_patch},
                         {"stride", infer_stride},
                         {"modalities", modality_set_name(mods)}};
      manifest.artifacts["predictions"] = infer_out;
      manifest.artifacts["cost_report"] = infer_out + "/cost_report.json";
      manifest.write(infer_out + "/manifest.json");
      std::cout << "predictions written to " << infer_out << "\n";
      return 0;
    }

    if (*evaluate) {
      std::vector<MetricsReport> reports;
      std::vector<std::string> ids;
      for (const auto& e : fs::directory_iterator(eval_pred)) {
        std::string name = e.path().filename().string();
        const auto strip = [&](const std::string& sfx) {
          if (name.size() >= sfx.size() && name.substr(name.size() - sfx.size()) == sfx)
            name = name.substr(0, name.size() - sfx.size());
        };
        strip(".gz");
        strip(".nii");
        if (e.path().filename().string() == name) continue;  // not a nifti
        strip("-pred");
        strip("-seg");
        ids.push_back(name);
      }
      require(!ids.empty(), "no prediction volumes found in ", eval_pred);
      std::sort(ids.begin(), ids.end());

      for (const auto& id : ids) {
        std::string pred_path, gt_path;
        for (const char* pat : {"-pred.nii.gz", "-pred.nii", ".nii.gz", ".nii", "-seg.nii.gz"}) {
          const fs::path p = fs::path(eval_pred) / (id + pat);
          if (fs::exists(p)) {
            pred_path = p.string();
            break;
          }
        }
        for (const char* pat : {"-seg.nii.gz", "-seg.nii", ".nii.gz", ".nii"}) {
          for (const fs::path& p :
               {fs::path(eval_gt) / (id + pat), fs::path(eval_gt) / id / (id + pat)}) {
            if (fs::exists(p)) {
              gt_path = p.string();
              break;
            }
          }
          if (!gt_path.empty()) break;
        }
        require(!pred_path.empty(), "missing prediction for ", id);
        require(!gt_path.empty(), "missing ground truth for ", id);
        const NiftiVolume pred_nv = read_nifti(pred_path);
        const NiftiVolume gt_nv = read_nifti(gt_path);
        const LabelVolume pred = label_volume_from_nifti(pred_nv, pred_path);
        const LabelVolume gt = label_volume_from_nifti(gt_nv, gt_path);
        reports.push_back(evaluate_case(pred, gt, eval_match, gt_nv.spacing, id));
      }

      nlohmann::json out;
      for (const auto& rep : reports) out["cases"].push_back(to_json(rep));
      const auto means = run_mean_metrics(reports);
      for (const auto& [k, v] : means) out["aggregate"][k] = v;
      write_file(eval_out, out.dump(2) + "\n");

      std::vector<std::map<std::string, double>> runs = {means};
      const TableDoc table = comparison_table("run", aggregate(runs));
      std::cout << render_text(table);
      std::cout << "report written to " << eval_out << "\n";
      return 0;
    }

    if (*ablate) {
      RunManifest manifest;
      manifest.started_at = iso8601_now();
      fs::create_directories(ablate_out);

      AblationSpec spec;
      if (ablate->count("--modalities")) {
        spec.subsets = {parse_modality_set(ablate_data.modalities)};  // one-subset run
      } else if (ablate_subsets != "all") {
        spec.subsets.clear();
        for (const auto& tok : CLI::detail::split(ablate_subsets, ';'))
          spec.subsets.push_back(parse_modality_set(tok));
      }
      // the index must cover every modality any subset touches
      std::vector<ModalityId> union_mods;
      for (const auto& s : spec.subsets)
        union_mods.insert(union_mods.end(), s.begin(), s.end());
      std::sort(union_mods.begin(), union_mods.end());
      union_mods.erase(std::unique(union_mods.begin(), union_mods.end()), union_mods.end());
      SplitSpec ablate_split;
      ablate_split.fractions = {ablate_data.train_frac, ablate_data.val_frac,
                                ablate_data.test_frac};
      const DatasetIndex index = discover_dataset(ablate_data.root, union_mods, ablate_split,
                                                  ablate_data.suffixes());
      spec.seeds.clear();
      for (const auto& tok : CLI::detail::split(ablate_seeds, ','))
        spec.seeds.push_back(std::stoull(tok));

      ab_det_cfg.block_layers.clear();
      for (const auto& tok : CLI::detail::split(ab_det_blocks, ','))
        ab_det_cfg.block_layers.push_back(std::stoi(tok));
      ab_det_cfg.stem_kernel = 3;
      ab_det_cfg.bn_size = 2;
      ab_seg_cfg.max_features = std::min(ab_seg_cfg.max_features,
                                         ab_seg_cfg.base_features * 8);
      spec.detector_template = ab_det_cfg;
      spec.segmentor_template = ab_seg_cfg;
      spec.detector_train.epochs = ab_det_epochs;
      spec.detector_train.patch_size = cube(ab_patch);
      spec.detector_train.val_every = std::max(1, ab_det_epochs / 2);
      spec.detector_train.schedule.warmup_epochs = std::max(1, ab_det_epochs / 4);
      spec.segmentor_train.iterations = ab_seg_iters;
      spec.segmentor_train.iters_per_epoch = std::max(1, ab_seg_iters / 10);
      spec.segmentor_train.patch_size = cube(ab_patch);
      spec.inference.patch = PatchSpec{cube(ab_patch), cube(ab_stride)};

      const AblationResult result = run_ablation(index, spec);
      const TableDoc table = ablation_table(result);
      write_file(ablate_out + "/ablation.md", render_markdown(table));
      write_file(ablate_out + "/ablation.csv", render_csv(table));
      std::cout << render_text(table);
      if (result.best_row >= 0)
        std::cout << "best subset by average lesion-wise DSC: "
                  << modality_set_name(result.rows[result.best_row].subset) << "\n";
      int failures = 0;
      for (const auto& row : result.rows) failures += row.failed;

      manifest.finished_at = iso8601_now();
      manifest.config = {{"subsets", ablate_subsets}, {"seeds", ablate_seeds},
                         {"det_epochs", ab_det_epochs}, {"seg_iterations", ab_seg_iters},
                         {"patch", ab_patch}};
      manifest.artifacts["table_md"] = ablate_out + "/ablation.md";
      manifest.artifacts["table_csv"] = ablate_out + "/ablation.csv";
      manifest.metrics["failed_subsets"] = failures;
      if (result.best_row >= 0)
        manifest.metrics["best_subset"] =
            modality_set_name(result.rows[result.best_row].subset);
      manifest.write(ablate_out + "/manifest.json");
      return failures == 0 ? 0 : 2;
    }

    if (*report) {
      fs::create_directories(report_out);
      std::vector<std::map<std::string, double>> runs;
      for (const auto& path : report_in) {
        std::ifstream in(path);
        require(in.good(), "cannot read ", path);
        nlohmann::json j;
        in >> j;
        std::vector<MetricsReport> cases;
        for (const auto& c : j.at("cases")) cases.push_back(metrics_report_from_json(c));
        runs.push_back(run_mean_metrics(cases));
      }
      const AggregateReport agg = aggregate(runs);
      const TableDoc table = comparison_table(report_name, agg);
      write_file(report_out + "/results.md", render_markdown(table));
      write_file(report_out + "/results.csv", render_csv(table));
      write_file(report_out + "/results.txt", render_text(table));
      write_file(report_out + "/aggregate.json", to_json(agg).dump(2) + "\n");
      std::cout << render_text(table);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
