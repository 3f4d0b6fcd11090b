#pragma once

#include <string>
#include <vector>

#include "bmseg/eval/aggregate.hpp"
#include "bmseg/pipeline/inference.hpp"
#include "bmseg/report/tables.hpp"
#include "bmseg/train/detector_loop.hpp"
#include "bmseg/train/segmentor_loop.hpp"

namespace bmseg {

struct AblationSpec {
  std::vector<ModalitySet> subsets = all_modality_subsets();  // the 15 combinations
  std::vector<uint64_t> seeds = {1, 2, 3};
  DetectorConfig detector_template;    // in_channels rewritten per subset
  SegmentorConfig segmentor_template;  // likewise
  DetectorTrainConfig detector_train;  // scaled budget
  SegmentorTrainConfig segmentor_train;
  GatedInferenceConfig inference;
  MatchConfig match;

  void validate() const {
    require(!subsets.empty(), "ablation: no modality subsets");
    require(!seeds.empty(), "ablation: no seeds");
    for (size_t i = 0; i < subsets.size(); ++i) {
      require(!subsets[i].empty(), "ablation: empty subset");
      for (size_t j = i + 1; j < subsets.size(); ++j)
        require(subsets[i] != subsets[j], "ablation: duplicate subset ",
                modality_set_name(subsets[i]));
    }
  }
};

struct AblationRow {
  ModalitySet subset;
  AggregateReport report;
  bool failed = false;
  std::string error;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  int best_row = -1;  // argmax of average lesion-wise DSC across WT/TC/ET
};

namespace ablation_detail {

inline double avg_lesionwise_dsc(const AggregateReport& rep) {
  double s = 0.0;
  for (const char* r : {"WT", "TC", "ET"}) {
    auto it = rep.find(std::string(r) + "/lesionwise_dsc");
    if (it == rep.end()) return -1.0;
    s += it->second.mean;
  }
  return s / 3.0;
}

}  // namespace ablation_detail

// Trains and evaluates one two-stage configuration per modality subset per
// seed. Per-subset failures are recorded and the harness continues.
inline AblationResult run_ablation(const DatasetIndex& index, const AblationSpec& spec) {
  spec.validate();
  AblationResult result;

  for (const ModalitySet& subset : spec.subsets) {
    AblationRow row;
    row.subset = subset;
    try {
      const auto train_cases = load_split(index, "train", subset);
      const auto val_cases = load_split(index, "val", subset);
      auto test_cases = load_split(index, "test", subset);
      if (test_cases.empty()) test_cases = train_cases;

      std::vector<std::map<std::string, double>> run_means;
      for (uint64_t seed : spec.seeds) {
        DetectorConfig det_cfg = spec.detector_template;
        det_cfg.in_channels = static_cast<int>(subset.size());
        det_cfg.init_seed = seed;
        SegmentorConfig seg_cfg = spec.segmentor_template;
        seg_cfg.in_channels = static_cast<int>(subset.size());
        seg_cfg.init_seed = seed;

        DetectorTrainConfig det_train = spec.detector_train;
        det_train.seed = seed;
        det_train.out_dir.clear();
        SegmentorTrainConfig seg_train = spec.segmentor_train;
        seg_train.seed = seed;
        seg_train.out_dir.clear();

        auto det = train_detector(train_cases, val_cases, det_cfg, det_train);
        auto seg = train_segmentor(train_cases, seg_cfg, seg_train);

        std::vector<MetricsReport> reports;
        for (const auto& c : test_cases) {
          const auto inf = run_gated_inference(c.image, *det.model, *seg.model, spec.inference);
          reports.push_back(evaluate_case(inf.labels, c.labels, spec.match, c.image.spacing,
                                          c.id));
        }
        run_means.push_back(run_mean_metrics(reports));
      }
      row.report = aggregate(run_means);
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    result.rows.push_back(std::move(row));
  }

  double best = -1.0;
  for (size_t i = 0; i < result.rows.size(); ++i) {
    if (result.rows[i].failed) continue;
    const double v = ablation_detail::avg_lesionwise_dsc(result.rows[i].report);
    if (v > best) {
      best = v;
      result.best_row = static_cast<int>(i);
    }
  }
  return result;
}

// Table-1-shaped report: legacy DSC over WT/TC/ET/AVG/NETC/SNFH plus
// lesion-wise DSC over WT/TC/ET/AVG, best and second-best flagged per column.
inline TableDoc ablation_table(const AblationResult& result) {
  TableDoc t;
  t.title = "Modality impact (DSC, percent)";
  t.headers = {"Modalities",  "WT",        "TC",     "ET",     "AVG",    "NETC",
               "SNFH",        "LW WT",     "LW TC",  "LW ET",  "LW AVG"};

  struct Cell {
    double mean = -1.0;
    std::string text;
  };
  std::vector<std::vector<Cell>> grid;
  const auto fetch = [](const AggregateReport& rep, const std::string& key) -> Cell {
    auto it = rep.find(key);
    if (it == rep.end()) return {};
    return {it->second.mean * 100.0,
            format_cell(it->second.mean * 100.0, it->second.stddev * 100.0)};
  };
  const auto avg3 = [](const AggregateReport& rep, const char* metric) -> Cell {
    double m = 0.0, sd = 0.0;
    for (const char* r : {"WT", "TC", "ET"}) {
      auto it = rep.find(std::string(r) + "/" + metric);
      if (it == rep.end()) return {};
      m += it->second.mean / 3.0;
      sd += it->second.stddev / 3.0;
    }
    return {m * 100.0, format_cell(m * 100.0, sd * 100.0)};
  };

  for (const auto& row : result.rows) {
    std::vector<Cell> cells;
    if (row.failed) {
      cells.assign(10, Cell{});
    } else {
      cells.push_back(fetch(row.report, "WT/legacy_dsc"));
      cells.push_back(fetch(row.report, "TC/legacy_dsc"));
      cells.push_back(fetch(row.report, "ET/legacy_dsc"));
      cells.push_back(avg3(row.report, "legacy_dsc"));
      cells.push_back(fetch(row.report, "NETC/legacy_dsc"));
      cells.push_back(fetch(row.report, "SNFH/legacy_dsc"));
      cells.push_back(fetch(row.report, "WT/lesionwise_dsc"));
      cells.push_back(fetch(row.report, "TC/lesionwise_dsc"));
      cells.push_back(fetch(row.report, "ET/lesionwise_dsc"));
      cells.push_back(avg3(row.report, "lesionwise_dsc"));
    }
    grid.push_back(std::move(cells));
  }

  // flag best (**) and second-best (*) per metric column
  for (size_t col = 0; col < 10; ++col) {
    int best = -1, second = -1;
    for (size_t r = 0; r < grid.size(); ++r) {
      if (grid[r][col].mean < 0) continue;
      if (best < 0 || grid[r][col].mean > grid[best][col].mean) {
        second = best;
        best = static_cast<int>(r);
      } else if (second < 0 || grid[r][col].mean > grid[second][col].mean) {
        second = static_cast<int>(r);
      }
    }
    if (best >= 0) grid[best][col].text = "**" + grid[best][col].text + "**";
    if (second >= 0) grid[second][col].text = "*" + grid[second][col].text + "*";
  }

  for (size_t r = 0; r < grid.size(); ++r) {
    std::vector<std::string> row;
    row.push_back(modality_set_name(result.rows[r].subset));
    for (const auto& c : grid[r]) row.push_back(c.text);
    if (result.rows[r].failed) row.back() = "failed: " + result.rows[r].error;
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace bmseg
