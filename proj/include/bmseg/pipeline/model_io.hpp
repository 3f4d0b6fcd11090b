#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "bmseg/models/densenet.hpp"
#include "bmseg/models/resunet.hpp"

namespace bmseg {

inline nlohmann::json to_json(const DetectorConfig& c) {
  return {{"in_channels", c.in_channels},     {"growth_rate", c.growth_rate},
          {"block_layers", c.block_layers},   {"compression", c.compression},
          {"init_features", c.init_features}, {"bn_size", c.bn_size},
          {"stem_kernel", c.stem_kernel},     {"init_seed", c.init_seed}};
}

inline DetectorConfig detector_config_from_json(const nlohmann::json& j) {
  DetectorConfig c;
  c.in_channels = j.value("in_channels", c.in_channels);
  c.growth_rate = j.value("growth_rate", c.growth_rate);
  c.block_layers = j.value("block_layers", c.block_layers);
  c.compression = j.value("compression", c.compression);
  c.init_features = j.value("init_features", c.init_features);
  c.bn_size = j.value("bn_size", c.bn_size);
  c.stem_kernel = j.value("stem_kernel", c.stem_kernel);
  c.init_seed = j.value("init_seed", c.init_seed);
  return c;
}

inline nlohmann::json to_json(const SegmentorConfig& c) {
  return {{"in_channels", c.in_channels},
          {"out_channels", c.out_channels},
          {"n_stages", c.n_stages},
          {"base_features", c.base_features},
          {"max_features", c.max_features},
          {"deep_supervision_levels", c.deep_supervision_levels},
          {"init_seed", c.init_seed}};
}

inline SegmentorConfig segmentor_config_from_json(const nlohmann::json& j) {
  SegmentorConfig c;
  c.in_channels = j.value("in_channels", c.in_channels);
  c.out_channels = j.value("out_channels", c.out_channels);
  c.n_stages = j.value("n_stages", c.n_stages);
  c.base_features = j.value("base_features", c.base_features);
  c.max_features = j.value("max_features", c.max_features);
  c.deep_supervision_levels = j.value("deep_supervision_levels", c.deep_supervision_levels);
  c.init_seed = j.value("init_seed", c.init_seed);
  return c;
}

// Checkpoints carry their architecture config, so models reconstruct from the
// file alone; a fingerprint mismatch is refused up front.
inline std::unique_ptr<DenseNetDetector> load_detector(const std::string& path) {
  const nn::TensorStore store = nn::load_store(path);
  require(store.meta.value("kind", "") == "detector", path, " is not a detector checkpoint");
  auto model = std::make_unique<DenseNetDetector>(
      detector_config_from_json(store.meta.at("config")));
  require(store.meta.value("fingerprint", "") == model->fingerprint(),
          path, ": fingerprint does not match its stored config");
  model->registry().import_from(store);
  return model;
}

inline std::unique_ptr<ResUNetSegmentor> load_segmentor(const std::string& path) {
  const nn::TensorStore store = nn::load_store(path);
  require(store.meta.value("kind", "") == "segmentor", path, " is not a segmentor checkpoint");
  auto model = std::make_unique<ResUNetSegmentor>(
      segmentor_config_from_json(store.meta.at("config")));
  require(store.meta.value("fingerprint", "") == model->fingerprint(),
          path, ": fingerprint does not match its stored config");
  model->registry().import_from(store);
  return model;
}

}  // namespace bmseg
