#include <catch2/catch.hpp>

#include <filesystem>

#include "bmseg/eval/components.hpp"
#include "bmseg/io/dataset.hpp"
#include "bmseg/io/nifti.hpp"
#include "bmseg/io/stats.hpp"
#include "bmseg/io/synthetic.hpp"
#include "bmseg/patch/grid.hpp"
#include "test_helpers.hpp"

using namespace bmseg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("bmseg-test-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Fake patient directories with tiny constant volumes.
void write_fake_case(const fs::path& root, const std::string& id,
                     const std::vector<std::string>& suffixes, Shape3 shape = {4, 4, 4}) {
  const fs::path dir = root / id;
  fs::create_directories(dir);
  std::vector<float> img(shape_numel(shape), 1.f);
  std::vector<uint8_t> lab(shape_numel(shape), 0);
  for (const auto& sfx : suffixes) {
    if (sfx == "seg")
      write_nifti_labels((dir / (id + "-seg.nii.gz")).string(), shape, {1, 1, 1}, lab.data());
    else
      write_nifti((dir / (id + "-" + sfx + ".nii.gz")).string(), shape, {1, 1, 1}, img.data());
  }
}

}  // namespace

TEST_CASE("nifti round trip is bit exact") {
  TempDir tmp;
  Rng rng = make_rng(5, 0);
  const Shape3 shape{6, 5, 4};
  std::vector<float> data(shape_numel(shape));
  for (auto& v : data) v = static_cast<float>(rand_normal(rng, 0.0, 10.0));

  for (const char* name : {"vol.nii", "vol.nii.gz"}) {
    const std::string path = (tmp.path / name).string();
    write_nifti(path, shape, {1.5, 1.0, 0.5}, data.data());
    const NiftiVolume rt = read_nifti(path);
    REQUIRE(rt.shape == shape);
    REQUIRE(rt.spacing[0] == Approx(1.5).margin(1e-6));
    REQUIRE(rt.spacing[1] == Approx(1.0).margin(1e-6));
    REQUIRE(rt.spacing[2] == Approx(0.5).margin(1e-6));
    REQUIRE(rt.data.size() == data.size());
    for (size_t i = 0; i < data.size(); ++i) REQUIRE(rt.data[i] == data[i]);

    // save-again round trip preserves the header geometry
    const std::string path2 = (tmp.path / (std::string("rt-") + name)).string();
    write_nifti(path2, rt.shape, rt.spacing, rt.data.data(), rt.raw_header.data());
    const NiftiVolume rt2 = read_nifti(path2);
    REQUIRE(rt2.spacing == rt.spacing);
    for (size_t i = 0; i < data.size(); ++i) REQUIRE(rt2.data[i] == data[i]);
  }
}

TEST_CASE("discover_dataset splits and errors") {
  const ModalitySet mods = {ModalityId::T1, ModalityId::T1C, ModalityId::FLAIR};

  SECTION("largest split sizes: 238 cases at (0.85,0.05,0.10) -> 202/11/25") {
    // quota arithmetic only; exercised through the internal rule
    const auto sizes = detail::split_sizes(238, {0.85, 0.05, 0.10});
    REQUIRE(sizes[0] == 202);
    REQUIRE(sizes[1] == 11);
    REQUIRE(sizes[2] == 25);
  }
  SECTION("10 cases at (0.8,0.1,0.1) -> 8/1/1") {
    const auto sizes = detail::split_sizes(10, {0.8, 0.1, 0.1});
    REQUIRE(sizes[0] == 8);
    REQUIRE(sizes[1] == 1);
    REQUIRE(sizes[2] == 1);
  }
  SECTION("empty root raises 'no cases found'") {
    TempDir tmp;
    REQUIRE_THROWS_WITH(discover_dataset(tmp.path.string(), mods, SplitSpec{}),
                        Catch::Contains("no cases found"));
  }
  SECTION("missing modality file names the modality") {
    TempDir tmp;
    write_fake_case(tmp.path, "p000", {"t1n", "t1c", "seg"});  // no flair
    REQUIRE_THROWS_WITH(discover_dataset(tmp.path.string(), mods, SplitSpec{}),
                        Catch::Contains("f"));
  }
  SECTION("deterministic ordering and fractional split") {
    TempDir tmp;
    for (int i = 9; i >= 0; --i)
      write_fake_case(tmp.path, "p00" + std::to_string(i), {"t1n", "t1c", "t2f", "seg"});
    SplitSpec spec;
    spec.fractions = {0.8, 0.1, 0.1};
    const DatasetIndex idx = discover_dataset(tmp.path.string(), mods, spec);
    REQUIRE(idx.cases.size() == 10);
    REQUIRE(std::is_sorted(idx.cases.begin(), idx.cases.end(),
                           [](const auto& a, const auto& b) { return a.id < b.id; }));
    REQUIRE(idx.splits.at("train").size() == 8);
    REQUIRE(idx.splits.at("val").size() == 1);
    REQUIRE(idx.splits.at("test").size() == 1);

    const DatasetIndex idx2 = discover_dataset(tmp.path.string(), mods, spec);
    for (int s : {0, 1, 2}) {
      const char* names[] = {"train", "val", "test"};
      REQUIRE(idx.splits.at(names[s]) == idx2.splits.at(names[s]));
    }
  }
  SECTION("explicit split lists are used verbatim") {
    TempDir tmp;
    for (int i = 0; i < 4; ++i)
      write_fake_case(tmp.path, "p00" + std::to_string(i), {"t1n", "t1c", "t2f", "seg"});
    SplitSpec spec;
    spec.explicit_ids = {{{"p003", "p001"}, {"p000"}, {"p002"}}};
    const DatasetIndex idx = discover_dataset(tmp.path.string(), mods, spec);
    REQUIRE(idx.splits.at("train") == std::vector<std::string>{"p003", "p001"});
    REQUIRE(idx.splits.at("val") == std::vector<std::string>{"p000"});
  }
}

TEST_CASE("load_case stacking and validation") {
  TempDir tmp;
  const Shape3 shape{5, 5, 5};
  const fs::path dir = tmp.path / "p000";
  fs::create_directories(dir);

  std::vector<float> a(shape_numel(shape), 1.f), b(shape_numel(shape), 2.f);
  write_nifti((dir / "p000-t1n.nii.gz").string(), shape, {1, 1, 1}, a.data());
  write_nifti((dir / "p000-t1c.nii.gz").string(), shape, {1, 1, 1}, b.data());
  std::vector<uint8_t> lab(shape_numel(shape), 0);
  lab[7] = 3;
  write_nifti_labels((dir / "p000-seg.nii.gz").string(), shape, {1, 1, 1}, lab.data());

  const ModalitySet mods = {ModalityId::T1, ModalityId::T1C};
  const DatasetIndex idx = discover_dataset(tmp.path.string(), mods, SplitSpec{});

  SECTION("channels stacked in requested order") {
    const auto [vol, labels] = load_case(idx.cases[0], mods);
    REQUIRE(vol.channels == 2);
    REQUIRE(vol.shape == shape);
    REQUIRE(vol.channel(0)[0] == 1.f);
    REQUIRE(vol.channel(1)[0] == 2.f);
    REQUIRE(labels.vol.data[7] == 3);
    REQUIRE(vol.spacing == std::array<double, 3>{1.0, 1.0, 1.0});
  }
  SECTION("label value outside {0..3} is rejected") {
    std::vector<uint8_t> bad(shape_numel(shape), 0);
    bad[3] = 4;
    write_nifti_labels((dir / "p000-seg.nii.gz").string(), shape, {1, 1, 1}, bad.data());
    REQUIRE_THROWS_WITH(load_case(idx.cases[0], mods), Catch::Contains("invalid label 4"));
  }
  SECTION("modality shape mismatch is reported with both shapes") {
    const Shape3 other{6, 5, 5};
    std::vector<float> c(shape_numel(other), 1.f);
    write_nifti((dir / "p000-t1c.nii.gz").string(), other, {1, 1, 1}, c.data());
    REQUIRE_THROWS_WITH(load_case(idx.cases[0], mods),
                        Catch::Contains("5x5x5") && Catch::Contains("6x5x5"));
  }
}

TEST_CASE("normalize") {
  const Shape3 s{4, 4, 4};

  SECTION("nonzero {1,2,3} maps to +-1.2247 with population std") {
    MultiModalVolume vol(s, {ModalityId::T1});
    vol.channel(0)[0] = 1.f;
    vol.channel(0)[1] = 2.f;
    vol.channel(0)[2] = 3.f;
    const auto out = normalize(vol);
    REQUIRE(out.channel(0)[0] == Approx(-1.224744871).margin(1e-5));
    REQUIRE(out.channel(0)[1] == Approx(0.0).margin(1e-6));
    REQUIRE(out.channel(0)[2] == Approx(1.224744871).margin(1e-5));
    REQUIRE(out.channel(0)[3] == 0.f);  // zeros untouched
  }
  SECTION("constant nonzero channel maps to zero") {
    MultiModalVolume vol(s, {ModalityId::T1});
    for (int i = 0; i < 10; ++i) vol.channel(0)[i] = 42.f;
    const auto out = normalize(vol);
    for (int i = 0; i < 10; ++i) REQUIRE(out.channel(0)[i] == 0.f);
  }
  SECTION("all-zero channel unchanged") {
    MultiModalVolume vol(s, {ModalityId::T1});
    const auto out = normalize(vol);
    for (int64_t i = 0; i < out.voxels(); ++i) REQUIRE(out.channel(0)[i] == 0.f);
  }
  SECTION("nonzero support has mean 0 and variance 1 afterwards") {
    Rng rng = make_rng(31, 2);
    MultiModalVolume vol({8, 8, 8}, {ModalityId::T1, ModalityId::T2});
    for (int c = 0; c < 2; ++c)
      for (int64_t i = 0; i < vol.voxels(); ++i)
        vol.channel(c)[i] = (i % 3 == 0) ? 0.f : static_cast<float>(rand_normal(rng, 5.0, 2.0));
    const auto out = normalize(vol);
    for (int c = 0; c < 2; ++c) {
      double sum = 0, ss = 0;
      int64_t n = 0;
      for (int64_t i = 0; i < out.voxels(); ++i)
        if (out.channel(c)[i] != 0.f) {
          sum += out.channel(c)[i];
          ++n;
        }
      const double mean = sum / n;
      for (int64_t i = 0; i < out.voxels(); ++i)
        if (out.channel(c)[i] != 0.f) ss += (out.channel(c)[i] - mean) * (out.channel(c)[i] - mean);
      REQUIRE(std::abs(mean) < 1e-6);
      REQUIRE(std::abs(ss / n - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("compose_regions definitions and nesting") {
  const Shape3 s{4, 4, 4};

  SECTION("single voxel per label") {
    LabelVolume lv(s);
    lv.vol.at(1, 1, 1) = 3;
    lv.vol.at(2, 2, 2) = 2;
    lv.vol.at(3, 3, 3) = 1;
    const RegionMasks r = compose_regions(lv);
    REQUIRE(r.et.at(1, 1, 1) == 1);
    REQUIRE(r.tc.at(1, 1, 1) == 1);
    REQUIRE(r.wt.at(1, 1, 1) == 1);
    REQUIRE(r.et.at(2, 2, 2) == 0);
    REQUIRE(r.tc.at(2, 2, 2) == 0);
    REQUIRE(r.wt.at(2, 2, 2) == 1);
    REQUIRE(r.et.at(3, 3, 3) == 0);
    REQUIRE(r.tc.at(3, 3, 3) == 1);
    REQUIRE(r.wt.at(3, 3, 3) == 1);
  }
  SECTION("nesting holds for random label volumes") {
    Rng rng = make_rng(13, 3);
    for (int trial = 0; trial < 30; ++trial) {
      LabelVolume lv(s);
      for (auto& v : lv.vol.data) v = static_cast<uint8_t>(rand_int(rng, 0, 3));
      const RegionMasks r = compose_regions(lv);
      for (int64_t i = 0; i < lv.numel(); ++i) {
        REQUIRE(r.et.data[i] <= r.tc.data[i]);
        REQUIRE(r.tc.data[i] <= r.wt.data[i]);
      }
    }
  }
}

TEST_CASE("generate_synthetic") {
  SyntheticSpec spec;
  spec.n_cases = 2;
  spec.shape = {48, 48, 48};
  spec.n_channels = 2;
  spec.lesion_count_min = 2;
  spec.lesion_count_max = 2;
  spec.lesion_radius_min = 3;
  spec.lesion_radius_max = 5;
  spec.seed = 7;

  SECTION("deterministic given seed") {
    const auto a = generate_synthetic(spec);
    const auto b = generate_synthetic(spec);
    REQUIRE(a.size() == 2);
    for (size_t i = 0; i < a.size(); ++i) {
      REQUIRE(a[i].image.data == b[i].image.data);
      REQUIRE(a[i].labels.vol.data == b[i].labels.vol.data);
    }
  }
  SECTION("two lesions yield two WT components under evaluation semantics") {
    for (const auto& c : generate_synthetic(spec)) {
      REQUIRE(count_lesions(c.labels) == 2);
      validate_labels(c.labels);
      // all three regions exercised
      const RegionMasks r = compose_regions(c.labels);
      int64_t wt = 0, tc = 0, et = 0;
      for (int64_t i = 0; i < r.wt.numel(); ++i) {
        wt += r.wt.data[i];
        tc += r.tc.data[i];
        et += r.et.data[i];
      }
      REQUIRE(wt > tc);
      REQUIRE(tc > et);
      REQUIRE(et > 0);
    }
  }
  SECTION("zero lesion range gives all-background labels") {
    SyntheticSpec empty = spec;
    empty.lesion_count_min = empty.lesion_count_max = 0;
    for (const auto& c : generate_synthetic(empty))
      for (uint8_t v : c.labels.vol.data) REQUIRE(v == 0);
  }
  SECTION("impossible lesion placement errors out after bounded retries") {
    SyntheticSpec cramped = spec;
    cramped.shape = {20, 20, 20};
    cramped.lesion_count_min = cramped.lesion_count_max = 4;
    cramped.lesion_radius_min = 4.0;
    cramped.lesion_radius_max = 5.0;
    REQUIRE_THROWS_AS(generate_synthetic(cramped), Error);
  }
}

TEST_CASE("synthetic dataset round trip through disk") {
  TempDir tmp;
  SyntheticSpec spec;
  spec.n_cases = 3;
  spec.shape = {24, 24, 24};
  spec.n_channels = 3;
  spec.lesion_count_min = 0;
  spec.lesion_count_max = 2;
  spec.lesion_radius_min = 2;
  spec.lesion_radius_max = 3;
  spec.seed = 11;
  write_synthetic_dataset(spec, tmp.path.string());

  const ModalitySet mods = {ModalityId::T1, ModalityId::T1C, ModalityId::T2};
  SplitSpec split;
  split.explicit_ids = {{{"case-000", "case-001"}, {}, {"case-002"}}};
  const DatasetIndex idx = discover_dataset(tmp.path.string(), mods, split);
  REQUIRE(idx.cases.size() == 3);

  const auto generated = generate_synthetic(spec);
  const auto [vol, labels] = load_case(idx.find("case-001"), mods);
  REQUIRE(vol.data == generated[1].image.data);  // bit-exact through disk
  REQUIRE(labels.vol.data == generated[1].labels.vol.data);

  const DatasetStats stats = dataset_stats(idx);
  int total = 0;
  for (const auto& [split_name, hist] : stats.histograms)
    for (const auto& [bucket, n] : hist) total += n;
  REQUIRE(total == 3);
  REQUIRE(stats.failures.empty());

  const std::string svg = (tmp.path / "hist.svg").string();
  write_stats_plot(stats, svg);
  REQUIRE(fs::file_size(svg) > 100);
}

TEST_CASE("full-geometry case loads with the expected shape and tiling") {
  TempDir tmp;
  // 240x240x155 at 1mm isotropic, the production volume geometry
  const Shape3 shape{155, 240, 240};  // (z, y, x)
  const fs::path dir = tmp.path / "p000";
  fs::create_directories(dir);
  std::vector<float> img(shape_numel(shape), 0.f);
  for (int64_t i = 0; i < 5000; ++i) img[i * 1000] = 1.f;
  std::vector<uint8_t> lab(shape_numel(shape), 0);
  write_nifti((dir / "p000-t1c.nii").string(), shape, {1, 1, 1}, img.data());
  write_nifti_labels((dir / "p000-seg.nii").string(), shape, {1, 1, 1}, lab.data());

  const ModalitySet mods = {ModalityId::T1C};
  const DatasetIndex idx = discover_dataset(tmp.path.string(), mods, SplitSpec{});
  const auto [vol, labels] = load_case(idx.cases[0], mods);
  REQUIRE(vol.shape == shape);
  REQUIRE(vol.channels == 1);
  REQUIRE(vol.spacing == std::array<double, 3>{1.0, 1.0, 1.0});

  // default 64^3 / 32 stride sliding-window grid over this geometry
  const auto grid = tile_grid(vol.shape, PatchSpec{});
  REQUIRE(grid.size() == 4u * 7u * 7u);
  REQUIRE(grid.back().origin == Shape3{91, 176, 176});
}

TEST_CASE("dataset_stats isolates per-case failures") {
  TempDir tmp;
  SyntheticSpec spec;
  spec.n_cases = 3;
  spec.shape = {16, 16, 16};
  spec.n_channels = 1;
  spec.lesion_count_min = spec.lesion_count_max = 1;
  spec.lesion_radius_min = 2;
  spec.lesion_radius_max = 3;
  spec.seed = 31;
  write_synthetic_dataset(spec, tmp.path.string());

  // corrupt one label file
  std::ofstream bad(tmp.path / "case-001" / "case-001-seg.nii.gz", std::ios::trunc);
  bad << "not a nifti";
  bad.close();

  const DatasetIndex idx =
      discover_dataset(tmp.path.string(), {ModalityId::T1}, SplitSpec{{1.0, 0.0, 0.0}});
  const DatasetStats stats = dataset_stats(idx);
  REQUIRE(stats.failures.size() == 1);
  REQUIRE(stats.failures[0].find("case-001") != std::string::npos);
  int counted = 0;
  for (const auto& [split, hist] : stats.histograms)
    for (const auto& [bucket, n] : hist) counted += n;
  REQUIRE(counted == 2);  // the two healthy cases still report
}

TEST_CASE("dataset_stats counts sub-min-size lesions as zero") {
  const Shape3 s{8, 8, 8};
  LabelVolume lv(s);
  lv.vol.at(1, 1, 1) = 3;  // two isolated 1-voxel specks
  lv.vol.at(5, 5, 5) = 2;
  REQUIRE(count_lesions(lv) == 0);
  lv.vol.at(1, 1, 2) = 3;  // grow one to 2 voxels
  REQUIRE(count_lesions(lv) == 1);
}
