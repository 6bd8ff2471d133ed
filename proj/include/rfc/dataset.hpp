#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rfc/augment.hpp"
#include "rfc/config.hpp"
#include "rfc/detection.hpp"
#include "rfc/fusion.hpp"
#include "rfc/mesh.hpp"
#include "rfc/radar.hpp"
#include "rfc/train.hpp"

namespace rfc::dataset {

enum class Recipe { Synthetic, Radar };
std::string to_string(Recipe r);
Recipe parse_recipe(const std::string& s);

/// Simulated capture of a mesh: the rig drives a straight line parallel to
/// the object while the object sits `standoff` meters ahead of it.
struct RadarRecipe {
  radar::RigConfig rig;
  detect::CfarConfig cfar;
  fusion::FusionConfig fusion;
  std::size_t n_scatterers = 600;
  std::size_t n_frames = 20;
  double path_length = 3.0;
  double standoff = 4.0;
};

struct DatasetConfig {
  std::size_t per_object = 8;
  bool synthetic = true;
  bool radar = true;
  std::size_t complete_points = augment::kCompletePoints;
  std::size_t partial_points = 2048;
  augment::RenderOptions render;
  augment::JitterConfig jitter;
  augment::CropConfig crop;
  augment::NormalizationMode mode = augment::NormalizationMode::WithBBox;
  /// Camera distance range as multiples of the mesh's bounding radius.
  double view_distance_min = 2.0;
  double view_distance_max = 4.0;
  RadarRecipe radar_recipe;
  std::uint64_t seed = 0;

  static DatasetConfig from_config(const Config& cfg);
};

/// Radar rig, CFAR and fusion settings read from `radar.*`, `cfar.*` and `fusion.*` keys.
radar::RigConfig rig_from_config(const Config& cfg);
detect::CfarConfig cfar_from_config(const Config& cfg);
fusion::FusionConfig fusion_from_config(const Config& cfg);

struct SampleKey {
  std::string class_label;
  std::string object_id;
  Recipe recipe = Recipe::Synthetic;
  std::size_t index = 0;

  /// `class/object_id/sample_k`, with k running over both recipes.
  std::string id(std::size_t per_object) const;
};

/// Builds one sample; the seed is derived from (cfg.seed, mesh_index, recipe, index).
augment::TrainingSample make_sample(const Mesh& mesh, std::size_t mesh_index, const SampleKey& key,
                                    const DatasetConfig& cfg);

/// Partial cloud of a mesh captured by the simulated radar pipeline, in the
/// world frame where the rig starts at the origin at mounting height.
PointCloud radar_capture(const Mesh& posed, const RadarRecipe& recipe, std::uint64_t seed);

struct GeneratedSample {
  SampleKey key;
  std::string id;
  augment::TrainingSample sample;
};

struct DatasetResult {
  std::vector<GeneratedSample> samples;
  std::vector<std::string> failures;
};

/// All sample keys for a mesh list in generation order.
std::vector<SampleKey> plan(const std::vector<Mesh>& meshes, const std::vector<std::string>& object_ids,
                            const DatasetConfig& cfg);

DatasetResult make_dataset(const std::vector<Mesh>& meshes, const std::vector<std::string>& object_ids,
                           const DatasetConfig& cfg);

struct ManifestEntry {
  std::string id;
  std::string class_label;
  std::string object_id;
  Recipe recipe = Recipe::Synthetic;
};

void write_sample(const std::filesystem::path& root, const std::string& id, const SampleKey& key,
                  const augment::TrainingSample& s);
bool sample_exists(const std::filesystem::path& root, const std::string& id);
augment::TrainingSample read_sample(const std::filesystem::path& root, const std::string& id);

void write_manifest(const std::filesystem::path& root, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& root);

const std::vector<std::string>& class_names();
std::size_t class_index(const std::string& name);

/// Network-ready samples: partial resampled to n_input points, complete as target.
net::TrainSample to_train_sample(const std::string& id, const augment::TrainingSample& s, std::size_t n_input,
                                 std::uint64_t seed);

}  // namespace rfc::dataset
