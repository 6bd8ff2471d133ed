#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rfc/config.hpp"
#include "rfc/detection.hpp"
#include "rfc/fusion.hpp"
#include "rfc/radar.hpp"

namespace rfc::experiments {

// Accumulated-frame sweep on the standard toy scene: a car-sized box beside a
// 3 m straight drive, scored against its dense surface.
struct FramesAblationConfig {
  radar::RigConfig rig;
  detect::CfarConfig cfar;
  fusion::FusionConfig fusion;
  std::vector<std::size_t> frame_counts = {1, 2, 5, 10, 20};
  std::size_t n_frames = 20;
  double path_length = 3.0;
  double standoff = 4.0;
  std::size_t n_scatterers = 500;
  std::size_t n_reference = 4096;
  std::size_t n_scenes = 3;
  std::uint64_t seed = 0;

  static FramesAblationConfig from_config(const Config& cfg);
};

struct FramesRow {
  std::size_t frames = 0;
  double path_length = 0.0;
  double points = 0.0;
  double chamfer_l1 = 0.0;
  double chamfer_sq = 0.0;
};

struct FramesAblationResult {
  std::vector<FramesRow> rows;
  std::string to_csv() const;
  /// chamfer_l1 of the row with `frames` frames; throws if absent.
  double metric_at(std::size_t frames) const;
};

FramesAblationResult frames_ablation(const FramesAblationConfig& cfg);

// Paired comparison of coherent (SAR) and non-coherent (fused, accumulated)
// combination of a short drive past one scatterer under pose error. The
// fused cloud uses `rig`; the SAR image and the lobe measurements use the
// finer `sar_array` grid over the same drive.
struct SarVsFusionConfig {
  radar::RigConfig rig;
  radar::VirtualArrayConfig sar_array;
  detect::CfarConfig cfar;
  fusion::FusionConfig fusion;
  std::size_t n_frames = 20;
  double spacing = 0.05;
  double range = 3.0;
  double position_error_rms = 0.002;
  std::size_t n_seeds = 20;
  std::uint64_t seed = 0;

  static SarVsFusionConfig defaults();
  static SarVsFusionConfig from_config(const Config& cfg);
};

struct SarRow {
  std::uint64_t seed = 0;
  double single_width = 0.0;
  double sar_width = 0.0;
  double pslr_clean_db = 0.0;
  double pslr_noisy_db = 0.0;
  double spread_clean = 0.0;
  double spread_noisy = 0.0;

  double pslr_degradation_db() const { return pslr_clean_db - pslr_noisy_db; }
  double spread_change() const;
};

struct SarVsFusionResult {
  std::vector<SarRow> rows;
  double mean_single_width = 0.0;
  double mean_sar_width = 0.0;
  double mean_pslr_degradation_db = 0.0;
  double mean_abs_spread_change = 0.0;
  std::string to_csv() const;
};

SarVsFusionResult sar_vs_fusion(const SarVsFusionConfig& cfg);

/// Root-mean-square distance of the points to their centroid.
double cloud_spread(const PointCloud& pc);

/// Runs a named experiment from a config and returns its CSV report.
std::string run_experiment(const std::string& name, const Config& cfg);

}  // namespace rfc::experiments
