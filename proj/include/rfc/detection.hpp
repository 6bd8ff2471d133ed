#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "rfc/radar.hpp"

namespace rfc::detect {

struct Detection {
  std::size_t range_bin = 0;
  std::size_t angle_bin = 0;
  double power_db = 0.0;
  double range_m = 0.0;
  double angle_rad = 0.0;
};

enum class CfarVariant { CA, OS };

/// Cross-shaped 2-D CFAR window: `training_cells` cells on each side of the
/// cell under test along each axis, separated from it by `guard_cells`.
struct CfarConfig {
  CfarVariant variant = CfarVariant::CA;
  std::size_t guard_cells = 2;
  std::size_t training_cells = 8;
  double p_fa = 1e-3;
  double os_rank = 0.75;

  void validate() const;
  std::size_t full_window_cells() const { return 4 * training_cells; }
};

/// CA-CFAR scale for exponential noise: T (p_fa^(-1/T) - 1).
double ca_cfar_alpha(std::size_t training, double p_fa);

/// OS-CFAR scale solving p_fa = prod_{i<k} (T - i) / (T - i + alpha).
double os_cfar_alpha(std::size_t training, std::size_t rank, double p_fa);

/// Adaptive thresholding of heatmap power. Edge cells use the in-bounds part
/// of the window with the scale recomputed for the reduced cell count.
/// Output is sorted by descending power, ties by (range_bin, angle_bin).
std::vector<Detection> cfar_detect(const radar::Heatmap2D& hm, const CfarConfig& cfg);

/// Same thresholding on a bare power grid (range-major), for calibration runs.
std::vector<Detection> cfar_detect_power(const std::vector<double>& power, std::size_t n_range,
                                         std::size_t n_angle, const CfarConfig& cfg);

/// Greedy non-maximum suppression with a Chebyshev radius in bins.
std::vector<Detection> nms_peaks(std::vector<Detection> dets, std::size_t radius_bins);
/// Rectangular variant with independent radii along range and angle.
std::vector<Detection> nms_peaks(std::vector<Detection> dets, std::size_t range_radius, std::size_t angle_radius);

/// Default suppression radius: ceil(2 / N radians / angle bin width).
std::size_t default_nms_radius(const radar::VirtualArrayConfig& array);

/// Orders detections by descending power; ties by (range_bin, angle_bin).
void sort_by_power(std::vector<Detection>& dets);

std::string detections_to_csv(const std::vector<Detection>& dets);
void write_detections_csv(const std::filesystem::path& path, const std::vector<Detection>& dets);

}  // namespace rfc::detect
