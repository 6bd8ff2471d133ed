#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "rfc/detection.hpp"
#include "rfc/geometry.hpp"
#include "rfc/radar.hpp"

namespace rfc::fusion {

struct FusionConfig {
  double power_discrepancy_db = 3.0;
  double fov_limit = std::numbers::pi / 4;
  double min_height = 0.0;
  double max_height = 3.0;
  /// Height of the rig above ground; height limits apply to z + mount_height.
  double mount_height = 1.0;
  /// Per-angle-bin gain tables in dB. Empty tables are derived from each
  /// array's element pattern.
  std::vector<double> gain_h_db;
  std::vector<double> gain_v_db;
  /// Vertical detections up to this many range bins away from a horizontal
  /// one may be paired with it. 0 means exact bin match.
  std::size_t range_bin_tolerance = 0;
  /// Angle-axis NMS radius in bins; 0 picks the main-lobe width of each array.
  std::size_t nms_radius = 0;
  /// Range-axis NMS radius in bins (covers the range response sidelobes).
  std::size_t nms_range_radius = 2;

  void validate() const;
};

using Pair = std::pair<detect::Detection, detect::Detection>;

/// Gain table of an array's element pattern sampled at its angle bins.
std::vector<double> default_gain_table(const radar::VirtualArrayConfig& array);
std::vector<double> default_gain_table(const radar::Heatmap2D& hm);

/// Subtracts the table entry of each detection's angle bin from its power.
std::vector<detect::Detection> compensate_gain(std::vector<detect::Detection> dets, const std::vector<double>& table_db);

/// Rank-order pairing of two power-sorted lists from one range bin. Stops at
/// the first pair whose power gap exceeds the configured discrepancy.
std::vector<Pair> associate_range_bin(const std::vector<detect::Detection>& h,
                                      const std::vector<detect::Detection>& v, const FusionConfig& cfg);

/// 3-D point from a cone angle to boresight, an elevation, the side
/// (sign of the horizontal steering angle) and a range.
Point3 lift_to_3d(double psi, double theta, double side, double range);

/// Lifts a horizontal/vertical detection pair. Throws DomainError when the
/// two angles are geometrically inconsistent.
Point3 lift_pair(const Pair& pair, double range);

struct FusionStats {
  std::size_t h_detections = 0;
  std::size_t v_detections = 0;
  std::size_t h_after_nms = 0;
  std::size_t v_after_nms = 0;
  std::size_t fov_rejected = 0;
  std::size_t unpaired = 0;
  std::size_t domain_dropped = 0;
  std::size_t limit_dropped = 0;
  std::size_t points = 0;

  FusionStats& operator+=(const FusionStats& o);
};

struct FusionResult {
  PointCloud cloud;
  FusionStats stats;
};

FusionResult fuse_frame_detailed(const radar::FrameCapture& frame, const detect::CfarConfig& cfar,
                                 const FusionConfig& cfg);
PointCloud fuse_frame(const radar::FrameCapture& frame, const detect::CfarConfig& cfar, const FusionConfig& cfg);

}  // namespace rfc::fusion
