#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfc/geometry.hpp"

namespace rfc::radar {

using Complex = std::complex<double>;

/// 77 GHz carrier.
inline constexpr double kDefaultWavelength = 299792458.0 / 77e9;

inline constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

/// Horizontal arrays lie along +y and resolve the signed steering angle
/// alpha (sin(alpha) = y / r). Vertical arrays lie along +z and resolve the
/// elevation theta (cos(theta) = z / r).
enum class ArrayOrientation { Horizontal, Vertical };

struct VirtualArrayConfig {
  double wavelength = kDefaultWavelength;
  /// Element offsets along the array axis in wavelengths, strictly increasing.
  std::vector<double> element_positions;
  ArrayOrientation orientation = ArrayOrientation::Horizontal;
  double range_resolution = 0.05;
  std::size_t n_range_bins = 256;
  std::size_t n_angle_bins = 181;
  /// Half-width of the steering grid around broadside.
  double fov_limit = std::numbers::pi / 4;
  /// Half-power half-width of the element pattern along the resolved axis.
  /// Values <= 0 give isotropic elements.
  double element_halfpower = deg2rad(70.0);

  /// `n` elements spaced `spacing` wavelengths apart.
  static VirtualArrayConfig uniform(std::size_t n, double spacing = 0.5,
                                    ArrayOrientation orientation = ArrayOrientation::Horizontal);

  void validate() const;
  std::size_t n_elements() const { return element_positions.size(); }
  double max_range() const { return static_cast<double>(n_range_bins) * range_resolution; }
  /// Steering angles of the angle bins (alpha for horizontal, theta for vertical).
  std::vector<double> angle_centers() const;
  /// Element offsets in meters relative to the array phase center.
  std::vector<double> centered_offsets_m() const;
  /// Direction cosine along the array axis for a unit direction.
  double direction_cosine(const Point3& unit_dir) const;
  /// Direction cosine produced by steering angle `angle`.
  double steering_cosine(double angle) const;
  /// Resolved angle (alpha or theta) of a radar-frame point.
  double resolved_angle(const Point3& p) const;
  /// Offset of a resolved angle from broadside.
  double broadside_offset(double angle) const;
};

/// Element power gain in dB (<= 0) at `offset` radians from broadside,
/// modelled as cos(offset)^q with q fixed by the half-power angle.
double element_gain_db(double halfpower, double offset);

struct Scatterer {
  Point3 position = Point3::Zero();
  double reflectivity = 1.0;
  std::optional<Point3> normal;
};

/// Per-element, per-range-bin complex samples; element-major storage.
struct ChannelSamples {
  std::size_t n_elements = 0;
  std::size_t n_range_bins = 0;
  std::vector<Complex> data;

  ChannelSamples() = default;
  ChannelSamples(std::size_t elements, std::size_t range_bins)
      : n_elements(elements), n_range_bins(range_bins), data(elements * range_bins) {}
  Complex& at(std::size_t m, std::size_t b) { return data[m * n_range_bins + b]; }
  const Complex& at(std::size_t m, std::size_t b) const { return data[m * n_range_bins + b]; }
};

struct SimOptions {
  /// Max angle between surface normal and line of sight for a scatterer to
  /// reflect back (specular visibility gate).
  double visibility_gate = deg2rad(45.0);
  /// Per-sample noise power is 10^(-snr_db/10), i.e. relative to the return
  /// of a unit-reflectivity scatterer at 1 m. Infinity disables noise.
  double snr_db = std::numeric_limits<double>::infinity();
};

struct ChannelResult {
  ChannelSamples samples;
  std::size_t dropped_out_of_range = 0;
  std::size_t dropped_behind = 0;
  std::size_t gated = 0;
};

/// Far-field point-scatterer channel of one virtual array at `radar_pose`.
ChannelResult simulate_channel(const VirtualArrayConfig& array, std::span<const Scatterer> scatterers,
                               const Pose& radar_pose, const SimOptions& options = {},
                               std::uint64_t noise_seed = 0);

struct Heatmap2D {
  ArrayOrientation orientation = ArrayOrientation::Horizontal;
  double range_resolution = 0.0;
  std::size_t n_range_bins = 0;
  std::size_t n_angle_bins = 0;
  std::vector<double> angle_centers;
  /// Properties of the producing array, kept for downstream defaults.
  std::size_t n_elements = 0;
  double element_halfpower = 0.0;
  /// Range-major complex grid.
  std::vector<Complex> values;

  const Complex& at(std::size_t b, std::size_t a) const { return values[b * n_angle_bins + a]; }
  Complex& at(std::size_t b, std::size_t a) { return values[b * n_angle_bins + a]; }
  double power(std::size_t b, std::size_t a) const { return std::norm(at(b, a)); }
  double range_of_bin(std::size_t b) const { return static_cast<double>(b) * range_resolution; }
  /// Index of the bin nearest to `angle`.
  std::size_t nearest_angle_bin(double angle) const;
  double total_power() const;
};

/// Conjugate-phase (delay-and-sum) beamforming over the config's steering grid.
Heatmap2D beamform(const ChannelSamples& samples, const VirtualArrayConfig& array);

struct RigConfig {
  VirtualArrayConfig horizontal = VirtualArrayConfig::uniform(86, 0.5, ArrayOrientation::Horizontal);
  VirtualArrayConfig vertical = VirtualArrayConfig::uniform(86, 0.5, ArrayOrientation::Vertical);
  SimOptions sim;

  /// Throws ConfigMismatch when the two arrays disagree on range axis or
  /// wavelength, or orientations are not horizontal/vertical.
  void validate() const;
};

struct FrameCapture {
  Heatmap2D horizontal;
  Heatmap2D vertical;
  Pose pose;
  double timestamp = 0.0;
  ChannelSamples horizontal_channels;
  ChannelSamples vertical_channels;
};

FrameCapture simulate_frame(std::span<const Scatterer> scene, const RigConfig& rig, const Pose& pose,
                            double timestamp = 0.0, std::uint64_t noise_seed = 0);

/// Coherent (SAR) backprojection of the horizontal channels of `frames` onto
/// the first frame's range/steering grid in its horizontal plane. Reported
/// positions of frames after the first are perturbed by zero-mean Gaussian
/// noise with per-axis standard deviation `position_error_rms`.
Heatmap2D sar_combine(std::span<const FrameCapture> frames, const VirtualArrayConfig& array,
                      double position_error_rms, std::uint64_t seed = 0);

/// Half-power width (radians) of the lobe around the maximum of one range row.
/// Returns NaN when the lobe touches the grid edge.
double mainlobe_width_3db(const Heatmap2D& hm, std::size_t range_bin);

/// Ratio in dB between the strongest cell inside [lo, hi] of a row and the
/// strongest cell outside it.
double peak_to_sidelobe_db(const Heatmap2D& hm, std::size_t range_bin, std::size_t lo, std::size_t hi);

/// Local maxima of one range row above `floor_fraction` of the row maximum.
std::vector<std::size_t> row_peaks(const Heatmap2D& hm, std::size_t range_bin, double floor_fraction);

// Scene files: one scatterer per line, `x y z reflectivity [nx ny nz]`.
std::vector<Scatterer> parse_scene(const std::string& text, const std::string& origin = "<scene>");
std::vector<Scatterer> load_scene(const std::filesystem::path& path);

/// Writes `<base>.bin` (float32 little-endian magnitudes, range-major) and
/// `<base>.hdr` (key=value dimensions and bin sizes).
void write_heatmap(const std::filesystem::path& base, const Heatmap2D& hm);

}  // namespace rfc::radar
