#include "rfc/radar.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "rfc/errors.hpp"
#include "rfc/io.hpp"
#include "rfc/random.hpp"

namespace rfc::radar {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

// Range response spans +-2 bins around the fractional bin of the target.
constexpr double kRangeSpanBins = 2.0;

}  // namespace

VirtualArrayConfig VirtualArrayConfig::uniform(std::size_t n, double spacing, ArrayOrientation orientation) {
  VirtualArrayConfig cfg;
  cfg.orientation = orientation;
  cfg.element_positions.resize(n);
  for (std::size_t i = 0; i < n; ++i) cfg.element_positions[i] = spacing * static_cast<double>(i);
  return cfg;
}

void VirtualArrayConfig::validate() const {
  if (!(wavelength > 0.0)) throw Error(Errc::InvalidArgument, "wavelength must be positive");
  if (element_positions.empty()) throw Error(Errc::InvalidArgument, "array has no elements");
  for (std::size_t i = 1; i < element_positions.size(); ++i)
    if (!(element_positions[i] > element_positions[i - 1]))
      throw Error(Errc::InvalidArgument, "element offsets must be strictly increasing");
  if (n_range_bins < 1 || n_angle_bins < 1) throw Error(Errc::InvalidArgument, "bin counts must be >= 1");
  if (!(range_resolution > 0.0)) throw Error(Errc::InvalidArgument, "range resolution must be positive");
  if (!(fov_limit > 0.0) || fov_limit > kPi / 2) throw Error(Errc::InvalidArgument, "fov_limit must be in (0, pi/2]");
}

std::vector<double> VirtualArrayConfig::angle_centers() const {
  const double center = orientation == ArrayOrientation::Horizontal ? 0.0 : kPi / 2;
  std::vector<double> out(n_angle_bins);
  if (n_angle_bins == 1) {
    out[0] = center;
    return out;
  }
  for (std::size_t k = 0; k < n_angle_bins; ++k)
    out[k] = center - fov_limit + 2.0 * fov_limit * static_cast<double>(k) / static_cast<double>(n_angle_bins - 1);
  return out;
}

std::vector<double> VirtualArrayConfig::centered_offsets_m() const {
  double mean = 0.0;
  for (double p : element_positions) mean += p;
  mean /= static_cast<double>(element_positions.size());
  std::vector<double> out;
  out.reserve(element_positions.size());
  for (double p : element_positions) out.push_back((p - mean) * wavelength);
  return out;
}

double VirtualArrayConfig::direction_cosine(const Point3& d) const {
  return orientation == ArrayOrientation::Horizontal ? d.y() : d.z();
}

double VirtualArrayConfig::steering_cosine(double angle) const {
  return orientation == ArrayOrientation::Horizontal ? std::sin(angle) : std::cos(angle);
}

double VirtualArrayConfig::resolved_angle(const Point3& p) const {
  const double r = p.norm();
  if (orientation == ArrayOrientation::Horizontal) return std::asin(std::clamp(p.y() / r, -1.0, 1.0));
  return std::acos(std::clamp(p.z() / r, -1.0, 1.0));
}

double VirtualArrayConfig::broadside_offset(double angle) const {
  return orientation == ArrayOrientation::Horizontal ? angle : angle - kPi / 2;
}

double element_gain_db(double halfpower, double offset) {
  if (halfpower <= 0.0) return 0.0;
  const double c = std::cos(offset);
  if (c <= 1e-12) return -300.0;
  const double q = std::log(0.5) / std::log(std::cos(halfpower));
  return 10.0 * q * std::log10(c);
}

ChannelResult simulate_channel(const VirtualArrayConfig& array, std::span<const Scatterer> scatterers,
                               const Pose& radar_pose, const SimOptions& options, std::uint64_t noise_seed) {
  array.validate();
  ChannelResult res;
  res.samples = ChannelSamples(array.n_elements(), array.n_range_bins);
  const auto offsets = array.centered_offsets_m();
  const double k = 2.0 * kPi / array.wavelength;
  const Pose world_to_radar = radar_pose.inverse();
  const double max_range = array.max_range();
  std::vector<Complex> element_phase(offsets.size());

  for (const auto& s : scatterers) {
    const Point3 p = world_to_radar.apply(s.position);
    const double r = p.norm();
    if (r >= max_range || r < array.range_resolution) {
      ++res.dropped_out_of_range;
      continue;
    }
    if (p.x() <= 0.0) {
      ++res.dropped_behind;
      continue;
    }
    if (s.normal) {
      const Point3 los = (radar_pose.translation() - s.position) / r;
      const double cosang = std::clamp(s.normal->normalized().dot(los), -1.0, 1.0);
      if (std::acos(cosang) > options.visibility_gate) {
        ++res.gated;
        continue;
      }
    }
    const Point3 dir = p / r;
    const double u = array.direction_cosine(dir);
    const double gain_db = element_gain_db(array.element_halfpower, array.broadside_offset(array.resolved_angle(p)));
    const double amp = s.reflectivity / (r * r) * std::pow(10.0, gain_db / 20.0);
    const Complex range_phase = std::polar(1.0, -2.0 * k * r);
    for (std::size_t m = 0; m < offsets.size(); ++m) element_phase[m] = std::polar(1.0, -k * offsets[m] * u);

    const double x = r / array.range_resolution;
    const auto b_lo = static_cast<long>(std::ceil(x - kRangeSpanBins));
    const auto b_hi = static_cast<long>(std::floor(x + kRangeSpanBins));
    for (long b = std::max(0L, b_lo); b <= std::min<long>(b_hi, static_cast<long>(array.n_range_bins) - 1); ++b) {
      const double w = sinc(static_cast<double>(b) - x);
      if (w == 0.0) continue;
      const Complex base = amp * w * range_phase;
      for (std::size_t m = 0; m < offsets.size(); ++m)
        res.samples.at(m, static_cast<std::size_t>(b)) += base * element_phase[m];
    }
  }

  if (std::isfinite(options.snr_db)) {
    Rng rng(noise_seed);
    const double sigma = std::sqrt(std::pow(10.0, -options.snr_db / 10.0) / 2.0);
    std::normal_distribution<double> nd(0.0, sigma);
    for (auto& v : res.samples.data) v += Complex(nd(rng), nd(rng));
  }
  return res;
}

std::size_t Heatmap2D::nearest_angle_bin(double angle) const {
  std::size_t best = 0;
  for (std::size_t a = 1; a < angle_centers.size(); ++a)
    if (std::abs(angle_centers[a] - angle) < std::abs(angle_centers[best] - angle)) best = a;
  return best;
}

double Heatmap2D::total_power() const {
  double s = 0.0;
  for (const auto& v : values) s += std::norm(v);
  return s;
}

Heatmap2D beamform(const ChannelSamples& samples, const VirtualArrayConfig& array) {
  array.validate();
  if (samples.n_elements != array.n_elements() || samples.n_range_bins != array.n_range_bins)
    throw Error(Errc::ShapeMismatch, "channel samples do not match the array configuration");
  Heatmap2D hm;
  hm.orientation = array.orientation;
  hm.range_resolution = array.range_resolution;
  hm.n_range_bins = array.n_range_bins;
  hm.n_angle_bins = array.n_angle_bins;
  hm.angle_centers = array.angle_centers();
  hm.n_elements = array.n_elements();
  hm.element_halfpower = array.element_halfpower;
  hm.values.assign(hm.n_range_bins * hm.n_angle_bins, Complex{});

  const auto offsets = array.centered_offsets_m();
  const double k = 2.0 * kPi / array.wavelength;
  const std::size_t n_el = offsets.size();
  Eigen::MatrixXcd steer(hm.n_angle_bins, n_el);
  for (std::size_t a = 0; a < hm.n_angle_bins; ++a) {
    const double s = array.steering_cosine(hm.angle_centers[a]);
    for (std::size_t m = 0; m < n_el; ++m) steer(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(m)) = std::polar(1.0, k * offsets[m] * s);
  }

  // Only range rows with any energy are beamformed.
  std::vector<std::size_t> rows;
  for (std::size_t b = 0; b < samples.n_range_bins; ++b) {
    for (std::size_t m = 0; m < n_el; ++m) {
      if (samples.at(m, b) != Complex{}) {
        rows.push_back(b);
        break;
      }
    }
  }
  if (rows.empty()) return hm;
  Eigen::MatrixXcd s(n_el, rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (std::size_t m = 0; m < n_el; ++m) s(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) = samples.at(m, rows[j]);
  const Eigen::MatrixXcd out = steer * s;
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (std::size_t a = 0; a < hm.n_angle_bins; ++a) hm.at(rows[j], a) = out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j));
  return hm;
}

void RigConfig::validate() const {
  horizontal.validate();
  vertical.validate();
  if (horizontal.orientation != ArrayOrientation::Horizontal || vertical.orientation != ArrayOrientation::Vertical)
    throw Error(Errc::ConfigMismatch, "rig needs one horizontal and one vertical array");
  if (horizontal.n_range_bins != vertical.n_range_bins ||
      std::abs(horizontal.range_resolution - vertical.range_resolution) > 1e-12)
    throw Error(Errc::ConfigMismatch, "horizontal and vertical range axes differ");
  if (std::abs(horizontal.wavelength - vertical.wavelength) > 1e-15)
    throw Error(Errc::ConfigMismatch, "horizontal and vertical wavelengths differ");
}

FrameCapture simulate_frame(std::span<const Scatterer> scene, const RigConfig& rig, const Pose& pose,
                            double timestamp, std::uint64_t noise_seed) {
  rig.validate();
  FrameCapture f;
  f.pose = pose;
  f.timestamp = timestamp;
  auto h = simulate_channel(rig.horizontal, scene, pose, rig.sim, derive_seed(noise_seed, {0}));
  auto v = simulate_channel(rig.vertical, scene, pose, rig.sim, derive_seed(noise_seed, {1}));
  f.horizontal = beamform(h.samples, rig.horizontal);
  f.vertical = beamform(v.samples, rig.vertical);
  f.horizontal_channels = std::move(h.samples);
  f.vertical_channels = std::move(v.samples);
  return f;
}

Heatmap2D sar_combine(std::span<const FrameCapture> frames, const VirtualArrayConfig& array,
                      double position_error_rms, std::uint64_t seed) {
  array.validate();
  if (frames.empty()) throw Error(Errc::InvalidArgument, "sar_combine needs at least one frame");
  if (array.orientation != ArrayOrientation::Horizontal)
    throw Error(Errc::InvalidArgument, "sar_combine operates on the horizontal array");
  for (const auto& f : frames)
    if (f.horizontal_channels.n_elements != array.n_elements() || f.horizontal_channels.n_range_bins != array.n_range_bins)
      throw Error(Errc::ShapeMismatch, "frame channels do not match the array configuration");

  // Reported poses; the first frame defines the reference and is exact.
  std::vector<Pose> reported;
  reported.reserve(frames.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    Point3 t = frames[i].pose.translation();
    if (i > 0)
      for (int c = 0; c < 3; ++c) t[c] += gaussian(rng, position_error_rms);
    reported.emplace_back(t, frames[i].pose.rotation());
  }

  Heatmap2D hm;
  hm.orientation = ArrayOrientation::Horizontal;
  hm.range_resolution = array.range_resolution;
  hm.n_range_bins = array.n_range_bins;
  hm.n_angle_bins = array.n_angle_bins;
  hm.angle_centers = array.angle_centers();
  hm.n_elements = array.n_elements();
  hm.element_halfpower = array.element_halfpower;
  hm.values.assign(hm.n_range_bins * hm.n_angle_bins, Complex{});

  const auto offsets = array.centered_offsets_m();
  const double k = 2.0 * kPi / array.wavelength;
  const std::size_t n_el = offsets.size();
  std::vector<Pose> to_frame;
  for (const auto& p : reported) to_frame.push_back(p.inverse() * reported.front());

  std::vector<Complex> interp(n_el);
  for (std::size_t b = 0; b < hm.n_range_bins; ++b) {
    const double r = hm.range_of_bin(b);
    for (std::size_t a = 0; a < hm.n_angle_bins; ++a) {
      const double alpha = hm.angle_centers[a];
      const Point3 local(r * std::cos(alpha), r * std::sin(alpha), 0.0);
      Complex acc{};
      for (std::size_t f = 0; f < frames.size(); ++f) {
        const Point3 pf = to_frame[f].apply(local);
        const double rf = pf.norm();
        if (rf <= 0.0) continue;
        const double x = rf / array.range_resolution;
        const auto b0 = static_cast<long>(std::floor(x));
        const double w = x - static_cast<double>(b0);
        const auto& ch = frames[f].horizontal_channels;
        bool any = false;
        for (std::size_t m = 0; m < n_el; ++m) {
          Complex v{};
          if (b0 >= 0 && b0 < static_cast<long>(ch.n_range_bins)) v += (1.0 - w) * ch.at(m, static_cast<std::size_t>(b0));
          if (b0 + 1 >= 0 && b0 + 1 < static_cast<long>(ch.n_range_bins) && w > 0.0)
            v += w * ch.at(m, static_cast<std::size_t>(b0 + 1));
          interp[m] = v;
          any = any || v != Complex{};
        }
        if (!any) continue;
        const double u = array.direction_cosine(pf / rf);
        Complex sum{};
        for (std::size_t m = 0; m < n_el; ++m) sum += interp[m] * std::polar(1.0, k * offsets[m] * u);
        acc += sum * std::polar(1.0, 2.0 * k * (rf - r));
      }
      hm.at(b, a) = acc;
    }
  }
  return hm;
}

double mainlobe_width_3db(const Heatmap2D& hm, std::size_t b) {
  const std::size_t n = hm.n_angle_bins;
  std::size_t peak = 0;
  for (std::size_t a = 1; a < n; ++a)
    if (hm.power(b, a) > hm.power(b, peak)) peak = a;
  const double half = hm.power(b, peak) / 2.0;
  if (!(half > 0.0)) return std::nan("");
  auto crossing = [&](std::size_t inside, std::size_t outside) {
    const double p_in = hm.power(b, inside), p_out = hm.power(b, outside);
    const double t = (p_in - half) / (p_in - p_out);
    return hm.angle_centers[inside] + t * (hm.angle_centers[outside] - hm.angle_centers[inside]);
  };
  std::size_t l = peak;
  while (l > 0 && hm.power(b, l - 1) >= half) --l;
  if (l == 0) return std::nan("");
  std::size_t r = peak;
  while (r + 1 < n && hm.power(b, r + 1) >= half) ++r;
  if (r + 1 == n) return std::nan("");
  return std::abs(crossing(r, r + 1) - crossing(l, l - 1));
}

double peak_to_sidelobe_db(const Heatmap2D& hm, std::size_t b, std::size_t lo, std::size_t hi) {
  double in = 0.0, out = 0.0;
  for (std::size_t a = 0; a < hm.n_angle_bins; ++a) {
    const double p = hm.power(b, a);
    if (a >= lo && a <= hi)
      in = std::max(in, p);
    else
      out = std::max(out, p);
  }
  return 10.0 * std::log10(in / out);
}

std::vector<std::size_t> row_peaks(const Heatmap2D& hm, std::size_t b, double floor_fraction) {
  double mx = 0.0;
  for (std::size_t a = 0; a < hm.n_angle_bins; ++a) mx = std::max(mx, hm.power(b, a));
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < hm.n_angle_bins; ++a) {
    const double p = hm.power(b, a);
    if (p < floor_fraction * mx || p <= 0.0) continue;
    const bool left = a == 0 || p > hm.power(b, a - 1);
    const bool right = a + 1 == hm.n_angle_bins || p >= hm.power(b, a + 1);
    if (left && right) out.push_back(a);
  }
  return out;
}

std::vector<Scatterer> parse_scene(const std::string& text, const std::string& origin) {
  std::vector<Scatterer> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<double> v;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t pos = 0;
        v.push_back(std::stod(tok, &pos));
        if (pos != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error(Errc::ParseError, origin + ":" + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
    }
    if (v.empty()) continue;
    if (v.size() != 4 && v.size() != 7)
      throw Error(Errc::ParseError, origin + ":" + std::to_string(lineno) +
                                        ": expected 'x y z reflectivity [nx ny nz]', got " + std::to_string(v.size()) + " fields");
    Scatterer s;
    s.position = Point3(v[0], v[1], v[2]);
    s.reflectivity = v[3];
    if (s.reflectivity < 0.0 || !s.position.allFinite())
      throw Error(Errc::ParseError, origin + ":" + std::to_string(lineno) + ": invalid scatterer");
    if (v.size() == 7) {
      const Point3 n(v[4], v[5], v[6]);
      if (std::abs(n.norm() - 1.0) > 1e-6)
        throw Error(Errc::ParseError, origin + ":" + std::to_string(lineno) + ": normal is not unit length");
      s.normal = n;
    }
    out.push_back(s);
  }
  return out;
}

std::vector<Scatterer> load_scene(const std::filesystem::path& path) {
  return parse_scene(io::read_file(path), path.string());
}

void write_heatmap(const std::filesystem::path& base, const Heatmap2D& hm) {
  std::string bin;
  bin.reserve(hm.values.size() * 4);
  for (const auto& v : hm.values) io::put_f32(bin, static_cast<float>(std::abs(v)));
  std::ostringstream hdr;
  hdr.precision(12);
  hdr << "orientation=" << (hm.orientation == ArrayOrientation::Horizontal ? "horizontal" : "vertical") << "\n"
      << "n_range_bins=" << hm.n_range_bins << "\n"
      << "n_angle_bins=" << hm.n_angle_bins << "\n"
      << "range_resolution=" << hm.range_resolution << "\n"
      << "angle_min=" << (hm.angle_centers.empty() ? 0.0 : hm.angle_centers.front()) << "\n"
      << "angle_max=" << (hm.angle_centers.empty() ? 0.0 : hm.angle_centers.back()) << "\n"
      << "dtype=float32_le_magnitude\nlayout=range_major\n";
  auto bin_path = base;
  bin_path += ".bin";
  auto hdr_path = base;
  hdr_path += ".hdr";
  io::write_file_atomic(bin_path, bin);
  io::write_file_atomic(hdr_path, hdr.str());
}

}  // namespace rfc::radar
