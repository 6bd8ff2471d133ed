#include "rfc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rfc/errors.hpp"
#include "rfc/io.hpp"
#include "rfc/random.hpp"
#include "rfc/temporal.hpp"

namespace rfc::dataset {

namespace fs = std::filesystem;

std::string to_string(Recipe r) { return r == Recipe::Synthetic ? "synthetic" : "radar"; }

Recipe parse_recipe(const std::string& s) {
  if (s == "synthetic") return Recipe::Synthetic;
  if (s == "radar") return Recipe::Radar;
  throw Error(Errc::ParseError, "unknown recipe '" + s + "'");
}

radar::RigConfig rig_from_config(const Config& c) {
  radar::RigConfig rig;
  const auto n = c.get_u64("radar.n_elements", 86);
  const double spacing = c.get_double("radar.spacing", 0.5);
  rig.horizontal = radar::VirtualArrayConfig::uniform(c.get_u64("radar.h_elements", n), spacing, radar::ArrayOrientation::Horizontal);
  rig.vertical = radar::VirtualArrayConfig::uniform(c.get_u64("radar.v_elements", n), spacing, radar::ArrayOrientation::Vertical);
  for (auto* a : {&rig.horizontal, &rig.vertical}) {
    a->wavelength = c.get_double("radar.wavelength", a->wavelength);
    a->range_resolution = c.get_double("radar.range_resolution", a->range_resolution);
    a->n_range_bins = c.get_u64("radar.n_range_bins", a->n_range_bins);
    a->n_angle_bins = c.get_u64("radar.n_angle_bins", a->n_angle_bins);
    a->fov_limit = radar::deg2rad(c.get_double("radar.fov_deg", radar::rad2deg(a->fov_limit)));
    a->element_halfpower = radar::deg2rad(c.get_double("radar.element_halfpower_deg", radar::rad2deg(a->element_halfpower)));
  }
  rig.sim.snr_db = c.get_double("radar.snr_db", rig.sim.snr_db);
  rig.sim.visibility_gate = radar::deg2rad(c.get_double("radar.visibility_gate_deg", radar::rad2deg(rig.sim.visibility_gate)));
  rig.validate();
  return rig;
}

detect::CfarConfig cfar_from_config(const Config& c) {
  detect::CfarConfig cfg;
  const std::string v = c.get_string("cfar.variant", "ca");
  if (v == "ca" || v == "CA") cfg.variant = detect::CfarVariant::CA;
  else if (v == "os" || v == "OS") cfg.variant = detect::CfarVariant::OS;
  else throw Error(Errc::ParseError, "cfar.variant must be ca or os, got '" + v + "'");
  cfg.guard_cells = c.get_u64("cfar.guard_cells", cfg.guard_cells);
  cfg.training_cells = c.get_u64("cfar.training_cells", cfg.training_cells);
  cfg.p_fa = c.get_double("cfar.p_fa", cfg.p_fa);
  cfg.os_rank = c.get_double("cfar.os_rank", cfg.os_rank);
  cfg.validate();
  return cfg;
}

fusion::FusionConfig fusion_from_config(const Config& c) {
  fusion::FusionConfig f;
  f.power_discrepancy_db = c.get_double("fusion.power_discrepancy_db", f.power_discrepancy_db);
  f.fov_limit = radar::deg2rad(c.get_double("fusion.fov_deg", radar::rad2deg(f.fov_limit)));
  f.min_height = c.get_double("fusion.min_height", f.min_height);
  f.max_height = c.get_double("fusion.max_height", f.max_height);
  f.mount_height = c.get_double("fusion.mount_height", f.mount_height);
  f.range_bin_tolerance = c.get_u64("fusion.range_bin_tolerance", f.range_bin_tolerance);
  f.nms_radius = c.get_u64("fusion.nms_radius", f.nms_radius);
  f.nms_range_radius = c.get_u64("fusion.nms_range_radius", f.nms_range_radius);
  f.validate();
  return f;
}

DatasetConfig DatasetConfig::from_config(const Config& c) {
  DatasetConfig d;
  d.seed = c.get_u64("seed", d.seed);
  d.per_object = c.get_u64("dataset.per_object", d.per_object);
  d.synthetic = c.get_bool("dataset.synthetic", d.synthetic);
  d.radar = c.get_bool("dataset.radar", d.radar);
  d.complete_points = c.get_u64("dataset.complete_points", d.complete_points);
  d.partial_points = c.get_u64("dataset.partial_points", d.partial_points);
  d.render.width = c.get_u64("augment.render_width", d.render.width);
  d.render.height = c.get_u64("augment.render_height", d.render.height);
  d.jitter.points_per_source = c.get_u64("augment.jitter_points", d.jitter.points_per_source);
  d.jitter.max_radius = c.get_double("augment.jitter_radius", d.jitter.max_radius);
  d.crop.n_spheres = c.get_u64("augment.crop_spheres", d.crop.n_spheres);
  d.crop.radius_min = c.get_double("augment.crop_radius_min", d.crop.radius_min);
  d.crop.radius_max = c.get_double("augment.crop_radius_max", d.crop.radius_max);
  d.view_distance_min = c.get_double("augment.view_distance_min", d.view_distance_min);
  d.view_distance_max = c.get_double("augment.view_distance_max", d.view_distance_max);
  d.mode = augment::parse_normalization_mode(
      c.get_string("augment.normalization_mode", c.get_string("normalization_mode", "with_bbox")));
  auto& r = d.radar_recipe;
  r.rig = rig_from_config(c);
  r.cfar = cfar_from_config(c);
  r.fusion = fusion_from_config(c);
  r.n_scatterers = c.get_u64("dataset.radar_scatterers", r.n_scatterers);
  r.n_frames = c.get_u64("dataset.radar_frames", r.n_frames);
  r.path_length = c.get_double("dataset.radar_path_length", r.path_length);
  r.standoff = c.get_double("dataset.radar_standoff", r.standoff);
  if (d.per_object == 0) throw Error(Errc::InvalidArgument, "dataset.per_object must be positive");
  if (!(d.view_distance_min > 1.0) || d.view_distance_max < d.view_distance_min)
    throw Error(Errc::InvalidArgument, "view distances must satisfy 1 < min <= max");
  return d;
}

std::string SampleKey::id(std::size_t per_object) const {
  const std::size_t k = recipe == Recipe::Synthetic ? index : per_object + index;
  return class_label + "/" + object_id + "/sample_" + std::to_string(k);
}

namespace {

double bounding_radius(const Mesh& m, const Point3& center) {
  double r = 0.0;
  for (const auto& v : m.vertices) r = std::max(r, (v - center).norm());
  return r;
}

// Object placed on the ground (z = 0) with a random yaw about its bbox centre.
Mesh pose_on_ground(const Mesh& mesh, double yaw, const Point3& xy_center) {
  const Aabb box = bounding_box(mesh.vertices);
  const Point3 c = box.center();
  Mesh centered = transform_mesh(mesh, Pose::from_translation(Point3(-c.x(), -c.y(), -box.min.z())));
  return transform_mesh(centered, Pose::from_yaw(yaw, Point3(xy_center.x(), xy_center.y(), 0.0)));
}

}  // namespace

PointCloud radar_capture(const Mesh& posed, const RadarRecipe& recipe, std::uint64_t seed) {
  if (recipe.n_frames == 0) throw Error(Errc::InvalidArgument, "radar recipe needs at least one frame");
  const auto surface = sample_surface_with_normals(posed, recipe.n_scatterers, derive_seed(seed, {1}));
  std::vector<radar::Scatterer> scene;
  scene.reserve(surface.size());
  for (const auto& s : surface) scene.push_back({s.position, 1.0, s.normal});

  const double h = recipe.fusion.mount_height;
  const double spacing = recipe.n_frames > 1 ? recipe.path_length / static_cast<double>(recipe.n_frames - 1) : 0.0;
  const Pose start = Pose::from_translation(Point3(0.0, -0.5 * recipe.path_length, h));
  const auto poses = temporal::straight_line(start, Point3::UnitY(), spacing, recipe.n_frames);

  temporal::Trajectory traj;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const auto frame = radar::simulate_frame(scene, recipe.rig, poses[i], static_cast<double>(i) / traj.frame_rate,
                                             derive_seed(seed, {2, i}));
    traj.frames.push_back({frame.timestamp, poses[i], fusion::fuse_frame(frame, recipe.cfar, recipe.fusion)});
  }
  return transform_cloud(temporal::accumulate(traj), poses.front());
}

augment::TrainingSample make_sample(const Mesh& mesh, std::size_t mesh_index, const SampleKey& key,
                                    const DatasetConfig& cfg) {
  const std::uint64_t seed =
      derive_seed(cfg.seed, {mesh_index, key.recipe == Recipe::Synthetic ? 0u : 1u, key.index});
  Rng rng(seed);
  const double yaw = uniform(rng, 0.0, 2.0 * std::numbers::pi);

  augment::TrainingSample s;
  s.class_label = key.class_label;
  Mesh posed;
  if (key.recipe == Recipe::Synthetic) {
    posed = pose_on_ground(mesh, yaw, Point3::Zero());
    const Point3 center = bounding_box(posed.vertices).center();
    const double radius = bounding_radius(posed, center);
    const double dist = radius * uniform(rng, cfg.view_distance_min, cfg.view_distance_max);
    const double az = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double el = uniform(rng, 0.0, radar::deg2rad(30.0));
    const Point3 eye = center + dist * Point3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    auto partial = augment::render_partial(posed, augment::look_at(eye, center), cfg.partial_points,
                                           derive_seed(seed, {1}), cfg.render);
    partial = augment::jitter_noise(partial, cfg.jitter.points_per_source, cfg.jitter.max_radius, derive_seed(seed, {2}));
    s.partial = augment::specularity_crop(partial, cfg.crop.n_spheres, cfg.crop.radius_min, cfg.crop.radius_max,
                                          derive_seed(seed, {3}));
  } else {
    posed = pose_on_ground(mesh, yaw, Point3(cfg.radar_recipe.standoff, 0.0, 0.0));
    s.partial = radar_capture(posed, cfg.radar_recipe, derive_seed(seed, {4}));
    if (s.partial.empty()) throw Error(Errc::NoVisibleSurface, "radar pipeline produced no points");
  }
  s.complete = sample_surface_uniform(posed, cfg.complete_points, derive_seed(seed, {5}));
  return augment::normalize(std::move(s), cfg.mode);
}

std::vector<SampleKey> plan(const std::vector<Mesh>& meshes, const std::vector<std::string>& object_ids,
                            const DatasetConfig& cfg) {
  if (meshes.size() != object_ids.size()) throw Error(Errc::SizeMismatch, "one object id per mesh required");
  std::vector<SampleKey> keys;
  for (std::size_t m = 0; m < meshes.size(); ++m) {
    for (auto recipe : {Recipe::Synthetic, Recipe::Radar}) {
      if (recipe == Recipe::Synthetic && !cfg.synthetic) continue;
      if (recipe == Recipe::Radar && !cfg.radar) continue;
      for (std::size_t k = 0; k < cfg.per_object; ++k) keys.push_back({meshes[m].class_label, object_ids[m], recipe, k});
    }
  }
  return keys;
}

DatasetResult make_dataset(const std::vector<Mesh>& meshes, const std::vector<std::string>& object_ids,
                           const DatasetConfig& cfg) {
  DatasetResult res;
  const auto keys = plan(meshes, object_ids, cfg);
  for (const auto& key : keys) {
    const auto m = static_cast<std::size_t>(std::find(object_ids.begin(), object_ids.end(), key.object_id) - object_ids.begin());
    const std::string id = key.id(cfg.per_object);
    try {
      res.samples.push_back({key, id, make_sample(meshes[m], m, key, cfg)});
    } catch (const Error& e) {
      res.failures.push_back(id + ": " + e.what());
    }
  }
  return res;
}

void write_sample(const fs::path& root, const std::string& id, const SampleKey& key, const augment::TrainingSample& s) {
  const fs::path dir = root / id;
  fs::create_directories(dir);
  io::write_rfpc(dir / "partial.rfpc", s.partial);
  io::write_rfpc(dir / "complete.rfpc", s.complete);
  std::ostringstream meta;
  meta.precision(17);
  const auto& n = s.transform;
  meta << "class=" << s.class_label << "\n"
       << "object_id=" << key.object_id << "\n"
       << "recipe=" << to_string(key.recipe) << "\n"
       << "index=" << key.index << "\n"
       << "mode=" << augment::to_string(s.mode) << "\n"
       << "normalized=" << (s.normalized ? 1 : 0) << "\n"
       << "center_x=" << n.center.x() << "\ncenter_y=" << n.center.y() << "\ncenter_z=" << n.center.z() << "\n"
       << "scale=" << n.scale << "\n"
       << "bbox_min_x=" << s.bbox.min.x() << "\nbbox_min_y=" << s.bbox.min.y() << "\nbbox_min_z=" << s.bbox.min.z() << "\n"
       << "bbox_max_x=" << s.bbox.max.x() << "\nbbox_max_y=" << s.bbox.max.y() << "\nbbox_max_z=" << s.bbox.max.z() << "\n";
  // Written last: its presence marks the sample as complete.
  io::write_file_atomic(dir / "meta.txt", meta.str());
}

bool sample_exists(const fs::path& root, const std::string& id) { return fs::exists(root / id / "meta.txt"); }

augment::TrainingSample read_sample(const fs::path& root, const std::string& id) {
  const fs::path dir = root / id;
  const Config meta = Config::load(dir / "meta.txt");
  augment::TrainingSample s;
  s.partial = io::read_rfpc(dir / "partial.rfpc");
  s.complete = io::read_rfpc(dir / "complete.rfpc");
  s.class_label = meta.get_string("class", "");
  s.mode = augment::parse_normalization_mode(meta.get_string("mode", "with_bbox"));
  s.normalized = meta.get_bool("normalized", true);
  s.transform.center = {meta.get_double("center_x", 0), meta.get_double("center_y", 0), meta.get_double("center_z", 0)};
  s.transform.scale = meta.get_double("scale", 1.0);
  s.bbox.min = {meta.get_double("bbox_min_x", 0), meta.get_double("bbox_min_y", 0), meta.get_double("bbox_min_z", 0)};
  s.bbox.max = {meta.get_double("bbox_max_x", 0), meta.get_double("bbox_max_y", 0), meta.get_double("bbox_max_z", 0)};
  return s;
}

void write_manifest(const fs::path& root, const std::vector<ManifestEntry>& entries) {
  std::string out = "sample_id,class,object_id,recipe\n";
  for (const auto& e : entries) out += e.id + "," + e.class_label + "," + e.object_id + "," + to_string(e.recipe) + "\n";
  io::write_file_atomic(root / "manifest.csv", out);
}

std::vector<ManifestEntry> read_manifest(const fs::path& root) {
  const std::string text = io::read_file(root / "manifest.csv");
  std::istringstream in(text);
  std::string line;
  std::vector<ManifestEntry> out;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) f.push_back(tok);
    if (f.size() != 4) throw Error(Errc::ParseError, (root / "manifest.csv").string() + ":" + std::to_string(lineno) + ": expected 4 fields");
    out.push_back({f[0], f[1], f[2], parse_recipe(f[3])});
  }
  return out;
}

const std::vector<std::string>& class_names() {
  static const std::vector<std::string> names = {"car", "bike", "human"};
  return names;
}

std::size_t class_index(const std::string& name) {
  const auto& names = class_names();
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(Errc::InvalidArgument, "unknown class '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

net::TrainSample to_train_sample(const std::string& id, const augment::TrainingSample& s, std::size_t n_input,
                                 std::uint64_t seed) {
  net::TrainSample t;
  t.id = id;
  t.input = ad::from_points(augment::resample(s.partial, n_input, seed).points);
  t.target = s.complete.points;
  t.label = class_index(s.class_label);
  return t;
}

}  // namespace rfc::dataset
