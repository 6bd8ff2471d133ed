#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "rfc/dataset.hpp"
#include "rfc/errors.hpp"
#include "rfc/experiments.hpp"
#include "rfc/io.hpp"
#include "rfc/metrics.hpp"
#include "rfc/random.hpp"
#include "rfc/temporal.hpp"
#include "rfc/train.hpp"

namespace fs = std::filesystem;
using namespace rfc;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;

  Config load() const {
    Config c = config_path.empty() ? Config{} : Config::load(config_path);
    for (const auto& kv : overrides) {
      try {
        c.set_assignment(kv);
      } catch (const Error& e) {
        throw CLI::ValidationError("--set", e.what());
      }
    }
    return c;
  }
};

void log(const std::string& msg) { std::cerr << "rfc: " << msg << "\n"; }

std::string frame_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu", i);
  return buf;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-")
    std::cout << text;
  else
    io::write_file_atomic(out, text);
}

int cmd_simulate(const Config& cfg, const fs::path& scene_path, const fs::path& traj_path, const fs::path& out) {
  const auto scene = radar::load_scene(scene_path);
  const auto traj_in = temporal::load_trajectory(traj_path);
  const auto rig = dataset::rig_from_config(cfg);
  const auto cfar = dataset::cfar_from_config(cfg);
  const auto fusion = dataset::fusion_from_config(cfg);
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  fs::create_directories(out);

  temporal::Trajectory traj;
  std::vector<std::string> files;
  std::ostringstream manifest;
  manifest << "frame,timestamp,h_detections,v_detections,points,cloud\n";
  for (std::size_t i = 0; i < traj_in.frames.size(); ++i) {
    const auto& f = traj_in.frames[i];
    const auto capture = radar::simulate_frame(scene, rig, f.pose, f.timestamp, derive_seed(seed, {i}));
    const auto fused = fusion::fuse_frame_detailed(capture, cfar, fusion);
    const std::string name = frame_name(i);
    radar::write_heatmap(out / (name + "_h"), capture.horizontal);
    radar::write_heatmap(out / (name + "_v"), capture.vertical);
    io::write_ply(out / (name + ".ply"), fused.cloud);
    manifest << i << ',' << f.timestamp << ',' << fused.stats.h_detections << ',' << fused.stats.v_detections << ','
             << fused.cloud.size() << ',' << name << ".ply\n";
    traj.frames.push_back({f.timestamp, f.pose, fused.cloud});
    files.push_back(name + ".ply");
  }
  temporal::save_trajectory(out / "trajectory.txt", traj, files);
  io::write_ply(out / "accumulated.ply", temporal::accumulate(traj));
  io::write_file_atomic(out / "manifest.csv", manifest.str());
  log("simulated " + std::to_string(traj.frames.size()) + " frames into " + out.string());
  return kOk;
}

int cmd_gen_dataset(const Config& cfg, const fs::path& mesh_dir, const fs::path& out) {
  if (!fs::is_directory(mesh_dir)) throw Error(Errc::IoError, "mesh directory not found: " + mesh_dir.string());
  std::vector<fs::path> paths;
  for (const auto& e : fs::recursive_directory_iterator(mesh_dir))
    if (e.is_regular_file() && e.path().extension() == ".obj") paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());

  std::vector<Mesh> meshes;
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& p : paths) {
    try {
      Mesh m = load_obj(p);
      std::string id = p.stem().string();
      for (int k = 2; !seen.insert(m.class_label + "/" + id).second; ++k) id = p.stem().string() + "_" + std::to_string(k);
      meshes.push_back(std::move(m));
      ids.push_back(id);
    } catch (const Error& e) {
      log(std::string("skipping mesh: ") + e.what());
    }
  }
  if (meshes.empty()) throw Error(Errc::IoError, "no usable .obj meshes under " + mesh_dir.string());

  const auto dcfg = dataset::DatasetConfig::from_config(cfg);
  const auto keys = dataset::plan(meshes, ids, dcfg);
  std::vector<dataset::ManifestEntry> manifest;
  std::size_t written = 0, skipped = 0, failed = 0;
  for (const auto& key : keys) {
    const std::string id = key.id(dcfg.per_object);
    const auto m = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), key.object_id) - ids.begin());
    if (dataset::sample_exists(out, id)) {
      ++skipped;
    } else {
      try {
        dataset::write_sample(out, id, key, dataset::make_sample(meshes[m], m, key, dcfg));
        ++written;
      } catch (const Error& e) {
        log("sample " + id + " failed: " + e.what());
        ++failed;
        continue;
      }
    }
    manifest.push_back({id, key.class_label, key.object_id, key.recipe});
  }
  if (manifest.empty()) throw Error(Errc::IoError, "no samples were produced");
  dataset::write_manifest(out, manifest);
  log("dataset: " + std::to_string(written) + " written, " + std::to_string(skipped) + " already present, " +
      std::to_string(failed) + " failed");
  return kOk;
}

struct Split {
  std::vector<dataset::ManifestEntry> entries;
  std::vector<std::size_t> train, test;
};

Split load_split(const Config& cfg, const fs::path& data) {
  Split s;
  s.entries = dataset::read_manifest(data);
  if (s.entries.empty()) throw Error(Errc::IoError, "empty manifest in " + data.string());
  std::tie(s.train, s.test) =
      net::split_indices(s.entries.size(), cfg.get_double("train.test_fraction", 0.2), cfg.get_u64("seed", 0));
  return s;
}

net::TrainSample load_train_sample(const Config& cfg, const fs::path& data, const Split& split, std::size_t i,
                                   std::size_t n_input) {
  const auto& id = split.entries[i].id;
  return dataset::to_train_sample(id, dataset::read_sample(data, id), n_input, derive_seed(cfg.get_u64("seed", 0), {i, 7}));
}

int cmd_train(const Config& cfg, const fs::path& data, const fs::path& out) {
  const auto mcfg = net::ModelConfig::from_config(cfg);
  mcfg.validate();
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  net::TrainConfig tcfg;
  tcfg.epochs = cfg.get_u64("train.epochs", tcfg.epochs);
  tcfg.batch_size = cfg.get_u64("train.batch_size", tcfg.batch_size);
  tcfg.seed = seed;
  const std::string opt = cfg.get_string("train.optimizer", "adam");
  if (opt == "sgd")
    tcfg.optimizer.kind = net::OptimizerKind::SgdMomentum;
  else if (opt != "adam")
    throw Error(Errc::InvalidArgument, "train.optimizer must be adam or sgd");
  tcfg.optimizer.lr = cfg.get_double("train.lr", tcfg.optimizer.lr);
  tcfg.optimizer.momentum = cfg.get_double("train.momentum", tcfg.optimizer.momentum);
  const std::size_t every = cfg.get_u64("train.checkpoint_every", 0);

  const Split split = load_split(cfg, data);
  const auto& members = split.train.empty() ? split.test : split.train;
  std::vector<net::TrainSample> samples;
  for (auto i : members) samples.push_back(load_train_sample(cfg, data, split, i, mcfg.n_input));

  fs::create_directories(out);
  std::ostringstream membership;
  membership << "sample_id,split\n";
  for (auto i : split.train) membership << split.entries[i].id << ",train\n";
  for (auto i : split.test) membership << split.entries[i].id << ",test\n";
  io::write_file_atomic(out / "split.csv", membership.str());

  net::Model model = net::Model::init(mcfg, derive_seed(seed, {11}));
  log("training " + std::to_string(model.n_params()) + " parameters on " + std::to_string(samples.size()) + " samples");
  auto on_epoch = [&](const net::EpochRecord& r, const net::Model& m) {
    log("epoch " + std::to_string(r.epoch) + " loss " + std::to_string(r.loss) + " acc " + std::to_string(r.accuracy));
    if (every > 0 && (r.epoch + 1) % every == 0) m.save(out / ("checkpoint_epoch_" + std::to_string(r.epoch + 1) + ".rfck"));
  };
  net::TrainHistory history;
  try {
    history = net::train(model, samples, tcfg, on_epoch, &history);
  } catch (const Error& e) {
    if (e.code() == Errc::NonFiniteLoss) {
      io::write_file_atomic(out / "history.csv", history.to_csv());
      model.save(out / "model.rfck");
    }
    throw;
  }
  io::write_file_atomic(out / "history.csv", history.to_csv());
  model.save(out / "model.rfck");
  return kOk;
}

PointCloud load_prediction(const fs::path& dir, const std::string& id) {
  for (const char* name : {"fine.rfpc", "fine.ply"})
    if (fs::exists(dir / id / name)) return io::load_cloud(dir / id / name);
  throw Error(Errc::IoError, "no prediction for " + id + " under " + dir.string());
}

int cmd_eval(const Config& cfg, const fs::path& data, const std::string& checkpoint, const std::string& predictions,
             const std::string& which, const std::string& out) {
  if (checkpoint.empty() == predictions.empty()) throw CLI::ValidationError("eval needs exactly one of --checkpoint or --predictions");
  const Split split = load_split(cfg, data);
  std::vector<std::size_t> members;
  if (which == "test")
    members = split.test;
  else if (which == "train")
    members = split.train;
  else {
    members.resize(split.entries.size());
    for (std::size_t i = 0; i < members.size(); ++i) members[i] = i;
  }
  std::optional<net::Model> model;
  if (!checkpoint.empty()) model = net::Model::load(checkpoint);
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  const std::size_t emd_points = cfg.get_u64("eval.emd_points", 1024);
  const std::size_t emd_iters = cfg.get_u64("eval.emd_iters", 10);

  std::ostringstream o;
  o.precision(10);
  o << "sample_id,cd_sq,cd_l2_cm,emd_sq,emd_l2_cm,class\n";
  std::map<std::string, std::array<double, 5>> sums;
  for (auto i : members) {
    const auto& e = split.entries[i];
    const auto s = dataset::read_sample(data, e.id);
    PointCloud fine;
    if (model) {
      const auto t = load_train_sample(cfg, data, split, i, model->config().n_input);
      fine.points = net::predict(*model, t.input).fine;
    } else {
      fine = load_prediction(predictions, e.id);
    }
    const double cd = metrics::chamfer(fine, s.complete);
    const double cd_l2 = metrics::chamfer_l1(fine, s.complete);
    const std::size_t n = std::min({emd_points, fine.size(), s.complete.size()});
    const auto sub_seed = derive_seed(seed, {i, 0xe7a1});
    const auto a = net::emd_subsample(fine.points, n, sub_seed);
    const auto b = net::emd_subsample(s.complete.points, n, sub_seed);
    const auto asg = metrics::emd_approx_assignment(a, b, emd_iters);
    const double emd = asg.cost / static_cast<double>(n);
    const double emd_l2 = metrics::mean_pair_distance(a, b, asg);
    o << e.id << ',' << cd << ',' << 100.0 * cd_l2 << ',' << emd << ',' << 100.0 * emd_l2 << ',' << e.class_label << '\n';
    for (const auto& key : {e.class_label, std::string("all")}) {
      auto& acc = sums[key];
      acc[0] += cd;
      acc[1] += 100.0 * cd_l2;
      acc[2] += emd;
      acc[3] += 100.0 * emd_l2;
      acc[4] += 1.0;
    }
  }
  for (const auto& [cls, acc] : sums)
    o << "mean," << acc[0] / acc[4] << ',' << acc[1] / acc[4] << ',' << acc[2] / acc[4] << ',' << acc[3] / acc[4] << ','
      << cls << '\n';
  emit(out, o.str());
  return kOk;
}

int cmd_reconstruct(const Config& cfg, const fs::path& checkpoint, const fs::path& input, const fs::path& out) {
  const auto model = net::Model::load(checkpoint);
  const PointCloud partial = io::load_cloud(input);
  const auto x = ad::from_points(augment::resample(partial, model.config().n_input, cfg.get_u64("seed", 0)).points);
  const auto pred = net::predict(model, x);
  fs::create_directories(out);
  PointCloud coarse, fine;
  coarse.points = pred.coarse;
  fine.points = pred.fine;
  io::write_ply(out / "coarse.ply", coarse);
  io::write_ply(out / "fine.ply", fine);
  const auto& names = dataset::class_names();
  std::cout << "class=" << (pred.predicted_class < names.size() ? names[pred.predicted_class] : "unknown") << "\n"
            << "coarse_points=" << coarse.size() << "\nfine_points=" << fine.size() << "\n";
  return kOk;
}

int exit_code(Errc c) {
  switch (c) {
    case Errc::InvalidArgument:
    case Errc::UnknownExperiment:
      return kUsage;
    case Errc::NonFiniteLoss:
    case Errc::DomainError:
    case Errc::DegenerateElevation:
      return kNumeric;
    default:
      return kData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radar point-cloud simulation, fusion and shape completion toolkit", "rfc"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("-s,--set", g.overrides, "override a config key (key=value), repeatable");

  std::string scene, trajectory, out, data, checkpoint, predictions, split = "test", input, experiment;

  auto* sim = app.add_subcommand("simulate", "simulate frames, fuse them and accumulate along a trajectory")->fallthrough();
  sim->add_option("--scene", scene, "scatterer file")->required();
  sim->add_option("--trajectory", trajectory, "pose file")->required();
  sim->add_option("-o,--out", out, "output directory")->required();

  auto* gen = app.add_subcommand("gen-dataset", "render and capture training samples from OBJ meshes")->fallthrough();
  gen->add_option("--meshes", input, "directory of .obj meshes")->required();
  gen->add_option("-o,--out", out, "dataset root")->required();

  auto* trn = app.add_subcommand("train", "train a completion model")->fallthrough();
  trn->add_option("--data", data, "dataset root")->required();
  trn->add_option("-o,--out", out, "output directory")->required();

  auto* evl = app.add_subcommand("eval", "score predictions against ground truth")->fallthrough();
  evl->add_option("--data", data, "dataset root")->required();
  evl->add_option("--checkpoint", checkpoint, "model checkpoint");
  evl->add_option("--predictions", predictions, "directory of <sample_id>/fine.{rfpc,ply}");
  evl->add_option("--split", split, "test, train or all")->check(CLI::IsMember({"test", "train", "all"}));
  evl->add_option("-o,--out", out, "CSV output (default stdout)");

  auto* rec = app.add_subcommand("reconstruct", "complete one partial cloud")->fallthrough();
  rec->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  rec->add_option("--input", input, "partial cloud (.ply or .rfpc)")->required();
  rec->add_option("-o,--out", out, "output directory")->required();

  auto* exp = app.add_subcommand("experiment", "run frames_ablation or sar_vs_fusion")->fallthrough();
  exp->add_option("name", experiment, "experiment name")->required();
  exp->add_option("-o,--out", out, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    const Config cfg = g.load();
    if (*sim) return cmd_simulate(cfg, scene, trajectory, out);
    if (*gen) return cmd_gen_dataset(cfg, input, out);
    if (*trn) return cmd_train(cfg, data, out);
    if (*evl) return cmd_eval(cfg, data, checkpoint, predictions, split, out);
    if (*rec) return cmd_reconstruct(cfg, checkpoint, input, out);
    if (*exp) {
      emit(out, experiments::run_experiment(experiment, cfg));
      return kOk;
    }
  } catch (const CLI::ValidationError& e) {
    log(e.what());
    return kUsage;
  } catch (const Error& e) {
    log(e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    log(e.what());
    return kData;
  }
  return kUsage;
}
