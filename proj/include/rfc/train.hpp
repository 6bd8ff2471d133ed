#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rfc/model.hpp"

namespace rfc::net {

struct TrainSample {
  std::string id;
  /// n_input x 3 network input.
  Mat input;
  /// Completion target (the full ground-truth cloud).
  std::vector<Point3> target;
  std::size_t label = 0;
};

enum class OptimizerKind { Adam, SgdMomentum };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}
  /// Updates every parameter from its accumulated gradient.
  void step(Model& model);

 private:
  OptimizerConfig cfg_;
  std::size_t t_ = 0;
  std::map<std::string, Mat> m_, v_;
};

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  OptimizerConfig optimizer;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double emd = 0.0;
  double cd = 0.0;
  double ce = 0.0;
  double accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  /// Mean batch loss of every optimizer step, measured before the update.
  std::vector<double> step_losses;

  std::string to_csv() const;
};

using EpochCallback = std::function<void(const EpochRecord&, const Model&)>;

/// Mini-batch training, deterministic for a given seed. On a non-finite loss
/// or gradient the parameters are restored to the last good step and
/// NonFiniteLoss is thrown; `history` keeps what was recorded so far.
TrainHistory train(Model& model, const std::vector<TrainSample>& data, const TrainConfig& cfg,
                   const EpochCallback& on_epoch = {}, TrainHistory* partial = nullptr);

/// Uniform subsample of `target` with n points, used as the coarse EMD target.
std::vector<Point3> emd_subsample(const std::vector<Point3>& target, std::size_t n, std::uint64_t seed);

struct Prediction {
  std::vector<Point3> coarse;
  std::vector<Point3> fine;
  std::size_t predicted_class = 0;
};

Prediction predict(const Model& model, const Mat& input);

/// Deterministic train/test split of `n` items; returns (train, test) indices.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double test_fraction,
                                                                            std::uint64_t seed);

}  // namespace rfc::net
