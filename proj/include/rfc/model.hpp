#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rfc/autodiff.hpp"
#include "rfc/config.hpp"
#include "rfc/geometry.hpp"

namespace rfc::net {

using ad::Mat;
using ad::Var;

struct ModelConfig {
  std::size_t n_input = 2048;
  std::vector<std::size_t> mlp1 = {128, 256};
  std::vector<std::size_t> mlp2 = {512, 1024};
  std::vector<std::size_t> classifier_hidden = {256};
  std::vector<std::size_t> coarse_hidden = {1024, 1024};
  std::vector<std::size_t> folding_hidden = {512, 512};
  std::size_t n_coarse = 1024;
  std::size_t u = 4;
  std::size_t n_classes = 3;
  double grid_delta = 0.05;
  double alpha = 1.0;
  double beta = 0.1;
  /// Epochs over which alpha ramps 0.01 -> 0.1 -> 0.5 -> alpha; 0 disables the ramp.
  std::size_t alpha_warmup_epochs = 0;
  std::size_t emd_iters = 10;

  void validate() const;
  std::size_t n_fine() const { return n_coarse * u * u; }
  std::size_t feat_dim() const { return mlp2.back(); }
  /// Alpha in effect during `epoch` (0-based).
  double alpha_at(std::size_t epoch) const;

  std::string to_text() const;
  static ModelConfig from_config(const Config& cfg, const std::string& prefix = "model.");
};

/// Small configuration used by the unit and acceptance tests.
ModelConfig toy_config();

struct ForwardOutputs {
  Var f1, g1, f2, g2;
  Var logits;
  Var coarse;
  Var fine;
  std::vector<std::size_t> local_index;
};

struct LossTerms {
  Var total;
  double emd = 0.0;
  double cd = 0.0;
  double ce = 0.0;
};

class Model {
 public:
  explicit Model(ModelConfig cfg);
  /// Random initialisation (Glorot uniform weights, zero biases).
  static Model init(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  /// Parameters by name, in a fixed order.
  const std::map<std::string, Var>& params() const { return params_; }
  Var& param(const std::string& name);
  std::size_t n_params() const;

  ForwardOutputs forward(const Mat& x) const;
  ForwardOutputs encode(const Mat& x) const;
  Var classify(const Var& g2) const;
  /// Fills coarse/fine/local_index of `out`.
  void decode(ForwardOutputs& out, const Mat& x) const;

  /// Total = EMD(coarse, emd_target) + alpha * CD(fine, target) + beta * CE.
  /// `emd_target` must hold n_coarse points.
  LossTerms loss(const ForwardOutputs& out, const std::vector<Point3>& target, const std::vector<Point3>& emd_target,
                 std::size_t label, double alpha) const;

  void zero_grad();

  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);
  std::string encode_checkpoint() const;
  static Model decode_checkpoint(const std::string& bytes);

 private:
  void add_param(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  Var mlp(Var x, const std::string& prefix, std::size_t layers) const;

  ModelConfig cfg_;
  std::map<std::string, Var> params_;
};

/// u x u grid over [-delta, delta]^2, row-major.
Mat folding_grid(std::size_t u, double delta);

/// Index of the nearest row of `points` (n x 3) for each query; ties go to the lowest index.
std::vector<std::size_t> nearest_rows(const Mat& queries, const Mat& points);

}  // namespace rfc::net
