#include "rfc/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rfc/errors.hpp"
#include "rfc/random.hpp"

namespace rfc::net {

void Optimizer::step(Model& model) {
  ++t_;
  for (const auto& [name, p] : model.params()) {
    if (p->grad.size() == 0) continue;
    if (cfg_.kind == OptimizerKind::SgdMomentum) {
      auto& vel = m_[name];
      if (vel.size() == 0) vel = Mat::Zero(p->rows(), p->cols());
      vel = cfg_.momentum * vel + p->grad;
      p->value -= cfg_.lr * vel;
      continue;
    }
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.size() == 0) {
      m = Mat::Zero(p->rows(), p->cols());
      v = Mat::Zero(p->rows(), p->cols());
    }
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * p->grad;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * p->grad.cwiseProduct(p->grad);
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    p->value.array() -= cfg_.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.eps);
  }
}

std::string TrainHistory::to_csv() const {
  std::ostringstream o;
  o.precision(10);
  o << "epoch,loss,emd,cd,ce,accuracy\n";
  for (const auto& e : epochs)
    o << e.epoch << ',' << e.loss << ',' << e.emd << ',' << e.cd << ',' << e.ce << ',' << e.accuracy << '\n';
  return o.str();
}

std::vector<Point3> emd_subsample(const std::vector<Point3>& target, std::size_t n, std::uint64_t seed) {
  if (target.size() < n) throw Error(Errc::ShapeMismatch, "target has fewer points than the coarse output");
  if (target.size() == n) return target;
  std::vector<std::size_t> idx(target.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<Point3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(target[idx[i]]);
  return out;
}

namespace {

std::size_t argmax(const Mat& row) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < row.cols(); ++j)
    if (row(0, j) > row(0, best)) best = j;
  return static_cast<std::size_t>(best);
}

bool grads_finite(const Model& m) {
  for (const auto& [name, p] : m.params())
    if (p->grad.size() != 0 && !p->grad.allFinite()) return false;
  return true;
}

}  // namespace

TrainHistory train(Model& model, const std::vector<TrainSample>& data, const TrainConfig& cfg,
                   const EpochCallback& on_epoch, TrainHistory* partial) {
  if (data.empty()) throw Error(Errc::InvalidArgument, "training set is empty");
  if (cfg.batch_size == 0) throw Error(Errc::InvalidArgument, "batch_size must be positive");
  const auto& mc = model.config();
  for (const auto& s : data) {
    if (s.input.cols() != 3 || s.input.rows() == 0) throw Error(Errc::ShapeMismatch, "sample '" + s.id + "' input is not n x 3");
    if (s.target.size() < mc.n_coarse) throw Error(Errc::ShapeMismatch, "sample '" + s.id + "' target is too small");
  }

  TrainHistory local;
  TrainHistory& hist = partial ? *partial : local;
  Optimizer opt(cfg.optimizer);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, {epoch, 0x5u}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const double alpha = mc.alpha_at(epoch);
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t correct = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      std::map<std::string, Mat> snapshot;
      for (const auto& [name, p] : model.params()) snapshot[name] = p->value;
      model.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const auto& s = data[i];
        const auto out = model.forward(s.input);
        const auto emd_target = emd_subsample(s.target, mc.n_coarse, derive_seed(cfg.seed, {epoch, i, 0xe3du}));
        const auto terms = model.loss(out, s.target, emd_target, s.label, alpha);
        const double l = terms.total->scalar();
        if (!std::isfinite(l)) {
          for (auto& [name, p] : model.params()) p->value = snapshot.at(name);
          model.zero_grad();
          throw Error(Errc::NonFiniteLoss, "non-finite loss at epoch " + std::to_string(epoch) + " on sample '" + s.id + "'");
        }
        ad::backward(ad::scale(terms.total, inv_b));
        batch_loss += l * inv_b;
        rec.loss += l;
        rec.emd += terms.emd;
        rec.cd += terms.cd;
        rec.ce += terms.ce;
        if (argmax(out.logits->value) == s.label) ++correct;
      }
      if (!grads_finite(model)) {
        for (auto& [name, p] : model.params()) p->value = snapshot.at(name);
        model.zero_grad();
        throw Error(Errc::NonFiniteLoss, "non-finite gradient at epoch " + std::to_string(epoch));
      }
      opt.step(model);
      hist.step_losses.push_back(batch_loss);
    }
    const double n = static_cast<double>(data.size());
    rec.loss /= n;
    rec.emd /= n;
    rec.cd /= n;
    rec.ce /= n;
    rec.accuracy = static_cast<double>(correct) / n;
    hist.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec, model);
  }
  model.zero_grad();
  return hist;
}

Prediction predict(const Model& model, const Mat& input) {
  const auto out = model.forward(input);
  Prediction p;
  p.coarse = ad::to_points(out.coarse->value);
  p.fine = ad::to_points(out.fine->value);
  p.predicted_class = argmax(out.logits->value);
  return p;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double test_fraction,
                                                                            std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction > 1.0) throw Error(Errc::InvalidArgument, "test_fraction must be in [0, 1]");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, {0x5b1u}));
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<long>(n_test));
  std::vector<std::size_t> tr(idx.begin() + static_cast<long>(n_test), idx.end());
  std::sort(test.begin(), test.end());
  std::sort(tr.begin(), tr.end());
  return {tr, test};
}

}  // namespace rfc::net
