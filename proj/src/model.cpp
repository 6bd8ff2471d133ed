#include "rfc/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "rfc/errors.hpp"
#include "rfc/io.hpp"
#include "rfc/metrics.hpp"
#include "rfc/random.hpp"

namespace rfc::net {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

void require_widths(const std::vector<std::size_t>& v, const std::string& name) {
  if (v.empty()) throw Error(Errc::InvalidArgument, name + " needs at least one layer");
  for (auto w : v)
    if (w == 0) throw Error(Errc::InvalidArgument, name + " has a zero-width layer");
}

std::string layer(const std::string& prefix, std::size_t k) { return prefix + "." + std::to_string(k); }

}  // namespace

void ModelConfig::validate() const {
  if (n_input == 0) throw Error(Errc::InvalidArgument, "n_input must be positive");
  require_widths(mlp1, "mlp1");
  require_widths(mlp2, "mlp2");
  require_widths(folding_hidden, "folding_hidden");
  for (auto w : classifier_hidden)
    if (w == 0) throw Error(Errc::InvalidArgument, "classifier_hidden has a zero-width layer");
  for (auto w : coarse_hidden)
    if (w == 0) throw Error(Errc::InvalidArgument, "coarse_hidden has a zero-width layer");
  if (n_coarse == 0 || u == 0) throw Error(Errc::InvalidArgument, "n_coarse and u must be positive");
  if (n_classes < 2) throw Error(Errc::InvalidArgument, "n_classes must be >= 2");
  if (grid_delta < 0.0 || alpha < 0.0 || beta < 0.0) throw Error(Errc::InvalidArgument, "negative grid_delta or loss weight");
}

double ModelConfig::alpha_at(std::size_t epoch) const {
  if (alpha_warmup_epochs == 0 || epoch >= alpha_warmup_epochs) return alpha;
  const double f = static_cast<double>(epoch) / static_cast<double>(alpha_warmup_epochs);
  if (f < 0.25) return 0.01 * alpha;
  if (f < 0.5) return 0.1 * alpha;
  return 0.5 * alpha;
}

std::string ModelConfig::to_text() const {
  std::ostringstream o;
  o.precision(17);
  o << "n_input=" << n_input << "\n"
    << "mlp1=" << join(mlp1) << "\n"
    << "mlp2=" << join(mlp2) << "\n"
    << "classifier_hidden=" << join(classifier_hidden) << "\n"
    << "coarse_hidden=" << join(coarse_hidden) << "\n"
    << "folding_hidden=" << join(folding_hidden) << "\n"
    << "n_coarse=" << n_coarse << "\n"
    << "u=" << u << "\n"
    << "n_classes=" << n_classes << "\n"
    << "grid_delta=" << grid_delta << "\n"
    << "alpha=" << alpha << "\n"
    << "beta=" << beta << "\n"
    << "alpha_warmup_epochs=" << alpha_warmup_epochs << "\n"
    << "emd_iters=" << emd_iters << "\n";
  return o.str();
}

ModelConfig ModelConfig::from_config(const Config& c, const std::string& p) {
  const std::string preset = c.get_string(p + "preset", "default");
  if (preset != "default" && preset != "toy") throw Error(Errc::InvalidArgument, "unknown model preset '" + preset + "'");
  ModelConfig m = preset == "toy" ? toy_config() : ModelConfig{};
  m.n_input = c.get_u64(p + "n_input", m.n_input);
  m.mlp1 = c.get_sizes(p + "mlp1", m.mlp1);
  m.mlp2 = c.get_sizes(p + "mlp2", m.mlp2);
  if (c.has(p + "classifier_hidden") && c.get_string(p + "classifier_hidden", "").empty())
    m.classifier_hidden.clear();
  else
    m.classifier_hidden = c.get_sizes(p + "classifier_hidden", m.classifier_hidden);
  if (c.has(p + "coarse_hidden") && c.get_string(p + "coarse_hidden", "").empty())
    m.coarse_hidden.clear();
  else
    m.coarse_hidden = c.get_sizes(p + "coarse_hidden", m.coarse_hidden);
  m.folding_hidden = c.get_sizes(p + "folding_hidden", m.folding_hidden);
  m.n_coarse = c.get_u64(p + "n_coarse", m.n_coarse);
  m.u = c.get_u64(p + "u", m.u);
  m.n_classes = c.get_u64(p + "n_classes", m.n_classes);
  m.grid_delta = c.get_double(p + "grid_delta", m.grid_delta);
  m.alpha = c.get_double(p + "alpha", m.alpha);
  m.beta = c.get_double(p + "beta", m.beta);
  m.alpha_warmup_epochs = c.get_u64(p + "alpha_warmup_epochs", m.alpha_warmup_epochs);
  m.emd_iters = c.get_u64(p + "emd_iters", m.emd_iters);
  m.validate();
  return m;
}

ModelConfig toy_config() {
  ModelConfig m;
  m.n_input = 32;
  m.mlp1 = {16, 32};
  m.mlp2 = {32, 64};
  m.classifier_hidden = {32};
  m.coarse_hidden = {64, 64};
  m.folding_hidden = {32, 32};
  m.n_coarse = 16;
  m.u = 2;
  m.n_classes = 3;
  m.grid_delta = 0.05;
  m.alpha = 1.0;
  m.beta = 0.1;
  m.alpha_warmup_epochs = 0;
  m.emd_iters = 10;
  return m;
}

Mat folding_grid(std::size_t u, double delta) {
  Mat g(static_cast<Eigen::Index>(u * u), 2);
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t j = 0; j < u; ++j) {
      const double a = u > 1 ? -delta + 2.0 * delta * static_cast<double>(i) / static_cast<double>(u - 1) : 0.0;
      const double b = u > 1 ? -delta + 2.0 * delta * static_cast<double>(j) / static_cast<double>(u - 1) : 0.0;
      g(static_cast<Eigen::Index>(i * u + j), 0) = a;
      g(static_cast<Eigen::Index>(i * u + j), 1) = b;
    }
  return g;
}

std::vector<std::size_t> nearest_rows(const Mat& queries, const Mat& points) {
  if (points.rows() == 0) throw Error(Errc::ShapeMismatch, "nearest neighbour in an empty set");
  std::vector<std::size_t> out(static_cast<std::size_t>(queries.rows()));
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < points.rows(); ++j) {
      const double d = (queries.row(i) - points.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(j);
      }
    }
  }
  return out;
}

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  auto dense = [&](const std::string& prefix, std::size_t in, const std::vector<std::size_t>& widths) {
    for (std::size_t k = 0; k < widths.size(); ++k) {
      add_param(layer(prefix, k) + ".w", static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(widths[k]));
      add_param(layer(prefix, k) + ".b", 1, static_cast<Eigen::Index>(widths[k]));
      in = widths[k];
    }
  };
  const std::size_t feat = cfg_.feat_dim();
  dense("enc1", 3, cfg_.mlp1);
  dense("enc2", 2 * cfg_.mlp1.back(), cfg_.mlp2);
  auto cls = cfg_.classifier_hidden;
  cls.push_back(cfg_.n_classes);
  dense("cls", feat, cls);
  auto coarse = cfg_.coarse_hidden;
  coarse.push_back(3 * cfg_.n_coarse);
  dense("coarse", feat, coarse);

  const auto h0 = static_cast<Eigen::Index>(cfg_.folding_hidden.front());
  add_param("fold.0.w_grid", 2, h0);
  add_param("fold.0.w_point", 3, h0);
  add_param("fold.0.w_local", static_cast<Eigen::Index>(feat), h0);
  add_param("fold.0.w_global", static_cast<Eigen::Index>(feat), h0);
  add_param("fold.0.b", 1, h0);
  std::size_t in = cfg_.folding_hidden.front();
  for (std::size_t k = 1; k <= cfg_.folding_hidden.size(); ++k) {
    const std::size_t out = k < cfg_.folding_hidden.size() ? cfg_.folding_hidden[k] : 3;
    add_param(layer("fold", k) + ".w", static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
    add_param(layer("fold", k) + ".b", 1, static_cast<Eigen::Index>(out));
    in = out;
  }
}

void Model::add_param(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  params_[name] = ad::param(Mat::Zero(rows, cols));
}

Var& Model::param(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error(Errc::InvalidArgument, "no parameter '" + name + "'");
  return it->second;
}

std::size_t Model::n_params() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

Model Model::init(const ModelConfig& cfg, std::uint64_t seed) {
  Model m(cfg);
  const std::size_t feat = cfg.feat_dim();
  std::uint64_t tag = 0;
  for (auto& [name, p] : m.params_) {
    ++tag;
    if (name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0) continue;
    Rng rng(derive_seed(seed, {tag}));
    double fan_in = static_cast<double>(p->rows());
    if (name.rfind("fold.0.", 0) == 0) fan_in = static_cast<double>(5 + 2 * feat);
    const double limit = std::sqrt(6.0 / (fan_in + static_cast<double>(p->cols())));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = uniform(rng, -limit, limit);
  }
  return m;
}

Var Model::mlp(Var x, const std::string& prefix, std::size_t layers) const {
  for (std::size_t k = 0; k < layers; ++k) {
    x = ad::linear(x, params_.at(layer(prefix, k) + ".w"), params_.at(layer(prefix, k) + ".b"));
    if (k + 1 < layers) x = ad::relu(x);
  }
  return x;
}

ForwardOutputs Model::encode(const Mat& x) const {
  if (x.cols() != 3 || x.rows() == 0) throw Error(Errc::ShapeMismatch, "input must be a non-empty n x 3 matrix");
  if (!x.allFinite()) throw Error(Errc::InvalidArgument, "input contains non-finite values");
  ForwardOutputs out;
  const Var in = ad::constant(x);
  out.f1 = mlp(in, "enc1", cfg_.mlp1.size());
  out.g1 = ad::max_rows(out.f1);
  out.f2 = mlp(ad::concat_cols(out.f1, ad::broadcast_rows(out.g1, x.rows())), "enc2", cfg_.mlp2.size());
  out.g2 = ad::max_rows(out.f2);
  return out;
}

Var Model::classify(const Var& g2) const { return mlp(g2, "cls", cfg_.classifier_hidden.size() + 1); }

void Model::decode(ForwardOutputs& out, const Mat& x) const {
  const auto nc = static_cast<Eigen::Index>(cfg_.n_coarse);
  const auto patch = static_cast<Eigen::Index>(cfg_.u * cfg_.u);
  out.coarse = ad::reshape(mlp(out.g2, "coarse", cfg_.coarse_hidden.size() + 1), nc, 3);
  out.local_index = nearest_rows(out.coarse->value, x);
  const Var local = ad::gather_rows(out.f2, out.local_index);

  const Var per_point = ad::add(
      ad::add(ad::linear(out.coarse, params_.at("fold.0.w_point"), params_.at("fold.0.b")),
              ad::matmul(local, params_.at("fold.0.w_local"))),
      ad::broadcast_rows(ad::matmul(out.g2, params_.at("fold.0.w_global")), nc));
  const Var per_grid = ad::matmul(ad::constant(folding_grid(cfg_.u, cfg_.grid_delta)), params_.at("fold.0.w_grid"));
  Var h = ad::relu(ad::outer_add_rows(per_point, per_grid));
  const std::size_t rest = cfg_.folding_hidden.size();
  for (std::size_t k = 1; k <= rest; ++k) {
    h = ad::linear(h, params_.at(layer("fold", k) + ".w"), params_.at(layer("fold", k) + ".b"));
    if (k < rest) h = ad::relu(h);
  }
  out.fine = ad::add(ad::repeat_rows(out.coarse, patch), h);
}

ForwardOutputs Model::forward(const Mat& x) const {
  ForwardOutputs out = encode(x);
  out.logits = classify(out.g2);
  decode(out, x);
  return out;
}

LossTerms Model::loss(const ForwardOutputs& out, const std::vector<Point3>& target,
                      const std::vector<Point3>& emd_target, std::size_t label, double alpha) const {
  if (emd_target.size() != cfg_.n_coarse)
    throw Error(Errc::ShapeMismatch, "EMD target must have n_coarse points");
  if (target.empty()) throw Error(Errc::EmptyCloud, "empty completion target");
  if (label >= cfg_.n_classes) throw Error(Errc::InvalidArgument, "class label out of range");
  LossTerms t;
  const auto asg = metrics::emd_approx_assignment(ad::to_points(out.coarse->value), emd_target, cfg_.emd_iters);
  const Var emd = ad::assignment_loss(out.coarse, emd_target, asg.mapping);
  const Var cd = ad::chamfer_loss(out.fine, target);
  const Var ce = ad::softmax_cross_entropy(out.logits, label);
  t.emd = emd->scalar();
  t.cd = cd->scalar();
  t.ce = ce->scalar();
  t.total = ad::add(emd, ad::scale(cd, alpha));
  if (cfg_.beta > 0.0) t.total = ad::add(t.total, ad::scale(ce, cfg_.beta));
  return t;
}

void Model::zero_grad() {
  for (auto& [name, p] : params_) p->grad.resize(0, 0);
}

std::string Model::encode_checkpoint() const {
  std::string out = "RFCK";
  io::put_u32(out, kCheckpointVersion);
  const std::string text = cfg_.to_text();
  io::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  io::put_u32(out, static_cast<std::uint32_t>(params_.size()));
  for (const auto& [name, p] : params_) {
    io::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    io::put_u32(out, 2);
    io::put_u32(out, static_cast<std::uint32_t>(p->rows()));
    io::put_u32(out, static_cast<std::uint32_t>(p->cols()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) io::put_f32(out, static_cast<float>(p->value.data()[i]));
  }
  return out;
}

Model Model::decode_checkpoint(const std::string& bytes) {
  io::ByteReader r(bytes);
  if (r.bytes(4) != "RFCK") throw Error(Errc::ParseError, "not a checkpoint (bad magic)");
  const auto version = r.u32();
  if (version != kCheckpointVersion) throw Error(Errc::ConfigMismatch, "unsupported checkpoint version " + std::to_string(version));
  const auto text_len = r.u32();
  const std::string text(r.bytes(text_len));
  Model m(ModelConfig::from_config(Config::parse(text, "<checkpoint>"), ""));
  const auto count = r.u32();
  if (count != m.params_.size()) throw Error(Errc::ConfigMismatch, "checkpoint tensor count does not match its config");
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::string name(r.bytes(r.u32()));
    auto it = m.params_.find(name);
    if (it == m.params_.end()) throw Error(Errc::ConfigMismatch, "unexpected tensor '" + name + "'");
    const auto ndim = r.u32();
    std::vector<std::uint32_t> dims(ndim);
    for (auto& d : dims) d = r.u32();
    auto& p = it->second;
    if (ndim != 2 || dims[0] != p->rows() || dims[1] != p->cols())
      throw Error(Errc::ShapeMismatch, "tensor '" + name + "' has the wrong shape");
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = r.f32();
  }
  if (!r.at_end()) throw Error(Errc::ParseError, "trailing bytes after checkpoint");
  return m;
}

void Model::save(const std::filesystem::path& path) const { io::write_file_atomic(path, encode_checkpoint()); }

Model Model::load(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace rfc::net
