#pragma once

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "faf/metrics.hpp"
#include "faf/splits.hpp"
#include "faf/types.hpp"

namespace faf {

enum class NormKind { None, LayerNorm, BatchNorm };

inline const char* to_string(NormKind k) {
  switch (k) {
    case NormKind::None: return "none";
    case NormKind::LayerNorm: return "ln";
    case NormKind::BatchNorm: return "bn";
  }
  return "?";
}

inline NormKind parse_norm(const std::string& name) {
  if (name == "none") return NormKind::None;
  if (name == "ln" || name == "layernorm") return NormKind::LayerNorm;
  if (name == "bn" || name == "batchnorm") return NormKind::BatchNorm;
  throw DataError("unknown normalization '" + name + "' (expected ln|bn|none)");
}

/// Classifier architecture and optimizer settings. num_layers counts
/// affine maps: 1 is a single affine map from input to classes with no
/// hidden layer, normalization, or dropout.
struct MlpConfig {
  int num_layers = 2;
  int hidden_channels = 64;
  double dropout = 0.0;
  NormKind normalization = NormKind::None;
  double learning_rate = 0.01;
  double weight_decay = 0.0;
  int max_epochs = 2500;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_layers < 1) throw DataError("num_layers must be >= 1");
    if (num_layers > 1 && hidden_channels < 1) throw DataError("hidden_channels must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw DataError("dropout must be in [0, 1)");
    if (learning_rate <= 0.0) throw DataError("learning_rate must be positive");
    if (weight_decay < 0.0) throw DataError("weight_decay must be >= 0");
    if (max_epochs < 1) throw DataError("max_epochs must be >= 1");
  }
};

/// Feedforward classifier with rectified hidden activations and optional
/// per-layer normalization applied before each activation. Parameters live
/// in one flat vector so the optimizer and finite-difference checks can
/// treat them uniformly.
class Mlp {
 public:
  struct ForwardMode {
    bool batch_stats = false;      // BatchNorm: batch statistics vs. running estimates
    bool update_running = false;   // update running estimates from this pass
    bool apply_dropout = false;
  };

  /// Workspace for one forward/backward pair. Reusing the same Cache
  /// across calls of identical shape avoids reallocation in training
  /// loops. When the input is a plain column-major matrix only a pointer
  /// is kept (the caller's matrix must outlive the matching backward
  /// call); any other layout is converted into input_storage first.
  struct Cache {
    const Eigen::MatrixXd* input = nullptr;
    Eigen::MatrixXd input_storage;
    std::vector<Eigen::MatrixXd> act;       // post-activation output per hidden layer
    std::vector<Eigen::MatrixXd> xhat;      // normalized pre-activation per hidden layer
    std::vector<Eigen::MatrixXd> preact;    // post-norm, pre-relu per hidden layer
    std::vector<Eigen::MatrixXd> drop_mask; // scale factors; empty matrix when dropout off
    std::vector<Eigen::VectorXd> mu, var;   // BatchNorm statistics used by the pass
    std::vector<Eigen::VectorXd> row_mu, row_var;  // LayerNorm per-row statistics
    Eigen::MatrixXd logits;
    bool used_batch_stats = false;
    Eigen::MatrixXd delta_a, delta_b;       // backward scratch
  };

  Mlp() = default;

  Mlp(const MlpConfig& cfg, Index in_dim, int num_classes) : cfg_(cfg) {
    cfg_.validate();
    if (in_dim < 1 || num_classes < 2) throw DataError("mlp: need in_dim >= 1 and >= 2 classes");
    dims_.push_back(in_dim);
    for (int l = 0; l + 1 < cfg_.num_layers; ++l) dims_.push_back(cfg_.hidden_channels);
    dims_.push_back(num_classes);
    has_norm_ = cfg_.num_layers > 1 && cfg_.normalization != NormKind::None;

    Index total = 0;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      Affine a;
      a.in = dims_[l];
      a.out = dims_[l + 1];
      a.w_off = total;
      total += a.in * a.out;
      a.b_off = total;
      total += a.out;
      const bool hidden = l + 2 < dims_.size();
      if (hidden && has_norm_) {
        a.gamma_off = total;
        total += a.out;
        a.beta_off = total;
        total += a.out;
      }
      layers_.push_back(a);
    }
    theta_ = Eigen::VectorXd::Zero(total);

    Rng rng(derive_seed(cfg_.seed, 0));
    for (const Affine& a : layers_) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(a.in));
      for (Index i = 0; i < a.in * a.out; ++i) theta_(a.w_off + i) = (2.0 * rng.uniform() - 1.0) * bound;
      for (Index i = 0; i < a.out; ++i) theta_(a.b_off + i) = (2.0 * rng.uniform() - 1.0) * bound;
      if (a.gamma_off >= 0) {
        theta_.segment(a.gamma_off, a.out).setOnes();
        theta_.segment(a.beta_off, a.out).setZero();
      }
    }
    if (cfg_.normalization == NormKind::BatchNorm) {
      for (std::size_t l = 0; l + 2 < dims_.size(); ++l) {
        run_mean_.emplace_back(Eigen::VectorXd::Zero(dims_[l + 1]));
        run_var_.emplace_back(Eigen::VectorXd::Ones(dims_[l + 1]));
      }
    }
  }

  const MlpConfig& config() const { return cfg_; }
  Index num_params() const { return theta_.size(); }
  Eigen::VectorXd& params() { return theta_; }
  const Eigen::VectorXd& params() const { return theta_; }
  int num_classes() const { return static_cast<int>(dims_.back()); }
  Index input_dim() const { return dims_.front(); }

  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t l) const {
    return {theta_.data() + layers_[l].w_off, layers_[l].in, layers_[l].out};
  }
  Eigen::Map<Eigen::MatrixXd> weight(std::size_t l) {
    return {theta_.data() + layers_[l].w_off, layers_[l].in, layers_[l].out};
  }

  template <typename Derived>
  Eigen::MatrixXd forward(const Eigen::MatrixBase<Derived>& x, const ForwardMode& mode, Rng* dropout_rng = nullptr,
                          Cache* cache = nullptr) {
    Cache local;
    Cache& ws = cache ? *cache : local;
    forward_into(x, mode, dropout_rng, ws);
    return ws.logits;
  }

  /// Layout-converting entry point: materializes the input inside the
  /// cache so nothing dangles.
  template <typename Derived>
  void forward_into(const Eigen::MatrixBase<Derived>& x, const ForwardMode& mode, Rng* dropout_rng, Cache& ws) {
    ws.input_storage = x;
    forward_into(static_cast<const Eigen::MatrixXd&>(ws.input_storage), mode, dropout_rng, ws);
  }

  void forward_into(const Eigen::MatrixXd& x, const ForwardMode& mode, Rng* dropout_rng, Cache& ws) {
    const std::size_t n_layers = layers_.size();
    const std::size_t n_hidden = n_layers - 1;
    ws.input = &x;
    ws.used_batch_stats = mode.batch_stats;
    ws.act.resize(n_hidden);
    ws.xhat.resize(has_norm_ ? n_hidden : 0);
    ws.preact.resize(n_hidden);
    ws.drop_mask.resize(n_hidden);
    ws.mu.resize(n_hidden);
    ws.var.resize(n_hidden);
    ws.row_mu.resize(n_hidden);
    ws.row_var.resize(n_hidden);

    const Eigen::MatrixXd* a = &x;
    for (std::size_t l = 0; l < n_hidden; ++l) {
      const Affine& af = layers_[l];
      Eigen::MatrixXd& z = ws.preact[l];
      z.noalias() = (*a) * weight_map(af);
      z.rowwise() += bias_map(af).transpose();
      if (has_norm_) normalize_inplace(l, z, mode, ws);

      Eigen::MatrixXd& h = ws.act[l];
      h = z.cwiseMax(0.0);
      if (mode.apply_dropout && cfg_.dropout > 0.0) {
        if (!dropout_rng) throw DataError("mlp: dropout requested without an rng");
        apply_dropout(h, ws.drop_mask[l], *dropout_rng);
      } else {
        ws.drop_mask[l].resize(0, 0);
      }
      a = &h;
    }
    const Affine& last = layers_.back();
    ws.logits.noalias() = (*a) * weight_map(last);
    ws.logits.rowwise() += bias_map(last).transpose();
  }

  /// Gradient of the cached forward pass with respect to all parameters.
  Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& dlogits) const {
    Eigen::VectorXd grad;
    backward_into(const_cast<Cache&>(cache), dlogits, grad);
    return grad;
  }

  void backward_into(Cache& ws, const Eigen::MatrixXd& dlogits, Eigen::VectorXd& grad) const {
    grad.resize(theta_.size());
    Eigen::MatrixXd* delta = &ws.delta_a;
    *delta = dlogits;
    for (std::size_t li = layers_.size(); li-- > 0;) {
      const Affine& af = layers_[li];
      const Eigen::MatrixXd& input = (li == 0) ? *ws.input : ws.act[li - 1];
      grad_weight(af, grad).noalias() = input.transpose() * (*delta);
      grad_bias(af, grad) = delta->colwise().sum();
      if (li == 0) break;

      Eigen::MatrixXd* next = (delta == &ws.delta_a) ? &ws.delta_b : &ws.delta_a;
      next->noalias() = (*delta) * weight_map(af).transpose();
      delta = next;

      const std::size_t hl = li - 1;  // hidden layer index the delta now sits at
      if (ws.drop_mask[hl].size() > 0) delta->array() *= ws.drop_mask[hl].array();
      delta->array() *= (ws.preact[hl].array() > 0.0).cast<double>();
      if (has_norm_) normalize_backward_inplace(hl, *delta, ws, grad);
    }
  }

  /// Mean softmax cross-entropy over the mask; writes the matching logits
  /// gradient (zero off-mask) into dlogits.
  static double softmax_ce(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                           const std::vector<Index>& mask, Eigen::MatrixXd& dlogits) {
    dlogits.resize(logits.rows(), logits.cols());
    dlogits.setZero();
    double loss = 0.0;
    const double inv = 1.0 / static_cast<double>(mask.size());
    Eigen::RowVectorXd e(logits.cols());
    for (Index i : mask) {
      const int y = labels[static_cast<std::size_t>(i)];
      const double mx = logits.row(i).maxCoeff();
      e = (logits.row(i).array() - mx).exp();
      const double denom = e.sum();
      loss -= std::log(e(y) / denom);
      dlogits.row(i) = (e / denom) * inv;
      dlogits(i, y) -= inv;
    }
    return loss * inv;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model: " + path.string());
    out.write("FAFM", 4);
    auto w64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    w64(static_cast<std::uint64_t>(cfg_.num_layers));
    w64(static_cast<std::uint64_t>(cfg_.hidden_channels));
    w64(static_cast<std::uint64_t>(cfg_.normalization));
    w64(static_cast<std::uint64_t>(dims_.front()));
    w64(static_cast<std::uint64_t>(dims_.back()));
    w64(static_cast<std::uint64_t>(theta_.size()));
    out.write(reinterpret_cast<const char*>(theta_.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(theta_.size())));
    w64(run_mean_.size());
    for (std::size_t l = 0; l < run_mean_.size(); ++l) {
      w64(static_cast<std::uint64_t>(run_mean_[l].size()));
      out.write(reinterpret_cast<const char*>(run_mean_[l].data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(run_mean_[l].size())));
      out.write(reinterpret_cast<const char*>(run_var_[l].data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(run_var_[l].size())));
    }
  }

  static Mlp load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "FAFM", 4) != 0) throw DataError(path.string() + ": not a model file");
    auto r64 = [&]() {
      std::uint64_t v = 0;
      in.read(reinterpret_cast<char*>(&v), 8);
      return v;
    };
    MlpConfig cfg;
    cfg.num_layers = static_cast<int>(r64());
    cfg.hidden_channels = static_cast<int>(r64());
    cfg.normalization = static_cast<NormKind>(r64());
    const auto in_dim = static_cast<Index>(r64());
    const auto classes = static_cast<int>(r64());
    Mlp m(cfg, in_dim, classes);
    const auto n_params = static_cast<Index>(r64());
    if (n_params != m.theta_.size()) throw DataError(path.string() + ": parameter count mismatch");
    in.read(reinterpret_cast<char*>(m.theta_.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(n_params)));
    const std::uint64_t n_stats = r64();
    for (std::uint64_t l = 0; l < n_stats; ++l) {
      const auto sz = static_cast<Index>(r64());
      if (l >= m.run_mean_.size() || sz != m.run_mean_[l].size()) {
        throw DataError(path.string() + ": running statistics mismatch");
      }
      in.read(reinterpret_cast<char*>(m.run_mean_[l].data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(sz)));
      in.read(reinterpret_cast<char*>(m.run_var_[l].data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(sz)));
    }
    if (!in) throw DataError(path.string() + ": truncated model file");
    return m;
  }

 private:
  struct Affine {
    Index in = 0, out = 0;
    Index w_off = 0, b_off = 0;
    Index gamma_off = -1, beta_off = -1;
  };

  static constexpr double kNormEps = 1e-5;
  static constexpr double kBnMomentum = 0.1;

  Eigen::Map<const Eigen::MatrixXd> weight_map(const Affine& a) const {
    return {theta_.data() + a.w_off, a.in, a.out};
  }
  Eigen::Map<const Eigen::VectorXd> bias_map(const Affine& a) const { return {theta_.data() + a.b_off, a.out}; }
  Eigen::Map<const Eigen::VectorXd> gamma_map(const Affine& a) const {
    return {theta_.data() + a.gamma_off, a.out};
  }
  Eigen::Map<const Eigen::VectorXd> beta_map(const Affine& a) const { return {theta_.data() + a.beta_off, a.out}; }
  static Eigen::Map<Eigen::MatrixXd> grad_weight(const Affine& a, Eigen::VectorXd& g) {
    return {g.data() + a.w_off, a.in, a.out};
  }
  static Eigen::Map<Eigen::RowVectorXd> grad_bias(const Affine& a, Eigen::VectorXd& g) {
    return {g.data() + a.b_off, a.out};
  }

  void apply_dropout(Eigen::MatrixXd& h, Eigen::MatrixXd& mask, Rng& rng) const {
    const double keep = 1.0 - cfg_.dropout;
    const double scale = 1.0 / keep;
    // compare raw 64-bit draws against a fixed threshold
    const auto threshold = static_cast<std::uint64_t>(keep * 0x1.0p64);
    mask.resize(h.rows(), h.cols());
    double* m = mask.data();
    double* v = h.data();
    const Index total = h.size();
    for (Index i = 0; i < total; ++i) {
      const double s = (rng.next_u64() < threshold) ? scale : 0.0;
      m[i] = s;
      v[i] *= s;
    }
  }

  void normalize_inplace(std::size_t l, Eigen::MatrixXd& z, const ForwardMode& mode, Cache& ws) {
    const Affine& af = layers_[l];
    const auto n = static_cast<double>(z.rows());
    Eigen::MatrixXd& xhat = ws.xhat[l];
    if (cfg_.normalization == NormKind::BatchNorm) {
      Eigen::VectorXd& mu = ws.mu[l];
      Eigen::VectorXd& var = ws.var[l];
      if (mode.batch_stats) {
        mu = z.colwise().mean().transpose();
        var = ((z.rowwise() - mu.transpose()).cwiseAbs2().colwise().sum() / n).transpose();
        if (mode.update_running) {
          const double unbias = z.rows() > 1 ? n / (n - 1.0) : 1.0;
          run_mean_[l] = (1.0 - kBnMomentum) * run_mean_[l] + kBnMomentum * mu;
          run_var_[l] = (1.0 - kBnMomentum) * run_var_[l] + kBnMomentum * (var * unbias);
        }
      } else {
        mu = run_mean_[l];
        var = run_var_[l];
      }
      const Eigen::ArrayXd inv_sigma = (var.array() + kNormEps).rsqrt();
      xhat = (z.rowwise() - mu.transpose()).array().rowwise() * inv_sigma.transpose();
    } else {  // LayerNorm: per-row statistics
      Eigen::VectorXd& mu = ws.row_mu[l];
      Eigen::VectorXd& var = ws.row_var[l];
      mu = z.rowwise().mean();
      var = (z.colwise() - mu).cwiseAbs2().rowwise().sum() / static_cast<double>(z.cols());
      const Eigen::ArrayXd inv_sigma = (var.array() + kNormEps).rsqrt();
      xhat = (z.colwise() - mu).array().colwise() * inv_sigma;
    }
    z = (xhat.array().rowwise() * gamma_map(af).transpose().array()).rowwise() +
        beta_map(af).transpose().array();
  }

  void normalize_backward_inplace(std::size_t l, Eigen::MatrixXd& dy, const Cache& ws,
                                  Eigen::VectorXd& grad) const {
    const Affine& af = layers_[l];
    const Eigen::MatrixXd& xhat = ws.xhat[l];
    Eigen::Map<Eigen::RowVectorXd>(grad.data() + af.gamma_off, af.out) = dy.cwiseProduct(xhat).colwise().sum();
    Eigen::Map<Eigen::RowVectorXd>(grad.data() + af.beta_off, af.out) = dy.colwise().sum();
    dy.array().rowwise() *= gamma_map(af).transpose().array();  // dy now holds d xhat

    if (cfg_.normalization == NormKind::BatchNorm) {
      const Eigen::ArrayXd inv_sigma = (ws.var[l].array() + kNormEps).rsqrt();
      if (!ws.used_batch_stats) {
        dy.array().rowwise() *= inv_sigma.transpose();
        return;
      }
      const auto n = static_cast<double>(dy.rows());
      const Eigen::RowVectorXd mean_g = dy.colwise().sum() / n;
      const Eigen::RowVectorXd mean_gx = dy.cwiseProduct(xhat).colwise().sum() / n;
      dy.rowwise() -= mean_g;
      dy.noalias() -= xhat * mean_gx.asDiagonal();
      dy.array().rowwise() *= inv_sigma.transpose();
      return;
    }
    // LayerNorm
    const Eigen::ArrayXd inv_sigma = (ws.row_var[l].array() + kNormEps).rsqrt();
    const auto d = static_cast<double>(dy.cols());
    const Eigen::VectorXd mean_g = dy.rowwise().sum() / d;
    const Eigen::VectorXd mean_gx = dy.cwiseProduct(xhat).rowwise().sum() / d;
    dy.colwise() -= mean_g;
    dy -= mean_gx.asDiagonal() * xhat;
    dy.array().colwise() *= inv_sigma;
  }

  MlpConfig cfg_;
  std::vector<Index> dims_;
  std::vector<Affine> layers_;
  bool has_norm_ = false;
  Eigen::VectorXd theta_;
  std::vector<Eigen::VectorXd> run_mean_, run_var_;
};

/// Per-epoch metric curves with best-validation selection.
struct TrainReport {
  std::vector<double> train_metric, val_metric, test_metric, train_loss;
  int best_val_epoch = 0;  // index into the curves
  double best_val_metric = 0.0;
  double test_at_best_val = 0.0;
  MetricKind metric = MetricKind::Accuracy;
  double wall_time_seconds = 0.0;
};

/// Full-batch training with adaptive-moment updates and decoupled weight
/// decay on softmax cross-entropy over the train mask. All three masks are
/// evaluated every epoch with a deterministic (dropout-free) forward pass.
inline TrainReport train_mlp(const FeatureMatrix& features, const std::vector<int>& labels, int num_classes,
                             const Split& split, const MlpConfig& cfg, MetricKind metric, Mlp* out_model = nullptr) {
  cfg.validate();
  if (static_cast<Index>(labels.size()) != features.rows()) {
    throw DataError("train: label count does not match feature rows");
  }
  if (split.train.empty()) throw DataError("train: degenerate split (empty train mask)");
  if (split.val.empty() || split.test.empty()) throw DataError("train: empty val or test mask");
  for (const auto* mask : {&split.train, &split.val, &split.test}) {
    for (Index i : *mask) {
      if (i < 0 || i >= features.rows()) throw DataError("train: mask index out of range");
      if (labels[static_cast<std::size_t>(i)] < 0) {
        throw DataError("train: unlabeled node " + std::to_string(i) + " in mask");
      }
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::MatrixXd x = features;  // column-major copy for the matrix products
  Mlp model(cfg, features.cols(), num_classes);
  Rng dropout_rng(derive_seed(cfg.seed, 1));

  Eigen::VectorXd m = Eigen::VectorXd::Zero(model.num_params());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(model.num_params());
  Eigen::VectorXd grad;
  Eigen::MatrixXd dlogits;
  Mlp::Cache train_ws, eval_ws;
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  TrainReport report;
  report.metric = metric;
  report.best_val_metric = -std::numeric_limits<double>::infinity();
  report.train_loss.reserve(static_cast<std::size_t>(cfg.max_epochs));

  const Mlp::ForwardMode train_mode{/*batch_stats=*/true, /*update_running=*/true, /*apply_dropout=*/true};
  const Mlp::ForwardMode eval_mode{};

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    model.forward_into(x, train_mode, &dropout_rng, train_ws);
    const double loss = Mlp::softmax_ce(train_ws.logits, labels, split.train, dlogits);
    if (!std::isfinite(loss)) {
      throw DataError("train: non-finite loss at epoch " + std::to_string(epoch));
    }
    model.backward_into(train_ws, dlogits, grad);

    const double t = static_cast<double>(epoch + 1);
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    Eigen::VectorXd& theta = model.params();
    theta -= cfg.learning_rate * ((m / bc1).array() / ((v / bc2).array().sqrt() + adam_eps)).matrix();
    if (cfg.weight_decay > 0.0) theta -= (cfg.learning_rate * cfg.weight_decay) * theta;

    model.forward_into(x, eval_mode, nullptr, eval_ws);
    report.train_loss.push_back(loss);
    report.train_metric.push_back(evaluate(eval_ws.logits, labels, split.train, metric));
    report.val_metric.push_back(evaluate(eval_ws.logits, labels, split.val, metric));
    report.test_metric.push_back(evaluate(eval_ws.logits, labels, split.test, metric));
    if (report.val_metric.back() > report.best_val_metric) {
      report.best_val_metric = report.val_metric.back();
      report.best_val_epoch = epoch;
      report.test_at_best_val = report.test_metric.back();
    }
  }

  report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (out_model) *out_model = std::move(model);
  return report;
}

/// Compares analytic gradients with central finite differences over every
/// parameter and returns the largest relative error. Dropout is disabled;
/// normalization runs in evaluation-statistics mode unless batch_stats is
/// set (which exercises the batch-statistics backward instead).
inline double gradient_check(const MlpConfig& cfg, const FeatureMatrix& features, const std::vector<int>& labels,
                             bool batch_stats = false) {
  MlpConfig c = cfg;
  c.dropout = 0.0;
  c.validate();
  int num_classes = 0;
  std::vector<Index> mask;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) {
      mask.push_back(static_cast<Index>(i));
      num_classes = std::max(num_classes, labels[i] + 1);
    }
  }
  num_classes = std::max(num_classes, 2);

  const Eigen::MatrixXd x = features;
  Mlp model(c, features.cols(), num_classes);
  const Mlp::ForwardMode mode{/*batch_stats=*/batch_stats, /*update_running=*/false, /*apply_dropout=*/false};

  Mlp::Cache ws;
  model.forward_into(x, mode, nullptr, ws);
  Eigen::MatrixXd dlogits;
  Mlp::softmax_ce(ws.logits, labels, mask, dlogits);
  Eigen::VectorXd analytic;
  model.backward_into(ws, dlogits, analytic);

  auto loss_at = [&]() {
    model.forward_into(x, mode, nullptr, ws);
    Eigen::MatrixXd unused;
    return Mlp::softmax_ce(ws.logits, labels, mask, unused);
  };

  const double h = 1e-4;
  double max_rel = 0.0;
  Eigen::VectorXd& theta = model.params();
  for (Index i = 0; i < theta.size(); ++i) {
    const double saved = theta(i);
    theta(i) = saved + h;
    const double lp = loss_at();
    theta(i) = saved - h;
    const double lm = loss_at();
    theta(i) = saved;
    const double numeric = (lp - lm) / (2.0 * h);
    const double rel = std::abs(analytic(i) - numeric) / std::max(1e-6, std::abs(analytic(i)) + std::abs(numeric));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace faf
