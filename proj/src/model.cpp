#include "nflsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "nflsim/errors.hpp"

namespace nflsim {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMatrix>;
using Weights = Eigen::Map<RowMatrix>;
using ConstBias = Eigen::Map<const Eigen::RowVectorXd>;
using Bias = Eigen::Map<Eigen::RowVectorXd>;

const ModelSpec& model_of(const ParamVector& params) {
  const auto& spec = params.layout().spec();
  if (!spec) throw StructuralError("parameter vector has no model layout");
  return *spec;
}

void check_batch(const ModelSpec& spec, const Batch& batch) {
  if (batch.empty()) throw StructuralError("empty batch");
  if (static_cast<std::size_t>(batch.features.rows()) != batch.labels.size()) {
    throw StructuralError("batch feature rows do not match label count");
  }
  if (batch.features.cols() != spec.input_dim()) {
    throw StructuralError("batch has " + std::to_string(batch.features.cols()) +
                          " features, model expects " +
                          std::to_string(spec.input_dim()));
  }
  for (int y : batch.labels) {
    if (y < 0 || y >= spec.class_count()) {
      throw StructuralError("label " + std::to_string(y) + " out of range");
    }
  }
}

// Pre-activations of every layer; the last entry holds the logits.
struct ForwardPass {
  std::vector<Eigen::MatrixXd> inputs;  // input to layer l
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of layer l
};

ForwardPass forward(const ParamVector& params, const Batch& batch) {
  const ModelSpec& spec = model_of(params);
  check_batch(spec, batch);
  const auto& layers = params.layout().layers();
  const double* base = params.values().data();

  ForwardPass pass;
  pass.inputs.reserve(layers.size());
  pass.pre.reserve(layers.size());
  Eigen::MatrixXd a = batch.features;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerSlice& s = layers[l];
    ConstWeights w(base + s.weight_offset, s.out, s.in);
    ConstBias b(base + s.bias_offset, s.out);
    Eigen::MatrixXd z = a * w.transpose();
    z.rowwise() += b;
    pass.inputs.push_back(std::move(a));
    if (l + 1 < layers.size() && spec.activation == Activation::kRelu) {
      a = z.cwiseMax(0.0);
    } else {
      a = z;
    }
    pass.pre.push_back(std::move(z));
  }
  return pass;
}

// Row-wise log-softmax of logits.
Eigen::MatrixXd log_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse =
        m + std::log((logits.row(i).array() - m).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

}  // namespace

std::string to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation '" + s + "'");
}

void ModelSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw StructuralError("model needs at least input and output sizes");
  }
  for (int n : layer_sizes) {
    if (n <= 0) throw StructuralError("layer sizes must be positive");
  }
  if (class_count() < 2) throw StructuralError("a classifier needs at least two classes");
}

std::shared_ptr<const Layout> Layout::for_model(const ModelSpec& spec) {
  spec.validate();
  auto layout = std::make_shared<Layout>();
  std::size_t offset = 0;
  for (int l = 0; l < spec.layer_count(); ++l) {
    LayerSlice s;
    s.in = spec.layer_sizes[l];
    s.out = spec.layer_sizes[l + 1];
    s.weight_offset = offset;
    s.bias_offset = offset + static_cast<std::size_t>(s.in) * s.out;
    offset = s.end();
    layout->layers_.push_back(s);
  }
  layout->size_ = offset;
  layout->spec_ = spec;
  return layout;
}

std::shared_ptr<const Layout> Layout::flat(std::size_t n) {
  auto layout = std::make_shared<Layout>();
  LayerSlice s;
  s.out = static_cast<int>(n);
  s.in = 0;
  layout->layers_.push_back(s);
  layout->size_ = n;
  return layout;
}

ParamVector::ParamVector(std::shared_ptr<const Layout> layout, double fill)
    : layout_(std::move(layout)), values_(layout_->size(), fill) {}

ParamVector::ParamVector(std::shared_ptr<const Layout> layout,
                         std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (values_.size() != layout_->size()) {
    throw StructuralError("parameter count " + std::to_string(values_.size()) +
                          " does not match layout size " +
                          std::to_string(layout_->size()));
  }
}

ParamVector ParamVector::flat(std::vector<double> values) {
  auto layout = Layout::flat(values.size());
  return ParamVector(std::move(layout), std::move(values));
}

bool ParamVector::same_layout(const ParamVector& other) const {
  if (layout_ == other.layout_) return true;
  if (!layout_ || !other.layout_) return false;
  return *layout_ == *other.layout_;
}

void ParamVector::require_same_layout(const ParamVector& other) const {
  if (!same_layout(other)) throw StructuralError("parameter layout mismatch");
}

bool ParamVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::uint64_t ParamVector::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values_) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

ParamVector& ParamVector::operator+=(const ParamVector& other) {
  require_same_layout(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& other) {
  require_same_layout(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

ParamVector& ParamVector::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
ParamVector operator*(ParamVector a, double s) { return a *= s; }

double dot(const ParamVector& a, const ParamVector& b) {
  a.require_same_layout(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(const ParamVector& a) { return std::sqrt(dot(a, a)); }

double squared_distance(const ParamVector& a, const ParamVector& b) {
  a.require_same_layout(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Batch take_rows(const Batch& source, std::span<const std::size_t> rows) {
  Batch out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()),
                      source.features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        source.features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(source.labels[rows[i]]);
  }
  return out;
}

std::vector<Batch> split_batches(const Batch& source,
                                 std::span<const std::size_t> order,
                                 int batch_size) {
  if (batch_size <= 0) throw ConfigError("batch size must be positive", "B");
  std::vector<Batch> batches;
  const auto step = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < order.size(); start += step) {
    const std::size_t len = std::min(step, order.size() - start);
    batches.push_back(take_rows(source, order.subspan(start, len)));
  }
  return batches;
}

ParamVector init_params(const ModelSpec& spec, Rng& rng) {
  ParamVector p(Layout::for_model(spec));
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (double& v : p.values()) v = u(rng);
  return p;
}

double loss(const ParamVector& params, const Batch& batch) {
  ForwardPass pass = forward(params, batch);
  const Eigen::MatrixXd logp = log_softmax(pass.pre.back());
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total -= logp(static_cast<Eigen::Index>(i), batch.labels[i]);
  }
  return total / static_cast<double>(batch.size());
}

LossAndGrad loss_and_grad(const ParamVector& params, const Batch& batch) {
  ForwardPass pass = forward(params, batch);
  const ModelSpec& spec = *params.layout().spec();
  const auto& layers = params.layout().layers();
  const auto n = static_cast<double>(batch.size());

  const Eigen::MatrixXd logp = log_softmax(pass.pre.back());
  LossAndGrad out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.loss -= logp(static_cast<Eigen::Index>(i), batch.labels[i]);
  }
  out.loss /= n;

  Eigen::MatrixXd delta = logp.array().exp();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    delta(static_cast<Eigen::Index>(i), batch.labels[i]) -= 1.0;
  }
  delta /= n;

  out.grad = ParamVector(params.layout_ptr());
  double* g = out.grad.values().data();
  const double* base = params.values().data();
  for (std::size_t l = layers.size(); l-- > 0;) {
    const LayerSlice& s = layers[l];
    Weights gw(g + s.weight_offset, s.out, s.in);
    Bias gb(g + s.bias_offset, s.out);
    gw.noalias() = delta.transpose() * pass.inputs[l];
    gb = delta.colwise().sum();
    if (l == 0) break;
    ConstWeights w(base + s.weight_offset, s.out, s.in);
    Eigen::MatrixXd upstream = delta * w;
    if (spec.activation == Activation::kRelu) {
      upstream.array() *= (pass.pre[l - 1].array() > 0.0).cast<double>();
    }
    delta = std::move(upstream);
  }
  return out;
}

ParamVector grad(const ParamVector& params, const Batch& batch) {
  return loss_and_grad(params, batch).grad;
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& g,
                     double eta) {
  params.require_same_layout(g);
  ParamVector out = params;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= eta * g[i];
  return out;
}

std::vector<int> predict(const ParamVector& params, const Batch& batch) {
  ForwardPass pass = forward(params, batch);
  const Eigen::MatrixXd& logits = pass.pre.back();
  std::vector<int> out(batch.size());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = static_cast<int>(c);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

double accuracy(const ParamVector& params, const Batch& batch) {
  const std::vector<int> pred = predict(params, batch);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == batch.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

PrivateModel train_private(const Batch& train, const Batch& test,
                           const ModelSpec& spec, const TrainingBudget& budget,
                           std::uint64_t seed) {
  if (budget.epochs < 1) {
    throw ConfigError("private training needs at least one epoch",
                      "private_training.epochs");
  }
  if (train.empty()) throw ConfigError("empty training set for private model");
  Rng init_rng = make_rng(seed, Stream::kInit);
  Rng order_rng = make_rng(seed, Stream::kPrivate);
  PrivateModel out{init_params(spec, init_rng), 0.0};
  std::vector<std::size_t> order(train.size());
  for (int e = 0; e < budget.epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), order_rng);
    for (const Batch& b : split_batches(train, order, budget.batch_size)) {
      out.params = sgd_step(out.params, grad(out.params, b), budget.eta);
    }
  }
  out.score = accuracy(out.params, test);
  return out;
}

}  // namespace nflsim
