#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nflsim/rng.hpp"

namespace nflsim {

enum class Activation { kIdentity, kRelu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Dense feed-forward classifier: input dim, hidden dims..., class count.
// Hidden layers use `activation`; the output layer is always softmax with
// cross-entropy loss.
struct ModelSpec {
  std::vector<int> layer_sizes;
  Activation activation = Activation::kRelu;

  int input_dim() const { return layer_sizes.front(); }
  int class_count() const { return layer_sizes.back(); }
  int layer_count() const { return static_cast<int>(layer_sizes.size()) - 1; }

  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

// Position of one dense layer inside the flat parameter vector. Weights are
// stored row-major as (out x in), followed by the out-sized bias.
struct LayerSlice {
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
  int out = 0;
  int in = 0;

  std::size_t begin() const { return weight_offset; }
  std::size_t end() const { return bias_offset + static_cast<std::size_t>(out); }
  bool operator==(const LayerSlice&) const = default;
};

class Layout {
 public:
  static std::shared_ptr<const Layout> for_model(const ModelSpec& spec);
  // A layout with no model behind it; a single pseudo-layer spans all values.
  static std::shared_ptr<const Layout> flat(std::size_t n);

  std::size_t size() const { return size_; }
  const std::vector<LayerSlice>& layers() const { return layers_; }
  const std::optional<ModelSpec>& spec() const { return spec_; }

  bool operator==(const Layout& other) const {
    return size_ == other.size_ && layers_ == other.layers_ &&
           spec_ == other.spec_;
  }

 private:
  std::size_t size_ = 0;
  std::vector<LayerSlice> layers_;
  std::optional<ModelSpec> spec_;
};

// Flat model parameters tied to a layout.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::shared_ptr<const Layout> layout, double fill = 0.0);
  ParamVector(std::shared_ptr<const Layout> layout, std::vector<double> values);

  static ParamVector flat(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  const Layout& layout() const { return *layout_; }
  const std::shared_ptr<const Layout>& layout_ptr() const { return layout_; }
  bool same_layout(const ParamVector& other) const;
  // Throws StructuralError unless `other` shares this layout.
  void require_same_layout(const ParamVector& other) const;

  bool all_finite() const;
  // FNV-1a over the raw bytes; used to fingerprint global-model trajectories.
  std::uint64_t fingerprint() const;

  bool operator==(const ParamVector& other) const {
    return same_layout(other) && values_ == other.values_;
  }

  ParamVector& operator+=(const ParamVector& other);
  ParamVector& operator-=(const ParamVector& other);
  ParamVector& operator*=(double s);

 private:
  std::shared_ptr<const Layout> layout_;
  std::vector<double> values_;
};

ParamVector operator+(ParamVector a, const ParamVector& b);
ParamVector operator-(ParamVector a, const ParamVector& b);
ParamVector operator*(ParamVector a, double s);
double dot(const ParamVector& a, const ParamVector& b);
double l2_norm(const ParamVector& a);
double squared_distance(const ParamVector& a, const ParamVector& b);

// Rows are examples.
struct Batch {
  Eigen::MatrixXd features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
};

Batch take_rows(const Batch& source, std::span<const std::size_t> rows);
// Consecutive slices of at most `batch_size` rows (the last may be short),
// in the order given by `order`.
std::vector<Batch> split_batches(const Batch& source,
                                 std::span<const std::size_t> order,
                                 int batch_size);

ParamVector init_params(const ModelSpec& spec, Rng& rng);

double loss(const ParamVector& params, const Batch& batch);
ParamVector grad(const ParamVector& params, const Batch& batch);

struct LossAndGrad {
  double loss = 0.0;
  ParamVector grad;
};
LossAndGrad loss_and_grad(const ParamVector& params, const Batch& batch);

ParamVector sgd_step(const ParamVector& params, const ParamVector& g,
                     double eta);

// Argmax predictions; ties go to the lowest class index.
std::vector<int> predict(const ParamVector& params, const Batch& batch);
double accuracy(const ParamVector& params, const Batch& batch);

struct TrainingBudget {
  int epochs = 1;
  double eta = 0.1;
  int batch_size = 10;
};

struct PrivateModel {
  ParamVector params;
  double score = 0.0;  // accuracy on the client's full test set (P_i)
};

// Stand-alone mini-batch SGD on one client's training data.
PrivateModel train_private(const Batch& train, const Batch& test,
                           const ModelSpec& spec, const TrainingBudget& budget,
                           std::uint64_t seed);

}  // namespace nflsim
