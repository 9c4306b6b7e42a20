#include "nflsim/recovery.hpp"

#include <cmath>

#include "nflsim/errors.hpp"

namespace nflsim {

void AdaptationConfig::validate(const ModelSpec& spec) const {
  if (frozen_lower_layers < 0 || frozen_lower_layers >= spec.layer_count()) {
    throw ConfigError("must be in [0, layer count)", "adaptation.frozen_layers");
  }
  if (lambda_mode == LambdaMode::kFixed && fixed_lambda < 0.0) {
    throw ConfigError("must be non-negative", "adaptation.lambda");
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

LambdaDiagnostics lambda_from(const LossAndGrad& at_v, const ParamVector& v,
                              const ParamVector& w_local, const Batch& batch) {
  LambdaDiagnostics d;
  d.loss_div = at_v.loss - loss(w_local, batch);
  const double norm = l2_norm(at_v.grad);
  d.grad_div = norm < 1e-12 ? 0.0 : dot(v - w_local, at_v.grad) / norm;
  d.lambda = sigmoid(d.loss_div) * sigmoid(d.grad_div);
  return d;
}

}  // namespace

LambdaDiagnostics compute_lambda(const ParamVector& v, const ParamVector& w_local,
                                 const Batch& batch) {
  v.require_same_layout(w_local);
  return lambda_from(loss_and_grad(v, batch), v, w_local, batch);
}

double adapted_loss(const ParamVector& v, const ParamVector& w_local,
                    const Batch& batch, double lambda) {
  return loss(v, batch) + lambda * squared_distance(v, w_local);
}

ParamVector adapted_grad(const ParamVector& v, const ParamVector& w_local,
                         const Batch& batch, double lambda) {
  ParamVector g = grad(v, batch);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] += 2.0 * lambda * (v[i] - w_local[i]);
  }
  return g;
}

void mirror_frozen_layers(ParamVector& target, const ParamVector& source,
                          int frozen_lower_layers) {
  target.require_same_layout(source);
  const auto& layers = target.layout().layers();
  for (int l = 0; l < frozen_lower_layers && l < static_cast<int>(layers.size()); ++l) {
    for (std::size_t k = layers[l].begin(); k < layers[l].end(); ++k) {
      target[k] = source[k];
    }
  }
}

AdaptStep adapt_step(const ParamVector& v, const ParamVector& w_local,
                     const Batch& batch, double eta, const AdaptationConfig& cfg) {
  v.require_same_layout(w_local);
  LossAndGrad at_v = loss_and_grad(v, batch);
  AdaptStep out;
  out.diagnostics = lambda_from(at_v, v, w_local, batch);
  if (cfg.lambda_mode == LambdaMode::kFixed) {
    out.diagnostics.lambda = cfg.fixed_lambda;
  }
  ParamVector& g = at_v.grad;
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] += 2.0 * out.diagnostics.lambda * (v[i] - w_local[i]);
  }
  out.adapted = sgd_step(v, g, eta);
  mirror_frozen_layers(out.adapted, w_local, cfg.frozen_lower_layers);
  return out;
}

const ParamVector& inference_model(const std::optional<ParamVector>& adapted,
                                   const ParamVector& global) {
  return adapted ? *adapted : global;
}

}  // namespace nflsim
