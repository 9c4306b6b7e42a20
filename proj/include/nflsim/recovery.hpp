#pragma once

#include <optional>
#include <string>

#include "nflsim/model.hpp"

namespace nflsim {

enum class LambdaMode { kDynamic, kFixed };

struct AdaptationConfig {
  // Number of lowest dense layers the adapted model shares with the
  // client's local model instead of learning itself.
  int frozen_lower_layers = 0;
  LambdaMode lambda_mode = LambdaMode::kDynamic;
  double fixed_lambda = 0.0;  // used only with LambdaMode::kFixed

  void validate(const ModelSpec& spec) const;
};

struct LambdaDiagnostics {
  double loss_div = 0.0;
  double grad_div = 0.0;
  double lambda = 0.0;
};

double sigmoid(double x);

// λ = σ(loss_div)·σ(grad_div), with
//   loss_div = ℓ(v, b) − ℓ(w, b)
//   grad_div = ⟨v − w, ∇ℓ(v, b)⟩ / ‖∇ℓ(v, b)‖   (0 when the norm is < 1e-12)
LambdaDiagnostics compute_lambda(const ParamVector& v, const ParamVector& w_local,
                                 const Batch& batch);

// ℓ(v, b) + λ‖v − w‖².
double adapted_loss(const ParamVector& v, const ParamVector& w_local,
                    const Batch& batch, double lambda);

// ∇ℓ(v, b) + 2λ(v − w) with λ held constant.
ParamVector adapted_grad(const ParamVector& v, const ParamVector& w_local,
                         const Batch& batch, double lambda);

struct AdaptStep {
  ParamVector adapted;
  LambdaDiagnostics diagnostics;
};

// One SGD step on the adapted objective. Coordinates of the frozen lower
// layers are copied from `w_local` instead of being updated.
AdaptStep adapt_step(const ParamVector& v, const ParamVector& w_local,
                     const Batch& batch, double eta, const AdaptationConfig& cfg);

// Copies the frozen lower layers of `source` into `target`.
void mirror_frozen_layers(ParamVector& target, const ParamVector& source,
                          int frozen_lower_layers);

// The model a client uses for local inference: its adapted model once it
// has one, otherwise the latest global model.
const ParamVector& inference_model(const std::optional<ParamVector>& adapted,
                                   const ParamVector& global);

}  // namespace nflsim
