#include "nflsim/client.hpp"

#include <algorithm>
#include <numeric>

#include "nflsim/errors.hpp"

namespace nflsim {

std::string to_string(Behavior b) {
  switch (b) {
    case Behavior::kHonestGuard: return "honest_guard";
    case Behavior::kVanilla: return "vanilla";
    case Behavior::kAttacker: return "attacker";
  }
  return "honest_guard";
}

ClientUpdateResult client_update(ClientState& client, const ParamVector& w_prev,
                                 const ClientUpdateOptions& options,
                                 const LocalTrainParams& params,
                                 std::uint64_t seed, int round) {
  if (client.train.empty()) {
    throw SkipClient("client " + std::to_string(client.client_id) +
                     " has no training data");
  }
  Rng rng = make_rng(seed, Stream::kClient,
                     static_cast<std::uint64_t>(client.client_id),
                     static_cast<std::uint64_t>(round));
  std::vector<std::size_t> order(client.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  // Batches are fixed for the round; every epoch walks them in this order.
  const std::vector<Batch> batches = split_batches(client.train, order, params.batch_size);

  ClientUpdateResult out;
  if (options.nfl_flag && !client.adapted) {
    client.adapted = w_prev;
    out.initialized_adapted = true;
  }

  const bool use_adapted =
      client.adapted && (options.nfl_flag || options.estimate_with_adapted);
  const ParamVector& eval_model = use_adapted ? *client.adapted : w_prev;
  out.report.beta_hat =
      estimate_client_gain(eval_model, batches.front(), client.private_score);

  ParamVector w = w_prev;
  for (int e = 0; e < params.epochs; ++e) {
    for (const Batch& batch : batches) {
      w = sgd_step(w, grad(w, batch), params.eta);
      if (!options.nfl_flag) continue;
      AdaptStep step = adapt_step(*client.adapted, w, batch, params.eta, params.adapt);
      client.adapted = std::move(step.adapted);
      ++out.adapt_steps;
      if (options.trace_lambda) out.lambda_trace.push_back(step.diagnostics);
    }
  }

  out.report.client_id = client.client_id;
  out.report.updated_params = std::move(w);
  out.report.n_i = client.n_i();
  return out;
}

}  // namespace nflsim
