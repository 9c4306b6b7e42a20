#pragma once

#include <cstddef>

#include "nflsim/model.hpp"

namespace nflsim {

// One client's upload for a round.
struct ClientReport {
  int client_id = 0;
  ParamVector updated_params;  // w_i^r
  double beta_hat = 0.0;       // β̂_i
  std::size_t n_i = 1;
};

}  // namespace nflsim
