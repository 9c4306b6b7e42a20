#pragma once

#include "nflsim/client.hpp"
#include "nflsim/config.hpp"
#include "nflsim/data.hpp"

namespace nflsim::testing {

// A small client holding `per_class` examples of each class, with data
// shaped for a softmax-regression model over `dim` features.
inline ClientState toy_client(int id, int classes = 3, int dim = 2, int per_class = 12,
                              std::uint64_t seed = 5) {
  const LabeledDataset d = gen_synthetic(classes, dim, per_class, 0.5, seed, 2.0);
  ClientState c;
  c.client_id = id;
  c.train = d.examples;
  c.test = d.examples;
  for (int k = 0; k < classes; ++k) c.classes.push_back(k);
  c.private_score = 0.5;
  return c;
}

inline ModelSpec softmax(int dim, int classes) {
  ModelSpec s;
  s.layer_sizes = {dim, classes};
  return s;
}

// A seconds-scale scenario used by the protocol and artifact tests.
inline SimConfig toy_config() {
  SimConfig c = preset("nfl_default");
  c.num_clients = 10;
  c.active_fraction = 0.5;
  c.rounds = 30;
  c.data.classes = 4;
  c.data.dim = 6;
  c.data.per_class = 60;
  c.hidden = {8};
  c.partition.min_client_size = 6;
  c.private_training.epochs = 5;
  c.nr = 5;
  c.window_c = 5;
  c.eval_every = 3;
  return c;
}

}  // namespace nflsim::testing
