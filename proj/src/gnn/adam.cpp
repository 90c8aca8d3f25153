// Copyright 2026 The fgvasp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <cmath>

#include <fmt/format.h>

#include "fgv/error.hpp"
#include "fgv/gnn.hpp"

namespace fgv {

template <class T>
BasicAdamState<T> BasicAdamState<T>::for_model(const BasicSageModel<T>& model, const AdamConfig& config) {
  if (!(config.learning_rate > 0) || config.weight_decay < 0 || !(config.beta1 >= 0 && config.beta1 < 1) ||
      !(config.beta2 >= 0 && config.beta2 < 1) || !(config.epsilon > 0)) {
    throw InvalidArgument("AdamConfig: invalid hyperparameters");
  }
  return {config, BasicSageModel<T>::zeros(model.in_dim(), model.hidden()),
          BasicSageModel<T>::zeros(model.in_dim(), model.hidden()), 0};
}

template <class T>
void adam_update(std::span<T> params, std::span<const T> grads, std::span<T> first_moment,
                 std::span<T> second_moment, std::uint64_t step, const AdamConfig& config) {
  if (grads.size() != params.size() || first_moment.size() != params.size() ||
      second_moment.size() != params.size()) {
    throw ShapeError("adam_update: tensor sizes differ");
  }
  if (step == 0) throw InvalidArgument("adam_update: step is 1-based");
  const double t = static_cast<double>(step);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);
  const double lr = config.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    double p = params[i];
    const double m = config.beta1 * first_moment[i] + (1.0 - config.beta1) * g;
    const double v = config.beta2 * second_moment[i] + (1.0 - config.beta2) * g * g;
    p -= lr * config.weight_decay * p;
    p -= lr * (m / bias1) / (std::sqrt(v / bias2) + config.epsilon);
    first_moment[i] = static_cast<T>(m);
    second_moment[i] = static_cast<T>(v);
    params[i] = static_cast<T>(p);
  }
}

template <class T>
void adam_step(BasicSageModel<T>& model, const BasicSageModel<T>& grads, BasicAdamState<T>& state) {
  if (!model.same_shape(grads) || !model.same_shape(state.first_moment) || !model.same_shape(state.second_moment)) {
    throw ShapeError("adam_step: model, gradient and optimiser shapes differ");
  }
  ++state.step;
  auto p = model.tensors();
  auto g = grads.tensors();
  auto m = state.first_moment.tensors();
  auto v = state.second_moment.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto n = static_cast<std::size_t>(p[i]->size());
    adam_update<T>({p[i]->data(), n}, {g[i]->data(), n}, {m[i]->data(), n}, {v[i]->data(), n}, state.step,
                   state.config);
  }
}

template struct BasicAdamState<float>;
template struct BasicAdamState<double>;
template void adam_update(std::span<float>, std::span<const float>, std::span<float>, std::span<float>,
                          std::uint64_t, const AdamConfig&);
template void adam_update(std::span<double>, std::span<const double>, std::span<double>, std::span<double>,
                          std::uint64_t, const AdamConfig&);
template void adam_step(BasicSageModel<float>&, const BasicSageModel<float>&, BasicAdamState<float>&);
template void adam_step(BasicSageModel<double>&, const BasicSageModel<double>&, BasicAdamState<double>&);

}  // namespace fgv
