#pragma once

#include <string>
#include <vector>

#include "crgan/tensor.hpp"

namespace crgan {

/// Trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros_like(value)) {}

  void zero_grad() { grad = Tensor::zeros_like(value); }
};

using ParameterList = std::vector<Parameter*>;

inline void zero_grads(const ParameterList& params) {
  for (Parameter* p : params) p->zero_grad();
}

inline std::size_t count_scalars(const ParameterList& params) {
  std::size_t n = 0;
  for (const Parameter* p : params) n += p->value.size();
  return n;
}

}  // namespace crgan
