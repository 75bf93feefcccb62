#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qem/errors.hpp"
#include "qem/tensor.hpp"

namespace qem {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment buffers shaped like the parameter list they were
// initialized from, plus the shared step counter used for bias correction.
struct AdamState {
  AdamConfig cfg;
  long long step = 0;
  std::vector<Tensor> m, v;

  explicit AdamState(const AdamConfig& c = {}) : cfg(c) {}

  void init(const std::vector<Tensor>& params) {
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.emplace_back(p.rows, p.cols);
      v.emplace_back(p.rows, p.cols);
    }
    step = 0;
  }
};

inline void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
                      AdamState& st) {
  if (params.size() != grads.size() || params.size() != st.m.size())
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i].same_shape(grads[i]) || !params[i].same_shape(st.m[i]))
      throw std::invalid_argument("adam_step: shape mismatch at parameter " +
                                  std::to_string(i));
    for (double g : grads[i].v)
      if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");
  }
  ++st.step;
  const double c1 = 1.0 - std::pow(st.cfg.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.cfg.beta2, static_cast<double>(st.step));
  for (size_t i = 0; i < params.size(); ++i) {
    double* w = params[i].v.data();
    const double* g = grads[i].v.data();
    double* m = st.m[i].v.data();
    double* v = st.v[i].v.data();
    const size_t n = params[i].size();
    for (size_t k = 0; k < n; ++k) {
      m[k] = st.cfg.beta1 * m[k] + (1.0 - st.cfg.beta1) * g[k];
      v[k] = st.cfg.beta2 * v[k] + (1.0 - st.cfg.beta2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      w[k] -= st.cfg.lr * mhat / (std::sqrt(vhat) + st.cfg.eps);
    }
  }
}

}  // namespace qem
