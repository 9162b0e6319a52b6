#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "omra/classifier.hpp"
#include "omra/frame.hpp"

namespace omra::testing {

inline Sequence moving(int w, int h, int n, double vx, double vy, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.width = w;
  spec.height = h;
  spec.num_frames = n;
  spec.vx = vx;
  spec.vy = vy;
  spec.texture_seed = seed;
  return generate_synthetic(spec);
}

inline Tensor random_tensor(int c, int size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Tensor t(c, size, size);
  for (auto& v : t.data) v = u(rng);
  return t;
}

struct GradCheck {
  std::size_t coordinates = 0;
  std::size_t agreeing = 0;
  double fraction() const { return coordinates ? static_cast<double>(agreeing) / coordinates : 1.0; }
};

// Central differences over every parameter against the analytic backward pass.
inline GradCheck check_gradients(TinyCnn net, const Tensor& input,
                                 const std::function<double(const std::vector<double>&)>& loss,
                                 const std::function<std::vector<double>(const std::vector<double>&)>& dloss,
                                 double step = 1e-4, double tolerance = 1e-4) {
  TinyCnn::Cache cache;
  auto logits = net.forward(input, cache);
  std::vector<double> grad(net.params().size(), 0.0);
  auto dl = dloss(logits);
  net.backward(cache, dl, grad);

  GradCheck out;
  auto& p = net.params();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + step;
    const double up = loss(net.forward(input));
    p[i] = orig - step;
    const double down = loss(net.forward(input));
    p[i] = orig;
    const double numeric = (up - down) / (2 * step);
    const double scale = std::max(std::abs(numeric), std::abs(grad[i]));
    const double rel = scale < 1e-10 ? 0.0 : std::abs(numeric - grad[i]) / scale;
    ++out.coordinates;
    if (rel <= tolerance) ++out.agreeing;
  }
  return out;
}

}  // namespace omra::testing
