#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "radiocon/ops.hpp"
#include "radiocon/tensor.hpp"

// Central finite differences against the tape gradient.
namespace radiocon::testing {

using ad::Tape;
using ad::Tensor;

using ScalarFn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

struct GradCheck {
  double relative_error = 0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double max_abs_error = 0;
};

inline GradCheck check_gradient(const ScalarFn& f, std::vector<Tensor> inputs, double eps = 1e-3) {
  for (auto& t : inputs) t.clear_grad();
  {
    Tape tape;
    Tensor out = f(tape, inputs);
    tape.backward(out);
  }
  auto evaluate = [&] {
    Tape tape;
    return static_cast<double>(f(tape, inputs).item());
  };
  double diff_sq = 0, analytic_sq = 0, numeric_sq = 0, max_abs = 0;
  for (auto& t : inputs) {
    if (!t.requires_grad()) continue;
    std::vector<float> analytic = t.has_grad() ? std::vector<float>(t.grad().begin(), t.grad().end())
                                               : std::vector<float>(t.numel(), 0.0f);
    auto values = t.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const float saved = values[i];
      values[i] = static_cast<float>(saved + eps);
      const double plus = evaluate();
      values[i] = static_cast<float>(saved - eps);
      const double minus = evaluate();
      values[i] = saved;
      const double numeric = (plus - minus) / (2 * eps);
      const double d = analytic[i] - numeric;
      diff_sq += d * d;
      analytic_sq += double(analytic[i]) * analytic[i];
      numeric_sq += numeric * numeric;
      max_abs = std::max(max_abs, std::abs(d));
    }
  }
  const double scale = std::max({std::sqrt(analytic_sq), std::sqrt(numeric_sq), 1e-12});
  return {std::sqrt(diff_sq) / scale, max_abs};
}

/// Which side of every relu and max-pool switch the forward pass landed on:
/// relu output signs and the first-index argmax of each pooling window.
inline std::vector<std::uint32_t> activation_pattern(const Tape& tape) {
  std::vector<std::uint32_t> pattern;
  for (std::size_t id = 0; id < tape.size(); ++id) {
    if (tape.kind(id) == "relu") {
      for (float v : tape.value_of(id)) pattern.push_back(v > 0.0f);
    } else if (tape.kind(id) == "max_pool2d" && !tape.inputs_of(id).empty()) {
      const std::size_t in = tape.inputs_of(id)[0];
      const auto& is = tape.shape_of(in);
      const auto& os = tape.shape_of(id);
      const std::size_t k = is[1] / os[1];
      const auto x = tape.value_of(in);
      for (std::size_t c = 0; c < os[0]; ++c) {
        for (std::size_t oy = 0; oy < os[1]; ++oy) {
          for (std::size_t ox = 0; ox < os[2]; ++ox) {
            std::uint32_t best = 0;
            float top = -std::numeric_limits<float>::infinity();
            for (std::size_t j = 0; j < k * k; ++j) {
              const float v = x[(c * is[1] + oy * k + j / k) * is[2] + ox * k + j % k];
              if (v > top) {
                top = v;
                best = static_cast<std::uint32_t>(j);
              }
            }
            pattern.push_back(best);
          }
        }
      }
    }
  }
  return pattern;
}

struct PiecewiseCheck {
  double relative_error = 0;
  std::size_t compared = 0;
  std::size_t straddled = 0;  // coordinates whose step crossed a switch
};

/// Finite differences restricted to coordinates whose steps leave the
/// activation pattern unchanged, where the function is smooth. Whole networks
/// are strongly curved and float32 noise rules out tiny steps, so the central
/// difference is Richardson-extrapolated from steps h and h/2.
inline PiecewiseCheck check_gradient_piecewise(const ScalarFn& f, std::vector<Tensor> inputs,
                                               double h = 1e-2) {
  for (auto& t : inputs) t.clear_grad();
  std::vector<std::uint32_t> base;
  {
    Tape tape;
    Tensor out = f(tape, inputs);
    base = activation_pattern(tape);
    tape.backward(out);
  }
  PiecewiseCheck r;
  double diff_sq = 0, analytic_sq = 0, numeric_sq = 0;
  for (auto& t : inputs) {
    if (!t.requires_grad()) continue;
    std::vector<float> analytic = t.has_grad() ? std::vector<float>(t.grad().begin(), t.grad().end())
                                               : std::vector<float>(t.numel(), 0.0f);
    auto values = t.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const float saved = values[i];
      bool same = true;
      auto at = [&](double offset) {
        values[i] = static_cast<float>(saved + offset);
        Tape tape;
        const double y = f(tape, inputs).item();
        same = same && activation_pattern(tape) == base;
        values[i] = saved;
        return y;
      };
      const double wide = (at(h) - at(-h)) / (2 * h);
      const double narrow = (at(h / 2) - at(-h / 2)) / h;
      if (!same) {
        ++r.straddled;
        continue;
      }
      ++r.compared;
      const double numeric = (4 * narrow - wide) / 3;
      diff_sq += (analytic[i] - numeric) * (analytic[i] - numeric);
      analytic_sq += double(analytic[i]) * analytic[i];
      numeric_sq += numeric * numeric;
    }
  }
  const double scale = std::max({std::sqrt(analytic_sq), std::sqrt(numeric_sq), 1e-12});
  r.relative_error = std::sqrt(diff_sq) / scale;
  return r;
}

/// Uniform values in [-1, 1] kept at least `margin` away from zero, so
/// kinks (relu, |x|) are not straddled by the finite-difference step.
inline std::vector<float> random_values(std::size_t n, std::mt19937_64& rng, double margin = 0.05) {
  std::uniform_real_distribution<double> mag(margin, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(sign(rng) ? mag(rng) : -mag(rng));
  return v;
}

inline Tensor random_param(ad::Shape shape, std::mt19937_64& rng, double margin = 0.05) {
  const auto n = ad::shape_numel(shape);
  return Tensor::parameter(std::move(shape), random_values(n, rng, margin));
}

/// Random linear functional of a tensor: makes any output a scalar with a
/// non-degenerate gradient.
inline Tensor project(Tape& tape, const Tensor& x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto n = x.numel();
  Tensor w = Tensor::constant({1, n}, random_values(n, rng, 0.1));
  Tensor flat = ad::reshape(tape, x, {n, 1});
  return ad::reshape(tape, ad::matmul(tape, w, flat), {1});
}

}  // namespace radiocon::testing
