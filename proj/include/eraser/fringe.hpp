// Copyright 2026 The eraser-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file fringe.hpp
 * @brief Photon-count synthesis and sinusoidal fringe fitting.
 *
 * Fit model:
 *
 *     y(x) = offset * (1 + V * sin(2*pi*x/period + phase))
 *
 * solved in the separable form y = a + b sin(wx) + c cos(wx). For a fixed
 * angular frequency w the problem is linear in (a, b, c); w is found by a
 * least-squares periodogram, refined on a log grid over [0.5, 2] x that
 * estimate, and finally all four parameters are polished with damped
 * Gauss-Newton steps.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eraser/errors.hpp"
#include "eraser/optics.hpp"

namespace eraser {

enum class SampleKind { AnalyticRate, PoissonCounts };

struct FringeSamples {
  std::vector<double> x;
  std::vector<double> y;
  SampleKind kind = SampleKind::AnalyticRate;
  double exposure = 0.0;  // seconds, counts only

  /// Throws InvalidParameter on size mismatch, fewer than 8 points or a
  /// non-increasing x.
  void validate() const {
    if (x.size() != y.size()) throw InvalidParameter("fringe samples: |x| != |y|");
    if (x.size() < 8) throw InvalidParameter("fringe samples: need at least 8 points");
    for (std::size_t k = 1; k < x.size(); ++k) {
      if (!(x[k] > x[k - 1])) throw InvalidParameter("fringe samples: x must be strictly increasing");
    }
  }
};

struct FringeFit {
  double offset = 0.0;
  double amplitude = 0.0;
  double period = 0.0;
  double phase = 0.0;  // [0, 2*pi)
  double visibility = 0.0;
  double residual_rms = 0.0;
  bool converged = false;
  int iterations = 0;
};

// ---------------------------------------------------------------------------
// Counts

/// Per-(seed, stream, index) generator state. splitmix64 finalizer over the
/// packed key, so points can be drawn in any order or in parallel.
inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ stream) ^ index);
}

inline std::int64_t poisson_draw(double mean, std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t index) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw ContractViolation("poisson_draw: mean must be finite and non-negative");
  }
  if (mean == 0.0) return 0;
  std::mt19937_64 gen(mix_key(seed, stream, index));
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(gen);
}

/// y[i] ~ Poisson(scale * rate(x[i]) * exposure).
template <typename RateFn>
FringeSamples synthesize_counts(std::span<const double> x, RateFn&& rate, double scale,
                                double exposure, std::uint64_t seed, std::uint64_t stream = 0) {
  FringeSamples s;
  s.kind = SampleKind::PoissonCounts;
  s.exposure = exposure;
  s.x.assign(x.begin(), x.end());
  s.y.reserve(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double mean = scale * rate(x[k]) * exposure;
    if (mean < 0.0) throw ContractViolation("synthesize_counts: negative rate");
    s.y.push_back(static_cast<double>(poisson_draw(mean, seed, stream, k)));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Model-free visibility

inline double visibility_from_extrema(std::span<const double> y) {
  if (y.empty()) throw InvalidParameter("visibility_from_extrema: no samples");
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*hi + *lo == 0.0) throw UndefinedVisibility("visibility_from_extrema: max + min == 0");
  return (*hi - *lo) / (*hi + *lo);
}

inline double visibility_from_extrema(const FringeSamples& s) { return visibility_from_extrema(s.y); }

// ---------------------------------------------------------------------------
// Spectrum of a uniformly sampled series

struct SpectrumBin {
  double frequency;
  double power;
};

/// |DFT|^2 of the mean-removed series for bins 1..N/2.
inline std::vector<SpectrumBin> power_spectrum(std::span<const double> y, double dx) {
  const std::size_t n = y.size();
  if (n < 2 || !(dx > 0.0)) throw InvalidParameter("power_spectrum: need >= 2 samples and dx > 0");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  std::vector<SpectrumBin> out;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    double re = 0.0;
    double im = 0.0;
    const double w = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      re += (y[j] - mean) * std::cos(w * static_cast<double>(j));
      im -= (y[j] - mean) * std::sin(w * static_cast<double>(j));
    }
    out.push_back({static_cast<double>(k) / (static_cast<double>(n) * dx), re * re + im * im});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sinusoid fitting

namespace detail {

struct LinearSolution {
  double a = 0.0, b = 0.0, c = 0.0;
  double ssr = 0.0;
};

inline std::vector<double> fit_weights(const FringeSamples& s) {
  std::vector<double> w(s.y.size(), 1.0);
  if (s.kind == SampleKind::PoissonCounts) {
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = 1.0 / std::max(s.y[k], 1.0);
  }
  return w;
}

/// Weighted linear LS for y = a + b sin(wx) + c cos(wx) at fixed w.
inline LinearSolution solve_linear(const FringeSamples& s, const std::vector<double>& wts,
                                   double omega) {
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d aty = Eigen::Vector3d::Zero();
  const double x0 = s.x.front();
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    // The reference point x0 only conditions the solve; it is removed below.
    const double arg = omega * (s.x[k] - x0);
    const Eigen::Vector3d row(1.0, std::sin(arg), std::cos(arg));
    ata += wts[k] * row * row.transpose();
    aty += wts[k] * s.y[k] * row;
  }
  const Eigen::Vector3d sol = ata.ldlt().solve(aty);
  LinearSolution out;
  // Rotate (b', c') back to the unshifted origin.
  const double ph = -omega * x0;
  out.a = sol(0);
  out.b = sol(1) * std::cos(ph) - sol(2) * std::sin(ph);
  out.c = sol(1) * std::sin(ph) + sol(2) * std::cos(ph);
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    const double arg = omega * s.x[k];
    const double r = s.y[k] - out.a - out.b * std::sin(arg) - out.c * std::cos(arg);
    out.ssr += wts[k] * r * r;
  }
  return out;
}

inline double best_omega_on_grid(const FringeSamples& s, const std::vector<double>& wts,
                                 const std::vector<double>& omegas) {
  double best = omegas.front();
  double best_ssr = std::numeric_limits<double>::infinity();
  for (double om : omegas) {
    const double ssr = solve_linear(s, wts, om).ssr;
    if (ssr < best_ssr) {
      best_ssr = ssr;
      best = om;
    }
  }
  return best;
}

}  // namespace detail

/// Least-squares periodogram peak: the period whose sinusoid explains the
/// most variance, searched between the scan span and twice the median step.
inline double dominant_period(const FringeSamples& s) {
  s.validate();
  const auto wts = detail::fit_weights(s);
  const double span = s.x.back() - s.x.front();
  std::vector<double> steps(s.x.size() - 1);
  for (std::size_t k = 1; k < s.x.size(); ++k) steps[k - 1] = s.x[k] - s.x[k - 1];
  std::nth_element(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(steps.size() / 2),
                   steps.end());
  const double dx = steps[steps.size() / 2];
  const double f_lo = 1.0 / span;
  const double f_hi = 1.0 / (2.0 * dx);
  // Oversample the natural resolution 1/span by 8.
  const double df = 1.0 / (8.0 * span);
  std::vector<double> omegas;
  for (double f = f_lo; f <= f_hi; f += df) omegas.push_back(kTwoPi * f);
  if (omegas.empty()) omegas.push_back(kTwoPi * f_lo);
  return kTwoPi / detail::best_omega_on_grid(s, wts, omegas);
}

struct FitOptions {
  int max_iterations = 100;
  int period_grid_points = 400;
};

inline FringeFit fit_sinusoid(const FringeSamples& s, std::optional<double> period_hint = {},
                              const FitOptions& opt = {}) {
  s.validate();
  if (period_hint && !(*period_hint > 0.0)) {
    throw InvalidParameter("fit_sinusoid: period hint must be positive");
  }
  const auto wts = detail::fit_weights(s);
  const std::size_t n = s.x.size();

  // Coarse period: log-spaced grid over [0.5, 2] x the estimate.
  const double p0 = period_hint ? *period_hint : dominant_period(s);
  std::vector<double> omegas(static_cast<std::size_t>(std::max(opt.period_grid_points, 2)));
  for (std::size_t k = 0; k < omegas.size(); ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(omegas.size() - 1);
    omegas[k] = kTwoPi / (p0 * std::pow(2.0, 2.0 * u - 1.0));
  }
  const double omega0 = detail::best_omega_on_grid(s, wts, omegas);
  const auto lin = detail::solve_linear(s, wts, omega0);

  // Damped Gauss-Newton on (a, b, c, omega) in centred coordinates
  // u = x - mid, with the omega column scaled by the half span.
  const double mid = 0.5 * (s.x.front() + s.x.back());
  const double half = std::max(0.5 * (s.x.back() - s.x.front()), 1e-300);
  std::vector<double> u(n);
  for (std::size_t k = 0; k < n; ++k) u[k] = s.x[k] - mid;

  // Same sinusoid with its origin moved to `mid`.
  const double shift = omega0 * mid;
  Eigen::Vector4d theta(lin.a, lin.b * std::cos(shift) - lin.c * std::sin(shift),
                        lin.b * std::sin(shift) + lin.c * std::cos(shift), omega0);

  auto weighted_ssr = [&](const Eigen::Vector4d& th) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double arg = th(3) * u[k];
      const double r = s.y[k] - th(0) - th(1) * std::sin(arg) - th(2) * std::cos(arg);
      acc += wts[k] * r * r;
    }
    return acc;
  };

  double ssr = weighted_ssr(theta);
  double lambda = 1e-3;
  int it = 0;
  bool converged = false;
  for (; it < opt.max_iterations && !converged; ++it) {
    Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
    Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
    for (std::size_t k = 0; k < n; ++k) {
      const double arg = theta(3) * u[k];
      const double sn = std::sin(arg);
      const double cs = std::cos(arg);
      const double r = s.y[k] - theta(0) - theta(1) * sn - theta(2) * cs;
      const Eigen::Vector4d j(1.0, sn, cs, (theta(1) * cs - theta(2) * sn) * u[k] / half);
      jtj += wts[k] * j * j.transpose();
      jtr += wts[k] * r * j;
    }
    const double diag_floor = 1e-15 * std::max(jtj.diagonal().maxCoeff(), 1e-300);
    bool accepted = false;
    for (int tries = 0; tries < 40 && !accepted; ++tries) {
      Eigen::Matrix4d damped = jtj;
      for (int d = 0; d < 4; ++d) damped(d, d) += lambda * std::max(jtj(d, d), diag_floor);
      Eigen::Vector4d step = damped.ldlt().solve(jtr);
      if (!step.allFinite()) break;
      step(3) /= half;
      const Eigen::Vector4d trial = theta + step;
      const double trial_ssr = weighted_ssr(trial);
      if (trial_ssr <= ssr) {
        const bool tiny = std::abs(step(3)) <= 1e-14 * std::abs(trial(3)) &&
                          step.head<3>().norm() <= 1e-13 * (trial.head<3>().norm() + 1e-300);
        const bool flat = ssr - trial_ssr <= 1e-15 * ssr;
        theta = trial;
        ssr = trial_ssr;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        converged = tiny || flat;
      } else {
        lambda *= 10.0;
      }
    }
    // No downhill step at any damping: already at a minimum.
    if (!accepted) converged = true;
  }

  double b = theta(1);
  const double c = theta(2);
  double om = theta(3);
  if (om < 0.0) {
    // b sin(-w u) + c cos(-w u) = -b sin(w u) + c cos(w u)
    om = -om;
    b = -b;
  }

  FringeFit fit;
  fit.offset = theta(0);
  fit.amplitude = std::hypot(b, c);
  fit.period = kTwoPi / om;
  // A sin(w (x - mid) + phi_c) = A sin(w x + phi_c - w mid)
  double ph = std::remainder(std::atan2(c, b) - om * mid, kTwoPi);
  if (ph < 0.0) ph += kTwoPi;
  if (ph >= kTwoPi) ph = 0.0;
  fit.phase = ph;
  fit.visibility = fit.offset != 0.0 ? fit.amplitude / fit.offset : 0.0;

  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double arg = om * u[k];
    const double r = s.y[k] - fit.offset - b * std::sin(arg) - c * std::cos(arg);
    acc += r * r;
  }
  fit.residual_rms = std::sqrt(acc / static_cast<double>(n));
  fit.converged = converged && std::isfinite(fit.period) && fit.offset > 0.0;
  fit.iterations = it;
  return fit;
}

}  // namespace eraser
