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
 * @file perturbative.hpp
 * @brief First-order biphoton algebra for the coupled interferometers.
 *
 * A detector field is written as a linear combination of the unperturbed
 * input modes,
 *
 *     F = sum_m ann[m] a_m + sum_m cre[m] a_m^dag,
 *
 * where ann is zeroth order and cre is first order in the conversion
 * amplitudes. Fields are built by pulling the detector slot backwards through
 * eraser_network() and discarding every product of two conversion
 * amplitudes. Rates are vacuum expectations of normally ordered products:
 *
 *     singles     <F^dag F>             = sum_m |cre[m]|^2
 *     coincidence <A^dag B^dag B A>     = |sum_m B.ann[m] A.cre[m]|^2
 *
 * Rates are in normalized units (proportionality constants set to 1).
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "eraser/errors.hpp"
#include "eraser/optics.hpp"

namespace eraser {

class FieldOperator {
 public:
  using Coefficients = std::array<cd, kModeCount>;

  FieldOperator(ModeId detector_slot, SetupParams origin) : origin_(std::move(origin)) {
    ann_.fill(cd{});
    cre_.fill(cd{});
    ann_[index_of(detector_slot)] = 1.0;
  }

  cd ann(ModeId m) const { return ann_[index_of(m)]; }
  cd cre(ModeId m) const { return cre_[index_of(m)]; }
  bool has_ann(ModeId m) const { return ann(m) != cd{}; }
  bool has_cre(ModeId m) const { return cre(m) != cd{}; }
  const Coefficients& ann() const { return ann_; }
  const Coefficients& cre() const { return cre_; }
  const SetupParams& origin() const { return origin_; }

  /// Heisenberg substitution for one element, truncated at first order.
  void pull_back(const Element& e) { std::visit([this](const auto& el) { apply(el); }, e); }

 private:
  void apply(const Splitter& s) {
    // a_k -> sum_j M_kj a_j for k in {port1, port2}.
    const auto m = mixing_matrix(s.bs);
    const std::size_t p[2] = {index_of(s.port1), index_of(s.port2)};
    Coefficients ann = ann_;
    Coefficients cre = cre_;
    for (int j = 0; j < 2; ++j) {
      ann[p[j]] = 0.0;
      cre[p[j]] = 0.0;
      for (int k = 0; k < 2; ++k) {
        ann[p[j]] += ann_[p[k]] * m(k, j);
        cre[p[j]] += cre_[p[k]] * std::conj(m(k, j));
      }
    }
    ann_ = ann;
    cre_ = cre;
  }

  void apply(const PhaseShift& s) {
    const cd phase = std::polar(1.0, s.phi);
    ann_[index_of(s.mode)] *= phase;
    cre_[index_of(s.mode)] *= std::conj(phase);
  }

  void apply(const Squeezer& s) {
    // a -> a + xi b^dag, b -> b + xi a^dag. The conj(xi) * cre feedback into
    // ann is second order and dropped.
    const std::size_t a = index_of(s.signal);
    const std::size_t b = index_of(s.idler);
    cre_[b] += s.xi * ann_[a];
    cre_[a] += s.xi * ann_[b];
  }

  void apply(const Block& s) {
    const std::size_t m = index_of(s.mode);
    const std::size_t x = index_of(s.absorber);
    std::swap(ann_[m], ann_[x]);
    std::swap(cre_[m], cre_[x]);
  }

  Coefficients ann_;
  Coefficients cre_;
  SetupParams origin_;
};

struct DetectorFields {
  FieldOperator a;
  FieldOperator b;
};

/// Singles and coincidence rates at the two detectors; all >= 0.
struct RatePair {
  double r_a = 0.0;
  double r_b = 0.0;
  double r_ab = 0.0;
};

inline FieldOperator propagate_to_detector(const SetupParams& p, ModeId slot) {
  FieldOperator f(slot, p);
  const auto net = eraser_network(p);
  for (auto it = net.rbegin(); it != net.rend(); ++it) f.pull_back(*it);
  return f;
}

inline DetectorFields detector_fields(const SetupParams& p) {
  require_valid(p);
  return {propagate_to_detector(p, kDetectorA), propagate_to_detector(p, kDetectorB)};
}

/// <F^dag F> in the input vacuum.
inline double singles_rate(const FieldOperator& f) {
  double s = 0.0;
  for (const auto& c : f.cre()) s += std::norm(c);
  return s;
}

/// First-order coincidence amplitude B A |0>.
inline cd coincidence_amplitude(const FieldOperator& a, const FieldOperator& b) {
  if (!(a.origin() == b.origin())) {
    throw ContractViolation("coincidence_rate: fields were built from different setups");
  }
  cd amp{};
  for (std::size_t m = 0; m < kModeCount; ++m) amp += a.cre()[m] * b.ann()[m];
  return amp;
}

/// <A^dag B^dag B A> to leading order.
inline double coincidence_rate(const FieldOperator& a, const FieldOperator& b) {
  return std::norm(coincidence_amplitude(a, b));
}

inline RatePair rates(const SetupParams& p) {
  const auto f = detector_fields(p);
  return {singles_rate(f.a), singles_rate(f.b), coincidence_rate(f.a, f.b)};
}

/// 4 * R_AB / |C|^2 for balanced splitters, equal conversion amplitudes, no
/// blocks.
inline double balanced_coincidence_closed_form(double dphi_s, double dphi_i) {
  return 2.0 - std::cos(dphi_i) -
         std::sqrt(8.0) * std::sin(dphi_i / 2.0) * std::sin(dphi_s - dphi_i / 2.0);
}

/// Coincidence fringe visibility over the signal phase as a function of the
/// idler phase (balanced splitters, equal C). Zero at multiples of 2*pi, one
/// at odd multiples of pi/2.
inline double eraser_visibility(double dphi_i) {
  // Wrap first so that exact multiples of 2*pi give sin(0) == 0.
  const double w = std::remainder(dphi_i, kTwoPi);
  const double v = std::sqrt(8.0) * std::abs(std::sin(w / 2.0)) / (2.0 - std::cos(w));
  return std::min(v, 1.0);
}

// ---------------------------------------------------------------------------
// Scan visibility

enum class RateKind { A, B, AB };
enum class ScanPhase { Signal, Idler };

inline double select_rate(const RatePair& r, RateKind k) {
  switch (k) {
    case RateKind::A: return r.r_a;
    case RateKind::B: return r.r_b;
    case RateKind::AB: return r.r_ab;
  }
  return 0.0;
}

namespace detail {

/// Golden-section search for an extremum of f on [lo, hi]. sign = +1 finds
/// the maximum, -1 the minimum. Returns the extreme value.
inline double golden_extremum(const std::function<double(double)>& f, double lo, double hi,
                              double sign) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - g * (hi - lo);
  double x2 = lo + g * (hi - lo);
  double f1 = sign * f(x1);
  double f2 = sign * f(x2);
  for (int it = 0; it < 200 && (hi - lo) > 1e-13 * (1.0 + std::abs(lo)); ++it) {
    if (f1 > f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = sign * f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = sign * f(x2);
    }
  }
  return sign * std::max(f1, f2);
}

}  // namespace detail

/// (max - min)/(max + min) of one rate along a phase scan. The extrema found
/// on the grid are polished by a golden-section search in the neighbouring
/// cells, so the result does not depend on whether the grid hits the peak.
inline double scan_visibility(const SetupParams& p, ScanPhase vary, std::span<const double> grid,
                              RateKind kind) {
  if (grid.empty()) throw InvalidParameter("scan_visibility: empty grid");
  if (grid.size() < 64) throw InvalidParameter("scan_visibility: grid needs at least 64 points");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) {
      throw InvalidParameter("scan_visibility: grid must be strictly increasing");
    }
  }
  const double span = grid.back() - grid.front();
  const double step = span / static_cast<double>(grid.size() - 1);
  if (span + step < kTwoPi * (1.0 - 1e-9)) {
    throw InvalidParameter("scan_visibility: grid must cover a full 2*pi period");
  }
  require_valid(p);

  const std::function<double(double)> rate_at = [&](double phi) {
    SetupParams q = p;
    (vary == ScanPhase::Signal ? q.dphi_s : q.dphi_i) = phi;
    return select_rate(rates(q), kind);
  };

  std::vector<double> values(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) values[k] = rate_at(grid[k]);
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());

  const auto bracket = [&](std::size_t k) {
    const double left = k > 0 ? grid[k] - grid[k - 1] : grid[1] - grid[0];
    const double right = k + 1 < grid.size() ? grid[k + 1] - grid[k] : left;
    return std::pair{grid[k] - left, grid[k] + right};
  };
  const auto [hlo, hhi] = bracket(static_cast<std::size_t>(hi_it - values.begin()));
  const auto [llo, lhi] = bracket(static_cast<std::size_t>(lo_it - values.begin()));
  const double vmax = std::max(*hi_it, detail::golden_extremum(rate_at, hlo, hhi, +1.0));
  const double vmin = std::max(0.0, std::min(*lo_it, detail::golden_extremum(rate_at, llo, lhi, -1.0)));

  if (vmax + vmin <= 0.0) return 0.0;
  return std::clamp((vmax - vmin) / (vmax + vmin), 0.0, 1.0);
}

/// Uniform grid of n points on [0, 2*pi).
inline std::vector<double> full_period_grid(std::size_t n = 128) {
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) g[k] = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
  return g;
}

}  // namespace eraser
