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
 * @file fock.hpp
 * @brief Exact simulation of the eraser network in a truncated Fock space.
 *
 * The state is a dense amplitude vector over photon-number tuples with a
 * per-mode cutoff n_max, indexed in mixed radix (first mode least
 * significant). Every element is a two-mode (or one-mode) operator, so it is
 * applied as a small (n_max+1)^2 matrix on each slice of the state.
 *
 * Squeezers use the exponential of the truncated generator and are therefore
 * unitary on the truncated space. Splitters use the exact photon-number
 * conserving map restricted to the cutoff; whatever lands above the cutoff
 * is dropped and shows up as a norm deficit.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "eraser/errors.hpp"
#include "eraser/optics.hpp"
#include "eraser/perturbative.hpp"

namespace eraser {

class FockStateVector {
 public:
  static FockStateVector vacuum(int n_max,
                                std::vector<ModeId> modes = {kAllModes.begin(), kAllModes.end()}) {
    if (n_max < 1) throw InvalidParameter("vacuum: n_max must be >= 1");
    if (modes.empty()) throw InvalidParameter("vacuum: need at least one mode");
    for (std::size_t i = 0; i < modes.size(); ++i) {
      for (std::size_t j = i + 1; j < modes.size(); ++j) {
        if (modes[i] == modes[j]) throw InvalidParameter("vacuum: duplicate mode label");
      }
    }
    FockStateVector s;
    s.n_max_ = n_max;
    s.modes_ = std::move(modes);
    std::size_t dim = 1;
    for (std::size_t k = 0; k < s.modes_.size(); ++k) dim *= static_cast<std::size_t>(n_max + 1);
    s.amp_.assign(dim, cd{});
    s.amp_[0] = 1.0;
    return s;
  }

  int n_max() const { return n_max_; }
  std::size_t levels() const { return static_cast<std::size_t>(n_max_ + 1); }
  const std::vector<ModeId>& modes() const { return modes_; }
  std::size_t dimension() const { return amp_.size(); }
  std::vector<cd>& amplitudes() { return amp_; }
  const std::vector<cd>& amplitudes() const { return amp_; }

  std::size_t position(ModeId m) const {
    for (std::size_t k = 0; k < modes_.size(); ++k) {
      if (modes_[k] == m) return k;
    }
    throw InvalidParameter(std::string("mode not present in state: ") + std::string(to_string(m)));
  }

  std::size_t stride(ModeId m) const {
    std::size_t s = 1;
    for (std::size_t k = 0; k < position(m); ++k) s *= levels();
    return s;
  }

  std::size_t index(const std::vector<int>& occupations) const {
    if (occupations.size() != modes_.size()) throw InvalidParameter("index: wrong tuple length");
    std::size_t idx = 0;
    for (std::size_t k = modes_.size(); k-- > 0;) {
      if (occupations[k] < 0 || occupations[k] > n_max_) {
        throw InvalidParameter("index: occupation outside [0, n_max]");
      }
      idx = idx * levels() + static_cast<std::size_t>(occupations[k]);
    }
    return idx;
  }

  std::vector<int> occupations(std::size_t idx) const {
    std::vector<int> n(modes_.size());
    for (std::size_t k = 0; k < modes_.size(); ++k) {
      n[k] = static_cast<int>(idx % levels());
      idx /= levels();
    }
    return n;
  }

  int occupation(std::size_t idx, ModeId m) const {
    return static_cast<int>((idx / stride(m)) % levels());
  }

  double norm_squared() const {
    double s = 0.0;
    for (const auto& a : amp_) s += std::norm(a);
    return s;
  }

  double mean_photons(ModeId m) const {
    const std::size_t st = stride(m);
    double s = 0.0;
    for (std::size_t i = 0; i < amp_.size(); ++i) {
      s += std::norm(amp_[i]) * static_cast<double>((i / st) % levels());
    }
    return s;
  }

  /// <a^dag b^dag b a> = <n_a n_b> for distinct modes.
  double pair_correlation(ModeId a, ModeId b) const {
    if (a == b) throw InvalidParameter("pair_correlation: modes must differ");
    const std::size_t sa = stride(a);
    const std::size_t sb = stride(b);
    double s = 0.0;
    for (std::size_t i = 0; i < amp_.size(); ++i) {
      const auto na = static_cast<double>((i / sa) % levels());
      const auto nb = static_cast<double>((i / sb) % levels());
      s += std::norm(amp_[i]) * na * nb;
    }
    return s;
  }

  /// Probability that any mode sits at the cutoff level.
  double cutoff_population() const {
    double s = 0.0;
    for (std::size_t i = 0; i < amp_.size(); ++i) {
      std::size_t rest = i;
      for (std::size_t k = 0; k < modes_.size(); ++k, rest /= levels()) {
        if (static_cast<int>(rest % levels()) == n_max_) {
          s += std::norm(amp_[i]);
          break;
        }
      }
    }
    return s;
  }

 private:
  FockStateVector() = default;

  int n_max_ = 0;
  std::vector<ModeId> modes_;
  std::vector<cd> amp_;
};

/// Applies `op` to the (mode_a, mode_b) factor; op is indexed by
/// n_a * (n_max + 1) + n_b on both sides.
inline void apply_two_mode_operator(FockStateVector& state, ModeId mode_a, ModeId mode_b,
                                    const Eigen::MatrixXcd& op) {
  if (mode_a == mode_b) throw InvalidParameter("two-mode operator needs distinct modes");
  const std::size_t d = state.levels();
  const std::size_t sa = state.stride(mode_a);
  const std::size_t sb = state.stride(mode_b);
  auto& amp = state.amplitudes();
  Eigen::VectorXcd local(static_cast<Eigen::Index>(d * d));
  for (std::size_t base = 0; base < amp.size(); ++base) {
    if ((base / sa) % d != 0 || (base / sb) % d != 0) continue;
    for (std::size_t na = 0; na < d; ++na) {
      for (std::size_t nb = 0; nb < d; ++nb) {
        local(static_cast<Eigen::Index>(na * d + nb)) = amp[base + na * sa + nb * sb];
      }
    }
    const Eigen::VectorXcd out = op * local;
    for (std::size_t na = 0; na < d; ++na) {
      for (std::size_t nb = 0; nb < d; ++nb) {
        amp[base + na * sa + nb * sb] = out(static_cast<Eigen::Index>(na * d + nb));
      }
    }
  }
}

/// exp(xi a^dag b^dag - conj(xi) a b) on the truncated two-mode space.
inline Eigen::MatrixXcd squeezer_matrix(int n_max, cd xi) {
  const auto d = static_cast<Eigen::Index>(n_max + 1);
  Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(d * d, d * d);
  for (Eigen::Index na = 0; na + 1 < d; ++na) {
    for (Eigen::Index nb = 0; nb + 1 < d; ++nb) {
      const double elem = std::sqrt(static_cast<double>((na + 1) * (nb + 1)));
      const Eigen::Index lo = na * d + nb;
      const Eigen::Index hi = (na + 1) * d + (nb + 1);
      gen(hi, lo) += xi * elem;             // a^dag b^dag
      gen(lo, hi) -= std::conj(xi) * elem;  // a b
    }
  }
  return gen.exp();
}

namespace detail {

inline cd ipow(cd base, int e) {
  cd r = 1.0;
  for (int k = 0; k < e; ++k) r *= base;
  return r;
}

inline double factorial(int n) { return std::tgamma(static_cast<double>(n) + 1.0); }

inline double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

}  // namespace detail

/// Photon-number conserving splitter map restricted to the cutoff. With
/// U^dag a_k U = sum_j M_kj a_j, creation operators transform as
/// U a_j^dag U^dag = sum_k M_kj a_k^dag.
inline Eigen::MatrixXcd beam_splitter_matrix(int n_max, const BeamSplitterParams& bs) {
  const auto m = mixing_matrix(bs);
  const int d = n_max + 1;
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(d * d, d * d);
  for (int k = 0; k < d; ++k) {
    for (int l = 0; l < d; ++l) {
      const int total = k + l;
      const double norm_in = std::sqrt(detail::factorial(k) * detail::factorial(l));
      for (int p = 0; p <= k; ++p) {
        for (int q = 0; q <= l; ++q) {
          const int out_a = p + q;
          const int out_b = total - out_a;
          if (out_a > n_max || out_b > n_max) continue;
          const cd coeff = detail::binomial(k, p) * detail::ipow(m(0, 0), p) *
                           detail::ipow(m(1, 0), k - p) * detail::binomial(l, q) *
                           detail::ipow(m(0, 1), q) * detail::ipow(m(1, 1), l - q);
          const double norm_out = std::sqrt(detail::factorial(out_a) * detail::factorial(out_b));
          u(out_a * d + out_b, k * d + l) += coeff * norm_out / norm_in;
        }
      }
    }
  }
  return u;
}

inline void apply_two_mode_squeezer(FockStateVector& state, ModeId mode_a, ModeId mode_b, cd xi) {
  if (mode_a == mode_b) throw InvalidParameter("squeezer: modes must differ");
  if (xi == cd{}) return;
  apply_two_mode_operator(state, mode_a, mode_b, squeezer_matrix(state.n_max(), xi));
}

inline void apply_beam_splitter(FockStateVector& state, ModeId mode_a, ModeId mode_b,
                                const BeamSplitterParams& bs) {
  if (mode_a == mode_b) throw InvalidParameter("beam splitter: modes must differ");
  apply_two_mode_operator(state, mode_a, mode_b, beam_splitter_matrix(state.n_max(), bs));
}

/// |n> -> e^{i n phi} |n>.
inline void apply_phase(FockStateVector& state, ModeId mode, double phi) {
  const std::size_t st = state.stride(mode);
  const std::size_t d = state.levels();
  std::vector<cd> factors(d);
  for (std::size_t n = 0; n < d; ++n) factors[n] = std::polar(1.0, static_cast<double>(n) * phi);
  auto& amp = state.amplitudes();
  for (std::size_t i = 0; i < amp.size(); ++i) amp[i] *= factors[(i / st) % d];
}

/// Swaps the content of `mode` into the vacuum ancilla `aux`.
inline void apply_block(FockStateVector& state, ModeId mode, ModeId aux) {
  if (mode == aux) throw InvalidParameter("block: absorber must differ from blocked mode");
  const std::size_t d = state.levels();
  const std::size_t sm = state.stride(mode);
  const std::size_t sx = state.stride(aux);
  auto& amp = state.amplitudes();
  for (std::size_t i = 0; i < amp.size(); ++i) {
    if ((i / sx) % d != 0 && amp[i] != cd{}) {
      throw ContractViolation("block: absorber mode is not in vacuum");
    }
  }
  for (std::size_t i = 0; i < amp.size(); ++i) {
    const std::size_t nm = (i / sm) % d;
    if (nm == 0 || (i / sx) % d != 0) continue;
    // Partner index has the photons moved from `mode` to `aux`.
    const std::size_t j = i - nm * sm + nm * sx;
    std::swap(amp[i], amp[j]);
  }
}

inline void apply_element(FockStateVector& state, const Element& e) {
  std::visit(
      [&state](const auto& el) {
        using T = std::decay_t<decltype(el)>;
        if constexpr (std::is_same_v<T, Squeezer>) {
          apply_two_mode_squeezer(state, el.signal, el.idler, el.xi);
        } else if constexpr (std::is_same_v<T, Splitter>) {
          apply_beam_splitter(state, el.port1, el.port2, el.bs);
        } else if constexpr (std::is_same_v<T, PhaseShift>) {
          apply_phase(state, el.mode, el.phi);
        } else {
          apply_block(state, el.mode, el.absorber);
        }
      },
      e);
}

// ---------------------------------------------------------------------------
// Full-network runs

inline constexpr double kTruncationLimit = 1e-6;
inline constexpr double kCutoffWarnLevel = 1e-8;

struct ExactResult {
  RatePair rates;
  /// max(norm deficit, population at the cutoff level)
  double leakage = 0.0;
  std::vector<std::string> warnings;
};

inline ExactResult run_exact(const SetupParams& p, double gain_scale = 1.0, int n_max = 3) {
  require_valid(p);
  auto state = FockStateVector::vacuum(n_max);
  for (const auto& e : eraser_network(p, gain_scale)) apply_element(state, e);

  ExactResult out;
  const double deficit = std::abs(1.0 - state.norm_squared());
  const double cutoff = state.cutoff_population();
  out.leakage = std::max(deficit, cutoff);
  if (out.leakage > kTruncationLimit) {
    throw TruncationError("run_exact: truncation leakage " + std::to_string(out.leakage) +
                          " exceeds 1e-6; raise n_max or lower the gain");
  }
  if (cutoff > kCutoffWarnLevel) {
    out.warnings.push_back("population at the cutoff level is " + std::to_string(cutoff));
  }
  out.rates.r_a = state.mean_photons(kDetectorA);
  out.rates.r_b = state.mean_photons(kDetectorB);
  out.rates.r_ab = state.pair_correlation(kDetectorA, kDetectorB);
  return out;
}

struct PhasePoint {
  double dphi_s = 0.0;
  double dphi_i = 0.0;
};

/// n_i idler phases times n_s signal phases, each uniform on [0, 2*pi).
inline std::vector<PhasePoint> phase_grid(std::size_t n_i, std::size_t n_s) {
  std::vector<PhasePoint> g;
  g.reserve(n_i * n_s);
  for (std::size_t a = 0; a < n_i; ++a) {
    for (std::size_t b = 0; b < n_s; ++b) {
      g.push_back({kTwoPi * static_cast<double>(b) / static_cast<double>(n_s),
                   kTwoPi * static_cast<double>(a) / static_cast<double>(n_i)});
    }
  }
  return g;
}

struct OracleReport {
  PhasePoint at;
  RatePair rates_exact;
  RatePair rates_perturbative;
  /// |exact/perturbative - 1| per rate (a, b, ab), absolute deviation where
  /// the perturbative rate is zero.
  std::array<double, 3> relative_deviations{};
  double truncation_leakage = 0.0;

  double max_deviation() const {
    return *std::max_element(relative_deviations.begin(), relative_deviations.end());
  }
};

inline constexpr double kMaxOracleGain = 0.05;

inline double rate_deviation(double exact, double perturbative) {
  return perturbative > 0.0 ? std::abs(exact / perturbative - 1.0) : std::abs(exact - perturbative);
}

/// Rescales both conversion amplitudes so the larger has magnitude `gain`
/// (their ratio and phases are kept), then compares the exact and
/// first-order rates at every grid point.
inline std::vector<OracleReport> oracle_compare(SetupParams p, double gain, int n_max,
                                                const std::vector<PhasePoint>& grid) {
  if (!(gain >= 0.0) || gain > kMaxOracleGain) {
    throw InvalidParameter("oracle_compare: gain must lie in [0, 0.05]");
  }
  const double cmax = std::max(std::abs(p.src1.c), std::abs(p.src2.c));
  const double scale = cmax > 0.0 ? gain / cmax : 0.0;
  p.src1 = SpdcSourceParams::from_conversion(p.src1.c * scale);
  p.src2 = SpdcSourceParams::from_conversion(p.src2.c * scale);

  std::vector<OracleReport> out;
  out.reserve(grid.size());
  for (const auto& pt : grid) {
    SetupParams q = p;
    q.dphi_s = pt.dphi_s;
    q.dphi_i = pt.dphi_i;
    const auto exact = run_exact(q, 1.0, n_max);
    const auto pert = rates(q);
    OracleReport r;
    r.at = pt;
    r.rates_exact = exact.rates;
    r.rates_perturbative = pert;
    r.relative_deviations = {rate_deviation(exact.rates.r_a, pert.r_a),
                             rate_deviation(exact.rates.r_b, pert.r_b),
                             rate_deviation(exact.rates.r_ab, pert.r_ab)};
    r.truncation_leakage = exact.leakage;
    out.push_back(r);
  }
  return out;
}

}  // namespace eraser
