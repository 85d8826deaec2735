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
 * @file optics.hpp
 * @brief Optical element vocabulary and the fixed two-crystal eraser network.
 *
 * Two down-converters share one idler mode. The idler of crystal 1 passes a
 * splitter (BS1) whose transmitted arm seeds crystal 2 and whose reflected
 * arm is recombined with the crystal-2 idler at BS3 (detector B). The two
 * signal beams are combined at BS2 (detector A).
 *
 * Sign convention: every splitter is the real rotation [[t, r], [-r, t]]
 * acting on (port1, port2) in the Heisenberg picture, so output 1 is
 * t*port1 + r*port2. With the port orders chosen in eraser_network() the
 * crystal-1 idler is dark at detector B when the idler phase is zero.
 */
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "eraser/errors.hpp"

namespace eraser {

using cd = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class PortSign {
  MinusOnReflectedFromPort1,  // [[t, r], [-r, t]]
  MinusOnReflectedFromPort2,  // [[t, -r], [r, t]]
};

/// Lossless splitter. Only t is stored; r is always sqrt(1 - t^2).
class BeamSplitterParams {
 public:
  BeamSplitterParams() = default;

  explicit BeamSplitterParams(double t,
                              PortSign sign = PortSign::MinusOnReflectedFromPort1)
      : t_(t), sign_(sign) {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw InvalidParameter("beam splitter transmissivity must lie in [0,1], got " +
                             std::to_string(t));
    }
  }

  static BeamSplitterParams balanced() { return BeamSplitterParams(std::sqrt(0.5)); }

  double t() const { return t_; }
  double r() const { return std::sqrt(1.0 - t_ * t_); }
  PortSign port_sign() const { return sign_; }

  bool operator==(const BeamSplitterParams&) const = default;

 private:
  double t_ = 1.0;
  PortSign sign_ = PortSign::MinusOnReflectedFromPort1;
};

/// One SPDC crystal. `c` is the conversion amplitude gamma * A_p.
struct SpdcSourceParams {
  cd c{0.01, 0.0};
  std::optional<double> gamma;
  std::optional<cd> pump_amplitude;

  static SpdcSourceParams from_conversion(cd c) { return SpdcSourceParams{c, {}, {}}; }

  static SpdcSourceParams from_pump(double gamma, cd pump) {
    return SpdcSourceParams{gamma * pump, gamma, pump};
  }

  bool operator==(const SpdcSourceParams&) const = default;
};

struct SetupParams {
  BeamSplitterParams bs1{0.67};
  BeamSplitterParams bs2 = BeamSplitterParams::balanced();
  BeamSplitterParams bs3 = BeamSplitterParams::balanced();
  SpdcSourceParams src1;
  SpdcSourceParams src2;
  double dphi_s = 0.0;  // radians
  double dphi_i = 0.0;  // radians
  bool block_reflected_idler = false;
  bool block_signal_s1 = false;
  double lambda_s = 808.0;  // nm
  double lambda_i = 632.0;  // nm

  bool operator==(const SetupParams&) const = default;
};

/// Parameter set used throughout the experiment description.
inline SetupParams default_setup() { return SetupParams{}; }

/// default_setup() with BS1 balanced as well.
inline SetupParams balanced_setup(cd c = {0.01, 0.0}) {
  SetupParams p;
  p.bs1 = BeamSplitterParams::balanced();
  p.src1.c = c;
  p.src2.c = c;
  return p;
}

enum class ModeId : int { s01 = 0, i01, i0, s02, aux_block_1, aux_block_2 };

inline constexpr std::size_t kModeCount = 6;

inline constexpr std::array<ModeId, kModeCount> kAllModes{
    ModeId::s01, ModeId::i01, ModeId::i0, ModeId::s02, ModeId::aux_block_1, ModeId::aux_block_2};

inline constexpr std::size_t index_of(ModeId m) { return static_cast<std::size_t>(m); }

inline std::string_view to_string(ModeId m) {
  switch (m) {
    case ModeId::s01: return "s01";
    case ModeId::i01: return "i01";
    case ModeId::i0: return "i0";
    case ModeId::s02: return "s02";
    case ModeId::aux_block_1: return "aux_block_1";
    case ModeId::aux_block_2: return "aux_block_2";
  }
  return "?";
}

/// 2*pi*dx/lambda, not wrapped.
inline double phase_from_path(double dx_nm, double lambda_nm) {
  if (!(lambda_nm > 0.0)) {
    throw InvalidParameter("wavelength must be positive, got " + std::to_string(lambda_nm));
  }
  return kTwoPi * dx_nm / lambda_nm;
}

/// Heisenberg-picture mixing: (out1, out2)^T = M (port1, port2)^T.
inline Eigen::Matrix2cd mixing_matrix(const BeamSplitterParams& bs) {
  const double t = bs.t();
  const double r = bs.r();
  Eigen::Matrix2cd m;
  if (bs.port_sign() == PortSign::MinusOnReflectedFromPort1) {
    m << t, r, -r, t;
  } else {
    m << t, -r, r, t;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Setup validation

enum class Severity { Error, Warning, Note };

struct ValidationIssue {
  Severity severity;
  std::string key;
  std::string message;
};

inline constexpr double kPerturbativeLimit = 0.1;

/// Report-only: never throws, never mutates.
inline std::vector<ValidationIssue> validate_setup(const SetupParams& p) {
  std::vector<ValidationIssue> out;
  if (!(p.lambda_s > 0.0) || !std::isfinite(p.lambda_s)) {
    out.push_back({Severity::Error, "lambda_s", "signal wavelength must be positive"});
  }
  if (!(p.lambda_i > 0.0) || !std::isfinite(p.lambda_i)) {
    out.push_back({Severity::Error, "lambda_i", "idler wavelength must be positive"});
  }
  if (!std::isfinite(p.dphi_s)) out.push_back({Severity::Error, "dphi_s", "phase is not finite"});
  if (!std::isfinite(p.dphi_i)) out.push_back({Severity::Error, "dphi_i", "phase is not finite"});

  const std::array<std::pair<const SpdcSourceParams*, std::string>, 2> srcs{
      std::pair{&p.src1, std::string("src1")}, std::pair{&p.src2, std::string("src2")}};
  for (const auto& [src, name] : srcs) {
    const double mag = std::abs(src->c);
    if (!std::isfinite(mag)) {
      out.push_back({Severity::Error, name + ".c", "conversion amplitude is not finite"});
      continue;
    }
    if (mag > kPerturbativeLimit) {
      out.push_back({Severity::Warning, name + ".c",
                     "|C| = " + std::to_string(mag) +
                         " exceeds 0.1; first-order rates lose accuracy"});
    }
    if (src->gamma && src->pump_amplitude &&
        std::abs(*src->gamma * *src->pump_amplitude - src->c) > 1e-12 * (1.0 + mag)) {
      out.push_back({Severity::Error, name + ".c", "C differs from gamma * pump_amplitude"});
    }
  }
  if (p.block_reflected_idler && p.block_signal_s1) {
    out.push_back({Severity::Note, "blocks", "both beam blocks inserted"});
  }
  return out;
}

inline bool has_errors(const std::vector<ValidationIssue>& issues) {
  for (const auto& i : issues) {
    if (i.severity == Severity::Error) return true;
  }
  return false;
}

/// Throws InvalidParameter naming the first error-level issue.
inline void require_valid(const SetupParams& p) {
  for (const auto& i : validate_setup(p)) {
    if (i.severity == Severity::Error) throw InvalidParameter(i.key + ": " + i.message);
  }
}

// ---------------------------------------------------------------------------
// Network description shared by the perturbative model and the Fock oracle.

/// exp(xi a^dag b^dag - conj(xi) a b); to first order a -> a + xi b^dag.
struct Squeezer {
  ModeId signal;
  ModeId idler;
  cd xi;
};

struct Splitter {
  ModeId port1;
  ModeId port2;
  BeamSplitterParams bs;
};

struct PhaseShift {
  ModeId mode;
  double phi;
};

/// Perfect absorber: the mode's content is swapped into a vacuum ancilla.
struct Block {
  ModeId mode;
  ModeId absorber;
};

using Element = std::variant<Squeezer, Splitter, PhaseShift, Block>;

/// Mode slot that reaches detector A after the last element.
inline constexpr ModeId kDetectorA = ModeId::s02;
/// Mode slot that reaches detector B after the last element.
inline constexpr ModeId kDetectorB = ModeId::i01;

/// Elements in propagation order. Squeezer strengths are i*C*gain_scale.
inline std::vector<Element> eraser_network(const SetupParams& p, double gain_scale = 1.0) {
  const cd i{0.0, 1.0};
  std::vector<Element> net;
  net.emplace_back(Squeezer{ModeId::s01, ModeId::i01, i * p.src1.c * gain_scale});
  // i01 slot becomes the transmitted idler arm, i0 slot the reflected arm.
  net.emplace_back(Splitter{ModeId::i01, ModeId::i0, p.bs1});
  if (p.block_reflected_idler) net.emplace_back(Block{ModeId::i0, ModeId::aux_block_1});
  net.emplace_back(Squeezer{ModeId::s02, ModeId::i01, i * p.src2.c * gain_scale});
  net.emplace_back(PhaseShift{ModeId::i01, p.dphi_i});
  net.emplace_back(Splitter{ModeId::i01, ModeId::i0, p.bs3});
  net.emplace_back(PhaseShift{ModeId::s01, p.dphi_s});
  if (p.block_signal_s1) net.emplace_back(Block{ModeId::s01, ModeId::aux_block_2});
  net.emplace_back(Splitter{ModeId::s02, ModeId::s01, p.bs2});
  return net;
}

}  // namespace eraser
