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
 * @file harness.hpp
 * @brief Named measurement scenarios and path/time scans over the model.
 *
 * | scenario              | blocks                | pumps     |
 * |-----------------------|-----------------------|-----------|
 * | induced-coherence     | reflected idler       | both      |
 * | idler-mz-single-pump  | none                  | BBO1 only |
 * | idler-mz-which-path   | signal s1             | both      |
 * | eraser                | none                  | both      |
 * | joint-scan            | none                  | both      |
 * | visibility-curve      | none                  | both      |
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "eraser/errors.hpp"
#include "eraser/fringe.hpp"
#include "eraser/optics.hpp"
#include "eraser/perturbative.hpp"

namespace eraser {

enum class ScenarioName { InducedCoherence, IdlerMzSinglePump, IdlerMzWhichPath, Eraser, JointScan, VisibilityCurve };

inline constexpr std::array<std::pair<ScenarioName, std::string_view>, 6> kScenarioNames{{
    {ScenarioName::InducedCoherence, "induced-coherence"},
    {ScenarioName::IdlerMzSinglePump, "idler-mz-single-pump"},
    {ScenarioName::IdlerMzWhichPath, "idler-mz-which-path"},
    {ScenarioName::Eraser, "eraser"},
    {ScenarioName::JointScan, "joint-scan"},
    {ScenarioName::VisibilityCurve, "visibility-curve"},
}};

inline std::string_view to_string(ScenarioName s) {
  for (const auto& [k, v] : kScenarioNames) {
    if (k == s) return v;
  }
  return "?";
}

inline std::optional<ScenarioName> parse_scenario(std::string_view s) {
  for (const auto& [k, v] : kScenarioNames) {
    if (v == s) return k;
  }
  return std::nullopt;
}

/// Partial SetupParams; unset fields keep the scenario's value.
struct SetupOverrides {
  std::optional<double> bs1_t, bs2_t, bs3_t;
  std::optional<cd> src1_c, src2_c;
  std::optional<double> dphi_s, dphi_i;
  std::optional<bool> block_reflected_idler, block_signal_s1;
  std::optional<double> lambda_s, lambda_i;
};

struct Scenario {
  ScenarioName name = ScenarioName::Eraser;
  SetupOverrides overrides;
};

namespace detail {

struct ScenarioSwitches {
  bool block_reflected_idler;
  bool block_signal_s1;
  bool single_pump;
  bool balanced_bs1;
};

inline ScenarioSwitches switches_for(ScenarioName s) {
  switch (s) {
    case ScenarioName::InducedCoherence: return {true, false, false, false};
    case ScenarioName::IdlerMzSinglePump: return {false, false, true, true};
    case ScenarioName::IdlerMzWhichPath: return {false, true, false, true};
    case ScenarioName::Eraser:
    case ScenarioName::JointScan:
    case ScenarioName::VisibilityCurve: return {false, false, false, true};
  }
  return {false, false, false, true};
}

}  // namespace detail

/// Defaults, then the scenario's switches, then the overrides. An override
/// that contradicts a defining switch is a ContractViolation.
inline SetupParams resolve_scenario(const Scenario& s) {
  const auto sw = detail::switches_for(s.name);
  const auto& o = s.overrides;
  const std::string who = std::string(to_string(s.name));
  if (o.block_reflected_idler && *o.block_reflected_idler != sw.block_reflected_idler) {
    throw ContractViolation("block_reflected_idler: scenario " + who + " requires " +
                            (sw.block_reflected_idler ? "true" : "false"));
  }
  if (o.block_signal_s1 && *o.block_signal_s1 != sw.block_signal_s1) {
    throw ContractViolation("block_signal_s1: scenario " + who + " requires " +
                            (sw.block_signal_s1 ? "true" : "false"));
  }
  if (sw.single_pump && o.src2_c && *o.src2_c != cd{}) {
    throw ContractViolation("src2.c: scenario " + who + " pumps BBO1 only (src2.c must be 0)");
  }

  SetupParams p = default_setup();
  p.block_reflected_idler = sw.block_reflected_idler;
  p.block_signal_s1 = sw.block_signal_s1;
  if (sw.single_pump) p.src2 = SpdcSourceParams::from_conversion(0.0);
  if (sw.balanced_bs1) p.bs1 = BeamSplitterParams::balanced();

  if (o.bs1_t) p.bs1 = BeamSplitterParams(*o.bs1_t);
  if (o.bs2_t) p.bs2 = BeamSplitterParams(*o.bs2_t);
  if (o.bs3_t) p.bs3 = BeamSplitterParams(*o.bs3_t);
  if (o.src1_c) p.src1 = SpdcSourceParams::from_conversion(*o.src1_c);
  if (o.src2_c) p.src2 = SpdcSourceParams::from_conversion(*o.src2_c);
  if (o.dphi_s) p.dphi_s = *o.dphi_s;
  if (o.dphi_i) p.dphi_i = *o.dphi_i;
  if (o.lambda_s) p.lambda_s = *o.lambda_s;
  if (o.lambda_i) p.lambda_i = *o.lambda_i;
  require_valid(p);
  return p;
}

// ---------------------------------------------------------------------------
// Scans

enum class ScanAxis { SignalPath, IdlerPath, TimeJoint };

inline std::string_view to_string(ScanAxis a) {
  switch (a) {
    case ScanAxis::SignalPath: return "signal-path";
    case ScanAxis::IdlerPath: return "idler-path";
    case ScanAxis::TimeJoint: return "time-joint";
  }
  return "?";
}

inline std::optional<ScanAxis> parse_axis(std::string_view s) {
  for (auto a : {ScanAxis::SignalPath, ScanAxis::IdlerPath, ScanAxis::TimeJoint}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

/// Path axes are in nm, the time axis in seconds.
struct ScanSpec {
  ScanAxis axis = ScanAxis::SignalPath;
  double start = 0.0;
  double stop = 3232.0;
  double step = 20.0;
  double speed = 20.0;  // nm/s, time-joint only
  std::optional<double> fixed_dphi_i;
  std::optional<double> fixed_dphi_s;
  double offset_s = 0.0;  // nm at t = 0, time-joint only
  double offset_i = 0.0;

  std::size_t row_count() const {
    return static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  }

  void validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw InvalidParameter("scan.step must be positive");
    if (!(start < stop) || !std::isfinite(start) || !std::isfinite(stop)) {
      throw InvalidParameter("scan.start must be below scan.stop");
    }
    if (axis == ScanAxis::TimeJoint && !std::isfinite(speed)) {
      throw InvalidParameter("scan.speed must be finite");
    }
  }
};

/// Scan each scenario is usually shown with.
inline ScanSpec default_scan(ScenarioName s) {
  ScanSpec spec;
  switch (s) {
    case ScenarioName::IdlerMzSinglePump:
    case ScenarioName::IdlerMzWhichPath:
      spec.axis = ScanAxis::IdlerPath;
      spec.stop = 2528.0;  // four idler periods
      break;
    case ScenarioName::JointScan:
      spec.axis = ScanAxis::TimeJoint;
      spec.stop = 600.0;
      spec.step = 1.0;
      break;
    default:
      break;
  }
  return spec;
}

struct NoiseSpec {
  std::uint64_t seed = 1;
  double exposure_s = 1.0;
  double ref_counts_a = 22000.0;  // counts/s at the scan-mean rate
  double ref_counts_b = 14000.0;
  double ref_counts_ab = 1000.0;
  bool accidentals = false;
  double window_s = 2e-9;
};

struct ScanRow {
  double x = 0.0;
  double r_a = 0.0;
  double r_b = 0.0;
  double r_ab = 0.0;
  std::optional<std::int64_t> counts_a, counts_b, counts_ab;
};

struct ScanTable {
  std::vector<ScanRow> rows;
  ScenarioName scenario = ScenarioName::Eraser;
  SetupParams setup;
  ScanSpec spec;
  std::optional<NoiseSpec> noise;
  std::string version = kVersion;
};

/// Phases at scan coordinate x.
inline std::pair<double, double> scan_phases(const SetupParams& p, const ScanSpec& spec, double x) {
  switch (spec.axis) {
    case ScanAxis::SignalPath:
      return {phase_from_path(x, p.lambda_s), spec.fixed_dphi_i.value_or(p.dphi_i)};
    case ScanAxis::IdlerPath:
      return {spec.fixed_dphi_s.value_or(p.dphi_s), phase_from_path(x, p.lambda_i)};
    case ScanAxis::TimeJoint:
      return {phase_from_path(spec.speed * x + spec.offset_s, p.lambda_s),
              phase_from_path(spec.speed * x + spec.offset_i, p.lambda_i)};
  }
  return {0.0, 0.0};
}

inline ScanTable run_scan(const Scenario& scenario, const ScanSpec& spec,
                          const std::optional<NoiseSpec>& noise = std::nullopt) {
  spec.validate();
  ScanTable table;
  table.scenario = scenario.name;
  table.setup = resolve_scenario(scenario);
  table.spec = spec;
  table.noise = noise;

  const std::size_t n = spec.row_count();
  table.rows.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& row = table.rows[k];
    row.x = spec.start + static_cast<double>(k) * spec.step;
    SetupParams q = table.setup;
    std::tie(q.dphi_s, q.dphi_i) = scan_phases(q, spec, row.x);
    const auto r = rates(q);
    row.r_a = r.r_a;
    row.r_b = r.r_b;
    row.r_ab = r.r_ab;
  }

  if (noise) {
    if (!(noise->exposure_s > 0.0)) throw InvalidParameter("noise.exposure_s must be positive");
    if (noise->ref_counts_a < 0.0 || noise->ref_counts_b < 0.0 || noise->ref_counts_ab < 0.0) {
      throw InvalidParameter("noise reference counts must be non-negative");
    }
    double mean_a = 0.0, mean_b = 0.0, mean_ab = 0.0;
    for (const auto& row : table.rows) {
      mean_a += row.r_a;
      mean_b += row.r_b;
      mean_ab += row.r_ab;
    }
    mean_a /= static_cast<double>(n);
    mean_b /= static_cast<double>(n);
    mean_ab /= static_cast<double>(n);
    // counts per second per unit normalized rate
    const double ka = mean_a > 0.0 ? noise->ref_counts_a / mean_a : 0.0;
    const double kb = mean_b > 0.0 ? noise->ref_counts_b / mean_b : 0.0;
    const double kab = mean_ab > 0.0 ? noise->ref_counts_ab / mean_ab : 0.0;
    const double t = noise->exposure_s;
    for (std::size_t k = 0; k < n; ++k) {
      auto& row = table.rows[k];
      double ab = kab * row.r_ab * t;
      if (noise->accidentals) ab += (ka * row.r_a) * (kb * row.r_b) * noise->window_s * t;
      row.counts_a = poisson_draw(ka * row.r_a * t, noise->seed, 0, k);
      row.counts_b = poisson_draw(kb * row.r_b * t, noise->seed, 1, k);
      row.counts_ab = poisson_draw(ab, noise->seed, 2, k);
    }
  }
  return table;
}

struct VisibilityPoint {
  double dphi_i;
  double visibility;
};

/// Coincidence visibility over a full signal-phase scan at each idler phase.
inline std::vector<VisibilityPoint> visibility_curve(const Scenario& scenario,
                                                     std::span<const double> dphi_i_grid) {
  const auto sw = detail::switches_for(scenario.name);
  if (sw.block_reflected_idler || sw.block_signal_s1 || sw.single_pump) {
    throw ContractViolation("visibility_curve needs an unblocked two-pump scenario");
  }
  const SetupParams base = resolve_scenario(scenario);
  const auto grid = full_period_grid(128);
  std::vector<VisibilityPoint> out;
  out.reserve(dphi_i_grid.size());
  for (double phi : dphi_i_grid) {
    SetupParams q = base;
    q.dphi_i = phi;
    out.push_back({phi, scan_visibility(q, ScanPhase::Signal, grid, RateKind::AB)});
  }
  return out;
}

}  // namespace eraser
