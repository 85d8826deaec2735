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

#include "eraser/fock.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "gtest/gtest.h"

using namespace eraser;

namespace {

constexpr double kPi = std::numbers::pi;

FockStateVector two_mode_vacuum(int n_max) {
  return FockStateVector::vacuum(n_max, {ModeId::s01, ModeId::i01});
}

void set_basis_state(FockStateVector& s, const std::vector<int>& n) {
  std::fill(s.amplitudes().begin(), s.amplitudes().end(), cd{});
  s.amplitudes()[s.index(n)] = 1.0;
}

double probability(const FockStateVector& s, const std::vector<int>& n) {
  return std::norm(s.amplitudes()[s.index(n)]);
}

// Gaussian-state moments of the same network, without any Fock space. Each
// element maps (a, a^dag) linearly; the vacuum moments of the composed map
// give the rates, with <a^dag b^dag b a> = <a^dag a><b^dag b> + |<a^dag b>|^2
// + |<a b>|^2 for the zero-mean Gaussian output state.
RatePair gaussian_rates(const SetupParams& p, double gain_scale = 1.0) {
  constexpr int n = static_cast<int>(kModeCount);
  using Mat = Eigen::Matrix<cd, 2 * n, 2 * n>;
  auto at = [](ModeId m) { return static_cast<int>(index_of(m)); };
  Mat total = Mat::Identity();
  for (const auto& e : eraser_network(p, gain_scale)) {
    Mat m = Mat::Identity();
    if (const auto* sq = std::get_if<Squeezer>(&e)) {
      const double r = std::abs(sq->xi);
      const cd ph = r > 0.0 ? sq->xi / r : cd(1.0);
      for (auto [x, y] : {std::pair{at(sq->signal), at(sq->idler)}, std::pair{at(sq->idler), at(sq->signal)}}) {
        m(x, x) = std::cosh(r);
        m(x, n + y) = ph * std::sinh(r);
        m(n + x, n + x) = std::cosh(r);
        m(n + x, y) = std::conj(ph) * std::sinh(r);
      }
    } else if (const auto* bs = std::get_if<Splitter>(&e)) {
      const auto mix = mixing_matrix(bs->bs);
      const int idx[2] = {at(bs->port1), at(bs->port2)};
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          m(idx[a], idx[b]) = mix(a, b);
          m(n + idx[a], n + idx[b]) = std::conj(mix(a, b));
        }
      }
    } else if (const auto* ps = std::get_if<PhaseShift>(&e)) {
      m(at(ps->mode), at(ps->mode)) = std::polar(1.0, ps->phi);
      m(n + at(ps->mode), n + at(ps->mode)) = std::polar(1.0, -ps->phi);
    } else if (const auto* bl = std::get_if<Block>(&e)) {
      for (int off : {0, n}) {
        const int x = off + at(bl->mode), y = off + at(bl->absorber);
        m(x, x) = m(y, y) = 0.0;
        m(x, y) = m(y, x) = 1.0;
      }
    }
    total = m * total;
  }
  // total rows are the Heisenberg-picture outputs in terms of input (a, a^dag).
  const int da = at(kDetectorA), db = at(kDetectorB);
  double na = 0.0, nb = 0.0;
  cd ab{}, adb{};
  for (int k = 0; k < n; ++k) {
    na += std::norm(total(da, n + k));
    nb += std::norm(total(db, n + k));
    ab += total(da, k) * total(db, n + k);
    adb += std::conj(total(da, n + k)) * total(db, n + k);
  }
  return {na, nb, na * nb + std::norm(ab) + std::norm(adb)};
}

}  // namespace

TEST(FockVacuum, Examples) {
  const auto s = FockStateVector::vacuum(2);
  EXPECT_EQ(s.dimension(), 729u);
  EXPECT_EQ(s.amplitudes()[0], cd(1.0));
  EXPECT_DOUBLE_EQ(s.norm_squared(), 1.0);
  for (auto m : kAllModes) EXPECT_EQ(s.mean_photons(m), 0.0);
}

TEST(FockVacuum, RejectsBadCutoffAndDuplicateModes) {
  EXPECT_THROW(FockStateVector::vacuum(0), InvalidParameter);
  EXPECT_THROW(FockStateVector::vacuum(2, {ModeId::s01, ModeId::s01}), InvalidParameter);
}

TEST(FockVacuum, IndexIsBijective) {
  const auto s = FockStateVector::vacuum(3);
  for (std::size_t i = 0; i < s.dimension(); ++i) EXPECT_EQ(s.index(s.occupations(i)), i);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> occ(0, 3);
  for (int k = 0; k < 500; ++k) {
    std::vector<int> n(6);
    for (auto& v : n) v = occ(rng);
    EXPECT_EQ(s.occupations(s.index(n)), n);
  }
}

TEST(Squeezer, ZeroGainIsIdentity) {
  auto s = FockStateVector::vacuum(3);
  apply_two_mode_squeezer(s, ModeId::s01, ModeId::i01, 0.0);
  EXPECT_EQ(s.amplitudes()[0], cd(1.0));
  EXPECT_TRUE(squeezer_matrix(3, 0.0).isApprox(Eigen::MatrixXcd::Identity(16, 16)));
}

TEST(Squeezer, RejectsSameMode) {
  auto s = FockStateVector::vacuum(2);
  EXPECT_THROW(apply_two_mode_squeezer(s, ModeId::i0, ModeId::i0, 0.01), InvalidParameter);
}

TEST(Squeezer, TwoModeSqueezedVacuumAmplitudes) {
  // exp(r(a^dag b^dag - ab))|0,0> = sum_n tanh(r)^n / cosh(r) |n,n>
  const double r = 0.01;
  auto s = two_mode_vacuum(6);
  apply_two_mode_squeezer(s, ModeId::s01, ModeId::i01, r);
  for (int n = 0; n <= 4; ++n) {
    const double expected = std::pow(std::tanh(r), n) / std::cosh(r);
    EXPECT_NEAR(s.amplitudes()[s.index({n, n})].real(), expected, 1e-15) << n;
    EXPECT_NEAR(s.amplitudes()[s.index({n, n})].imag(), 0.0, 1e-15);
  }
  EXPECT_NEAR(s.amplitudes()[s.index({1, 1})].real(), r, r * r * r);
  EXPECT_NEAR(s.amplitudes()[s.index({2, 2})].real(), r * r, 2.0 * r * r * r * r);
}

TEST(Squeezer, ConservesPhotonNumberDifference) {
  auto s = two_mode_vacuum(4);
  set_basis_state(s, {1, 0});
  apply_two_mode_squeezer(s, ModeId::s01, ModeId::i01, cd(0.02, 0.01));
  for (std::size_t i = 0; i < s.dimension(); ++i) {
    const auto n = s.occupations(i);
    if (n[0] - n[1] != 1) EXPECT_EQ(s.amplitudes()[i], cd{}) << n[0] << "," << n[1];
  }
  EXPECT_NEAR(s.norm_squared(), 1.0, 1e-14);
}

TEST(BeamSplitter, SinglePhotonSplitsEvenly) {
  auto s = two_mode_vacuum(2);
  set_basis_state(s, {1, 0});
  apply_beam_splitter(s, ModeId::s01, ModeId::i01, BeamSplitterParams::balanced());
  EXPECT_NEAR(probability(s, {1, 0}), 0.5, 1e-15);
  EXPECT_NEAR(probability(s, {0, 1}), 0.5, 1e-15);
}

TEST(BeamSplitter, FullTransmissionIsIdentity) {
  EXPECT_TRUE(beam_splitter_matrix(3, BeamSplitterParams(1.0)).isApprox(Eigen::MatrixXcd::Identity(16, 16)));
}

TEST(BeamSplitter, HongOuMandelNull) {
  auto s = two_mode_vacuum(2);
  set_basis_state(s, {1, 1});
  apply_beam_splitter(s, ModeId::s01, ModeId::i01, BeamSplitterParams::balanced());
  EXPECT_NEAR(probability(s, {1, 1}), 0.0, 1e-30);
  EXPECT_NEAR(probability(s, {2, 0}), 0.5, 1e-15);
  EXPECT_NEAR(probability(s, {0, 2}), 0.5, 1e-15);
}

TEST(BeamSplitter, HeisenbergMeanMatchesMixingMatrix) {
  // One photon in port 1: <n_out1> = |M_11|^2 for every t.
  for (int k = 0; k <= 10; ++k) {
    const BeamSplitterParams bs(k / 10.0);
    auto s = two_mode_vacuum(3);
    set_basis_state(s, {1, 0});
    apply_beam_splitter(s, ModeId::s01, ModeId::i01, bs);
    EXPECT_NEAR(s.mean_photons(ModeId::s01), bs.t() * bs.t(), 1e-15);
  }
}

TEST(BeamSplitter, ConservesPhotonNumberBelowCutoff) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  const int n_max = 3;
  auto s = two_mode_vacuum(n_max);
  // Random state supported on total photon number <= n_max.
  for (std::size_t i = 0; i < s.dimension(); ++i) {
    const auto n = s.occupations(i);
    s.amplitudes()[i] = n[0] + n[1] <= n_max ? cd(g(rng), g(rng)) : cd{};
  }
  const double nrm = std::sqrt(s.norm_squared());
  for (auto& a : s.amplitudes()) a /= nrm;
  const double before = s.mean_photons(ModeId::s01) + s.mean_photons(ModeId::i01);
  apply_beam_splitter(s, ModeId::s01, ModeId::i01, BeamSplitterParams(0.37));
  EXPECT_NEAR(s.norm_squared(), 1.0, 1e-14);
  EXPECT_NEAR(s.mean_photons(ModeId::s01) + s.mean_photons(ModeId::i01), before, 1e-13);
}

TEST(PhaseAndBlock, FullTurnPhaseIsIdentity) {
  auto s = two_mode_vacuum(3);
  apply_two_mode_squeezer(s, ModeId::s01, ModeId::i01, 0.2);
  const auto before = s.amplitudes();
  apply_phase(s, ModeId::s01, 2.0 * kPi);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_LT(std::abs(s.amplitudes()[i] - before[i]), 1e-12);
}

TEST(PhaseAndBlock, BlockOnVacuumIsNoOp) {
  auto s = FockStateVector::vacuum(2);
  apply_block(s, ModeId::s01, ModeId::aux_block_2);
  EXPECT_EQ(s.amplitudes()[0], cd(1.0));
  EXPECT_DOUBLE_EQ(s.norm_squared(), 1.0);
}

TEST(PhaseAndBlock, BlockedArmNeverReachesDetector) {
  auto s = FockStateVector::vacuum(3);
  apply_two_mode_squeezer(s, ModeId::s01, ModeId::i01, 0.05);
  const double n_before = s.mean_photons(ModeId::s01);
  apply_block(s, ModeId::s01, ModeId::aux_block_2);
  EXPECT_EQ(s.mean_photons(ModeId::s01), 0.0);
  EXPECT_NEAR(s.mean_photons(ModeId::aux_block_2), n_before, 1e-15);
  EXPECT_NEAR(s.mean_photons(ModeId::i01), n_before, 1e-15);
  EXPECT_NEAR(s.norm_squared(), 1.0, 1e-14);
}

TEST(PhaseAndBlock, BlockRequiresVacuumAbsorber) {
  auto s = FockStateVector::vacuum(2);
  apply_two_mode_squeezer(s, ModeId::s01, ModeId::aux_block_1, 0.05);
  EXPECT_THROW(apply_block(s, ModeId::i01, ModeId::aux_block_1), ContractViolation);
}

TEST(Network, NormPreservedThroughEveryElement) {
  for (double gain : {0.005, 0.01, 0.02}) {
    for (int n_max : {3, 4}) {
      auto p = default_setup();
      p.dphi_s = 0.8;
      p.dphi_i = 2.1;
      p.src1.c = p.src2.c = gain;
      auto s = FockStateVector::vacuum(n_max);
      for (const auto& e : eraser_network(p)) {
        apply_element(s, e);
        EXPECT_NEAR(s.norm_squared(), 1.0, 1e-10);
      }
    }
  }
}

TEST(RunExact, ZeroGainGivesZeroRates) {
  auto p = default_setup();
  p.src1.c = p.src2.c = 0.0;
  const auto r = run_exact(p).rates;
  EXPECT_EQ(r.r_a, 0.0);
  EXPECT_EQ(r.r_b, 0.0);
  EXPECT_EQ(r.r_ab, 0.0);
}

TEST(RunExact, DarkPortSinglesConvergeToFirstOrder) {
  double prev = 1.0;
  for (double g : {0.04, 0.02, 0.01}) {
    auto p = balanced_setup(g);
    p.dphi_i = 0.0;
    const double ratio = run_exact(p).rates.r_b / (g * g);
    EXPECT_NEAR(ratio, 0.5, 1e-3);
    EXPECT_LT(std::abs(ratio - 0.5), prev);
    prev = std::abs(ratio - 0.5);
  }
}

TEST(RunExact, MatchesGaussianMoments) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 12; ++k) {
    SetupParams p;
    p.bs1 = BeamSplitterParams(u(rng));
    p.bs2 = BeamSplitterParams(u(rng));
    p.bs3 = BeamSplitterParams(u(rng));
    p.src1.c = std::polar(0.02 * u(rng), kTwoPi * u(rng));
    p.src2.c = std::polar(0.02 * u(rng), kTwoPi * u(rng));
    p.dphi_s = kTwoPi * u(rng);
    p.dphi_i = kTwoPi * u(rng);
    p.block_reflected_idler = k % 3 == 1;
    p.block_signal_s1 = k % 3 == 2;
    const auto exact = run_exact(p, 1.0, 4).rates;
    const auto g = gaussian_rates(p);
    EXPECT_NEAR(exact.r_a / g.r_a, 1.0, 1e-9) << k;
    EXPECT_NEAR(exact.r_b / g.r_b, 1.0, 1e-9) << k;
    EXPECT_NEAR(exact.r_ab / g.r_ab, 1.0, 1e-9) << k;
  }
}

TEST(RunExact, WhichPathCoincidenceFlatToLeadingOrder) {
  // The only idler-phase dependence left is the O(gain^2) double-pair
  // background, so the relative spread falls 4x per halving of the gain.
  auto spread = [](double gain, bool gaussian) {
    auto p = default_setup();
    p.block_signal_s1 = true;
    p.src1.c = p.src2.c = gain;
    double lo = 1e300, hi = 0.0;
    for (int k = 0; k < 16; ++k) {
      p.dphi_i = 2.0 * kPi * k / 16.0;
      const double v = gaussian ? gaussian_rates(p).r_ab : run_exact(p).rates.r_ab;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return (hi - lo) / lo;
  };
  const double s1 = spread(0.01, false);
  EXPECT_NEAR(s1 / spread(0.01, true), 1.0, 1e-6);
  EXPECT_NEAR(spread(0.005, false) / s1, 0.25, 0.01);
  EXPECT_NEAR(spread(0.0025, false) / s1, 0.0625, 0.005);
}

TEST(RunExact, DetectorBMinimumAtZeroIdlerPhase) {
  auto p = balanced_setup();
  int argmin = -1, argmax = -1;
  double lo = 1e300, hi = -1.0;
  for (int k = 0; k < 16; ++k) {
    p.dphi_i = 2.0 * kPi * k / 16.0;
    const double v = run_exact(p).rates.r_b;
    if (v < lo) lo = v, argmin = k;
    if (v > hi) hi = v, argmax = k;
  }
  EXPECT_EQ(argmin, 0);
  EXPECT_EQ(argmax, 8);
}

TEST(RunExact, TruncationDetected) {
  auto p = default_setup();
  EXPECT_THROW(run_exact(p, 1.0, 1), TruncationError);
  p.src1.c = p.src2.c = 0.3;
  EXPECT_THROW(run_exact(p, 1.0, 2), TruncationError);
}

TEST(OracleCompare, ExactSideMatchesGaussianMoments) {
  const auto reports = oracle_compare(default_setup(), 0.01, 3, phase_grid(16, 4));
  ASSERT_EQ(reports.size(), 64u);
  for (const auto& r : reports) {
    auto p = default_setup();
    p.dphi_s = r.at.dphi_s;
    p.dphi_i = r.at.dphi_i;
    const auto g = gaussian_rates(p);
    EXPECT_NEAR(r.rates_exact.r_ab / g.r_ab, 1.0, 1e-9);
    EXPECT_NEAR(r.relative_deviations[2], std::abs(g.r_ab / r.rates_perturbative.r_ab - 1.0), 1e-9);
    EXPECT_LE(r.truncation_leakage, 1e-6);
  }
}

TEST(OracleCompare, SinglesWithinFirstOrderBound) {
  for (const auto& r : oracle_compare(default_setup(), 0.01, 3, phase_grid(16, 4))) {
    EXPECT_LE(r.relative_deviations[0], 5e-4);
    EXPECT_LE(r.relative_deviations[1], 5e-4);
  }
}

TEST(OracleCompare, DeviationScalesQuadratically) {
  const auto grid = phase_grid(16, 4);
  auto worst = [&](double gain) {
    double w = 0.0;
    for (const auto& r : oracle_compare(balanced_setup(), gain, 3, grid)) w = std::max(w, r.max_deviation());
    return w;
  };
  const double ratio = worst(0.02) / worst(0.01);
  EXPECT_GT(ratio, 2.0);
  EXPECT_LT(ratio, 6.0);
}

TEST(OracleCompare, CutoffConverged) {
  const auto grid = phase_grid(8, 2);
  const auto a = oracle_compare(default_setup(), 0.01, 2, grid);
  const auto b = oracle_compare(default_setup(), 0.01, 3, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_LE(rate_deviation(a[k].rates_exact.r_a, b[k].rates_exact.r_a), 1e-6);
    EXPECT_LE(rate_deviation(a[k].rates_exact.r_b, b[k].rates_exact.r_b), 1e-6);
    EXPECT_LE(rate_deviation(a[k].rates_exact.r_ab, b[k].rates_exact.r_ab), 1e-6);
  }
}

TEST(OracleCompare, RejectsLargeGain) {
  EXPECT_THROW(oracle_compare(default_setup(), 0.2, 3, phase_grid(2, 1)), InvalidParameter);
}
