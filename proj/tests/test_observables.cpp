#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "heatrect/lindblad.hpp"
#include "heatrect/observables.hpp"
#include "support.hpp"

using namespace heatrect;
using heatrect::testing::max_abs;
using heatrect::testing::random_state;
using heatrect::testing::uniform;

namespace {

const SpaceLayout qubit({Mode::oscillator("A", 2)});

DensityMatrix diag_state(const SpaceLayout& l, std::vector<double> p) {
  DenseMatrix m = DenseMatrix::Zero(l.dim(), l.dim());
  for (std::size_t k = 0; k < p.size(); ++k) m(k, k) = p[k];
  return DensityMatrix(l, m);
}

double qubit_fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  const double det = std::sqrt(std::max(0.0, a.data().determinant().real() * b.data().determinant().real()));
  return (a.data() * b.data()).trace().real() + 2.0 * det;
}

}  // namespace

TEST(Fidelity, IdentityAndOrthogonality) {
  const SpaceLayout l({Mode::qutrit("Q")});
  const DensityMatrix rho = random_state(l);
  EXPECT_NEAR(fidelity(rho, rho), 1.0, 1e-10);
  EXPECT_NEAR(fidelity(diag_state(l, {1, 0, 0}), diag_state(l, {0, 0.5, 0.5})), 0.0, 1e-15);
  EXPECT_NEAR(fidelity(diag_state(qubit, {1, 0}), DensityMatrix::maximally_mixed(qubit)), 0.5, 1e-14);
}

TEST(Fidelity, CommutingStatesUseClassicalOverlap) {
  const SpaceLayout l({Mode::oscillator("A", 4)});
  const std::vector<double> p{0.4, 0.3, 0.2, 0.1}, q{0.1, 0.2, 0.3, 0.4};
  double bc = 0.0;
  for (int k = 0; k < 4; ++k) bc += std::sqrt(p[k] * q[k]);
  EXPECT_NEAR(fidelity(diag_state(l, p), diag_state(l, q)), bc * bc, 1e-13);
}

TEST(Fidelity, QubitClosedFormAndSymmetry) {
  for (int rep = 0; rep < 20; ++rep) {
    const DensityMatrix a = random_state(qubit), b = random_state(qubit);
    EXPECT_NEAR(fidelity(a, b), qubit_fidelity(a, b), 1e-10);
    EXPECT_NEAR(fidelity(a, b), fidelity(b, a), 1e-10);
  }
}

TEST(Fidelity, PureStatesGiveSquaredOverlap) {
  const SpaceLayout l({Mode::qutrit("Q")});
  DenseVector psi(3), phi(3);
  psi << cplx(1, 0), cplx(0, 1), cplx(0.5, 0);
  phi << cplx(0.2, 0), cplx(1, 0), cplx(0, -0.3);
  psi.normalize();
  phi.normalize();
  const DensityMatrix a(l, psi * psi.adjoint()), b(l, phi * phi.adjoint());
  EXPECT_NEAR(fidelity(a, b), std::norm(psi.dot(phi)), 1e-8);
  EXPECT_THROW(fidelity(a, DensityMatrix::maximally_mixed(qubit)), LayoutError);
}

TEST(Rectification, Values) {
  EXPECT_DOUBLE_EQ(rectification(0.01, -0.01), 1.0);
  EXPECT_DOUBLE_EQ(rectification(0.01, -1e-5), 1000.0);
  EXPECT_TRUE(std::isinf(rectification(0.01, 0.0)));
  EXPECT_TRUE(std::isinf(rectification(0.01, 5e-15)));
  const CurrentReport r = make_report(2e-3, -1e-3);
  EXPECT_DOUBLE_EQ(r.rectification, 2.0);
  EXPECT_EQ(r.J_f, 2e-3);
  EXPECT_EQ(r.J_r, -1e-3);
}

TEST(Temperature, BoseRoundTripAndMonotonicity) {
  double last = 0.0;
  for (double n : {1e-6, 1e-3, 0.1, 0.5, 1.0, 3.0, 50.0}) {
    const EffectiveTemperature t = effective_temperature(n);
    EXPECT_FALSE(t.flagged);
    EXPECT_GT(t.T, last);
    last = t.T;
    EXPECT_NEAR(bose_occupation(1.0 / t.T) / n, 1.0, 1e-12);
  }
  EXPECT_NEAR(effective_temperature(0.5).T, 1.0 / std::log(3.0), 1e-15);
  EXPECT_TRUE(effective_temperature(0.0).flagged);
  EXPECT_EQ(effective_temperature(-0.1).T, 0.0);
}

TEST(Temperature, ThermalPopulationsAreGeometric) {
  double total = 0.0;
  for (int k = 0; k < 200; ++k) total += thermal_population(0.5, k);
  EXPECT_NEAR(total, 1.0, 1e-14);
  EXPECT_NEAR(thermal_population(0.5, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(thermal_population(0.5, 2) / thermal_population(0.5, 1), 1.0 / 3.0, 1e-15);
  EXPECT_THROW(thermal_population(-1.0, 0), std::invalid_argument);
  const DensityMatrix t = thermal_state("A", 8, 0.5);
  EXPECT_NEAR(t.trace().real(), 1.0, 1e-15);
  EXPECT_NEAR(t.data()(1, 1).real() / t.data()(0, 0).real(), 1.0 / 3.0, 1e-15);
}

TEST(ModeReportTest, ReducesAndSummarizes) {
  const SpaceLayout l({Mode::qutrit("Q"), Mode::oscillator("A", 3)});
  const DensityMatrix a = diag_state(SpaceLayout({Mode::oscillator("A", 3)}), {0.7, 0.2, 0.1});
  const DensityMatrix rho = DensityMatrix::product({random_state(SpaceLayout({Mode::qutrit("Q")})), a}, l);
  const ModeReport r = mode_report(rho, "A");
  EXPECT_NEAR(r.mean_n, 0.4, 1e-14);
  ASSERT_EQ(r.populations.size(), 3u);
  EXPECT_NEAR(r.populations[2], 0.1, 1e-14);
  EXPECT_NEAR(r.temperature.T, effective_temperature(0.4).T, 1e-12);
  EXPECT_LT(max_abs(r.reduced.data() - a.data()), 1e-14);
}

TEST(Currents, ExchangeCurrentOfThermalStateVanishes) {
  const BathParams bath = BathParams::with_occupation(0.5, 10.0);
  const DensityMatrix t = thermal_state("A", 6, 0.5);
  EXPECT_NEAR(bath_exchange_current(t, "A", bath), 0.0, 1e-14);
  const DensityMatrix vac = diag_state(SpaceLayout({Mode::oscillator("A", 6)}), {1, 0, 0, 0, 0, 0});
  EXPECT_NEAR(bath_exchange_current(vac, "A", bath), 5.0, 1e-14);
  EXPECT_THROW(exchange_current_observable(Mode::qutrit("Q"), bath), LayoutError);
}

TEST(Currents, NetCurrentMatchesRateBalance) {
  const RateTable t = qutrit_rate_table({}, 0.5, 10.0, true);
  const SpaceLayout l({Mode::qutrit("D1")});
  const std::vector<double> p{0.5, 0.3, 0.2};
  const DensityMatrix rho = diag_state(l, p);
  const double flow = p[1] * t.down10 + p[2] * t.down21 - p[0] * t.up01 - p[1] * t.up12;
  EXPECT_NEAR(net_current_observable("D1", t).value(rho), flow, 1e-16);
  EXPECT_NEAR(decay_current_observable("D1", t).value(rho), p[1] * t.down10 + p[2] * t.down21, 1e-16);
}

TEST(Currents, MarkovCurrentsFollowTopology) {
  const CircuitModel par = describe_circuit(CircuitSpec::defaults(Topology::Parallel));
  const auto rates = attachment_rates(par);
  const DensityMatrix rho = random_state(par.layout());
  double expect_f = 0.0, expect_r = 0.0;
  for (const auto& ar : rates) {
    const double v = decay_current_observable(ar.attachment.qutrit, ar.table)
                         .value(partial_trace(rho, {ar.attachment.qutrit}));
    (ar.attachment.side == BathSide::Right ? expect_f : expect_r) += v;
  }
  EXPECT_NEAR(markov_current_parallel(rho, rates, Bias::Forward), expect_f, 1e-15);
  EXPECT_NEAR(markov_current_parallel(rho, rates, Bias::Reverse), -expect_r, 1e-15);
  EXPECT_NEAR(markov_current_observable(par, Bias::Forward).value(rho), expect_f, 1e-15);

  const CircuitModel ser = describe_circuit(CircuitSpec::defaults(Topology::Series));
  const auto sr = attachment_rates(ser);
  const DensityMatrix rs = random_state(ser.layout());
  for (const auto& ar : sr) {
    const double v = decay_current_observable(ar.attachment.qutrit, ar.table).value(partial_trace(rs, {ar.attachment.qutrit}));
    if (ar.attachment.side == BathSide::Right) EXPECT_NEAR(markov_current_series(rs, sr, Bias::Forward), v, 1e-15);
    else EXPECT_NEAR(markov_current_series(rs, sr, Bias::Reverse), -v, 1e-15);
  }
}

TEST(Currents, BiasSettingsKeepCouplings) {
  CircuitSpec s = CircuitSpec::defaults(Topology::Series);
  s.left_bath.Gamma = 7.0;
  const CircuitSpec r = BiasSetting::reverse().apply(s);
  EXPECT_EQ(r.left_bath.Gamma, 7.0);
  EXPECT_NEAR(r.left_bath.mean_occupation(), 0.0, 1e-300);
  EXPECT_NEAR(r.right_bath.mean_occupation(), 0.5, 1e-14);
  EXPECT_EQ(to_string(Bias::Forward), "forward");
}
