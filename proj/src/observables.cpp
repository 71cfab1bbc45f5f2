#include "heatrect/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace heatrect {

SparseOperator LocalObservable::on(const SpaceLayout& layout) const {
  SparseOperator op = SparseOperator::zero(layout);
  for (const auto& [label, m] : terms)
    if (layout.contains(label)) op = op + embed(layout, label, m);
  return op;
}

LocalObservable LocalObservable::restricted(const SpaceLayout& layout) const {
  LocalObservable out{name, {}};
  for (const auto& t : terms)
    if (layout.contains(t.first)) out.terms.push_back(t);
  return out;
}

double LocalObservable::value(const DensityMatrix& rho) const {
  for (const auto& t : terms) rho.layout().index_of(t.first);
  return rho.expectation(on(rho.layout()));
}

CircuitSpec BiasSetting::apply(CircuitSpec spec) const {
  spec.left_bath = BathParams::with_occupation(n_L, spec.left_bath.Gamma);
  spec.right_bath = BathParams::with_occupation(n_R, spec.right_bath.Gamma);
  return spec;
}

std::string to_string(Bias b) { return b == Bias::Forward ? "forward" : "reverse"; }

LocalObservable exchange_current_observable(const Mode& mode, const BathParams& bath) {
  if (mode.kind != ModeKind::HarmonicOscillator)
    throw LayoutError("exchange current needs an oscillator, '" + mode.label + "' is not one");
  const double n = bath.mean_occupation();
  const DenseMatrix a = local_lowering(mode);
  const DenseMatrix ad = a.adjoint();
  DenseMatrix op = bath.Gamma * n * (a * ad) - bath.Gamma * (n + 1.0) * (ad * a);
  return {"exchange_" + mode.label, {{mode.label, op}}};
}

double bath_exchange_current(const DensityMatrix& rho, const std::string& label, const BathParams& bath) {
  return exchange_current_observable(rho.layout().mode(label), bath).value(rho);
}

LocalObservable decay_current_observable(const std::string& qutrit, const RateTable& table) {
  DenseMatrix op = DenseMatrix::Zero(3, 3);
  op(1, 1) = table.down10;
  op(2, 2) = table.down21;
  return {"decay_" + qutrit, {{qutrit, op}}};
}

LocalObservable net_current_observable(const std::string& qutrit, const RateTable& table) {
  DenseMatrix op = DenseMatrix::Zero(3, 3);
  op(0, 0) = -table.up01;
  op(1, 1) = table.down10 - table.up12;
  op(2, 2) = table.down21;
  return {"net_" + qutrit, {{qutrit, op}}};
}

namespace {

LocalObservable markov_current(const std::vector<AttachmentRates>& rates, Bias bias,
                               const std::vector<std::string>& qutrits) {
  const BathSide side = bias == Bias::Forward ? BathSide::Right : BathSide::Left;
  const double sign = bias == Bias::Forward ? 1.0 : -1.0;
  LocalObservable obs{"markov_" + to_string(bias), {}};
  bool found = false;
  for (const auto& q : qutrits)
    for (const auto& ar : rates)
      if (ar.attachment.qutrit == q && ar.attachment.side == side) {
        found = true;
        auto d = decay_current_observable(q, ar.table);
        obs.terms.push_back({q, sign * d.terms.front().second});
      }
  if (!found) throw std::invalid_argument("missing rate tables for the " + to_string(bias) + " current");
  return obs;
}

}  // namespace

LocalObservable markov_current_observable(const CircuitModel& model, Bias bias) {
  const auto rates = attachment_rates(model);
  switch (model.spec.topology) {
    case Topology::Parallel: return markov_current(rates, bias, {"D1", "D2"});
    case Topology::Series: return markov_current(rates, bias, {bias == Bias::Forward ? "D2" : "D1"});
    case Topology::Bridge: {
      // Net excitation flow into the right bath through the R-facing diodes.
      LocalObservable obs{"bridge_net_right", {}};
      for (const auto& ar : rates)
        if (ar.attachment.side == BathSide::Right)
          obs.terms.push_back(net_current_observable(ar.attachment.qutrit, ar.table).terms.front());
      return obs;
    }
    case Topology::SingleDiode: {
      const SpaceLayout layout = model.layout();
      if (bias == Bias::Forward) {
        auto obs = exchange_current_observable(layout.mode("R"), model.spec.right_bath);
        obs.terms.front().second *= -1.0;
        obs.name = "exchange_forward";
        return obs;
      }
      auto obs = exchange_current_observable(layout.mode("L"), model.spec.left_bath);
      obs.name = "exchange_reverse";
      return obs;
    }
  }
  throw std::logic_error("unhandled topology");
}

double markov_current_parallel(const DensityMatrix& rho, const std::vector<AttachmentRates>& rates, Bias bias) {
  return markov_current(rates, bias, {"D1", "D2"}).value(rho);
}

double markov_current_series(const DensityMatrix& rho, const std::vector<AttachmentRates>& rates, Bias bias) {
  return markov_current(rates, bias, {bias == Bias::Forward ? "D2" : "D1"}).value(rho);
}

double rectification(double J_f, double J_r) {
  if (std::abs(J_r) < 1e-14) return std::numeric_limits<double>::infinity();
  return -J_f / J_r;
}

CurrentReport make_report(double J_f, double J_r) { return {J_f, J_r, rectification(J_f, J_r)}; }

EffectiveTemperature effective_temperature(double mean_n) {
  if (!(mean_n > 0.0)) return {0.0, true};
  // 1/(ln(n+1) - ln n) written to stay accurate for both small and large n.
  return {1.0 / std::log1p(1.0 / mean_n), false};
}

double thermal_population(double mean_n, int n) {
  if (mean_n < 0.0 || n < 0) throw std::invalid_argument("thermal_population needs mean_n >= 0, n >= 0");
  return std::pow(mean_n, n) / std::pow(1.0 + mean_n, n + 1);
}

DensityMatrix thermal_state(const std::string& label, int dim, double mean_n) {
  SpaceLayout layout({Mode::oscillator(label, dim)});
  DenseMatrix d = DenseMatrix::Zero(dim, dim);
  double total = 0.0;
  for (int k = 0; k < dim; ++k) total += thermal_population(mean_n, k);
  for (int k = 0; k < dim; ++k) d(k, k) = thermal_population(mean_n, k) / total;
  return DensityMatrix(layout, std::move(d));
}

double fidelity(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  if (rho1.dim() != rho2.dim()) throw LayoutError("fidelity needs states of equal dimension");
  constexpr double neg_tol = 1e-8;
  const DenseMatrix h1 = 0.5 * (rho1.data() + rho1.data().adjoint());
  const DenseMatrix h2 = 0.5 * (rho2.data() + rho2.data().adjoint());

  Eigen::SelfAdjointEigenSolver<DenseMatrix> es1(h1);
  if (es1.eigenvalues().minCoeff() < -neg_tol) throw std::domain_error("fidelity: rho1 is not positive");
  if (rho2.min_eigenvalue() < -neg_tol) throw std::domain_error("fidelity: rho2 is not positive");

  const Eigen::VectorXd s = es1.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const DenseMatrix sqrt1 = es1.eigenvectors() * s.cast<cplx>().asDiagonal() * es1.eigenvectors().adjoint();
  DenseMatrix m = sqrt1 * h2 * sqrt1;
  m = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es2(m, Eigen::EigenvaluesOnly);
  const double root = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(root * root, 0.0, 1.0);
}

ModeReport mode_report(const DensityMatrix& rho, const std::string& label) {
  ModeReport r;
  r.label = label;
  r.reduced = partial_trace(rho, {label});
  const int dim = r.reduced.layout().mode(0).dim;
  for (int k = 0; k < dim; ++k) {
    const double p = r.reduced.data()(k, k).real();
    r.populations.push_back(p);
    r.mean_n += k * p;
  }
  r.temperature = effective_temperature(r.mean_n);
  return r;
}

}  // namespace heatrect
