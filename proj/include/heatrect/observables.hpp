#ifndef HEATRECT_OBSERVABLES_HPP
#define HEATRECT_OBSERVABLES_HPP

#include <string>
#include <vector>

#include "heatrect/circuit.hpp"
#include "heatrect/lindblad.hpp"
#include "heatrect/tensor.hpp"

namespace heatrect {

/// Linear functional rho -> sum_k Re Tr(op_k rho_k), each op_k acting on one mode.
struct LocalObservable {
  std::string name;
  std::vector<std::pair<std::string, DenseMatrix>> terms;

  /// Terms whose mode is in `layout`, summed and embedded.
  SparseOperator on(const SpaceLayout& layout) const;
  /// Keeps only terms whose mode is in `layout`.
  LocalObservable restricted(const SpaceLayout& layout) const;
  double value(const DensityMatrix& rho) const;
};

enum class Bias { Forward, Reverse };

struct BiasSetting {
  Bias label;
  double n_L;
  double n_R;

  static BiasSetting forward() { return {Bias::Forward, 0.5, 0.0}; }
  static BiasSetting reverse() { return {Bias::Reverse, 0.0, 0.5}; }
  /// Applies the occupations to a spec, keeping its bath couplings.
  CircuitSpec apply(CircuitSpec spec) const;
};

std::string to_string(Bias b);

struct CurrentReport {
  double J_f = 0.0;
  double J_r = 0.0;
  double rectification = 0.0;  ///< +inf when |J_r| < 1e-14
};

/// Gamma n <a a^dag> - Gamma (n+1) <a^dag a>: excitations per unit time
/// entering the oscillator from its bath.
double bath_exchange_current(const DensityMatrix& rho, const std::string& label, const BathParams& bath);
LocalObservable exchange_current_observable(const Mode& mode, const BathParams& bath);

/// p(1) Gamma_{1->0} + p(2) Gamma_{2->1}: decays of one qutrit into its bath.
LocalObservable decay_current_observable(const std::string& qutrit, const RateTable& table);
/// Decays minus pumps of one qutrit, i.e. net excitations delivered to the bath.
LocalObservable net_current_observable(const std::string& qutrit, const RateTable& table);

/// Markov currents of the reduced two-qutrit circuits. Forward: decays into
/// the right bath. Reverse: minus the decays into the left bath.
LocalObservable markov_current_observable(const CircuitModel& model, Bias bias);
double markov_current_parallel(const DensityMatrix& rho, const std::vector<AttachmentRates>& rates, Bias bias);
double markov_current_series(const DensityMatrix& rho, const std::vector<AttachmentRates>& rates, Bias bias);

double rectification(double J_f, double J_r);
CurrentReport make_report(double J_f, double J_r);

struct EffectiveTemperature {
  double T = 0.0;        ///< units of omega
  bool flagged = false;  ///< mean occupation <= 0; T reported as 0
};

EffectiveTemperature effective_temperature(double mean_n);
double thermal_population(double mean_n, int n);
/// Thermal state of mean occupation `mean_n` on a single oscillator, truncated
/// to `dim` levels and renormalized.
DensityMatrix thermal_state(const std::string& label, int dim, double mean_n);

/// [tr sqrt(sqrt(rho1) rho2 sqrt(rho1))]^2 via eigendecomposition of rho1.
double fidelity(const DensityMatrix& rho1, const DensityMatrix& rho2);

struct ModeReport {
  std::string label;
  double mean_n = 0.0;
  EffectiveTemperature temperature;
  std::vector<double> populations;
  DensityMatrix reduced;
};

ModeReport mode_report(const DensityMatrix& rho, const std::string& label);

}  // namespace heatrect

#endif  // HEATRECT_OBSERVABLES_HPP
