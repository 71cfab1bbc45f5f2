#ifndef HEATRECT_SIMULATE_HPP
#define HEATRECT_SIMULATE_HPP

#include <string>
#include <vector>

#include "heatrect/circuit.hpp"
#include "heatrect/observables.hpp"
#include "heatrect/steady_state.hpp"

namespace heatrect {

/// Spec with the left and right baths exchanged.
CircuitSpec reversed(CircuitSpec spec);

/// One ComponentProblem per connected group of modes, each starting from the
/// ground state and carrying its share of `current`.
std::vector<ComponentProblem> circuit_components(const CircuitModel& model, const LocalObservable& current);

/// Steady state of a circuit under the windowed-average protocol. Never throws
/// on non-convergence; inspect `converged`.
EvolutionResult solve_circuit(const CircuitModel& model, const LocalObservable& current,
                              const ConvergenceProtocol& protocol);

struct BiasedRun {
  EvolutionResult forward;
  EvolutionResult reverse;
  CurrentReport report;
  bool converged() const { return forward.converged && reverse.converged; }
};

/// Forward run with the baths as given, reverse run with the baths swapped.
BiasedRun run_biased(const CircuitSpec& spec, const ConvergenceProtocol& protocol);

/// Single diode with both filter oscillators eliminated into rates.
CircuitModel reduced_single_diode(const CircuitSpec& spec);

struct SingleDiodeComparison {
  std::string bias;  ///< forward, reverse or equilibrium
  double full = 0.0;
  double reduced = 0.0;
  double relative_deviation = 0.0;  ///< |full - reduced| / |reduced|
  int blocks = 0;
  bool converged = false;
};

/// Full [L, D1, R] model against the reduced rate model for forward, reverse
/// and equal bath occupations. Forward currents count excitations delivered to
/// the right bath, reverse currents are minus those delivered to the left bath.
std::vector<SingleDiodeComparison> validate_single_diode(const CircuitSpec& spec,
                                                         const ConvergenceProtocol& protocol);

}  // namespace heatrect

#endif  // HEATRECT_SIMULATE_HPP
