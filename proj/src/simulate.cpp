#include "heatrect/simulate.hpp"

#include <cmath>

namespace heatrect {

CircuitSpec reversed(CircuitSpec spec) {
  std::swap(spec.left_bath, spec.right_bath);
  return spec;
}

std::vector<ComponentProblem> circuit_components(const CircuitModel& model, const LocalObservable& current) {
  std::vector<ComponentProblem> out;
  for (const auto& group : connected_components(model)) {
    Liouvillian gen = build_generator(model, group);
    DensityMatrix rho0 = DensityMatrix::ground_state(gen.layout());
    LocalObservable obs = current.restricted(gen.layout());
    out.push_back({std::move(gen), std::move(rho0), std::move(obs)});
  }
  return out;
}

EvolutionResult solve_circuit(const CircuitModel& model, const LocalObservable& current,
                              const ConvergenceProtocol& protocol) {
  return run_convergence_protocol(circuit_components(model, current), model.layout(), protocol);
}

BiasedRun run_biased(const CircuitSpec& spec, const ConvergenceProtocol& protocol) {
  spec.validate();
  const CircuitModel fwd = describe_circuit(spec);
  const CircuitModel rev = describe_circuit(reversed(spec));
  BiasedRun r;
  r.forward = solve_circuit(fwd, markov_current_observable(fwd, Bias::Forward), protocol);
  r.reverse = solve_circuit(rev, markov_current_observable(rev, Bias::Reverse), protocol);
  r.report = make_report(r.forward.converged_value, r.reverse.converged_value);
  return r;
}

CircuitModel reduced_single_diode(const CircuitSpec& spec) {
  if (spec.topology != Topology::SingleDiode) throw SpecError("reduced_single_diode needs topology 'single'");
  CircuitModel m = describe_circuit(spec);
  m.reduced = true;
  m.has_coherent_part = false;
  m.modes = {Mode::qutrit("D1")};
  m.onsite.clear();
  m.attachments = {{"D1", BathSide::Left, true}, {"D1", BathSide::Right, false}};
  return m;
}

namespace {

LocalObservable reduced_current(const CircuitModel& reduced, BathSide side, double sign) {
  for (const auto& ar : attachment_rates(reduced))
    if (ar.attachment.side == side) {
      auto obs = net_current_observable("D1", ar.table);
      obs.terms.front().second *= sign;
      return obs;
    }
  throw std::logic_error("reduced single diode lacks a bath attachment");
}

}  // namespace

std::vector<SingleDiodeComparison> validate_single_diode(const CircuitSpec& spec,
                                                         const ConvergenceProtocol& protocol) {
  spec.validate();
  if (spec.topology != Topology::SingleDiode) throw SpecError("validate_single_diode needs topology 'single'");

  CircuitSpec equilibrium = spec;
  equilibrium.right_bath = equilibrium.left_bath;
  equilibrium.right_bath.Gamma = spec.right_bath.Gamma;

  struct Case {
    std::string name;
    CircuitSpec spec;
    Bias bias;
  };
  const std::vector<Case> cases = {
      {"forward", spec, Bias::Forward}, {"reverse", reversed(spec), Bias::Reverse},
      {"equilibrium", equilibrium, Bias::Forward}};

  std::vector<SingleDiodeComparison> out;
  for (const auto& c : cases) {
    const CircuitModel full = describe_circuit(c.spec);
    const EvolutionResult r = solve_circuit(full, markov_current_observable(full, c.bias), protocol);

    const CircuitModel red = reduced_single_diode(c.spec);
    const LocalObservable obs = c.bias == Bias::Forward ? reduced_current(red, BathSide::Right, 1.0)
                                                        : reduced_current(red, BathSide::Left, -1.0);
    const DensityMatrix rho = steady_state_direct(build_generator(red));

    SingleDiodeComparison s;
    s.bias = c.name;
    s.full = r.converged_value;
    s.reduced = obs.value(rho);
    s.relative_deviation = std::abs(s.full - s.reduced) / std::abs(s.reduced);
    s.blocks = r.blocks_used;
    s.converged = r.converged;
    out.push_back(s);
  }
  return out;
}

}  // namespace heatrect
