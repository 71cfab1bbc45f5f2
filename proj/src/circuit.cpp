#include "heatrect/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace heatrect {

double bose_occupation(double omega_over_T) {
  if (!(omega_over_T > 0.0)) throw std::invalid_argument("bose_occupation needs omega/T > 0");
  return 1.0 / std::expm1(omega_over_T);
}

BathParams BathParams::with_occupation(double n, double Gamma) {
  BathParams b;
  b.Gamma = Gamma;
  b.occupation = n;
  return b;
}

BathParams BathParams::with_temperature(double T, double Gamma) {
  BathParams b;
  b.Gamma = Gamma;
  b.temperature = T;
  return b;
}

double BathParams::mean_occupation() const {
  if (occupation) return *occupation;
  if (temperature) return bose_occupation(1.0 / *temperature);
  throw SpecError("bath has neither occupation nor temperature");
}

void BathParams::validate(const std::string& where) const {
  if (!(Gamma > 0.0) || !std::isfinite(Gamma)) throw SpecError(where + ".Gamma must be positive");
  if (occupation.has_value() == temperature.has_value())
    throw SpecError(where + ": exactly one of occupation and temperature must be given");
  if (occupation && (!(*occupation >= 0.0) || !std::isfinite(*occupation)))
    throw SpecError(where + ".occupation must be >= 0");
  if (temperature && (!(*temperature > 0.0) || !std::isfinite(*temperature)))
    throw SpecError(where + ".temperature must be > 0");
}

std::string to_string(Topology t) {
  switch (t) {
    case Topology::SingleDiode: return "single";
    case Topology::Parallel: return "parallel";
    case Topology::Series: return "series";
    case Topology::Bridge: return "bridge";
  }
  return "?";
}

std::string to_string(RateMode m) {
  return m == RateMode::PhysicalModulated ? "physical" : "paper";
}

Topology topology_from_string(const std::string& s) {
  if (s == "single") return Topology::SingleDiode;
  if (s == "parallel") return Topology::Parallel;
  if (s == "series") return Topology::Series;
  if (s == "bridge") return Topology::Bridge;
  throw SpecError("unknown topology '" + s + "'");
}

RateMode rate_mode_from_string(const std::string& s) {
  if (s == "physical") return RateMode::PhysicalModulated;
  if (s == "paper") return RateMode::PaperLiteral;
  throw SpecError("unknown rate mode '" + s + "' (expected physical|paper)");
}

std::vector<std::string> required_diodes(Topology topology) {
  switch (topology) {
    case Topology::SingleDiode: return {"D1"};
    case Topology::Parallel:
    case Topology::Series: return {"D1", "D2"};
    case Topology::Bridge: return {"D1", "D2", "D3", "D4"};
  }
  return {};
}

CircuitSpec CircuitSpec::defaults(Topology topology) {
  CircuitSpec spec;
  spec.topology = topology;
  for (const auto& d : required_diodes(topology)) spec.diodes[d] = DiodeParams{};
  if (topology == Topology::Bridge) {
    spec.left_bath = BathParams::with_temperature(1.0);
    spec.right_bath = BathParams::with_temperature(0.1);
  }
  if (topology == Topology::SingleDiode) spec.ho_truncation = 4;
  return spec;
}

void CircuitSpec::validate() const {
  const auto need = required_diodes(topology);
  if (diodes.size() != need.size())
    throw SpecError("diodes: topology '" + to_string(topology) + "' needs exactly " +
                    std::to_string(need.size()) + " diodes");
  for (const auto& label : need) {
    auto it = diodes.find(label);
    if (it == diodes.end()) throw SpecError("diodes." + label + " is missing");
    const auto& p = it->second;
    const std::string where = "diodes." + label;
    if (!(p.delta_omega > 0.0) || !std::isfinite(p.delta_omega))
      throw SpecError(where + ".delta_omega must be positive");
    if (!(p.J > 0.0) || !std::isfinite(p.J)) throw SpecError(where + ".J must be positive");
    if (!(p.J_prime >= 0.0) || !std::isfinite(p.J_prime))
      throw SpecError(where + ".J_prime must be >= 0");
  }
  left_bath.validate("left_bath");
  right_bath.validate("right_bath");
  if (!(gamma_dec >= 0.0) || !std::isfinite(gamma_dec)) throw SpecError("gamma_dec must be >= 0");
  if (ho_truncation < 2) throw SpecError("ho_truncation must be >= 2");
  if (topology == Topology::Bridge) {
    const double dw = diodes.at("D1").delta_omega;
    for (const auto& [label, p] : diodes)
      if (p.delta_omega != dw)
        throw SpecError("diodes." + label + ".delta_omega: bridge diodes share one anharmonicity");
  }
}

std::vector<std::string> CircuitSpec::warnings() const {
  std::vector<std::string> out;
  for (const auto& [label, p] : diodes)
    if (p.delta_omega < 20.0 * p.J)
      out.push_back(label + ": delta_omega < 20 J, outside the regime delta_omega >> J");
  if (topology != Topology::Bridge && gamma_dec != CircuitSpec{}.gamma_dec)
    out.push_back("gamma_dec is only used by the bridge topology");
  return out;
}

SpaceLayout CircuitModel::full_layout(int bath_dim) const {
  std::vector<Mode> m;
  for (const auto& mode : full_modes)
    if (reduced && (mode.label == "L" || mode.label == "R")) m.push_back(Mode::oscillator(mode.label, bath_dim));
    else m.push_back(mode);
  return SpaceLayout(std::move(m));
}

namespace {

// Input coupling (to A) is modulated at the diode's own anharmonicity; the
// output coupling (to B) is static.
void add_diode(CircuitModel& m, const std::string& diode, const std::string& input,
               const std::string& output, const DiodeParams& p, bool input_to_bath, bool output_to_bath) {
  m.onsite.push_back({diode, 0, -p.delta_omega});
  m.couplings.push_back({input, diode, p.J, p.J_prime, p.delta_omega, input_to_bath});
  m.couplings.push_back({diode, output, p.J, 0.0, 0.0, output_to_bath});
}

}  // namespace

CircuitModel describe_circuit(const CircuitSpec& spec) {
  spec.validate();
  CircuitModel m;
  m.spec = spec;
  const int N = spec.ho_truncation;
  const auto& d = spec.diodes;

  switch (spec.topology) {
    case Topology::SingleDiode:
      m.reduced = false;
      m.modes = {Mode::oscillator("L", N), Mode::qutrit("D1"), Mode::oscillator("R", N)};
      m.full_modes = m.modes;
      add_diode(m, "D1", "L", "R", d.at("D1"), false, false);
      break;

    case Topology::Parallel:
      m.modes = {Mode::qutrit("D1"), Mode::qutrit("D2")};
      m.full_modes = {Mode::oscillator("L", N), Mode::qutrit("D1"), Mode::qutrit("D2"),
                      Mode::oscillator("R", N)};
      add_diode(m, "D1", "L", "R", d.at("D1"), true, true);
      add_diode(m, "D2", "L", "R", d.at("D2"), true, true);
      m.attachments = {{"D1", BathSide::Left, true}, {"D1", BathSide::Right, false},
                       {"D2", BathSide::Left, true}, {"D2", BathSide::Right, false}};
      // The reduced parallel equation is a pure rate equation.
      m.has_coherent_part = false;
      break;

    case Topology::Series: {
      m.modes = {Mode::qutrit("D1"), Mode::qutrit("D2")};
      m.full_modes = {Mode::oscillator("L", N), Mode::qutrit("D1"), Mode::qutrit("D2"),
                      Mode::oscillator("R", N)};
      const auto& p1 = d.at("D1");
      const auto& p2 = d.at("D2");
      // Compact series circuit: D1 has no output coupling of its own, D2's
      // modulated input coupling links the two qutrits.
      m.onsite.push_back({"D1", 0, -p1.delta_omega});
      m.couplings.push_back({"L", "D1", p1.J, p1.J_prime, p1.delta_omega, true});
      add_diode(m, "D2", "D1", "R", p2, false, true);
      m.attachments = {{"D1", BathSide::Left, true}, {"D2", BathSide::Right, false}};
      break;
    }

    case Topology::Bridge: {
      m.modes = {Mode::qutrit("D1"), Mode::oscillator("M1", N), Mode::qutrit("D2"),
                 Mode::qutrit("D3"), Mode::oscillator("M2", N), Mode::qutrit("D4")};
      m.full_modes = {Mode::oscillator("L", N)};
      for (const auto& mode : m.modes) m.full_modes.push_back(mode);
      m.full_modes.push_back(Mode::oscillator("R", N));
      add_diode(m, "D1", "L", "M1", d.at("D1"), true, false);
      add_diode(m, "D2", "R", "M1", d.at("D2"), true, false);
      add_diode(m, "D3", "M2", "L", d.at("D3"), false, true);
      add_diode(m, "D4", "M2", "R", d.at("D4"), false, true);
      m.attachments = {{"D1", BathSide::Left, true},
                       {"D2", BathSide::Right, spec.bridge_rate_mode == RateMode::PhysicalModulated},
                       {"D3", BathSide::Left, false},
                       {"D4", BathSide::Right, false}};
      for (const auto& mode : m.modes) m.decohered.push_back(mode.label);
      break;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

TimeDependentOperator::TimeDependentOperator(SparseOperator static_part, std::vector<DriveTerm> drives)
    : static_part_(std::move(static_part)), drives_(std::move(drives)) {
  for (const auto& d : drives_)
    if (!(d.op.layout() == static_part_.layout()))
      throw LayoutError("drive term lives on a different layout");
}

SparseOperator TimeDependentOperator::at(double t) const {
  SparseOperator h = static_part_;
  for (const auto& d : drives_) h = h + d.op * cplx(std::cos(d.frequency * t), 0.0);
  return h;
}

TimeDependentOperator TimeDependentOperator::operator+(const TimeDependentOperator& rhs) const {
  std::vector<DriveTerm> drives = drives_;
  for (const auto& d : rhs.drives_) drives.push_back(d);
  return TimeDependentOperator(static_part_ + rhs.static_part_, std::move(drives));
}

TimeDependentOperator TimeDependentOperator::operator-(const TimeDependentOperator& rhs) const {
  std::vector<DriveTerm> drives = drives_;
  for (const auto& d : rhs.drives_) drives.push_back({d.frequency, d.op * cplx(-1.0, 0.0)});
  // Merge equal frequencies so cancelled terms vanish structurally.
  std::vector<DriveTerm> merged;
  for (auto& d : drives) {
    auto it = std::find_if(merged.begin(), merged.end(),
                           [&](const DriveTerm& m) { return m.frequency == d.frequency; });
    if (it == merged.end()) merged.push_back(d);
    else it->op = it->op + d.op;
  }
  std::erase_if(merged, [](const DriveTerm& d) { return d.op.nonzeros() == 0; });
  return TimeDependentOperator(static_part_ - rhs.static_part_, std::move(merged));
}

SparseOperator exchange_op(const SpaceLayout& layout, const std::string& a, const std::string& b) {
  const DenseMatrix la = local_lowering(layout.mode(a));
  const DenseMatrix lb = local_lowering(layout.mode(b));
  // a_a a_b^dag + h.c.
  SparseOperator hop = embed_product(layout, {{a, la}, {b, DenseMatrix(lb.adjoint())}});
  return hop + hop.adjoint();
}

TimeDependentOperator materialize(const SpaceLayout& layout, const std::vector<OnsiteTerm>& onsite,
                                  const std::vector<Coupling>& couplings) {
  SparseOperator h = SparseOperator::zero(layout);
  for (const auto& o : onsite) h = h + projector(layout, o.label, o.level) * cplx(o.shift, 0.0);

  std::vector<DriveTerm> drives;
  for (const auto& c : couplings) {
    const SparseOperator hop = exchange_op(layout, c.a, c.b);
    h = h + hop * cplx(c.J, 0.0);
    if (c.J_prime == 0.0) continue;
    auto it = std::find_if(drives.begin(), drives.end(),
                           [&](const DriveTerm& d) { return d.frequency == c.frequency; });
    if (it == drives.end()) drives.push_back({c.frequency, hop * cplx(c.J_prime, 0.0)});
    else it->op = it->op + hop * cplx(c.J_prime, 0.0);
  }
  return TimeDependentOperator(std::move(h), std::move(drives));
}

TimeDependentOperator build_diode_hamiltonian(const SpaceLayout& layout, const std::string& diode,
                                              const std::string& input, const std::string& output,
                                              const DiodeParams& params) {
  if (layout.mode(diode).kind != ModeKind::Qutrit)
    throw LayoutError("diode mode '" + diode + "' must be a qutrit");
  if (diode == input || diode == output || input == output)
    throw LayoutError("diode, input and output labels must be distinct");
  layout.index_of(input);
  layout.index_of(output);
  CircuitModel m;
  add_diode(m, diode, input, output, params, false, false);
  return materialize(layout, m.onsite, m.couplings);
}

TimeDependentOperator CircuitBuild::h_circuit(const SpaceLayout& full) const {
  return materialize(full, model.onsite, model.couplings);
}

std::optional<TimeDependentOperator> CircuitBuild::h_sb(const SpaceLayout& full) const {
  if (!model.reduced) return std::nullopt;
  std::vector<Coupling> sb;
  for (const auto& c : model.couplings)
    if (c.bath_facing) sb.push_back(c);
  return materialize(full, {}, sb);
}

CircuitBuild build_circuit(const CircuitSpec& spec) {
  CircuitModel model = describe_circuit(spec);
  SpaceLayout layout = model.layout();
  std::optional<TimeDependentOperator> coherent;
  if (model.has_coherent_part) {
    std::vector<Coupling> kept;
    for (const auto& c : model.couplings)
      if (!c.bath_facing) kept.push_back(c);
    coherent = materialize(layout, model.onsite, kept);
  }
  return CircuitBuild{std::move(layout), std::move(coherent), std::move(model)};
}

std::vector<std::vector<std::string>> connected_components(const CircuitModel& model) {
  const SpaceLayout layout = model.layout();
  const std::size_t n = layout.size();
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    return parent[i] == i ? i : parent[i] = find(parent[i]);
  };
  if (model.has_coherent_part)
    for (const auto& c : model.couplings) {
      if (c.bath_facing || !layout.contains(c.a) || !layout.contains(c.b)) continue;
      parent[find(layout.index_of(c.a))] = find(layout.index_of(c.b));
    }
  std::vector<std::vector<std::string>> groups;
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    auto it = std::find(roots.begin(), roots.end(), r);
    if (it == roots.end()) {
      roots.push_back(r);
      groups.push_back({layout.mode(i).label});
    } else {
      groups[static_cast<std::size_t>(it - roots.begin())].push_back(layout.mode(i).label);
    }
  }
  return groups;
}

}  // namespace heatrect
