#include "minsup/cli/scenarios.hpp"

#include "minsup/common.hpp"

namespace minsup::cli {

namespace {

RunConfig entropic_base() {
  RunConfig c;
  c.generator = {"entropic", {}};
  c.terminal = {"tanh", {}};
  c.diffusion = {"brownian", {}};
  c.ladder.n_max = 16;
  // A cubic basis leaves a U-shaped bias in Z for tanh data that exceeds the
  // bucket SE at 1e5 paths; quintic does not.
  c.mc.degree = 5;
  return c;
}

RunConfig zero_base(const char* terminal) {
  RunConfig c;
  c.generator = {"zero", {}};
  c.terminal = {terminal, {}};
  c.diffusion = {"brownian", {}};
  // A single level high enough that phi^n = phi on the box.
  c.ladder.n_first = 32;
  c.ladder.n_max = 32;
  return c;
}

std::vector<Scenario> build() {
  std::vector<Scenario> out;
  {
    RunConfig c = entropic_base();
    c.checks = {"solve", "ladder", "viscosity", "lsc", "markov", "shift", "stability"};
    c.stability.tail_start = 8;
    out.push_back({"entropic-1d", "g(z)=z^2/2, phi=tanh, Brownian motion, T=1, dx=0.02, n_max=16", c});
  }
  {
    RunConfig c = zero_base("linear");
    c.checks = {"solve", "markov", "viscosity"};
    out.push_back({"g-zero-linear", "g=0, phi(x)=x: Feynman-Kac surface u(t,x)=x", c});
  }
  {
    RunConfig c = zero_base("square");
    c.checks = {"solve", "markov", "viscosity"};
    out.push_back({"g-zero-quadratic", "g=0, phi(x)=x^2: Feynman-Kac surface u(t,x)=x^2+T-t", c});
  }
  {
    RunConfig c;
    c.generator = {"separable", {}};
    c.terminal = {"positive-part", {}};
    c.diffusion = {"brownian", {}};
    c.ladder.n_max = 16;
    c.stability.scale = -1.0;
    // u(0, .) has slope near 5 at 0, so the tail must reach |x_k| < 1e-3.
    c.stability.count = 4096;
    c.stability.monotone = true;
    c.checks = {"stability"};
    out.push_back({"separable-monotone", "g=x^2+z^2/2, phi=max(x,0), x_k=-1/k increasing to 0", c});
  }
  {
    RunConfig c;
    c.generator = {"zero", {}};
    c.terminal = {"square", {}};
    c.diffusion = {"brownian", {}};
    c.mc.level = 40;
    c.locality.t = 0.5;
    c.locality.diffusion2 = {"brownian", {{"mu", 0.5}}};
    c.locality.event = "above-x0";
    c.checks = {"locality"};
    out.push_back({"locality-brownian-drift",
                   "g=0, phi=x^2, Brownian vs drifted Brownian pasted at t=0.5 on {X_t > x0}", c});
  }
  {
    RunConfig c;
    c.generator = {"zero", {}};
    c.terminal = {"tanh", {}};
    c.diffusion = {"brownian", {}};
    c.ladder.n_max = 4;
    c.checks = {"stability"};
    out.push_back({"rec-inconclusive", "g=0: the recession condition cannot be established, stability is inconclusive", c});
  }
  {
    RunConfig c = entropic_base();
    c.checks = {"conjugate"};
    out.push_back({"huber-ladder", "ladder levels of g(z)=z^2/2 and the biconjugation suite", c});
  }
  {
    RunConfig c;
    c.checks = {"limits"};
    out.push_back({"epi-limits", "epi-limit closed forms and the monotone lower-limit suite", c});
  }
  return out;
}

}  // namespace

const std::vector<Scenario>& scenario_registry() {
  static const std::vector<Scenario> registry = build();
  return registry;
}

const Scenario& find_scenario(std::string_view name) {
  for (const Scenario& s : scenario_registry())
    if (s.name == name) return s;
  std::string names;
  for (const Scenario& s : scenario_registry()) names += (names.empty() ? "" : ", ") + s.name;
  throw Error("unknown scenario '" + std::string(name) + "'; valid names: " + names);
}

}  // namespace minsup::cli
