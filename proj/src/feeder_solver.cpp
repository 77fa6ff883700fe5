#include "tdcosim/distribution/solver.hpp"

#include <algorithm>
#include <cmath>

#include "tdcosim/common/errors.hpp"

namespace tdcosim::distribution {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

struct TreeBranch {
  int parent = -1;        // node index of the upstream end; -1 at the head
  double ratio = 1.0;     // winding ratio upstream/downstream (1 for lines)
  Zmatrix z_ohm{};        // series impedance seen on the downstream side
};

/// BFS order and per-node upstream branch. Validation has already proven the
/// topology is a tree, so every non-head node gets exactly one branch.
struct Tree {
  std::vector<std::size_t> order;  // node indices, head first
  std::vector<TreeBranch> branch;  // per node index
};

Tree build_tree(const Feeder& f) {
  const std::size_t n = f.nodes.size();
  Tree t;
  t.branch.resize(n);
  std::vector<char> seen(n, 0);
  const auto head = static_cast<std::size_t>(f.node_index(f.head_node));
  seen[head] = 1;
  t.order.push_back(head);
  for (std::size_t qi = 0; qi < t.order.size(); ++qi) {
    const std::size_t at = t.order[qi];
    const int at_id = f.nodes[at].id;
    for (const auto& s : f.segments) {
      int other_id = -1;
      if (s.from == at_id) other_id = s.to;
      else if (s.to == at_id) other_id = s.from;
      else continue;
      const auto oi = static_cast<std::size_t>(f.node_index(other_id));
      if (seen[oi]) continue;
      seen[oi] = 1;
      TreeBranch& br = t.branch[oi];
      br.parent = static_cast<int>(at);
      br.ratio = 1.0;
      const Zmatrix& z = f.line_config(s.config).z_per_km;
      for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) br.z_ohm[r][c] = z[r][c] * s.length_km;
      }
      t.order.push_back(oi);
    }
    for (const auto& x : f.transformers) {
      int other_id = -1;
      bool downstream = false;
      if (x.from == at_id) {
        other_id = x.to;
        downstream = true;  // walking from primary to secondary
      } else if (x.to == at_id) {
        other_id = x.from;
      } else {
        continue;
      }
      const auto oi = static_cast<std::size_t>(f.node_index(other_id));
      if (seen[oi]) continue;
      seen[oi] = 1;
      TreeBranch& br = t.branch[oi];
      br.parent = static_cast<int>(at);
      // The file stores the impedance on the secondary ('to') side. When the
      // head sits on the secondary, refer it to the other side.
      const Complex z_sec(x.r_ohm, x.x_ohm);
      if (downstream) {
        br.ratio = x.ratio;
        for (std::size_t p = 0; p < 3; ++p) br.z_ohm[p][p] = z_sec;
      } else {
        br.ratio = 1.0 / x.ratio;
        for (std::size_t p = 0; p < 3; ++p) br.z_ohm[p][p] = z_sec * (x.ratio * x.ratio);
      }
      t.order.push_back(oi);
    }
  }
  t.branch[head].parent = -1;
  return t;
}

}  // namespace

FeederSolution solve_feeder(const Feeder& feeder, Complex head_voltage_pu,
                            const std::map<std::string, Complex>& injections_kva,
                            double load_multiplier, const SolverOptions& opt) {
  const double head_mag = std::abs(head_voltage_pu);
  if (!(head_mag > 0.5) || !(head_mag < 1.5)) {
    throw SolveError("feeder '" + feeder.id + "': head voltage " + std::to_string(head_mag) +
                     " pu outside the supported (0.5, 1.5) range");
  }
  const std::size_t n = feeder.nodes.size();
  const Tree tree = build_tree(feeder);

  // Net constant-power demand per node-phase, VA (loads minus injections).
  std::vector<std::array<Complex, 3>> s_va(n, {Complex(0, 0), Complex(0, 0), Complex(0, 0)});
  for (const auto& l : feeder.loads) {
    const auto i = static_cast<std::size_t>(feeder.node_index(l.node));
    s_va[i][static_cast<std::size_t>(l.phase)] +=
        Complex(l.p_kw, l.q_kvar) * (1000.0 * load_multiplier);
  }
  auto spread_injection = [&](int node_id, PhaseMask phases, const Complex& s_kva) {
    const auto i = static_cast<std::size_t>(feeder.node_index(node_id));
    const int np = phase_count(phases);
    const Complex share = s_kva * (1000.0 / np);
    for (std::size_t p = 0; p < 3; ++p) {
      if (phases & (1u << p)) s_va[i][p] -= share;
    }
  };
  for (const auto& pv : feeder.pv_systems) {
    const auto it = injections_kva.find(pv.id);
    if (it != injections_kva.end()) spread_injection(pv.node, pv.phases, it->second);
  }
  for (const auto& b : feeder.bess_attachments) {
    const auto it = injections_kva.find(b.unit_id);
    if (it != injections_kva.end()) spread_injection(b.node, b.phases, it->second);
  }

  // Balanced three-phase head voltage from the positive-sequence phasor.
  const auto head = static_cast<std::size_t>(feeder.node_index(feeder.head_node));
  const double head_base_ln = feeder.nodes[head].base_kv_ll * 1000.0 / kSqrt3;
  const double head_ang = std::arg(head_voltage_pu);
  std::array<Complex, 3> v_head{};
  for (std::size_t p = 0; p < 3; ++p) {
    v_head[p] = std::polar(head_mag * head_base_ln,
                           head_ang - 2.0 * M_PI / 3.0 * static_cast<double>(p));
  }

  FeederSolution sol;
  sol.v_volts.assign(n, {Complex(0, 0), Complex(0, 0), Complex(0, 0)});
  sol.branch_current_a.assign(n, {Complex(0, 0), Complex(0, 0), Complex(0, 0)});

  std::vector<double> base_ln(n);
  for (std::size_t i = 0; i < n; ++i) {
    base_ln[i] = feeder.nodes[i].base_kv_ll * 1000.0 / kSqrt3;
  }

  // Flat start: head voltage propagated through the winding ratios.
  for (const std::size_t i : tree.order) {
    const TreeBranch& br = tree.branch[i];
    for (std::size_t p = 0; p < 3; ++p) {
      if (!(feeder.nodes[i].phases & (1u << p))) continue;
      sol.v_volts[i][p] = br.parent < 0
                              ? v_head[p]
                              : sol.v_volts[static_cast<std::size_t>(br.parent)][p] / br.ratio;
    }
  }

  std::vector<std::array<Complex, 3>> i_node(n);
  bool converged = false;
  for (int it = 0; it < opt.max_iterations && !converged; ++it) {
    // Device currents at present voltages.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t p = 0; p < 3; ++p) {
        i_node[i][p] = Complex(0, 0);
        if (s_va[i][p] == Complex(0, 0)) continue;
        const Complex v = sol.v_volts[i][p];
        if (std::abs(v) < 0.01 * base_ln[i]) {
          throw SolveError("feeder '" + feeder.id + "' solve collapsed at node " +
                           std::to_string(feeder.nodes[i].id) + " phase " +
                           std::string(1, "abc"[p]));
        }
        i_node[i][p] = std::conj(s_va[i][p] / v);
      }
    }
    // Backward: accumulate branch currents toward the head.
    for (std::size_t i = 0; i < n; ++i) sol.branch_current_a[i] = i_node[i];
    for (std::size_t k = tree.order.size(); k-- > 1;) {
      const std::size_t i = tree.order[k];
      const TreeBranch& br = tree.branch[i];
      const auto parent = static_cast<std::size_t>(br.parent);
      for (std::size_t p = 0; p < 3; ++p) {
        sol.branch_current_a[parent][p] += sol.branch_current_a[i][p] / br.ratio;
      }
    }
    // Forward: update voltages from the head down.
    double mismatch = 0.0;
    for (const std::size_t i : tree.order) {
      const TreeBranch& br = tree.branch[i];
      if (br.parent < 0) {
        for (std::size_t p = 0; p < 3; ++p) {
          if (feeder.nodes[i].phases & (1u << p)) sol.v_volts[i][p] = v_head[p];
        }
        continue;
      }
      const auto parent = static_cast<std::size_t>(br.parent);
      for (std::size_t p = 0; p < 3; ++p) {
        if (!(feeder.nodes[i].phases & (1u << p))) continue;
        Complex drop(0, 0);
        for (std::size_t q = 0; q < 3; ++q) {
          drop += br.z_ohm[p][q] * sol.branch_current_a[i][q];
        }
        const Complex v_new = sol.v_volts[parent][p] / br.ratio - drop;
        mismatch = std::max(mismatch, std::abs(v_new - sol.v_volts[i][p]) / base_ln[i]);
        sol.v_volts[i][p] = v_new;
      }
    }
    sol.iterations = it + 1;
    sol.max_mismatch_pu = mismatch;
    converged = mismatch < opt.tol_pu;
  }
  if (!converged) {
    throw SolveError("feeder '" + feeder.id + "' did not converge in " +
                     std::to_string(opt.max_iterations) + " sweeps (last change " +
                     std::to_string(sol.max_mismatch_pu) + " pu)");
  }

  sol.v_pu.assign(n, {Complex(0, 0), Complex(0, 0), Complex(0, 0)});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < 3; ++p) sol.v_pu[i][p] = sol.v_volts[i][p] / base_ln[i];
  }
  Complex s_head(0, 0);
  for (std::size_t p = 0; p < 3; ++p) {
    s_head += sol.v_volts[head][p] * std::conj(sol.branch_current_a[head][p]);
  }
  sol.head_s_kva = s_head / 1000.0;
  return sol;
}

Complex head_power_kva(const FeederSolution& solution) { return solution.head_s_kva; }

std::vector<Violation> check_voltage_limits(const Feeder& feeder,
                                            const FeederSolution& solution) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < feeder.nodes.size(); ++i) {
    for (std::size_t p = 0; p < 3; ++p) {
      if (!(feeder.nodes[i].phases & (1u << p))) continue;
      const double v = std::abs(solution.v_pu[i][p]);
      if (v < feeder.vmin_pu || v > feeder.vmax_pu) {
        out.push_back({feeder.nodes[i].id, static_cast<int>(p), v});
      }
    }
  }
  return out;
}

}  // namespace tdcosim::distribution
