#include "support/reference_powerflow.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace testsupport {

namespace {

using tdcosim::distribution::Feeder;
using Complex = std::complex<double>;

constexpr double kSqrt3 = 1.7320508075688772;

// Dense index over present node-phases: slot(node index, phase) or -1.
struct Indexer {
  std::vector<std::array<int, 3>> slot;
  int count = 0;

  explicit Indexer(const Feeder& f) {
    slot.assign(f.nodes.size(), {-1, -1, -1});
    for (std::size_t i = 0; i < f.nodes.size(); ++i) {
      for (int p = 0; p < 3; ++p) {
        if (f.nodes[i].phases & (1u << p)) slot[i][static_cast<std::size_t>(p)] = count++;
      }
    }
  }
};

// Phases carried by a branch: the intersection of its endpoints' phases.
std::vector<int> shared_phases(const Feeder& f, int node_a, int node_b) {
  const auto& na = f.node(node_a);
  const auto& nb = f.node(node_b);
  std::vector<int> out;
  for (int p = 0; p < 3; ++p) {
    if ((na.phases & nb.phases) & (1u << p)) out.push_back(p);
  }
  return out;
}

}  // namespace

ReferenceSolution reference_solve(const Feeder& feeder, Complex head_voltage_pu,
                                  const std::map<std::string, Complex>& injections_kva,
                                  double load_multiplier) {
  const std::size_t n = feeder.nodes.size();
  const Indexer ix(feeder);
  const int m = ix.count;

  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(m, m);
  for (const auto& seg : feeder.segments) {
    const auto fi = static_cast<std::size_t>(feeder.node_index(seg.from));
    const auto ti = static_cast<std::size_t>(feeder.node_index(seg.to));
    const auto phases = shared_phases(feeder, seg.from, seg.to);
    const auto k = static_cast<Eigen::Index>(phases.size());
    Eigen::MatrixXcd z(k, k);
    const auto& zpk = feeder.line_config(seg.config).z_per_km;
    for (Eigen::Index r = 0; r < k; ++r) {
      for (Eigen::Index c = 0; c < k; ++c) {
        z(r, c) = zpk[static_cast<std::size_t>(phases[static_cast<std::size_t>(r)])]
                     [static_cast<std::size_t>(phases[static_cast<std::size_t>(c)])] *
                  seg.length_km;
      }
    }
    const Eigen::MatrixXcd yb = z.inverse();
    for (Eigen::Index r = 0; r < k; ++r) {
      const int sf_r = ix.slot[fi][static_cast<std::size_t>(phases[static_cast<std::size_t>(r)])];
      const int st_r = ix.slot[ti][static_cast<std::size_t>(phases[static_cast<std::size_t>(r)])];
      for (Eigen::Index c = 0; c < k; ++c) {
        const int sf_c =
            ix.slot[fi][static_cast<std::size_t>(phases[static_cast<std::size_t>(c)])];
        const int st_c =
            ix.slot[ti][static_cast<std::size_t>(phases[static_cast<std::size_t>(c)])];
        y(sf_r, sf_c) += yb(r, c);
        y(st_r, st_c) += yb(r, c);
        y(sf_r, st_c) -= yb(r, c);
        y(st_r, sf_c) -= yb(r, c);
      }
    }
  }
  for (const auto& x : feeder.transformers) {
    // Ideal ratio a = V_from/V_to with the series impedance on the 'to' side.
    const auto fi = static_cast<std::size_t>(feeder.node_index(x.from));
    const auto ti = static_cast<std::size_t>(feeder.node_index(x.to));
    const Complex yx = 1.0 / Complex(x.r_ohm, x.x_ohm);
    const double a = x.ratio;
    for (int p : shared_phases(feeder, x.from, x.to)) {
      const int sf = ix.slot[fi][static_cast<std::size_t>(p)];
      const int st = ix.slot[ti][static_cast<std::size_t>(p)];
      y(sf, sf) += yx / (a * a);
      y(st, st) += yx;
      y(sf, st) -= yx / a;
      y(st, sf) -= yx / a;
    }
  }

  // Specified injection (generation-positive) per node-phase, volt-amps.
  std::vector<std::array<Complex, 3>> s_spec(n, {Complex(0, 0), Complex(0, 0), Complex(0, 0)});
  for (const auto& l : feeder.loads) {
    const auto i = static_cast<std::size_t>(feeder.node_index(l.node));
    s_spec[i][static_cast<std::size_t>(l.phase)] -=
        Complex(l.p_kw, l.q_kvar) * (1000.0 * load_multiplier);
  }
  auto add_injection = [&](int node_id, tdcosim::distribution::PhaseMask phases,
                           const Complex& s_kva) {
    const auto i = static_cast<std::size_t>(feeder.node_index(node_id));
    const Complex share = s_kva * (1000.0 / tdcosim::distribution::phase_count(phases));
    for (std::size_t p = 0; p < 3; ++p) {
      if (phases & (1u << p)) s_spec[i][p] += share;
    }
  };
  for (const auto& pv : feeder.pv_systems) {
    const auto it = injections_kva.find(pv.id);
    if (it != injections_kva.end()) add_injection(pv.node, pv.phases, it->second);
  }
  for (const auto& b : feeder.bess_attachments) {
    const auto it = injections_kva.find(b.unit_id);
    if (it != injections_kva.end()) add_injection(b.node, b.phases, it->second);
  }

  const auto head = static_cast<std::size_t>(feeder.node_index(feeder.head_node));
  const double head_mag = std::abs(head_voltage_pu);
  const double head_ang = std::arg(head_voltage_pu);
  std::vector<double> base_ln(n);
  for (std::size_t i = 0; i < n; ++i) base_ln[i] = feeder.nodes[i].base_kv_ll * 1000.0 / kSqrt3;

  // Start every node at its own nominal magnitude with the slack's angle
  // shifted per phase; good enough even across off-nominal taps.
  Eigen::VectorXcd v(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < 3; ++p) {
      const int s = ix.slot[i][p];
      if (s < 0) continue;
      v(s) = std::polar(head_mag * base_ln[i], head_ang - 2.0 * M_PI / 3.0 * static_cast<double>(p));
    }
  }

  std::vector<int> unknown;  // slots solved by Newton (everything off the head)
  for (std::size_t i = 0; i < n; ++i) {
    if (i == head) continue;
    for (std::size_t p = 0; p < 3; ++p) {
      if (ix.slot[i][p] >= 0) unknown.push_back(ix.slot[i][p]);
    }
  }
  std::vector<Complex> spec_by_slot(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < 3; ++p) {
      if (ix.slot[i][p] >= 0) spec_by_slot[static_cast<std::size_t>(ix.slot[i][p])] = s_spec[i][p];
    }
  }

  const auto nu = static_cast<Eigen::Index>(unknown.size());
  auto mismatch = [&](const Eigen::VectorXcd& vv, Eigen::VectorXd& f) {
    const Eigen::VectorXcd inj = y * vv;
    for (Eigen::Index k = 0; k < nu; ++k) {
      const int s = unknown[static_cast<std::size_t>(k)];
      const Complex ds = spec_by_slot[static_cast<std::size_t>(s)] - vv(s) * std::conj(inj(s));
      f(2 * k) = ds.real();
      f(2 * k + 1) = ds.imag();
    }
  };

  ReferenceSolution out;
  Eigen::VectorXd f(2 * nu), fp(2 * nu), fm(2 * nu);
  Eigen::MatrixXd jac(2 * nu, 2 * nu);
  bool converged = false;
  for (int it = 0; it < 40 && !converged; ++it) {
    mismatch(v, f);
    out.iterations = it;
    if (f.lpNorm<Eigen::Infinity>() < 1e-6) {  // volt-amps
      converged = true;
      break;
    }
    // The mismatch is quadratic in the voltages, so central differences
    // give the Jacobian exactly up to roundoff.
    for (Eigen::Index k = 0; k < nu; ++k) {
      const int s = unknown[static_cast<std::size_t>(k)];
      const double h = 1e-4 * std::abs(v(s)) + 1e-3;
      const Complex v0 = v(s);
      v(s) = v0 + h;
      mismatch(v, fp);
      v(s) = v0 - h;
      mismatch(v, fm);
      jac.col(2 * k) = (fp - fm) / (2.0 * h);
      v(s) = v0 + Complex(0, h);
      mismatch(v, fp);
      v(s) = v0 - Complex(0, h);
      mismatch(v, fm);
      jac.col(2 * k + 1) = (fp - fm) / (2.0 * h);
      v(s) = v0;
    }
    const Eigen::VectorXd dx = jac.partialPivLu().solve(-f);
    for (Eigen::Index k = 0; k < nu; ++k) {
      v(unknown[static_cast<std::size_t>(k)]) += Complex(dx(2 * k), dx(2 * k + 1));
    }
  }
  if (!converged) throw std::runtime_error("reference power flow did not converge");

  out.v_pu.assign(n, {Complex(0, 0), Complex(0, 0), Complex(0, 0)});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < 3; ++p) {
      const int s = ix.slot[i][p];
      if (s >= 0) out.v_pu[i][p] = v(s) / base_ln[i];
    }
  }
  const Eigen::VectorXcd inj = y * v;
  Complex s_head(0, 0);
  for (std::size_t p = 0; p < 3; ++p) {
    const int s = ix.slot[head][p];
    if (s >= 0) s_head += v(s) * std::conj(inj(s));
  }
  out.head_s_kva = s_head / 1000.0;
  return out;
}

}  // namespace testsupport
