#include "drlte/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>

#include "drlte/errors.hpp"

namespace drlte {

SplitAction sp_action(const std::vector<SessionSpec>& sessions) {
  SplitAction a;
  for (const auto& s : sessions) {
    if (s.paths.empty()) throw InvariantError("sp_action: session without paths");
    std::vector<double> r(s.paths.size(), 0.0);
    r[0] = 1.0;
    a.ratios.push_back(std::move(r));
  }
  return a;
}

SplitAction lb_action(const std::vector<SessionSpec>& sessions) {
  SplitAction a;
  for (const auto& s : sessions) {
    if (s.paths.empty()) throw InvariantError("lb_action: session without paths");
    const double n = static_cast<double>(s.paths.size());
    a.ratios.emplace_back(s.paths.size(), 1.0 / n);
  }
  return a;
}

double num_objective(const std::vector<double>& throughput_bps) {
  double obj = 0.0;
  for (double x : throughput_bps) obj += std::log(x * 1e-6);
  return obj;
}

SplitAction num_action(const NumSolution& sol) {
  SplitAction a;
  for (const auto& f : sol.flows_bps) {
    const double sum = std::accumulate(f.begin(), f.end(), 0.0);
    std::vector<double> r(f.size());
    if (sum > 0.0) {
      for (std::size_t j = 0; j < f.size(); ++j) r[j] = std::max(f[j], 0.0) / sum;
    } else {
      std::fill(r.begin(), r.end(), 1.0 / static_cast<double>(f.size()));
    }
    a.ratios.push_back(std::move(r));
  }
  return a;
}

std::vector<std::vector<double>> lb_feasible_flows(
    const NetworkGraph& g, const std::vector<SessionSpec>& sessions) {
  std::vector<double> load(g.num_links(), 0.0);
  std::vector<std::vector<double>> flows;
  for (const auto& s : sessions) {
    const double share = s.demand_mean_bps / static_cast<double>(s.paths.size());
    flows.emplace_back(s.paths.size(), share);
    for (const auto& p : s.paths) {
      for (std::size_t li : p.links) load[li] += share;
    }
  }
  double scale = 1.0;
  for (std::size_t l = 0; l < g.num_links(); ++l) {
    if (load[l] > g.link(l).capacity_bps) {
      scale = std::min(scale, g.link(l).capacity_bps / load[l]);
    }
  }
  for (auto& f : flows) {
    for (double& v : f) v *= scale;
  }
  return flows;
}

namespace {

constexpr double kMbps = 1e-6;

// Problem data in Mbps with one flat variable per (session, path).
struct Problem {
  std::size_t n_vars = 0;
  std::vector<std::size_t> var_session;
  std::vector<std::size_t> session_begin;  // size K + 1
  std::vector<double> demand;              // B_k, Mbps
  std::vector<double> floor;               // lower bound per variable
  std::vector<double> capacity;            // C_e, Mbps
  std::vector<std::vector<std::size_t>> var_links;
  std::vector<bool> active;                // session has positive demand

  std::vector<double> loads(const std::vector<double>& f) const {
    std::vector<double> load(capacity.size(), 0.0);
    for (std::size_t v = 0; v < n_vars; ++v) {
      for (std::size_t l : var_links[v]) load[l] += f[v];
    }
    return load;
  }

  std::vector<double> rates(const std::vector<double>& f) const {
    std::vector<double> x(demand.size(), 0.0);
    for (std::size_t v = 0; v < n_vars; ++v) x[var_session[v]] += f[v];
    return x;
  }

  double utility(const std::vector<double>& f) const {
    const auto x = rates(f);
    double u = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (active[k]) u += std::log(x[k]);
    }
    return u;
  }

  // Euclidean projection onto {f >= floor, sum_j f <= B} per session.
  void project(std::vector<double>& f) const {
    for (std::size_t k = 0; k < demand.size(); ++k) {
      const std::size_t b = session_begin[k], e = session_begin[k + 1];
      if (!active[k]) {
        std::fill(f.begin() + b, f.begin() + e, 0.0);
        continue;
      }
      double sum = 0.0;
      for (std::size_t v = b; v < e; ++v) {
        f[v] = std::max(f[v], floor[v]);
        sum += f[v];
      }
      if (sum <= demand[k]) continue;
      // Shifted simplex projection with total B - sum(floor).
      std::vector<double> u;
      double budget = demand[k];
      for (std::size_t v = b; v < e; ++v) {
        budget -= floor[v];
      }
      for (std::size_t v = b; v < e; ++v) u.push_back(f[v] - floor[v]);
      std::vector<double> sorted = u;
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      double cum = 0.0, theta = 0.0;
      for (std::size_t i = 0; i < sorted.size(); ++i) {
        cum += sorted[i];
        const double t = (cum - budget) / static_cast<double>(i + 1);
        if (i + 1 == sorted.size() || sorted[i + 1] <= t) {
          theta = t;
          break;
        }
      }
      for (std::size_t v = b; v < e; ++v) {
        f[v] = floor[v] + std::max(u[v - b] - theta, 0.0);
      }
    }
  }
};

struct Lagrangian {
  const Problem& pb;
  double rho;
  const std::vector<double>& lambda;

  // Augmented Lagrangian value and gradient for maximization.
  double eval(const std::vector<double>& f, std::vector<double>* grad) const {
    const auto x = pb.rates(f);
    const auto load = pb.loads(f);
    double val = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (pb.active[k]) val += std::log(x[k]);
    }
    std::vector<double> mult(load.size());
    for (std::size_t l = 0; l < load.size(); ++l) {
      const double m = std::max(0.0, lambda[l] + rho * (load[l] - pb.capacity[l]));
      mult[l] = m;
      val -= (m * m - lambda[l] * lambda[l]) / (2.0 * rho);
    }
    if (grad) {
      grad->assign(pb.n_vars, 0.0);
      for (std::size_t v = 0; v < pb.n_vars; ++v) {
        const std::size_t k = pb.var_session[v];
        if (!pb.active[k]) continue;
        double gv = 1.0 / x[k];
        for (std::size_t l : pb.var_links[v]) gv -= mult[l];
        (*grad)[v] = gv;
      }
    }
    return val;
  }
};

double projected_gradient_norm(const Problem& pb, const std::vector<double>& f,
                               const std::vector<double>& grad) {
  std::vector<double> step(f.size());
  for (std::size_t v = 0; v < f.size(); ++v) step[v] = f[v] + grad[v];
  pb.project(step);
  double r = 0.0;
  for (std::size_t v = 0; v < f.size(); ++v) r = std::max(r, std::abs(step[v] - f[v]));
  return r;
}

// Spectral projected gradient ascent with a nonmonotone line search.
std::size_t spg_maximize(const Problem& pb, const Lagrangian& lag,
                         std::vector<double>& f, double tol,
                         std::size_t max_iter) {
  constexpr double kAlphaMin = 1e-12, kAlphaMax = 1e12, kArmijo = 1e-4;
  constexpr std::size_t kMemory = 10;
  std::vector<double> grad, grad_new, trial(f.size()), d(f.size());
  double val = lag.eval(f, &grad);
  std::deque<double> history{val};
  double alpha = 1.0;
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    if (projected_gradient_norm(pb, f, grad) <= tol) break;
    for (std::size_t v = 0; v < f.size(); ++v) trial[v] = f[v] + alpha * grad[v];
    pb.project(trial);
    double gd = 0.0;
    for (std::size_t v = 0; v < f.size(); ++v) {
      d[v] = trial[v] - f[v];
      gd += grad[v] * d[v];
    }
    const double ref = *std::max_element(history.begin(), history.end());
    double t = 1.0, val_new = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t v = 0; v < f.size(); ++v) trial[v] = f[v] + t * d[v];
      val_new = lag.eval(trial, &grad_new);
      if (val_new >= ref + kArmijo * t * gd) break;
      t *= 0.5;
    }
    double ss = 0.0, sy = 0.0;
    for (std::size_t v = 0; v < f.size(); ++v) {
      const double s = trial[v] - f[v];
      const double y = grad_new[v] - grad[v];
      ss += s * s;
      sy += s * y;
    }
    f.swap(trial);
    grad.swap(grad_new);
    val = val_new;
    history.push_back(val);
    if (history.size() > kMemory) history.pop_front();
    // Ascent on a concave function: s.y <= 0.
    alpha = sy < 0.0 ? std::clamp(ss / -sy, kAlphaMin, kAlphaMax) : kAlphaMax;
    if (ss == 0.0) break;
  }
  return it;
}

}  // namespace

NumSolution num_solve(const NetworkGraph& g,
                      const std::vector<SessionSpec>& sessions,
                      const NumOptions& opts) {
  if (opts.alpha != 1.0) {
    throw InvariantError("num_solve: only alpha = 1 (log utility) is supported");
  }
  Problem pb;
  pb.capacity.resize(g.num_links());
  for (std::size_t l = 0; l < g.num_links(); ++l) {
    pb.capacity[l] = g.link(l).capacity_bps * kMbps;
  }
  for (std::size_t k = 0; k < sessions.size(); ++k) {
    const auto& s = sessions[k];
    if (s.paths.empty()) throw InvariantError("num_solve: session without paths");
    if (!(s.demand_mean_bps >= 0.0)) throw InvariantError("num_solve: negative demand");
    pb.session_begin.push_back(pb.n_vars);
    const double demand = s.demand_mean_bps * kMbps;
    pb.demand.push_back(demand);
    pb.active.push_back(demand > 0.0);
    for (const auto& p : s.paths) {
      pb.var_session.push_back(k);
      pb.var_links.push_back(p.links);
      pb.floor.push_back(1e-9 * demand);
      ++pb.n_vars;
    }
  }
  pb.session_begin.push_back(pb.n_vars);

  std::vector<double> f;
  for (const auto& row : lb_feasible_flows(g, sessions)) {
    for (double v : row) f.push_back(v * kMbps);
  }
  pb.project(f);

  std::vector<double> lambda(pb.capacity.size(), 0.0);
  double rho = 1e-2;
  NumDiagnostics diag;
  double prev_violation = std::numeric_limits<double>::infinity();
  double inner_tol = 1e-3;

  auto max_violation = [&](const std::vector<double>& load) {
    double v = 0.0;
    for (std::size_t l = 0; l < load.size(); ++l) {
      v = std::max(v, (load[l] - pb.capacity[l]) / pb.capacity[l]);
    }
    return v;
  };

  while (diag.iterations < opts.max_iterations) {
    Lagrangian lag{pb, rho, lambda};
    diag.iterations += spg_maximize(pb, lag, f, inner_tol,
                                    opts.max_iterations - diag.iterations) + 1;
    ++diag.outer_iterations;
    const auto load = pb.loads(f);
    for (std::size_t l = 0; l < lambda.size(); ++l) {
      lambda[l] = std::max(0.0, lambda[l] + rho * (load[l] - pb.capacity[l]));
    }
    const double violation = std::max(0.0, max_violation(load));

    // Stationarity of the ordinary Lagrangian at the updated multipliers.
    std::vector<double> grad(pb.n_vars, 0.0);
    const auto x = pb.rates(f);
    for (std::size_t v = 0; v < pb.n_vars; ++v) {
      const std::size_t k = pb.var_session[v];
      if (!pb.active[k]) continue;
      double gv = 1.0 / x[k];
      for (std::size_t l : pb.var_links[v]) gv -= lambda[l];
      grad[v] = gv;
    }
    const double stationarity = projected_gradient_norm(pb, f, grad);
    if (violation <= opts.feasibility_tol && stationarity <= opts.stationarity_tol &&
        inner_tol <= 0.1 * opts.stationarity_tol) {
      diag.converged = true;
      break;
    }
    if (violation > 0.25 * prev_violation && violation > opts.feasibility_tol) {
      rho = std::min(rho * 10.0, 1e8);
    }
    prev_violation = violation;
    inner_tol = std::max(0.1 * opts.stationarity_tol, inner_tol * 0.1);
  }

  // If the iterate is still slightly infeasible, scale it into the box; the
  // returned point is always feasible.
  {
    const auto load = pb.loads(f);
    double scale = 1.0;
    for (std::size_t l = 0; l < load.size(); ++l) {
      if (load[l] > pb.capacity[l]) scale = std::min(scale, pb.capacity[l] / load[l]);
    }
    if (scale < 1.0) {
      for (double& v : f) v *= scale;
    }
  }

  NumSolution sol;
  const auto x = pb.rates(f);
  const auto load = pb.loads(f);
  sol.link_duals = lambda;
  for (std::size_t k = 0; k < sessions.size(); ++k) {
    std::vector<double> row;
    for (std::size_t v = pb.session_begin[k]; v < pb.session_begin[k + 1]; ++v) {
      row.push_back(f[v] / kMbps);
    }
    sol.flows_bps.push_back(std::move(row));
    sol.throughput_bps.push_back(x[k] / kMbps);
    sol.degenerate.push_back(!pb.active[k] || !(x[k] > 0.0));
    if (pb.active[k]) {
      diag.max_demand_violation =
          std::max(diag.max_demand_violation, (x[k] - pb.demand[k]) / pb.demand[k]);
      const double sum = std::accumulate(sol.flows_bps[k].begin(),
                                         sol.flows_bps[k].end(), 0.0);
      diag.flow_consistency = std::max(
          diag.flow_consistency, std::abs(sum - sol.throughput_bps[k]) /
                                     sol.throughput_bps[k]);
    }
  }
  diag.max_capacity_violation = std::max(0.0, max_violation(load));
  diag.objective = pb.utility(f);
  {
    std::vector<double> grad(pb.n_vars, 0.0);
    for (std::size_t v = 0; v < pb.n_vars; ++v) {
      const std::size_t k = pb.var_session[v];
      if (!pb.active[k]) continue;
      double gv = 1.0 / x[k];
      for (std::size_t l : pb.var_links[v]) gv -= lambda[l];
      grad[v] = gv;
    }
    diag.stationarity = projected_gradient_norm(pb, f, grad);
  }
  for (std::size_t l = 0; l < load.size(); ++l) {
    diag.complementary_slackness = std::max(
        diag.complementary_slackness, lambda[l] * std::abs(pb.capacity[l] - load[l]));
  }
  sol.diagnostics = diag;
  return sol;
}

}  // namespace drlte
