#include "skyheal/sca_solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace skyheal {

namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kInf = std::numeric_limits<double>::infinity();

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Tuple
{
  int ue;
  int uav;
  int channel;
};

// log2(1 + sum_k gain_k * p_k) over the tuples sharing one sub-channel, as
// seen by one UE. Gains are normalized by the noise power.
struct LogTerm
{
  std::vector<int> tuples;
  std::vector<double> gains;
};

// S_u(p) = constant + linear . p + sum_terms log2(1 + gains . p)
struct RateBound
{
  std::vector<LogTerm> terms;
  std::vector<double> linear;
  std::vector<int> support;
  double constant = 0.0;
};

struct Budget
{
  std::vector<int> tuples;
  double limit = 0.0;
};

// The convexified subproblem in compact form. Variables are the powers of
// the active tuples followed by omega.
class SurrogateProgram
{
public:
  SurrogateProgram(const Assignment& assignment,
                   const GainMatrix& gains,
                   const Scenario& scenario,
                   const PowerAllocation& p_ref)
    : m_shape{assignment.num_ues(), assignment.num_uavs(), assignment.num_subchannels()}
  {
    const int U = assignment.num_ues();
    const int D = assignment.num_uavs();
    const int M = assignment.num_subchannels();
    const double noise = scenario.channel.noise_power;

    std::vector<std::vector<int>> on_channel(M);
    for (int u = 0; u < U; ++u) {
      for (int d = 0; d < D; ++d) {
        for (int m = 0; m < M; ++m) {
          if (assignment.active(u, d, m)) {
            on_channel[m].push_back(static_cast<int>(m_tuples.size()));
            m_tuples.push_back({u, d, m});
          }
        }
      }
    }
    const int n = size();

    for (int d = 0; d < D; ++d) {
      Budget budget;
      budget.limit = scenario.uavs[d].max_power;
      for (int k = 0; k < n; ++k) {
        if (m_tuples[k].uav == d) {
          budget.tuples.push_back(k);
        }
      }
      if (!budget.tuples.empty()) {
        m_budgets.push_back(std::move(budget));
      }
    }

    m_rates.resize(U);
    for (int u = 0; u < U; ++u) {
      RateBound& bound = m_rates[u];
      bound.linear.assign(n, 0.0);
      std::vector<char> in_support(n, 0);
      for (int m = 0; m < M; ++m) {
        bool own = false;
        for (int k : on_channel[m]) {
          own = own || m_tuples[k].ue == u;
        }
        if (!own) {
          continue;
        }
        LogTerm term;
        double interference_ref = 0.0;
        for (int k : on_channel[m]) {
          const double g = gains(u, m_tuples[k].uav) / noise;
          term.tuples.push_back(k);
          term.gains.push_back(g);
          in_support[k] = 1;
          if (m_tuples[k].ue != u) {
            interference_ref += g * p_ref(m_tuples[k].ue, m_tuples[k].uav, m);
          }
        }
        const double denom = kLn2 * (1.0 + interference_ref);
        bound.constant -= std::log2(1.0 + interference_ref);
        for (std::size_t i = 0; i < term.tuples.size(); ++i) {
          const int k = term.tuples[i];
          if (m_tuples[k].ue == u) {
            continue;
          }
          bound.linear[k] -= term.gains[i] / denom;
          bound.constant += term.gains[i] * p_ref(m_tuples[k].ue, m_tuples[k].uav, m) / denom;
        }
        bound.terms.push_back(std::move(term));
      }
      for (int k = 0; k < n; ++k) {
        if (in_support[k]) {
          bound.support.push_back(k);
        }
      }
    }
  }

  int size() const { return static_cast<int>(m_tuples.size()); }
  int num_ues() const { return static_cast<int>(m_rates.size()); }
  const std::vector<Budget>& budgets() const { return m_budgets; }
  const RateBound& rate(int u) const { return m_rates[u]; }

  double surrogate(int u, const VectorXd& x) const
  {
    const RateBound& b = m_rates[u];
    double s = b.constant;
    for (int k : b.support) {
      s += b.linear[k] * x[k];
    }
    for (const LogTerm& term : b.terms) {
      double total = 1.0;
      for (std::size_t i = 0; i < term.tuples.size(); ++i) {
        total += term.gains[i] * x[term.tuples[i]];
      }
      s += std::log2(total);
    }
    return s;
  }

  double min_surrogate(const VectorXd& x) const
  {
    double lo = kInf;
    for (int u = 0; u < num_ues(); ++u) {
      lo = std::min(lo, surrogate(u, x));
    }
    return lo;
  }

  VectorXd to_vector(const PowerAllocation& p, double omega) const
  {
    VectorXd x(size() + 1);
    for (int k = 0; k < size(); ++k) {
      const Tuple& t = m_tuples[k];
      x[k] = p(t.ue, t.uav, t.channel);
    }
    x[size()] = omega;
    return x;
  }

  PowerAllocation to_powers(const VectorXd& x) const
  {
    PowerAllocation p(m_shape[0], m_shape[1], m_shape[2]);
    for (int k = 0; k < size(); ++k) {
      const Tuple& t = m_tuples[k];
      p(t.ue, t.uav, t.channel) = std::max(0.0, x[k]);
    }
    return p;
  }

private:
  std::array<int, 3> m_shape;
  std::vector<Tuple> m_tuples;
  std::vector<Budget> m_budgets;
  std::vector<RateBound> m_rates;
};

// Log-barrier interior point method on the surrogate program. The objective
// is linear in both modes, which lets line searches evaluate barrier
// differences without cancellation at large t.
class BarrierSolver
{
public:
  BarrierSolver(const SurrogateProgram& program, InnerMode mode, double rate_threshold, double budget)
    : m_prog(program),
      m_mode(mode),
      m_threshold(rate_threshold),
      m_n(program.size()),
      m_cost(VectorXd::Zero(program.size() + 1))
  {
    if (mode == InnerMode::RateFloor) {
      m_cost.head(m_n).setConstant(1.0 / budget);
      m_cost[m_n] = -1.0 / rate_threshold;
    } else {
      m_cost[m_n] = -1.0;
    }
  }

  int num_constraints() const
  {
    return m_n + static_cast<int>(m_prog.budgets().size()) + m_prog.num_ues() +
           (m_mode == InnerMode::RateFloor ? 1 : 0);
  }

  double objective(const VectorXd& x) const { return m_cost.dot(x); }

  bool strictly_feasible(const VectorXd& x) const
  {
    for (int k = 0; k < m_n; ++k) {
      if (!(x[k] > 0.0)) {
        return false;
      }
    }
    for (const Budget& b : m_prog.budgets()) {
      if (!(budget_slack(b, x) > 0.0)) {
        return false;
      }
    }
    for (int u = 0; u < m_prog.num_ues(); ++u) {
      if (!(m_prog.surrogate(u, x) - x[m_n] > 0.0)) {
        return false;
      }
    }
    return m_mode == InnerMode::MaxMin || x[m_n] - m_threshold > 0.0;
  }

  // Centers for increasing t until the duality gap bound drops below `gap`,
  // or `stop(x)` returns true. Returns false when stopped early.
  bool run(VectorXd& x, double gap, const std::function<bool(const VectorXd&)>& stop = {})
  {
    const double constraints = num_constraints();
    double t = 1.0;
    for (int stage = 0; stage < 64; ++stage) {
      if (!center(x, t, stop)) {
        m_t = t;
        return false;
      }
      m_t = t;
      if (constraints / t < gap) {
        break;
      }
      t *= 20.0;
    }
    return true;
  }

  int newton_steps() const { return m_steps; }

  // KKT residual of the returned point. Barrier multipliers 1/(t c_i) are
  // only used to pick the near-active set: at large t the slacks of the
  // rate constraints are a few ulps of omega, so the multipliers are refit
  // by least squares on that set instead. Returns the max of stationarity
  // (relative to the cost gradient), dual infeasibility and
  // complementarity.
  double kkt_residual(const VectorXd& x) const
  {
    std::vector<double> slack;
    std::vector<VectorXd> normal;
    constraint_rows(x, slack, normal);

    const int rows = static_cast<int>(slack.size());
    double largest = 0.0;
    for (double c : slack) {
      largest = std::max(largest, 1.0 / (m_t * c));
    }
    std::vector<int> active;
    double complementarity = 0.0;
    for (int i = 0; i < rows; ++i) {
      const double lambda = 1.0 / (m_t * slack[i]);
      if (lambda >= 1e-6 * largest) {
        active.push_back(i);
      } else {
        complementarity = std::max(complementarity, lambda * slack[i]);
      }
    }

    const double scale = std::max(1.0, m_cost.lpNorm<Eigen::Infinity>());
    MatrixXd A(m_n + 1, static_cast<int>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j) {
      A.col(static_cast<int>(j)) = normal[active[j]];
    }
    // minimize f0 s.t. c >= 0:  grad f0 = sum lambda_i grad c_i
    const VectorXd lambda = A.colPivHouseholderQr().solve(m_cost);
    const double stationarity = (m_cost - A * lambda).lpNorm<Eigen::Infinity>() / scale;
    double dual = 0.0;
    for (std::size_t j = 0; j < active.size(); ++j) {
      dual = std::max(dual, -lambda[static_cast<int>(j)] / scale);
      complementarity = std::max(complementarity, std::abs(lambda[static_cast<int>(j)] * slack[active[j]]) / scale);
    }
    return std::max({stationarity, dual, complementarity});
  }

private:
  static double budget_slack(const Budget& b, const VectorXd& x)
  {
    double used = 0.0;
    for (int k : b.tuples) {
      used += x[k];
    }
    return b.limit - used;
  }

  // Slack c_i(x) and gradient of every constraint c_i >= 0.
  void constraint_rows(const VectorXd& x, std::vector<double>& slack, std::vector<VectorXd>& normal) const
  {
    const int dim = m_n + 1;
    for (int k = 0; k < m_n; ++k) {
      slack.push_back(x[k]);
      normal.push_back(VectorXd::Unit(dim, k));
    }
    for (const Budget& b : m_prog.budgets()) {
      VectorXd g = VectorXd::Zero(dim);
      for (int k : b.tuples) {
        g[k] = -1.0;
      }
      slack.push_back(budget_slack(b, x));
      normal.push_back(std::move(g));
    }
    for (int u = 0; u < m_prog.num_ues(); ++u) {
      const RateBound& bound = m_prog.rate(u);
      VectorXd g = VectorXd::Zero(dim);
      for (int k : bound.support) {
        g[k] = bound.linear[k];
      }
      for (const LogTerm& term : bound.terms) {
        double total = 1.0;
        for (std::size_t i = 0; i < term.tuples.size(); ++i) {
          total += term.gains[i] * x[term.tuples[i]];
        }
        for (std::size_t i = 0; i < term.tuples.size(); ++i) {
          g[term.tuples[i]] += term.gains[i] / (kLn2 * total);
        }
      }
      g[m_n] = -1.0;
      slack.push_back(m_prog.surrogate(u, x) - x[m_n]);
      normal.push_back(std::move(g));
    }
    if (m_mode == InnerMode::RateFloor) {
      slack.push_back(x[m_n] - m_threshold);
      normal.push_back(VectorXd::Unit(dim, m_n));
    }
  }

  // Gradient and Hessian of t*f0 - sum log c_i.
  void gradient_hessian(const VectorXd& x, double t, VectorXd& grad, MatrixXd& hess, bool want_hessian) const
  {
    const int dim = m_n + 1;
    grad = t * m_cost;
    if (want_hessian) {
      hess.setZero(dim, dim);
    }

    for (int k = 0; k < m_n; ++k) {
      grad[k] -= 1.0 / x[k];
      if (want_hessian) {
        hess(k, k) += 1.0 / (x[k] * x[k]);
      }
    }

    for (const Budget& b : m_prog.budgets()) {
      const double c = budget_slack(b, x);
      for (int k : b.tuples) {
        grad[k] += 1.0 / c;
      }
      if (want_hessian) {
        const double w = 1.0 / (c * c);
        for (int i : b.tuples) {
          for (int j : b.tuples) {
            hess(i, j) += w;
          }
        }
      }
    }

    std::vector<double> dc;
    for (int u = 0; u < m_prog.num_ues(); ++u) {
      const RateBound& bound = m_prog.rate(u);
      const double c = m_prog.surrogate(u, x) - x[m_n];
      // Gradient of S_u over its support.
      dc.assign(bound.support.size(), 0.0);
      for (std::size_t s = 0; s < bound.support.size(); ++s) {
        dc[s] = bound.linear[bound.support[s]];
      }
      for (const LogTerm& term : bound.terms) {
        double total = 1.0;
        for (std::size_t i = 0; i < term.tuples.size(); ++i) {
          total += term.gains[i] * x[term.tuples[i]];
        }
        for (std::size_t i = 0; i < term.tuples.size(); ++i) {
          const auto pos = std::lower_bound(bound.support.begin(), bound.support.end(), term.tuples[i]);
          dc[pos - bound.support.begin()] += term.gains[i] / (kLn2 * total);
        }
        if (want_hessian) {
          // -Hess(S_u) / c, positive semidefinite.
          const double w = 1.0 / (kLn2 * total * total * c);
          for (std::size_t i = 0; i < term.tuples.size(); ++i) {
            for (std::size_t j = 0; j < term.tuples.size(); ++j) {
              hess(term.tuples[i], term.tuples[j]) += w * term.gains[i] * term.gains[j];
            }
          }
        }
      }
      for (std::size_t s = 0; s < bound.support.size(); ++s) {
        grad[bound.support[s]] -= dc[s] / c;
      }
      grad[m_n] += 1.0 / c;
      if (want_hessian) {
        const double w = 1.0 / (c * c);
        for (std::size_t i = 0; i < bound.support.size(); ++i) {
          const int a = bound.support[i];
          for (std::size_t j = 0; j < bound.support.size(); ++j) {
            hess(a, bound.support[j]) += w * dc[i] * dc[j];
          }
          hess(a, m_n) -= w * dc[i];
          hess(m_n, a) -= w * dc[i];
        }
        hess(m_n, m_n) += w;
      }
    }

    if (m_mode == InnerMode::RateFloor) {
      const double c = x[m_n] - m_threshold;
      grad[m_n] -= 1.0 / c;
      if (want_hessian) {
        hess(m_n, m_n) += 1.0 / (c * c);
      }
    }
  }

  // Barrier value change along x + s*dx, computed from constraint ratios.
  // +inf when the trial point leaves the interior.
  double barrier_change(const VectorXd& x, const VectorXd& dx, double s, double t) const
  {
    double change = t * s * m_cost.dot(dx);
    for (int k = 0; k < m_n; ++k) {
      const double ratio = s * dx[k] / x[k];
      if (!(ratio > -1.0)) {
        return kInf;
      }
      change -= std::log1p(ratio);
    }
    for (const Budget& b : m_prog.budgets()) {
      double step = 0.0;
      for (int k : b.tuples) {
        step -= s * dx[k];
      }
      const double ratio = step / budget_slack(b, x);
      if (!(ratio > -1.0)) {
        return kInf;
      }
      change -= std::log1p(ratio);
    }
    for (int u = 0; u < m_prog.num_ues(); ++u) {
      const RateBound& bound = m_prog.rate(u);
      double step = -s * dx[m_n];
      for (int k : bound.support) {
        step += s * bound.linear[k] * dx[k];
      }
      for (const LogTerm& term : bound.terms) {
        double total = 1.0;
        double delta = 0.0;
        for (std::size_t i = 0; i < term.tuples.size(); ++i) {
          total += term.gains[i] * x[term.tuples[i]];
          delta += term.gains[i] * s * dx[term.tuples[i]];
        }
        if (!(delta / total > -1.0)) {
          return kInf;
        }
        step += std::log1p(delta / total) / kLn2;
      }
      const double ratio = step / (m_prog.surrogate(u, x) - x[m_n]);
      if (!(ratio > -1.0)) {
        return kInf;
      }
      change -= std::log1p(ratio);
    }
    if (m_mode == InnerMode::RateFloor) {
      const double ratio = s * dx[m_n] / (x[m_n] - m_threshold);
      if (!(ratio > -1.0)) {
        return kInf;
      }
      change -= std::log1p(ratio);
    }
    return std::isfinite(change) ? change : kInf;
  }

  bool center(VectorXd& x, double t, const std::function<bool(const VectorXd&)>& stop)
  {
    VectorXd grad;
    MatrixXd hess;
    for (int iter = 0; iter < 100; ++iter) {
      if (stop && stop(x)) {
        return false;
      }
      gradient_hessian(x, t, grad, hess, true);

      // Jacobi scaling keeps the factorization sane when barrier weights
      // span many orders of magnitude.
      VectorXd scale = hess.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
      MatrixXd scaled = scale.asDiagonal() * hess * scale.asDiagonal();
      Eigen::LDLT<MatrixXd> ldlt(scaled);
      VectorXd dx = scale.asDiagonal() * ldlt.solve(-(scale.asDiagonal() * grad));
      if (!dx.allFinite()) {
        return true;
      }
      const double decrement = -grad.dot(dx);
      if (decrement <= 1e-13) {
        return true;
      }
      ++m_steps;

      double s = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 80; ++ls) {
        const double change = barrier_change(x, dx, s, t);
        if (change <= -0.25 * s * decrement) {
          accepted = true;
          break;
        }
        s *= 0.5;
      }
      if (!accepted) {
        return true;
      }
      x += s * dx;
      if (decrement < 1e-9 && s == 1.0) {
        // Quadratic convergence region; one more step would be below noise.
        return true;
      }
    }
    return true;
  }

  const SurrogateProgram& m_prog;
  InnerMode m_mode;
  double m_threshold;
  int m_n;
  VectorXd m_cost;
  double m_t = 1.0;
  int m_steps = 0;
};

// Strictly interior powers near p_ref: a small blend with half of each
// UAV's budget spread evenly over its tuples.
VectorXd interior_start(const SurrogateProgram& program, const PowerAllocation& p_ref)
{
  constexpr double kBlend = 1e-3;
  VectorXd x = program.to_vector(p_ref, 0.0);
  for (const Budget& b : program.budgets()) {
    const double share = 0.5 * b.limit / static_cast<double>(b.tuples.size());
    for (int k : b.tuples) {
      x[k] = (1.0 - kBlend) * std::max(0.0, x[k]) + kBlend * share;
    }
  }
  return x;
}

double min_of(const std::vector<double>& values)
{
  return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
}

void require_valid_start(const Assignment& assignment, const Scenario& scenario, const PowerAllocation& p)
{
  if (p.num_ues() != assignment.num_ues() || p.num_uavs() != assignment.num_uavs() ||
      p.num_subchannels() != assignment.num_subchannels()) {
    throw std::invalid_argument("initial powers do not match the assignment dimensions");
  }
  for (int d = 0; d < assignment.num_uavs(); ++d) {
    const double limit = scenario.uavs[d].max_power;
    if (p.uav_total(d) > limit * (1.0 + 1e-12)) {
      throw std::invalid_argument("initial powers exceed the budget of UAV " +
                                  std::to_string(scenario.uavs[d].id));
    }
    for (int u = 0; u < assignment.num_ues(); ++u) {
      for (int m = 0; m < assignment.num_subchannels(); ++m) {
        const double v = p(u, d, m);
        if (!(v >= 0.0)) {
          throw std::invalid_argument("initial powers must be non-negative");
        }
        if (v > 0.0 && !assignment.active(u, d, m)) {
          throw std::invalid_argument("initial power on a tuple without psi*phi = 1");
        }
      }
    }
  }
}

// Moves further along from -> step.powers while the true objective keeps
// improving. Two chains are tried: a straight line, and a geometric one
// (p_prev * ratio^gamma) that follows interferers decaying towards zero
// much faster. Every trial is rescaled into the budgets and must keep all
// UEs above the rate floor.
SolveResult extrapolate(const Assignment& assignment,
                        const GainMatrix& gains,
                        const Scenario& scenario,
                        const PowerAllocation& from,
                        SolveResult step)
{
  const std::span<const double> a = from.values();
  const std::span<const double> b = step.powers.values();
  double reach = kInf;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double dir = b[i] - a[i];
    if (dir < 0.0) {
      reach = std::min(reach, a[i] / -dir);
    }
  }
  for (int d = 0; d < assignment.num_uavs(); ++d) {
    const double start = from.uav_total(d);
    const double dir = step.powers.uav_total(d) - start;
    if (dir > 0.0) {
      reach = std::min(reach, (scenario.uavs[d].max_power - start) / dir);
    }
  }

  auto fit_budgets = [&](PowerAllocation& p) {
    for (int d = 0; d < assignment.num_uavs(); ++d) {
      const double used = p.uav_total(d);
      const double limit = scenario.uavs[d].max_power;
      if (used > limit) {
        for (int u = 0; u < assignment.num_ues(); ++u) {
          for (int m = 0; m < assignment.num_subchannels(); ++m) {
            p(u, d, m) *= limit / used;
          }
        }
      }
    }
  };

  auto linear = [&](double gamma) {
    PowerAllocation p = from;
    std::span<double> out = p.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = std::max(0.0, a[i] + gamma * (b[i] - a[i]));
    }
    fit_budgets(p);
    return evaluate_allocation(assignment, gains, scenario, p);
  };

  auto geometric = [&](double gamma) {
    PowerAllocation p = from;
    std::span<double> out = p.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = (a[i] > 0.0 && b[i] > 0.0) ? a[i] * std::pow(b[i] / a[i], gamma) : b[i];
    }
    fit_budgets(p);
    return evaluate_allocation(assignment, gains, scenario, p);
  };

  SolveResult best = std::move(step);
  const double base = best.objective;

  SolveResult along = best;
  for (double gamma = 2.0; gamma <= 64.0; gamma *= 2.0) {
    const bool last = gamma >= reach;
    SolveResult candidate = linear(std::min(gamma, reach));
    if (!candidate.feasible || !(candidate.objective > along.objective)) {
      break;
    }
    along = std::move(candidate);
    if (last) {
      break;
    }
  }

  SolveResult curved = best;
  for (double gamma = 2.0; gamma <= 64.0; gamma *= 2.0) {
    SolveResult candidate = geometric(gamma);
    if (!candidate.feasible || !(candidate.objective > curved.objective)) {
      break;
    }
    curved = std::move(candidate);
  }

  if (along.objective > base && along.objective >= curved.objective) {
    return along;
  }
  if (curved.objective > base) {
    return curved;
  }
  return best;
}

} // namespace

double total_budget(const Scenario& scenario)
{
  double sum = 0.0;
  for (const UavPlatform& uav : scenario.uavs) {
    sum += uav.max_power;
  }
  return sum;
}

double objective_value(double omega, const PowerAllocation& powers, const Scenario& scenario)
{
  return omega / scenario.rate_threshold - powers.total() / total_budget(scenario);
}

double surrogate_ue_rate(int u,
                         const Assignment& assignment,
                         const PowerAllocation& powers,
                         const PowerAllocation& p_ref,
                         const GainMatrix& gains,
                         double noise)
{
  double total = 0.0;
  const int d_u = assignment.serving_uav(u);
  if (d_u < 0) {
    return 0.0;
  }
  for (int m = 0; m < assignment.num_subchannels(); ++m) {
    if (!assignment.phi(u, d_u, m)) {
      continue;
    }
    const double received = interference(u, m, powers, gains) + powers(u, d_u, m) * gains(u, d_u) + noise;
    const double interference_ref = interference(u, m, p_ref, gains) + noise;
    // First-order expansion of log2(interference + noise) around p_ref.
    double slope_term = 0.0;
    for (int i = 0; i < powers.num_ues(); ++i) {
      if (i == u) {
        continue;
      }
      for (int j = 0; j < powers.num_uavs(); ++j) {
        slope_term += gains(u, j) * (powers(i, j, m) - p_ref(i, j, m));
      }
    }
    const double upper = std::log2(interference_ref) + slope_term / (kLn2 * interference_ref);
    total += std::log2(received) - upper;
  }
  return total;
}

PowerAllocation initial_powers(const Assignment& assignment, const Scenario& scenario, double level)
{
  PowerAllocation p(assignment.num_ues(), assignment.num_uavs(), assignment.num_subchannels());
  for (int d = 0; d < assignment.num_uavs(); ++d) {
    int count = 0;
    for (int u = 0; u < assignment.num_ues(); ++u) {
      for (int m = 0; m < assignment.num_subchannels(); ++m) {
        if (assignment.active(u, d, m)) {
          p(u, d, m) = level;
          ++count;
        }
      }
    }
    const double used = level * count;
    const double limit = scenario.uavs[d].max_power;
    if (used > limit) {
      const double factor = limit / used;
      for (int u = 0; u < assignment.num_ues(); ++u) {
        for (int m = 0; m < assignment.num_subchannels(); ++m) {
          p(u, d, m) *= factor;
        }
      }
    }
  }
  return p;
}

InnerSolution solve_inner(const Assignment& assignment,
                          const GainMatrix& gains,
                          const ScaState& state,
                          const Scenario& scenario,
                          InnerMode mode,
                          const ScaOptions& options)
{
  const SurrogateProgram program(assignment, gains, scenario, state.p_ref);
  const double threshold = scenario.rate_threshold;
  const int n = program.size();

  VectorXd x = interior_start(program, state.p_ref);
  x[n] = program.min_surrogate(x) - 1.0;

  InnerSolution out;
  int steps = 0;

  if (mode == InnerMode::RateFloor) {
    // Phase I: climb the max-min surrogate until the floor has some slack.
    const double margin = 1e-3 * std::max(1.0, threshold);
    BarrierSolver phase_one(program, InnerMode::MaxMin, threshold, total_budget(scenario));
    phase_one.run(x, options.duality_gap, [&](const VectorXd& v) {
      return program.min_surrogate(v) > threshold + margin;
    });
    steps += phase_one.newton_steps();
    const double reach = program.min_surrogate(x);
    if (!(reach > threshold)) {
      out.status = InnerStatus::Infeasible;
      out.powers = program.to_powers(x);
      out.omega = reach;
      out.newton_steps = steps;
      return out;
    }
    x[n] = threshold + 0.5 * (reach - threshold);
  }

  BarrierSolver solver(program, mode, threshold, total_budget(scenario));
  solver.run(x, options.duality_gap);
  steps += solver.newton_steps();

  out.status = InnerStatus::Optimal;
  out.powers = program.to_powers(x);
  out.omega = x[n];
  out.surrogate_objective = -solver.objective(x);
  out.kkt_residual = solver.kkt_residual(x);
  out.newton_steps = steps;
  return out;
}

SolveResult evaluate_allocation(const Assignment& assignment,
                                const GainMatrix& gains,
                                const Scenario& scenario,
                                const PowerAllocation& powers)
{
  SolveResult r;
  r.powers = powers;
  r.ue_rates = ue_rates(assignment, powers, gains, scenario.channel.noise_power);
  r.omega = min_of(r.ue_rates);
  r.objective = objective_value(r.omega, powers, scenario);
  r.feasible = r.omega >= scenario.rate_threshold - 1e-9;
  return r;
}

SolveResult sca_power_allocation(const Assignment& assignment,
                                 const GainMatrix& gains,
                                 const Scenario& scenario,
                                 const std::optional<PowerAllocation>& p_init,
                                 const ScaOptions& options)
{
  PowerAllocation p = p_init ? *p_init : initial_powers(assignment, scenario, options.initial_power);
  require_valid_start(assignment, scenario, p);

  SolveResult best = evaluate_allocation(assignment, gains, scenario, p);
  std::vector<double> history;
  bool floor_mode = true;
  bool have_previous = best.feasible;
  double previous = best.objective;
  double previous_omega = best.omega;
  if (best.feasible) {
    history.push_back(best.objective);
  }

  int iterations = 0;
  int max_min_iterations = 0;
  bool converged = false;
  for (int r = 0; r < options.max_iterations; ++r) {
    iterations = r + 1;
    const ScaState state{p, best.omega, r};
    const InnerSolution inner =
      solve_inner(assignment, gains, state, scenario,
                  floor_mode ? InnerMode::RateFloor : InnerMode::MaxMin, options);
    if (inner.status == InnerStatus::Infeasible) {
      // The surrogate cannot meet the floor here; push the minimum rate up
      // first and retry the floor once the true rates clear it.
      floor_mode = false;
      continue;
    }

    SolveResult current = evaluate_allocation(assignment, gains, scenario, inner.powers);
    if (floor_mode && options.extrapolate && current.feasible) {
      current = extrapolate(assignment, gains, scenario, p, std::move(current));
    }
    p = current.powers;

    if (!floor_mode) {
      ++max_min_iterations;
      if (current.feasible) {
        floor_mode = true;
        best = current;
        history.push_back(current.objective);
        previous = current.objective;
        have_previous = true;
        continue;
      }
      if (!best.feasible && current.omega > best.omega) {
        best = current;
      }
      if (std::abs(current.omega - previous_omega) < options.tolerance) {
        converged = true;
        break;
      }
      previous_omega = current.omega;
      continue;
    }

    history.push_back(current.objective);
    if (!best.feasible || current.objective > best.objective) {
      best = current;
    }
    if (have_previous && std::abs(current.objective - previous) < options.tolerance) {
      converged = true;
      break;
    }
    previous = current.objective;
    have_previous = true;
  }

  best.iterations = iterations;
  best.converged = converged;
  best.objective_history = std::move(history);
  best.max_min_iterations = max_min_iterations;
  return best;
}

std::vector<double> uniform_power_grid(const Scenario& scenario, int count)
{
  double smallest = kInf;
  for (const UavPlatform& uav : scenario.uavs) {
    smallest = std::min(smallest, uav.max_power);
  }
  std::vector<double> levels(count);
  for (int i = 0; i < count; ++i) {
    levels[i] = count == 1 ? smallest : smallest * i / (count - 1);
  }
  return levels;
}

OracleResult brute_force_oracle(const Scenario& scenario, std::span<const double> levels)
{
  const int U = scenario.num_ues();
  const int D = scenario.num_uavs();
  const int M = scenario.num_subchannels;
  if (U > 4 || D > 2 || M > 2 || levels.empty() || levels.size() > 6) {
    throw OracleSizeError("oracle limited to U<=4, D<=2, M<=2 and 1..6 power levels");
  }
  validate(scenario);

  const GainMatrix gains = compute_gains(scenario);
  const double noise = scenario.channel.noise_power;
  const int masks = (1 << M) - 1;

  OracleResult out;
  out.solve.feasible = false;
  out.solve.objective = -kInf;
  out.solve.omega = -kInf;
  out.solve.converged = true;

  Assignment assignment(U, D, M);
  std::vector<int> used(D, 0);

  auto search_powers = [&]() {
    std::vector<Tuple> tuples;
    for (int u = 0; u < U; ++u) {
      for (int d = 0; d < D; ++d) {
        for (int m = 0; m < M; ++m) {
          if (assignment.active(u, d, m)) {
            tuples.push_back({u, d, m});
          }
        }
      }
    }
    const int n = static_cast<int>(tuples.size());
    const int L = static_cast<int>(levels.size());
    std::vector<int> digit(n, 0);
    PowerAllocation p(U, D, M);
    std::vector<double> load(D);
    while (true) {
      std::fill(load.begin(), load.end(), 0.0);
      for (int k = 0; k < n; ++k) {
        const double v = levels[digit[k]];
        p(tuples[k].ue, tuples[k].uav, tuples[k].channel) = v;
        load[tuples[k].uav] += v;
      }
      bool within = true;
      for (int d = 0; d < D; ++d) {
        within = within && load[d] <= scenario.uavs[d].max_power * (1.0 + 1e-12);
      }
      if (within) {
        ++out.candidates;
        const std::vector<double> rates = ue_rates(assignment, p, gains, noise);
        const double omega = min_of(rates);
        const double objective = objective_value(omega, p, scenario);
        const bool feasible = omega >= scenario.rate_threshold;
        const bool better = feasible ? (!out.solve.feasible || objective > out.solve.objective)
                                     : (!out.solve.feasible && omega > out.solve.omega);
        if (better) {
          out.solve.feasible = feasible;
          out.solve.objective = objective;
          out.solve.omega = omega;
          out.solve.powers = p;
          out.solve.ue_rates = rates;
          out.assignment = assignment;
        }
      }
      int k = 0;
      while (k < n && ++digit[k] == L) {
        digit[k++] = 0;
      }
      if (k == n) {
        break;
      }
    }
  };

  // Depth-first over (serving UAV, sub-channel mask) per UE.
  std::function<void(int)> assign_ue = [&](int u) {
    if (u == U) {
      search_powers();
      return;
    }
    for (int d = 0; d < D; ++d) {
      for (int mask = 1; mask <= masks; ++mask) {
        if (scenario.exclusive_subchannels && (used[d] & mask)) {
          continue;
        }
        assignment.set_psi(u, d, true);
        for (int m = 0; m < M; ++m) {
          assignment.set_phi(u, d, m, (mask >> m) & 1);
        }
        if (scenario.exclusive_subchannels) {
          used[d] |= mask;
        }
        assign_ue(u + 1);
        if (scenario.exclusive_subchannels) {
          used[d] &= ~mask;
        }
        for (int m = 0; m < M; ++m) {
          assignment.set_phi(u, d, m, false);
        }
        assignment.set_psi(u, d, false);
      }
    }
  };
  assign_ue(0);
  return out;
}

} // namespace skyheal
