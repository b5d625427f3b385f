#include "smpc/sim_harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <random>
#include <thread>

namespace smpc {

std::string ControllerSpec::name() const {
  return kind == Kind::Is ? std::string("is") : "ms" + to_string(strategy);
}

std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

Mat noise_factor(const SymMatrix& g) {
  try {
    return cholesky(g);
  } catch (const Error&) {
    return psd_factor(g);
  }
}

}  // namespace

std::vector<Vec> gaussian_noise(const SymMatrix& gamma_w, std::uint64_t seed, int count) {
  const Mat L = noise_factor(gamma_w);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  Vec xi(gamma_w.dim());
  for (int i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < xi.size(); ++j) xi(j) = normal(rng);
    out.emplace_back(L * xi);
  }
  return out;
}

TrajectoryRecord rollout(const DesignParams& d, const ControllerSpec& c, const Vec& x0, int T,
                         std::uint64_t seed, const RolloutOptions& opts) {
  if (T < 1) throw Error(ErrorKind::InvalidArgument, "simulation length must be at least 1");
  const std::vector<Vec> w = gaussian_noise(d.gamma_w, seed, T);
  const Ellipsoid ex = d.state_ellipsoid();
  const Ellipsoid eu = d.input_ellipsoid();
  TrajectoryRecord rec;
  IsControllerState is_state;
  Vec x = x0;
  for (int k = 0; k <= T; ++k) {
    StepRecord s;
    s.x = x;
    s.w = k < T ? w[static_cast<std::size_t>(k)] : Vec(Vec::Zero(d.n()));
    try {
      ControllerStep st;
      if (c.kind == ControllerSpec::Kind::Ms) {
        st = step_ms(x, d, c.strategy, opts.solver);
      } else {
        auto [step, next] = step_is(x, is_state, d, opts.solver);
        st = std::move(step);
        is_state = std::move(next);
      }
      s.u = st.u;
      s.gamma_x = st.gamma_x;
      s.gamma_u = st.gamma_u;
      s.delta_r = st.delta_r;
      s.rbar_x = st.rbar_x;
      s.rbar_u = st.rbar_u;
      s.tracking_cost = st.tracking_cost;
      s.objective = st.objective;
      s.solver_iterations = st.solver_iterations;
      s.basic_feasible = st.basic_feasible;
      s.mode = st.is_mode;
      if (k == 0) rec.first_step = std::move(st);
    } catch (const Error& e) {
      if (k == 0 && e.kind() == ErrorKind::InfeasibleAtStart) {
        rec.valid = false;
        rec.invalid_reason = e.what();
        return rec;
      }
      if (!opts.continue_on_error) throw;
      s.error = e.what();
      s.u = d.K * x;
    }
    s.in_Ex = ex.contains(s.x);
    s.in_Eu = eu.contains(s.u);
    s.in_X = d.state_set.contains(s.x);
    s.in_U = d.input_set.contains(s.u);
    if (k < T) {
      rec.cost += s.x.dot(d.Q.mat() * s.x) + s.u.dot(d.R.mat() * s.u);
      x = d.A * s.x + d.B * s.u + s.w;
    }
    rec.steps.push_back(std::move(s));
  }
  return rec;
}

namespace {

struct TrajSummary {
  bool valid = false;
  double cost = 0.0;
  std::vector<char> ex, eu, px, pu;
};

template <class Fn>
void parallel_for(int count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(count, 1)));
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(threads);
  auto worker = [&](unsigned id) {
    try {
      for (int i = next++; i < count; i = next++) fn(i);
    } catch (...) {
      errors[id] = std::current_exception();
      next = count;
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

McSummary reduce(const std::vector<TrajSummary>& runs, int T, std::uint64_t seed) {
  McSummary m;
  m.n_sim = static_cast<int>(runs.size());
  m.seed = seed;
  const std::size_t len = static_cast<std::size_t>(T + 1);
  std::vector<int> nx(len, 0), nu(len, 0), nX(len, 0), nU(len, 0);
  double sum = 0.0;
  for (const auto& r : runs) {
    if (!r.valid) continue;
    ++m.n_valid;
    m.costs.push_back(r.cost);
    sum += r.cost;
    for (std::size_t k = 0; k < len; ++k) {
      nx[k] += r.ex[k];
      nu[k] += r.eu[k];
      nX[k] += r.px[k];
      nU[k] += r.pu[k];
    }
  }
  const double denom = std::max(m.n_valid, 1);
  for (std::size_t k = 0; k < len; ++k) {
    m.f_x.push_back(nx[k] / denom);
    m.f_u.push_back(nu[k] / denom);
    m.f_X.push_back(nX[k] / denom);
    m.f_U.push_back(nU[k] / denom);
  }
  m.mean_cost = m.n_valid > 0 ? sum / m.n_valid : 0.0;
  return m;
}

TrajSummary summarize(const TrajectoryRecord& r) {
  TrajSummary s;
  s.valid = r.valid;
  s.cost = r.cost;
  for (const auto& st : r.steps) {
    s.ex.push_back(st.in_Ex);
    s.eu.push_back(st.in_Eu);
    s.px.push_back(st.in_X);
    s.pu.push_back(st.in_U);
  }
  return s;
}

}  // namespace

McSummary monte_carlo(const DesignParams& d, const ControllerSpec& c, const Vec& x0, int T, int n_sim,
                      std::uint64_t seed, unsigned threads) {
  if (n_sim < 1) throw Error(ErrorKind::InvalidArgument, "N_sim must be at least 1");
  std::vector<TrajSummary> runs(static_cast<std::size_t>(n_sim));
  parallel_for(n_sim, threads, [&](int i) {
    runs[static_cast<std::size_t>(i)] =
        summarize(rollout(d, c, x0, T, trajectory_seed(seed, static_cast<std::uint64_t>(i))));
  });
  return reduce(runs, T, seed);
}

CompareResult compare_ms_is(const DesignParams& d, const Vec& x0, int T, int n_sim, std::uint64_t seed,
                            Strategy s, unsigned threads) {
  CompareResult out;
  if (feasibility_probe(build_is(x0, d)).verdict != Feasibility::Feasible) {
    out.reason = "comparator infeasible at the initial state";
    return out;
  }
  out.ms = monte_carlo(d, ControllerSpec::ms(s), x0, T, n_sim, seed, threads);
  out.is = monte_carlo(d, ControllerSpec::is(), x0, T, n_sim, seed, threads);
  out.comparable = out.is.n_valid == out.is.n_sim && out.is.mean_cost > 0.0;
  if (!out.comparable) {
    out.reason = out.is.mean_cost > 0.0 ? "comparator invalid on some trajectories" : "zero comparator cost";
    if (out.is.mean_cost == 0.0 && out.ms.mean_cost == 0.0) {
      out.comparable = true;
      out.ratio = 1.0;
      out.reason.clear();
    }
    return out;
  }
  out.ratio = out.ms.mean_cost / out.is.mean_cost;
  return out;
}

Table1Column table1_column(const DesignParams& d, Strategy s, const Vec& x0, int T, int n_sim,
                           std::uint64_t seed, unsigned threads) {
  Table1Column col;
  col.strategy = s;
  const ControllerStep first = step_ms(x0, d, s);
  col.summary = monte_carlo(d, ControllerSpec::ms(s), x0, T, n_sim, seed, threads);
  for (int l = 1; l <= T; ++l) {
    Table1Row r;
    r.ell = l;
    if (l <= d.horizon) {
      r.p_x = first.posterior.state[static_cast<std::size_t>(l)].probability;
      r.p_u = first.posterior.input[static_cast<std::size_t>(l)].probability;
    }
    r.f_x = col.summary.f_x[static_cast<std::size_t>(l)];
    r.f_u = col.summary.f_u[static_cast<std::size_t>(l)];
    col.rows.push_back(r);
  }
  return col;
}

}  // namespace smpc
