// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Reference values come from the oracles in support/, not from the
// library's own predictors, wherever an independent computation exists.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "bearing/bearing.hpp"
#include "support/oracles.hpp"

using bearing::Configuration;
using bearing::Framework;
using bearing::Graph;
using bearing::Index;

namespace {

const std::string kScenarioDir = BEARING_SCENARIO_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  double budget_s;
  std::function<Outcome()> body;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

/// Orthogonal projection of p0 onto span{1 (x) I_d, r}, by least squares.
Eigen::VectorXd leaderless_limit_oracle(const Eigen::VectorXd& p0, const Eigen::VectorXd& r, int d) {
  const Index n = p0.size() / d;
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(n * d, d + 1);
  for (Index i = 0; i < n; ++i) basis.block(i * d, 0, d, d).setIdentity();
  basis.col(d) = r;
  const Eigen::VectorXd coef = basis.colPivHouseholderQr().solve(p0);
  return basis * coef;
}

Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues();
}

bearing::LocalizationParams grid_params(Index n, int d, Index anchors, std::uint64_t seed) {
  bearing::LocalizationParams lp;
  lp.agents = n;
  lp.dim = d;
  lp.anchors = anchors;
  lp.seed = seed;
  lp.target_edges = (n == 50 && d == 3) ? 269 : std::min<Index>(n * (n - 1) / 2, (d + 2) * n);
  return lp;
}

Outcome c1_cube_rigidity() {
  const auto s = bearing::load_scenario(kScenarioDir + "/cube_leaderless.yaml");
  const auto fa = bearing::analyze_formation(s.formation_problem());
  const Framework fw(s.graph(), Configuration(3, fa.feasibility.representative));
  const auto rep = bearing::is_infinitesimally_bearing_rigid(fw);
  const Index rank_oracle = oracle::svd_rank(oracle::bearing_jacobian_fd(fw.graph.edge_list(), fw.config.stacked(), 3), 1e-6);
  return {rep.rigid && rep.rank == 20 && rank_oracle == 20,
          fmt("m=%zu rank=%ld (finite-difference rank %ld) rigid=%d", s.edges.size(), long(rep.rank), long(rank_oracle),
              int(rep.rigid))};
}

Outcome c2_network_rigidity() {
  const auto s = bearing::load_scenario(kScenarioDir + "/localization_50.yaml");
  const Framework fw(s.graph(), Configuration(3, s.positions));
  const auto rep = bearing::is_infinitesimally_bearing_rigid(fw);
  return {rep.rigid && rep.rank == 146 && s.edges.size() == 269,
          fmt("n=%ld m=%zu rank=%ld rigid=%d", long(s.agents), s.edges.size(), long(rep.rank), int(rep.rigid))};
}

Outcome c3_leaderless() {
  const Eigen::VectorXd target = bearing::centered(bearing::unit_cube().stacked(), 3);
  double worst_dev = 0, worst_drift = 0, worst_growth = -1e300;
  int failures = 0;
  const int seeds = 100;
  for (int seed = 1; seed <= seeds; ++seed) {
    const auto s = bearing::generate_cube_scenario(0, static_cast<std::uint64_t>(seed));
    const auto run = bearing::run_scenario(s);
    if (!run.report.final_state || run.trajectory.termination != bearing::Termination::Converged) {
      ++failures;
      continue;
    }
    const Eigen::VectorXd& p0 = s.initial_state;
    const Eigen::VectorXd& pf = *run.report.final_state;
    const double dev = (pf - leaderless_limit_oracle(p0, target, 3)).cwiseAbs().maxCoeff();
    double mean_diff = 0;
    for (int k = 0; k < 3; ++k) {
      double a = 0, b = 0;
      for (Index i = 0; i < 8; ++i) {
        a += p0(i * 3 + k);
        b += pf(i * 3 + k);
      }
      mean_diff += std::pow((b - a) / 8.0, 2);
    }
    const double drift = std::sqrt(mean_diff) / p0.norm();
    double growth = -1e300;
    for (std::size_t k = 0; k < run.trajectory.states.size(); ++k) {
      growth = std::max(growth, bearing::centered(run.trajectory.states[k], 3).norm() - bearing::centered(p0, 3).norm());
    }
    worst_dev = std::max(worst_dev, dev);
    worst_drift = std::max(worst_drift, drift);
    worst_growth = std::max(worst_growth, growth);
    if (!(dev < 1e-6 && drift < 1e-10 && growth <= 1e-9)) ++failures;
  }
  return {failures == 0, fmt("seeds=%d failures=%d max|p-p_inf|=%.2e max drift/|p0|=%.2e max s(t)-s(0)=%.2e", seeds,
                             failures, worst_dev, worst_drift, worst_growth)};
}

Outcome c4_leader_follower() {
  const Eigen::VectorXd target = bearing::unit_cube().stacked();
  double worst_dev = 0, worst_bearing = 0;
  int failures = 0;
  const int seeds = 50;
  for (int seed = 1; seed <= seeds; ++seed) {
    const auto s = bearing::generate_cube_scenario(2, static_cast<std::uint64_t>(seed));
    const auto run = bearing::run_scenario(s);
    if (!run.report.final_state || run.trajectory.termination != bearing::Termination::Converged) {
      ++failures;
      continue;
    }
    const Eigen::VectorXd& pf = *run.report.final_state;
    // Leaders sit on their target corners, so the unique equilibrium is the cube itself.
    const double dev = (pf - target).cwiseAbs().maxCoeff();
    const Eigen::VectorXd g_now = oracle::bearings(s.graph().edge_list(), pf, 3);
    const Eigen::VectorXd g_star = oracle::bearings(s.graph().edge_list(), target, 3);
    double berr = 0;
    for (Index k = 0; k < g_now.size() / 3; ++k) berr = std::max(berr, (g_now - g_star).segment(k * 3, 3).norm());
    worst_dev = std::max(worst_dev, dev);
    worst_bearing = std::max(worst_bearing, berr);
    if (!(dev < 1e-6 && berr < 1e-6)) ++failures;
  }
  return {failures == 0,
          fmt("seeds=%d failures=%d max|p_f-p_f*|=%.2e max bearing error=%.2e", seeds, failures, worst_dev, worst_bearing)};
}

Outcome c5_localization_grid() {
  double worst_cf = 0, worst_sim = 0;
  int cases = 0, failures = 0;
  std::string failed;
  for (Index n : {5, 10, 20, 50}) {
    for (int d : {2, 3}) {
      for (Index na : {2, 3, 4}) {
        const auto s = bearing::generate_localization_scenario(grid_params(n, d, na, 1));
        const Framework truth(s.graph(), Configuration(d, s.positions));
        const double diam = bearing::diameter(truth.config);
        const auto problem = s.localization_problem();
        const auto part = bearing::partition(bearing::assemble_laplacian(problem.measurements), problem.anchors);
        const Eigen::VectorXd est = part.scatter(problem.anchor_positions(),
                                                 bearing::localize_closed_form(part, problem.anchor_positions()));
        const double cf = (est - s.positions).reshaped(d, n).colwise().norm().maxCoeff() / diam;
        const auto run = bearing::run_scenario(s);
        double sim = INFINITY;
        if (run.report.final_state) sim = (*run.report.final_state - s.positions).reshaped(d, n).colwise().norm().maxCoeff() / diam;
        worst_cf = std::max(worst_cf, cf);
        worst_sim = std::max(worst_sim, sim);
        ++cases;
        if (!(cf < 1e-8 && sim < 1e-6)) {
          ++failures;
          failed += fmt(" (n=%ld d=%d na=%ld cf=%.1e sim=%.1e)", long(n), d, long(na), cf, sim);
        }
      }
    }
  }
  return {failures == 0, fmt("cases=%d failures=%d max closed-form=%.2e max simulated=%.2e (relative to diameter)",
                             cases, failures, worst_cf, worst_sim) +
                             failed};
}

Outcome c6_jacobian() {
  std::mt19937_64 rng(2024);
  double worst = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const int d = 2 + t % 3;
    const Index n = 2 + static_cast<Index>(rng() % 9);
    const auto edges = oracle::random_connected_edges(n, n, rng);
    const Eigen::VectorXd p = oracle::random_vector(n * d, rng, -2, 2);
    const Framework fw(Graph::build(n, edges), Configuration(d, p));
    const Eigen::MatrixXd r = bearing::bearing_rigidity_matrix(fw).matrix;
    const Eigen::MatrixXd fd = oracle::bearing_jacobian_fd(edges, p, d);
    worst = std::max(worst, (r - fd).norm() / r.norm());
  }
  return {worst < 1e-5, fmt("frameworks=%d max relative error=%.2e", trials, worst)};
}

Outcome c7_null_space() {
  std::mt19937_64 rng(7);
  double worst_r = 0, worst_l = 0;
  bool rank_ok = true;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const int d = 2 + t % 3;
    const Index n = 2 + static_cast<Index>(rng() % 12);
    const auto edges = oracle::random_connected_edges(n, static_cast<Index>(rng() % (2 * n)), rng);
    const Eigen::VectorXd p = oracle::random_vector(n * d, rng, -3, 3);
    const Framework fw(Graph::build(n, edges), Configuration(d, p));
    const auto rb = bearing::bearing_rigidity_matrix(fw);
    const Eigen::MatrixXd l = bearing::assemble_laplacian(bearing::BearingConstraintSet::from_bearings(
                                                              fw.graph, bearing::bearing_function(fw)))
                                  .matrix;
    Eigen::MatrixXd motions(n * d, d + 1);
    for (Index i = 0; i < n; ++i) motions.block(i * d, 0, d, d).setIdentity();
    motions.col(d) = p;
    for (Index c = 0; c <= d; ++c) {
      const double mn = motions.col(c).norm();
      worst_r = std::max(worst_r, (rb.matrix * motions.col(c)).norm() / (rb.matrix.norm() * mn));
      worst_l = std::max(worst_l, (l * motions.col(c)).norm() / (l.norm() * mn));
    }
    rank_ok = rank_ok && rb.rank <= n * d - d - 1 && oracle::svd_rank(rb.matrix) <= n * d - d - 1;
  }
  return {worst_r < 1e-9 && worst_l < 1e-9 && rank_ok,
          fmt("frameworks=%d max |R_B v|=%.2e max |L v|=%.2e rank bound %s", trials, worst_r, worst_l,
              rank_ok ? "held" : "violated")};
}

Outcome c8_definiteness_boundary() {
  int seeds = 0, failures = 0;
  for (std::uint64_t seed = 1; seed <= 24; ++seed) {
    const Index n = 5 + static_cast<Index>(seed % 8);
    const int d = 2 + static_cast<int>(seed % 2);
    const auto s = bearing::generate_localization_scenario(grid_params(n, d, 2, seed));
    const auto cs = s.localization_problem().measurements;
    const auto lap = bearing::assemble_laplacian(cs);
    std::mt19937_64 rng(seed);
    std::vector<Index> order(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    const auto one = bearing::partition(lap, {order[0]});
    const auto two = bearing::partition(lap, {order[0], order[1]});
    const bool lib_one = bearing::is_follower_block_positive_definite(one).positive_definite;
    const bool lib_two = bearing::is_follower_block_positive_definite(two).positive_definite;
    // Oracle: eigenvalues of the follower block of the Kronecker-assembled Laplacian.
    const Eigen::MatrixXd lk = oracle::laplacian_kron(n, s.graph().edge_list(), cs.as_bearing_vector().g, d);
    auto ff = [&](const std::vector<Index>& special) {
      std::vector<Index> idx;
      for (Index i = 0; i < n; ++i) {
        if (std::find(special.begin(), special.end(), i) == special.end()) {
          for (int k = 0; k < d; ++k) idx.push_back(i * d + k);
        }
      }
      return Eigen::MatrixXd(lk(idx, idx));
    };
    const Eigen::VectorXd e1 = eigenvalues(ff({order[0]}));
    const Eigen::VectorXd e2 = eigenvalues(ff({order[0], order[1]}));
    const bool oracle_one = e1(0) > 1e-10 * e1.maxCoeff();
    const bool oracle_two = e2(0) > 1e-10 * e2.maxCoeff();
    ++seeds;
    if (lib_one || oracle_one || !lib_two || !oracle_two) ++failures;
  }
  return {failures == 0 && seeds >= 20, fmt("seeds=%d failures=%d (1 special: singular, 2 special: definite)", seeds, failures)};
}

Outcome c9_protocol_identity() {
  std::mt19937_64 rng(99);
  int trials = 0, mismatches = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = bearing::generate_localization_scenario(grid_params(12, 2 + static_cast<int>(seed % 2), 3, seed));
    const auto problem = s.localization_problem();
    for (int k = 0; k < 20; ++k) {
      const Eigen::VectorXd x = oracle::random_vector(s.agents * s.dim, rng, -2, 2);
      const Eigen::VectorXd a = bearing::estimator_field(problem.measurements, x, problem.anchors);
      const Eigen::VectorXd b = bearing::leader_follower_field(problem.measurements, x, problem.anchors);
      ++trials;
      if (a != b) ++mismatches;
    }
  }
  return {mismatches == 0, fmt("evaluations=%d bitwise mismatches=%d", trials, mismatches)};
}

/// Fitted log-error slope over the tail window e0*1e-8 < e < e0*1e-3.
double tail_slope(const bearing::Trajectory& traj, const Eigen::VectorXd& limit) {
  const double e0 = (traj.states.front() - limit).norm();
  std::vector<double> t, y;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const double e = (traj.states[k] - limit).norm();
    if (e < 1e-3 * e0 && e > 1e-8 * e0) {
      t.push_back(traj.times[k]);
      y.push_back(std::log(e));
    }
  }
  return t.size() < 10 ? NAN : oracle::fit_slope(t, y);
}

Outcome c10_decay_rate() {
  // Leaderless cube: slowest mode is the smallest nonzero eigenvalue of L.
  auto cube = bearing::generate_cube_scenario(0, 1);
  cube.integrator.tolerance = 0.0;
  cube.integrator.record_stride = 1;
  cube.integrator.max_time = 400;
  const auto cs = cube.constraint_set();
  const Eigen::VectorXd lam = eigenvalues(oracle::laplacian_kron(8, cube.graph().edge_list(), cs.as_bearing_vector().g, 3));
  double lambda2 = 0;
  for (Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > 1e-9 * lam.maxCoeff()) {
      lambda2 = lam(i);
      break;
    }
  }
  const auto run_c = bearing::run_scenario(cube);
  const double slope_c =
      tail_slope(run_c.trajectory, leaderless_limit_oracle(cube.initial_state, bearing::unit_cube().stacked(), 3));
  const double rel_c = std::abs(-slope_c - lambda2) / lambda2;

  // Localization, 10 agents: slowest mode is the smallest eigenvalue of L_ff.
  auto loc = bearing::generate_localization_scenario(grid_params(10, 2, 3, 5));
  loc.integrator.tolerance = 0.0;
  loc.integrator.record_stride = 1;
  const auto problem = loc.localization_problem();
  const Eigen::MatrixXd lk = oracle::laplacian_kron(10, loc.graph().edge_list(), problem.measurements.as_bearing_vector().g, 2);
  const Eigen::MatrixXd lff = lk.bottomRightCorner(14, 14);  // anchors are agents 0..2
  const double lmin = eigenvalues(lff)(0);
  const double lmax = eigenvalues(lff).maxCoeff();
  loc.integrator.max_time = std::min(2000.0, 30.0 / lmin);
  loc.integrator.dt = 0.5 / lmax;
  const auto run_l = bearing::run_scenario(loc);
  const double slope_l = tail_slope(run_l.trajectory, loc.positions);
  const double rel_l = std::abs(-slope_l - lmin) / lmin;

  return {rel_c < 0.1 && rel_l < 0.1, fmt("cube: slope=%.5f lambda=%.5f (rel %.1e); localization: slope=%.5f "
                                          "lambda=%.5f (rel %.1e)",
                                          slope_c, lambda2, rel_c, slope_l, lmin, rel_l)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"C1", "cube framework rank and rigidity", 1.0, c1_cube_rigidity},
      {"C2", "50-agent network rank", 10.0, c2_network_rigidity},
      {"C3", "leaderless formation limit over 100 seeds", 60.0, c3_leaderless},
      {"C4", "leader-follower formation over 50 seeds", 60.0, c4_leader_follower},
      {"C5", "localization accuracy grid", 120.0, c5_localization_grid},
      {"C6", "rigidity matrix vs finite differences", 30.0, c6_jacobian},
      {"C7", "trivial motions in null spaces and rank bound", 30.0, c7_null_space},
      {"C8", "follower block definiteness boundary", 30.0, c8_definiteness_boundary},
      {"C9", "estimator and controller share one protocol", 5.0, c9_protocol_identity},
      {"C10", "tail decay rate matches slowest eigenvalue", 30.0, c10_decay_rate},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs < c.budget_s;
    const bool pass = out.pass && in_budget;
    if (!pass) ++failed;
    std::printf("%s %-4s %s: %s [%.2f s of %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str(),
                out.detail.c_str(), secs, c.budget_s, in_budget ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
