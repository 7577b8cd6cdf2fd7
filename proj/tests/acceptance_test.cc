// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
// when any criterion fails.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "conecert/certificates.h"
#include "conecert/kyp.h"
#include "conecert/possys.h"
#include "conecert/rankone.h"
#include "conecert/steering.h"
#include "test_generators.h"

namespace conecert::testing {
namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

Verdict orthant_duality() {
  const auto start = Clock::now();
  Rng rng(101);
  int agree = 0;
  const int total = 200;
  for (int i = 0; i < total; ++i) {
    const int x_dim = uniform_int(rng, 1, 4);
    const int z_dim = uniform_int(rng, x_dim + 1, 8);
    const OrthantProblem p = random_surjective_orthant(rng, x_dim, z_dim);
    const bool certified = orthant_certificate(p).has_value();
    const bool kernel_nonnegative = orthant_kernel_minimum(p).value >= -1e-7;
    if (certified == kernel_nonnegative) ++agree;
  }
  const double elapsed = seconds_since(start);
  return {agree == total && elapsed < 10.0,
          fmt("%d/%d agree, %.2f s", agree, total, elapsed)};
}

Verdict l1_tightness() {
  Rng rng(202);
  int matched = 0;
  double worst_rel = 0.0;
  double worst_excess = 0.0;
  const int total = 100;
  const TimeGrid grid(0.0, 20.0, 2000);
  for (int i = 0; i < total; ++i) {
    const PositiveSystem sys = random_positive_system(rng, uniform_int(rng, 1, 6), uniform_int(rng, 1, 3));
    const double exact = exact_l1_gain(sys);
    const double bisected = bisect_l1_gain(sys, 1e-9);
    const double rel = std::abs(bisected - exact) / exact;
    worst_rel = std::max(worst_rel, rel);
    if (rel <= 1e-6) ++matched;
    for (int t = 0; t < 3; ++t) {
      const double ratio = empirical_l1_ratio(sys, random_nonnegative_input(rng, sys.m(), grid));
      worst_excess = std::max(worst_excess, (ratio - bisected) / bisected);
    }
  }
  return {matched == total && worst_excess <= 1e-3,
          fmt("%d/%d within 1e-6 (worst %.2e), worst empirical excess %.2e", matched, total,
              worst_rel, worst_excess)};
}

Verdict kyp_ensembles() {
  const auto start = Clock::now();
  Rng rng(303);
  int certified = 0, undecided = 0, false_infeasible = 0, sweep_pass = 0;
  for (int i = 0; i < 50; ++i) {
    const KypInstance inst = random_feasible_kyp(rng, uniform_int(rng, 1, 4), uniform_int(rng, 1, 2));
    const KypLmiResult r = kyp_lmi(inst);
    if (r.status == KypStatus::kFeasible) ++certified;
    if (r.status == KypStatus::kUndecided) {
      ++undecided;
      std::printf("  note: feasible instance %d undecided (best phi %.3e)\n", i, r.best_phi);
    }
    if (r.status == KypStatus::kInfeasible) ++false_infeasible;
    if (frequency_condition(inst, FrequencyGrid::Default(inst.A)).holds) ++sweep_pass;
  }
  int sweep_fail = 0, bad_certificates = 0;
  for (int i = 0; i < 50; ++i) {
    const KypInstance inst =
        random_infeasible_kyp(rng, uniform_int(rng, 1, 4), uniform_int(rng, 1, 2));
    if (!frequency_condition(inst, FrequencyGrid::Default(inst.A)).holds) ++sweep_fail;
    const KypLmiResult r = kyp_lmi(inst);
    if (r.P && inst.lmi_problem().phi(*r.P) <= 1e-6) ++bad_certificates;
  }
  const double elapsed = seconds_since(start);
  const bool pass = certified >= 48 && false_infeasible == 0 && sweep_pass == 50 &&
                    sweep_fail == 50 && bad_certificates == 0 && elapsed < 120.0;
  return {pass, fmt("feasible: %d/50 certified, %d undecided, %d false infeasible, sweep %d/50; "
                    "infeasible: sweep fails %d/50, %d passing certificates; %.1f s",
                    certified, undecided, false_infeasible, sweep_pass, sweep_fail,
                    bad_certificates, elapsed)};
}

Verdict kyp_anchor() {
  KypInstance inst{Eigen::MatrixXd::Constant(1, 1, -1.0), Eigen::MatrixXd::Ones(1, 1),
                   SymMatrix((Eigen::Matrix2d() << 0, -1, -1, 0).finished())};
  const KypLmiResult r = kyp_lmi(inst);
  const double p = r.P ? (*r.P)(0, 0) : std::nan("");
  const TimeGrid grid(0.0, 30.0, 30000);
  const auto u = sample<Eigen::VectorXd>(grid, [](double t) {
    return Eigen::VectorXd::Constant(1, std::exp(-t));
  });
  const double integral = iqc_integral(inst, u).integral;
  const bool pass = r.status == KypStatus::kFeasible && std::abs(p - 1.0) <= 1e-4 &&
                    std::abs(integral + 0.5) <= 1e-4;
  return {pass, fmt("P = %.8f, IQC integral = %.8f", p, integral)};
}

Verdict rank_one_round_trip() {
  Rng rng(505);
  int passed = 0;
  double worst_rel = 0.0, worst_ode = 0.0;
  const TimeGrid grid(0.0, 2.0, 4096);
  for (int i = 0; i < 50; ++i) {
    const SynthesizedTrajectory s =
        random_synthesized(rng, uniform_int(rng, 1, 3), uniform_int(rng, 1, 2), grid);
    try {
      const RankOneDecomposition d = decompose(s.Q, s.A, s.B);
      const double rel = d.reconstruction_error / s.Q.max_norm();
      worst_rel = std::max(worst_rel, rel);
      worst_ode = std::max(worst_ode, d.max_ode_residual);
      if (rel <= 1e-4 && d.max_ode_residual <= 1e-3) ++passed;
    } catch (const std::exception& e) {
      std::printf("  note: round trip %d threw: %s\n", i, e.what());
    }
  }

  // Rank of Q_nn drops from 2 to 1 at t = 1.
  const TimeGrid cross(0.0, 2.0, 512);
  const Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  const Eigen::MatrixXd B = Eigen::MatrixXd::Identity(2, 2);
  const std::vector<Eigen::VectorXd> starts = {Eigen::Vector2d(-1.0, 0.0), Eigen::Vector2d(0.5, 1.0)};
  const std::vector<Trajectory<Eigen::VectorXd>> drives = {
      sample<Eigen::VectorXd>(cross, [](double) -> Eigen::VectorXd { return Eigen::Vector2d(1.0, 0.0); }),
      sample<Eigen::VectorXd>(cross, [](double) -> Eigen::VectorXd { return Eigen::Vector2d(0.2, -0.1); })};
  double stitch = std::nan(""), cross_rel = std::nan(""), cross_ode = std::nan("");
  std::size_t junctions = 0;
  try {
    const MatrixTrajectory Q = synthesize_Q(A, B, starts, drives, cross);
    const RankOneDecomposition d = decompose(Q, A, B);
    stitch = 0.0;
    for (double e : d.stitching_errors) stitch = std::max(stitch, e);
    junctions = d.stitching_errors.size();
    cross_rel = d.reconstruction_error / Q.max_norm();
    cross_ode = d.max_ode_residual;
  } catch (const std::exception& e) {
    std::printf("  note: rank-crossing instance threw: %s\n", e.what());
  }
  const bool pass = passed == 50 && junctions >= 1 && stitch <= 1e-4 && cross_rel <= 1e-4 &&
                    cross_ode <= 1e-3;
  return {pass, fmt("%d/50 (worst rel %.2e, worst ODE %.2e); crossing: %zu junction(s), "
                    "stitching %.2e, rel %.2e, ODE %.2e",
                    passed, worst_rel, worst_ode, junctions, stitch, cross_rel, cross_ode)};
}

Verdict k_controllability() {
  Rng rng(606);
  int systems_ok = 0;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto [A, B] = random_controllable_pair(rng, uniform_int(rng, 1, 4), uniform_int(rng, 1, 2));
    const KControllabilityReport r = verify_k_controllability(A, B, 10, 1000 + i);
    for (std::size_t k = 0; k < r.endpoint_errors.size(); ++k) {
      worst = std::max(worst, r.endpoint_errors[k] / r.tolerances[k]);
    }
    if (r.controllable && r.all_within && r.endpoint_errors.size() == 10) ++systems_ok;
  }
  const Eigen::MatrixXd A = (Eigen::Matrix2d() << -1, 0, 0, -2).finished();
  const Eigen::MatrixXd B = Eigen::Vector2d(1.0, 0.0);
  const KControllabilityReport obstructed = verify_k_controllability(A, B, 10, 7);
  const bool witness = !obstructed.controllable && obstructed.obstruction &&
                       obstructed.obstruction_residual <= 1e-10;
  return {systems_ok == 20 && witness,
          fmt("%d/20 systems within tolerance (worst error/tol %.2e); obstruction witness %s",
              systems_ok, worst, witness ? "returned" : "missing")};
}

Verdict dissipation() {
  Rng rng(707);
  int instances = 0, intervals = 0, held = 0;
  const TimeGrid grid(0.0, 10.0, 1000);
  for (int i = 0; i < 100; ++i) {
    const PositiveSystem sys = random_positive_system(rng, uniform_int(rng, 1, 6), uniform_int(rng, 1, 3));
    const double gamma = exact_l1_gain(sys) * uniform(rng, 1.0, 2.0);
    const auto cert = l1_certificate(sys, gamma);
    if (!cert) continue;
    ++instances;
    for (int t = 0; t < 20; ++t) {
      const auto u = random_nonnegative_input(rng, sys.m(), grid);
      const Eigen::VectorXd x0 = normal_vector(rng, sys.n()).cwiseAbs();
      const DissipationReport r = simulate_and_check_dissipation(
          sys, SupplyRate::L1Gain(sys.n(), sys.m(), gamma), cert->p, u, x0);
      for (std::size_t k = 0; k < r.margins.size(); ++k) {
        ++intervals;
        if (r.margins[k] >= -r.tolerances[k]) ++held;
      }
    }
  }
  return {instances == 100 && held == intervals,
          fmt("%d certified instances, %d/%d intervals hold", instances, held, intervals)};
}

Verdict image_inclusion() {
  Rng rng(808);
  int passed = 0;
  for (int i = 0; i < 500; ++i) {
    const int dim = uniform_int(rng, 2, 8);
    const int n = uniform_int(rng, 1, dim - 1);
    const SymMatrix Q = random_psd(rng, dim, uniform_int(rng, 0, dim));
    if (image_inclusion_check(Q, n, dim - n).holds) ++passed;
  }
  int raised = 0;
  for (int i = 0; i < 20; ++i) {
    const int dim = uniform_int(rng, 2, 8);
    const int n = uniform_int(rng, 1, dim - 1);
    try {
      image_inclusion_check(random_indefinite(rng, dim), n, dim - n);
    } catch (const NotPositiveSemidefinite&) {
      ++raised;
    }
  }
  return {passed == 500 && raised == 20,
          fmt("%d/500 PSD pass, %d/20 indefinite rejected", passed, raised)};
}

}  // namespace
}  // namespace conecert::testing

int main() {
  using conecert::testing::Verdict;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"orthant duality suite", conecert::testing::orthant_duality},
      {"L1-gain tightness", conecert::testing::l1_tightness},
      {"KYP constructed ensembles", conecert::testing::kyp_ensembles},
      {"KYP scalar passivity anchor", conecert::testing::kyp_anchor},
      {"rank-one round trip", conecert::testing::rank_one_round_trip},
      {"K-controllability", conecert::testing::k_controllability},
      {"dissipation along trajectories", conecert::testing::dissipation},
      {"image inclusion for PSD matrices", conecert::testing::image_inclusion},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v{false, ""};
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("%s %zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
