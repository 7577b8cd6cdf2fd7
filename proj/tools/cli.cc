#include "cli.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "conecert/certificates.h"
#include "conecert/kyp.h"
#include "conecert/possys.h"
#include "conecert/rankone.h"
#include "conecert/steering.h"

namespace conecert::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::vector<std::string> kCommands = {"l1gain", "kyp", "decompose", "steer", "certify"};

// ---------------------------------------------------------------------------
// Logging.

enum class LogLevel { kQuiet, kInfo, kDebug };

class Logger {
 public:
  explicit Logger(std::ostream& err) : err_(err) {
    const char* env = std::getenv("CONE_CERT_LOG");
    const std::string value = env == nullptr ? "info" : env;
    if (value == "quiet") {
      level_ = LogLevel::kQuiet;
    } else if (value == "debug") {
      level_ = LogLevel::kDebug;
    } else if (value != "info") {
      err_ << "cone-cert: warning: unknown CONE_CERT_LOG value '" << value << "', using info\n";
    }
  }
  void info(const std::string& msg) const {
    if (level_ != LogLevel::kQuiet) err_ << "cone-cert: " << msg << "\n";
  }
  void debug(const std::string& msg) const {
    if (level_ == LogLevel::kDebug) err_ << "cone-cert: [debug] " << msg << "\n";
  }
  void error(const std::string& msg) const { err_ << "cone-cert: error: " << msg << "\n"; }

 private:
  std::ostream& err_;
  LogLevel level_ = LogLevel::kInfo;
};

// ---------------------------------------------------------------------------
// Reading fields. Every reader appends violations instead of throwing.

using Violations = std::vector<std::string>;

std::optional<Eigen::MatrixXd> read_matrix(const json& doc, const std::string& field,
                                           Violations& out, bool required = true) {
  if (!doc.contains(field)) {
    if (required) out.push_back(field + ": missing required field");
    return std::nullopt;
  }
  const json& v = doc.at(field);
  if (!v.is_array() || v.empty()) {
    out.push_back(field + ": expected a non-empty array of rows");
    return std::nullopt;
  }
  const std::size_t cols = v.at(0).is_array() ? v.at(0).size() : 0;
  if (cols == 0) {
    out.push_back(field + ": rows must be non-empty arrays of numbers");
    return std::nullopt;
  }
  Eigen::MatrixXd m(v.size(), cols);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const json& row = v.at(i);
    if (!row.is_array() || row.size() != cols) {
      out.push_back(field + ": row " + std::to_string(i) + " has a different length (matrix is not rectangular)");
      return std::nullopt;
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!row.at(j).is_number() || !std::isfinite(row.at(j).get<double>())) {
        out.push_back(field + "[" + std::to_string(i) + "][" + std::to_string(j) +
                      "]: expected a finite number");
        return std::nullopt;
      }
      m(i, j) = row.at(j).get<double>();
    }
  }
  return m;
}

std::optional<Eigen::VectorXd> read_vector(const json& doc, const std::string& field,
                                           Violations& out) {
  if (!doc.contains(field)) {
    out.push_back(field + ": missing required field");
    return std::nullopt;
  }
  const json& v = doc.at(field);
  if (!v.is_array() || v.empty()) {
    out.push_back(field + ": expected a non-empty array of numbers");
    return std::nullopt;
  }
  Eigen::VectorXd x(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v.at(i).is_number() || !std::isfinite(v.at(i).get<double>())) {
      out.push_back(field + "[" + std::to_string(i) + "]: expected a finite number");
      return std::nullopt;
    }
    x(i) = v.at(i).get<double>();
  }
  return x;
}

std::optional<double> read_number(const json& doc, const std::string& field, Violations& out,
                                  bool required = true) {
  if (!doc.contains(field)) {
    if (required) out.push_back(field + ": missing required field");
    return std::nullopt;
  }
  const json& v = doc.at(field);
  if (!v.is_number() || !std::isfinite(v.get<double>())) {
    out.push_back(field + ": expected a finite number");
    return std::nullopt;
  }
  return v.get<double>();
}

std::optional<int> read_int(const json& doc, const std::string& field, Violations& out,
                            bool required = true) {
  if (!doc.contains(field)) {
    if (required) out.push_back(field + ": missing required field");
    return std::nullopt;
  }
  const json& v = doc.at(field);
  if (!v.is_number_integer()) {
    out.push_back(field + ": expected an integer");
    return std::nullopt;
  }
  return v.get<int>();
}

void require_square(const std::optional<Eigen::MatrixXd>& m, const std::string& field,
                    Violations& out) {
  if (m && m->rows() != m->cols()) out.push_back(field + ": must be square");
}

void require_symmetric(const std::optional<Eigen::MatrixXd>& m, const std::string& field,
                       Violations& out) {
  if (!m || m->rows() != m->cols()) return;
  if ((*m - m->transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + m->cwiseAbs().maxCoeff())) {
    out.push_back(field + ": must be symmetric");
  }
}

// ---------------------------------------------------------------------------
// Parsed problems.

struct L1Problem {
  PositiveSystem sys;
  double gamma;
};

struct KypProblem {
  KypInstance inst;
};

struct DecomposeProblem {
  MatrixTrajectory traj;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
};

struct SteerProblem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd X0;
  Eigen::MatrixXd X1;
  double t1;
  int steps;
};

struct CertifyProblem {
  bool psd;
  OrthantProblem orthant;
  bool strict = false;
  PsdProblem psd_problem;
};

std::optional<L1Problem> parse_l1(const json& doc, Violations& out) {
  const auto A = read_matrix(doc, "A", out);
  const auto B = read_matrix(doc, "B", out);
  const auto gamma = read_number(doc, "gamma", out);
  require_square(A, "A", out);
  if (A && B && B->rows() != A->rows()) out.push_back("B: must have as many rows as A");
  if (gamma && !(*gamma > 0.0)) out.push_back("gamma: must be positive");
  if (A && A->rows() == A->cols() && !is_metzler(*A)) {
    out.push_back("A: off-diagonal entries must be nonnegative (Metzler)");
  }
  if (B && B->minCoeff() < 0.0) out.push_back("B: entries must be nonnegative");
  if (!out.empty()) return std::nullopt;
  return L1Problem{{*A, *B}, *gamma};
}

std::optional<KypProblem> parse_kyp(const json& doc, Violations& out) {
  const auto A = read_matrix(doc, "A", out);
  const auto B = read_matrix(doc, "B", out);
  const auto M = read_matrix(doc, "M", out);
  require_square(A, "A", out);
  require_square(M, "M", out);
  require_symmetric(M, "M", out);
  if (A && B && B->rows() != A->rows()) out.push_back("B: must have as many rows as A");
  if (A && B && M && M->rows() != A->rows() + B->cols()) {
    out.push_back("M: dimension must equal rows(A) + cols(B)");
  }
  if (!out.empty()) return std::nullopt;
  return KypProblem{{*A, *B, SymMatrix(*M)}};
}

std::optional<DecomposeProblem> parse_decompose(const json& doc, Violations& out) {
  const auto n = read_int(doc, "n", out);
  const auto m = read_int(doc, "m", out);
  const auto A = read_matrix(doc, "A", out);
  const auto B = read_matrix(doc, "B", out);
  if (n && *n < 1) out.push_back("n: must be positive");
  if (m && *m < 1) out.push_back("m: must be positive");
  if (n && A && (A->rows() != *n || A->cols() != *n)) out.push_back("A: must be n x n");
  if (n && m && B && (B->rows() != *n || B->cols() != *m)) out.push_back("B: must be n x m");

  std::optional<TimeGrid> grid;
  if (!doc.contains("grid")) {
    out.push_back("grid: missing required field");
  } else if (!doc.at("grid").is_object()) {
    out.push_back("grid: expected an object with t0, t1 and steps");
  } else {
    Violations local;
    const auto t0 = read_number(doc.at("grid"), "t0", local);
    const auto t1 = read_number(doc.at("grid"), "t1", local);
    const auto steps = read_int(doc.at("grid"), "steps", local);
    for (const auto& v : local) out.push_back("grid." + v);
    if (t0 && t1 && !(*t1 > *t0)) out.push_back("grid.t1: must exceed grid.t0");
    if (steps && *steps < 2) out.push_back("grid.steps: must be at least 2");
    if (local.empty() && *t1 > *t0 && *steps >= 2) grid.emplace(*t0, *t1, *steps);
  }

  std::vector<SymMatrix> values;
  if (!doc.contains("samples")) {
    out.push_back("samples: missing required field");
  } else if (!doc.at("samples").is_array()) {
    out.push_back("samples: expected an array of flat row-major matrices");
  } else if (n && m && *n >= 1 && *m >= 1) {
    const json& s = doc.at("samples");
    const int d = *n + *m;
    if (grid && static_cast<int>(s.size()) != grid->samples()) {
      out.push_back("samples: expected grid.steps + 1 = " + std::to_string(grid->samples()) +
                    " entries, found " + std::to_string(s.size()));
    }
    for (std::size_t k = 0; k < s.size() && out.empty(); ++k) {
      const std::string field = "samples[" + std::to_string(k) + "]";
      if (!s.at(k).is_array() || static_cast<int>(s.at(k).size()) != d * d) {
        out.push_back(field + ": expected " + std::to_string(d * d) + " numbers");
        break;
      }
      Eigen::MatrixXd q(d, d);
      for (int i = 0; i < d * d; ++i) {
        const json& e = s.at(k).at(i);
        if (!e.is_number() || !std::isfinite(e.get<double>())) {
          out.push_back(field + "[" + std::to_string(i) + "]: expected a finite number");
          break;
        }
        q(i / d, i % d) = e.get<double>();
      }
      if (!out.empty()) break;
      require_symmetric(q, field, out);
      if (out.empty()) values.emplace_back(q);
    }
  }
  if (!out.empty()) return std::nullopt;
  return DecomposeProblem{{*grid, std::move(values), *n, *m}, *A, *B};
}

std::optional<SteerProblem> parse_steer(const json& doc, Violations& out) {
  const auto A = read_matrix(doc, "A", out);
  const auto B = read_matrix(doc, "B", out);
  const auto X0 = read_matrix(doc, "X0", out);
  const auto X1 = read_matrix(doc, "X1", out);
  const auto t1 = read_number(doc, "t1", out, false);
  const auto steps = read_int(doc, "steps", out, false);
  require_square(A, "A", out);
  require_symmetric(X0, "X0", out);
  require_symmetric(X1, "X1", out);
  if (A && B && B->rows() != A->rows()) out.push_back("B: must have as many rows as A");
  for (const auto& [X, name] : {std::pair{&X0, "X0"}, std::pair{&X1, "X1"}}) {
    if (A && *X && ((*X)->rows() != A->rows() || (*X)->cols() != A->rows())) {
      out.push_back(std::string(name) + ": must be n x n");
    }
  }
  if (t1 && !(*t1 > 0.0)) out.push_back("t1: must be positive");
  if (steps && *steps < 2) out.push_back("steps: must be at least 2");
  if (!out.empty()) return std::nullopt;
  return SteerProblem{*A, *B, *X0, *X1, t1.value_or(1.0), steps.value_or(512)};
}

std::optional<CertifyProblem> parse_certify(const json& doc, Violations& out) {
  if (!doc.contains("cone") || !doc.at("cone").is_string()) {
    out.push_back("cone: missing or not one of \"orthant\", \"psd\"");
    return std::nullopt;
  }
  const std::string cone = doc.at("cone").get<std::string>();
  CertifyProblem p;
  if (cone == "orthant") {
    p.psd = false;
    const auto L = read_matrix(doc, "L", out);
    const auto m = read_vector(doc, "m", out);
    if (L && m && m->size() != L->cols()) out.push_back("m: length must equal cols(L)");
    if (doc.contains("strict")) {
      if (!doc.at("strict").is_boolean()) {
        out.push_back("strict: expected a boolean");
      } else {
        p.strict = doc.at("strict").get<bool>();
      }
    }
    if (!out.empty()) return std::nullopt;
    p.orthant = {*L, *m};
    return p;
  }
  if (cone == "psd") {
    p.psd = true;
    const auto U = read_matrix(doc, "U", out);
    const auto V = read_matrix(doc, "V", out);
    const auto C = read_matrix(doc, "C", out);
    require_square(C, "C", out);
    require_symmetric(C, "C", out);
    if (U && V && (U->rows() != V->rows() || U->cols() != V->cols())) {
      out.push_back("V: must have the same shape as U");
    }
    if (U && C && C->rows() != U->cols()) out.push_back("C: dimension must equal cols(U)");
    if (!out.empty()) return std::nullopt;
    p.psd_problem = {*U, *V, SymMatrix(*C)};
    return p;
  }
  out.push_back("cone: must be \"orthant\" or \"psd\"");
  return std::nullopt;
}

Violations check_command_field(const json& doc, const std::string& command) {
  Violations out;
  if (!doc.is_object()) {
    out.push_back("(document): expected a JSON object");
    return out;
  }
  if (!doc.contains("command") || !doc.at("command").is_string()) {
    out.push_back("command: missing required field");
    return out;
  }
  const std::string declared = doc.at("command").get<std::string>();
  if (std::find(kCommands.begin(), kCommands.end(), declared) == kCommands.end()) {
    out.push_back("command: unknown command '" + declared + "'");
  } else if (!command.empty() && declared != command) {
    out.push_back("command: file declares '" + declared + "' but '" + command + "' was requested");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Result payloads.

ordered_json to_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ordered_json to_json(const Eigen::MatrixXd& m) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return a;
}

ordered_json to_json(const SymMatrix& m) { return to_json(m.matrix()); }

ordered_json to_json(const std::vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(x);
  return a;
}

ordered_json to_json(const PsdWitness& w) {
  return ordered_json{{"Z", to_json(w.Z)},
                      {"objective", w.objective},
                      {"map_residual", w.map_residual}};
}

struct Outcome {
  int code;
  std::string status;
  ordered_json body = ordered_json::object();
};

struct RunOptions {
  std::uint64_t seed = 0;
  std::optional<double> tol;
  std::optional<int> grid;
  std::optional<double> horizon;
};

Outcome run_l1gain(const L1Problem& p, const Logger& log) {
  Outcome o{kExitHolds, "feasible"};
  try {
    const double exact = exact_l1_gain(p.sys);
    o.body["diagnostics"]["exact_gain"] = exact;
    const auto cert = l1_certificate(p.sys, p.gamma);
    if (!cert) {
      o.code = kExitFails;
      o.status = "infeasible";
      o.body["diagnostics"]["reason"] = "gamma is below the L1 gain";
      return o;
    }
    o.body["certificate"] = ordered_json{{"p", to_json(cert->p)}, {"gamma", cert->gamma}};
    o.body["diagnostics"]["state_slack"] = to_json(cert->state_slack);
    o.body["diagnostics"]["input_slack"] = to_json(cert->input_slack);
  } catch (const std::domain_error& e) {
    // A not Hurwitz: no finite gain.
    log.debug(e.what());
    o.code = kExitFails;
    o.status = "infeasible";
    o.body["diagnostics"]["reason"] = "A is not Hurwitz; the L1 gain is unbounded";
  }
  return o;
}

ordered_json frequency_json(const FrequencyResult& f) {
  return ordered_json{{"holds", f.holds},
                      {"worst_omega", f.worst_omega},
                      {"worst_lambda_max", f.worst_lambda},
                      {"limit_lambda_max", f.limit_lambda}};
}

Outcome run_kyp(const KypProblem& p, const RunOptions& opt, const Logger& log) {
  if (!p.inst.controllable()) {
    throw std::invalid_argument("A, B: the pair (A, B) must be controllable");
  }
  PsdOptions psd;
  psd.seed = opt.seed;
  if (opt.tol) psd.feasibility_tol = *opt.tol;
  const KypLmiResult lmi = kyp_lmi(p.inst, psd);
  log.debug("subgradient iterations: " + std::to_string(lmi.iterations));

  Outcome o{kExitUndecided, "undecided"};
  if (lmi.status == KypStatus::kFeasible) {
    o = {kExitHolds, "feasible"};
    o.body["certificate"] = ordered_json{{"P", to_json(*lmi.P)}, {"lambda_max", lmi.lambda_max}};
  } else if (lmi.status == KypStatus::kInfeasible) {
    o = {kExitFails, "infeasible"};
    o.body["witness"] = to_json(*lmi.witness);
  }
  const FrequencyGrid grid = FrequencyGrid::Default(p.inst.A, opt.grid.value_or(200));
  ordered_json diag;
  diag["best_phi"] = lmi.best_phi;
  diag["iterations"] = lmi.iterations;
  diag["frequency"] = frequency_json(frequency_condition(p.inst, grid));
  diag["frequency_points"] = grid.omegas().size();
  o.body["diagnostics"] = std::move(diag);
  return o;
}

Outcome run_decompose(const DecomposeProblem& p, const RunOptions& opt, const Logger& log) {
  DecomposeOptions options;
  if (opt.tol) options.dynamics_tol = *opt.tol;
  Outcome o{kExitHolds, "holds"};
  try {
    const RankOneDecomposition d = decompose(p.traj, p.A, p.B, options);
    ordered_json comps = ordered_json::array();
    for (const Component& c : d.components) {
      ordered_json x = ordered_json::array(), u = ordered_json::array();
      for (const auto& v : c.x) x.push_back(to_json(v));
      for (const auto& v : c.u) u.push_back(to_json(v));
      comps.push_back(ordered_json{{"zero_state", c.zero_state}, {"x", x}, {"u", u}});
    }
    ordered_json segs = ordered_json::array();
    for (const Segment& s : d.segmentation.segments) {
      segs.push_back(ordered_json{{"begin", s.begin}, {"end", s.end}, {"rank", s.rank}});
    }
    o.body["components"] = std::move(comps);
    ordered_json diag;
    diag["reconstruction_error"] = d.reconstruction_error;
    diag["max_ode_residual"] = d.max_ode_residual;
    diag["ode_residuals"] = to_json(d.ode_residuals);
    diag["stitching_errors"] = to_json(d.stitching_errors);
    diag["schur_min_eigenvalue"] = d.schur_min_eigenvalue;
    diag["input_residual"] = d.input_residual;
    diag["segments"] = std::move(segs);
    diag["boundaries"] = d.segmentation.boundaries;
    o.body["diagnostics"] = std::move(diag);
  } catch (const DynamicsViolation& e) {
    log.info(e.what());
    o = {kExitFails, "fails"};
    o.body["diagnostics"] =
        ordered_json{{"reason", "trajectory violates the matrix dynamics"},
                     {"input_residual", e.residual()}};
  } catch (const NotPositiveSemidefinite& e) {
    log.info(e.what());
    o = {kExitFails, "fails"};
    o.body["diagnostics"] = ordered_json{{"reason", e.what()}, {"lambda_min", e.lambda_min()}};
  }
  return o;
}

Outcome run_steer(const SteerProblem& p, const RunOptions& opt, const Logger& log) {
  const double t1 = opt.horizon.value_or(p.t1);
  const int steps = opt.grid.value_or(p.steps);
  if (!(t1 > 0.0)) throw std::invalid_argument("--horizon: must be positive");
  if (steps < 2) throw std::invalid_argument("--grid: must be at least 2");
  const SymMatrix X0(p.X0), X1(p.X1);
  for (const auto& [X, name] : {std::pair{&X0, "X0"}, std::pair{&X1, "X1"}}) {
    if (lambda_min(*X) < -default_psd_tolerance(*X)) {
      throw std::invalid_argument(std::string(name) + ": must be positive semidefinite");
    }
  }
  const ControllabilityResult ctrb = controllability_rank(p.A, p.B);
  if (!ctrb.controllable) {
    Outcome o{kExitFails, "infeasible"};
    const auto w = uncontrollable_direction(p.A, p.B);
    o.body["witness"] = ordered_json{{"left_null_vector", to_json(*w)},
                                     {"residual", (w->transpose() * ctrb.kalman).norm()}};
    o.body["diagnostics"] = ordered_json{{"controllability_rank", ctrb.rank}};
    return o;
  }
  try {
    const SteeringPlan plan = psd_steer(p.A, p.B, X0, X1, TimeGrid(0.0, t1, steps));
    Outcome o{kExitHolds, "feasible"};
    ordered_json comps = ordered_json::array();
    for (std::size_t i = 0; i < plan.inputs.size(); ++i) {
      ordered_json u = ordered_json::array();
      for (const auto& v : plan.inputs[i].values) u.push_back(to_json(v));
      comps.push_back(ordered_json{{"start", to_json(plan.starts[i])},
                                   {"target", to_json(plan.targets[i])},
                                   {"u", std::move(u)}});
    }
    o.body["plan"] = ordered_json{{"t1", t1}, {"steps", steps}, {"components", std::move(comps)}};
    o.body["diagnostics"] = ordered_json{{"start_error", plan.start_error},
                                         {"end_error", plan.end_error},
                                         {"tolerance", plan.tolerance},
                                         {"controllability_rank", ctrb.rank}};
    return o;
  } catch (const std::exception& e) {
    // Ill-conditioned Gramian or missed endpoint: a longer horizon may help.
    log.info(e.what());
    Outcome o{kExitUndecided, "undecided"};
    o.body["diagnostics"] = ordered_json{{"reason", e.what()}};
    return o;
  }
}

Outcome run_certify(const CertifyProblem& p, const RunOptions& opt, const Logger& log) {
  if (!p.psd) {
    if (p.strict) {
      const StrictOrthantResult r = orthant_certificate_strict(p.orthant);
      Outcome o = r.feasible ? Outcome{kExitHolds, "feasible"} : Outcome{kExitFails, "infeasible"};
      if (r.certificate) {
        o.body["certificate"] =
            ordered_json{{"p", to_json(r.certificate->p)}, {"slack", to_json(r.certificate->slack)}};
      }
      o.body["diagnostics"] = ordered_json{{"margin", r.margin}};
      return o;
    }
    if (const auto cert = orthant_certificate(p.orthant)) {
      Outcome o{kExitHolds, "feasible"};
      o.body["certificate"] = ordered_json{{"p", to_json(cert->p)}, {"slack", to_json(cert->slack)}};
      return o;
    }
    Outcome o{kExitFails, "infeasible"};
    const KernelMinimum km = orthant_kernel_minimum(p.orthant);
    if (km.witness) {
      o.body["witness"] =
          ordered_json{{"z", to_json(km.witness->z)}, {"objective", km.witness->objective}};
    }
    return o;
  }

  PsdOptions options;
  options.seed = opt.seed;
  if (opt.tol) options.feasibility_tol = *opt.tol;
  const PsdResult r = psd_certificate(p.psd_problem, options);
  log.debug("subgradient iterations: " + std::to_string(r.iterations));
  Outcome o{kExitUndecided, "undecided"};
  if (r.status == PsdStatus::kFeasible) {
    o = {kExitHolds, "feasible"};
    o.body["certificate"] = ordered_json{{"P", to_json(r.certificate->P)},
                                         {"slack_eigenvalues", to_json(r.certificate->slack)}};
  } else if (r.status == PsdStatus::kInfeasible) {
    o = {kExitFails, "infeasible"};
    o.body["witness"] = to_json(*r.witness);
  }
  o.body["diagnostics"] = ordered_json{{"best_phi", r.best_phi}, {"iterations", r.iterations}};
  return o;
}

Violations validate_for(const json& doc, const std::string& command) {
  if (command == "l1gain") {
    Violations v;
    parse_l1(doc, v);
    return v;
  }
  if (command == "kyp") {
    Violations v;
    parse_kyp(doc, v);
    return v;
  }
  if (command == "decompose") {
    Violations v;
    parse_decompose(doc, v);
    return v;
  }
  if (command == "steer") {
    Violations v;
    parse_steer(doc, v);
    return v;
  }
  Violations v;
  parse_certify(doc, v);
  return v;
}

// ---------------------------------------------------------------------------
// Output.

void emit(const ordered_json& v, int indent, std::string& out);

bool is_scalar(const ordered_json& v) { return !v.is_array() && !v.is_object(); }

void emit_number(double x, std::string& out) {
  if (!std::isfinite(x)) {
    out += "null";
    return;
  }
  if (x == 0.0) x = 0.0;  // drop the sign of negative zero
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  out += buf;
}

void emit(const ordered_json& v, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  switch (v.type()) {
    case ordered_json::value_t::number_float:
      emit_number(v.get<double>(), out);
      return;
    case ordered_json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      const bool flat = std::all_of(v.begin(), v.end(), is_scalar);
      out += flat ? "[" : "[\n";
      bool first = true;
      for (const auto& e : v) {
        if (!first) out += flat ? ", " : ",\n";
        first = false;
        if (!flat) out += pad;
        emit(e, indent + 2, out);
      }
      if (!flat) out += "\n" + std::string(static_cast<std::size_t>(indent), ' ');
      out += "]";
      return;
    }
    case ordered_json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + ordered_json(it.key()).dump() + ": ";
        emit(it.value(), indent + 2, out);
      }
      out += "\n" + std::string(static_cast<std::size_t>(indent), ' ') + "}";
      return;
    }
    default:
      out += v.dump();
  }
}

ordered_json header(const std::string& command, const std::string& digest) {
  ordered_json doc;
  doc["tool"] = ordered_json{{"name", kToolName}, {"version", kToolVersion}};
  doc["command"] = command;
  doc["input_digest"] = digest;
  return doc;
}

bool write_result(const ordered_json& doc, const std::string& output, std::ostream& out,
                  const Logger& log) {
  const std::string text = format_json(doc);
  if (output.empty()) {
    out << text;
    return true;
  }
  std::ofstream file(output, std::ios::binary);
  if (!file) {
    log.error("cannot open output file " + output);
    return false;
  }
  file << text;
  return static_cast<bool>(file);
}

}  // namespace

std::vector<std::string> validate_problem(const json& doc, const std::string& command) {
  Violations out = check_command_field(doc, command);
  if (!out.empty()) return out;
  return validate_for(doc, doc.at("command").get<std::string>());
}

std::string format_json(const ordered_json& value) {
  std::string out;
  emit(value, 0, out);
  out += "\n";
  return out;
}

std::string input_digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Logger log(err);
  CLI::App app{"Linear-conic certificates for LTI systems", kToolName};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  std::string command, input, output;
  RunOptions opt;
  std::uint64_t seed = 0;
  double tol = 0.0, horizon = 0.0;
  int grid = 0;
  std::vector<std::string> choices = kCommands;
  choices.push_back("validate");
  app.add_option("command", command, "l1gain | kyp | decompose | steer | certify | validate")
      ->required()
      ->check(CLI::IsMember(choices));
  app.add_option("--input", input, "problem file (JSON)")->required();
  app.add_option("--output", output, "result file; standard output when omitted");
  auto* seed_opt = app.add_option("--seed", seed, "random seed");
  auto* tol_opt = app.add_option("--tol", tol, "acceptance tolerance override")
                      ->check(CLI::PositiveNumber);
  auto* grid_opt = app.add_option("--grid", grid, "grid size override")->check(CLI::PositiveNumber);
  auto* horizon_opt =
      app.add_option("--horizon", horizon, "time horizon override")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolName << " " << kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    log.error(e.what());
    return kExitInputError;
  }
  if (*seed_opt) opt.seed = seed;
  if (*tol_opt) opt.tol = tol;
  if (*grid_opt) opt.grid = grid;
  if (*horizon_opt) opt.horizon = horizon;

  std::ifstream file(input, std::ios::binary);
  if (!file) {
    log.error("cannot read input file " + input);
    return kExitInputError;
  }
  std::stringstream buffer;
  buffer << file.rdbuf();
  const std::string bytes = buffer.str();
  const std::string digest = input_digest(bytes);

  ordered_json result = header(command, digest);
  auto fail_input = [&](const Violations& violations) {
    for (const auto& v : violations) log.error(input + ": " + v);
    result["status"] = "error";
    result["violations"] = violations;
    write_result(result, output, out, log);
    return static_cast<int>(kExitInputError);
  };

  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    return fail_input({std::string("(document): ") + e.what()});
  }

  if (command == "validate") {
    const Violations violations = validate_problem(doc);
    result["valid"] = violations.empty();
    result["violations"] = violations;
    if (!write_result(result, output, out, log)) return kExitInputError;
    for (const auto& v : violations) log.error(input + ": " + v);
    return violations.empty() ? kExitHolds : kExitInputError;
  }

  Violations violations = check_command_field(doc, command);
  if (!violations.empty()) return fail_input(violations);

  log.info("running " + command + " on " + input);
  result["seed"] = opt.seed;
  Outcome outcome{kExitInputError, "error"};
  try {
    if (command == "l1gain") {
      const auto p = parse_l1(doc, violations);
      if (!p) return fail_input(violations);
      outcome = run_l1gain(*p, log);
    } else if (command == "kyp") {
      const auto p = parse_kyp(doc, violations);
      if (!p) return fail_input(violations);
      outcome = run_kyp(*p, opt, log);
    } else if (command == "decompose") {
      const auto p = parse_decompose(doc, violations);
      if (!p) return fail_input(violations);
      outcome = run_decompose(*p, opt, log);
    } else if (command == "steer") {
      const auto p = parse_steer(doc, violations);
      if (!p) return fail_input(violations);
      outcome = run_steer(*p, opt, log);
    } else {
      const auto p = parse_certify(doc, violations);
      if (!p) return fail_input(violations);
      outcome = run_certify(*p, opt, log);
    }
  } catch (const std::invalid_argument& e) {
    return fail_input({e.what()});
  } catch (const std::exception& e) {
    log.error(e.what());
    result["status"] = "error";
    result["error"] = e.what();
    write_result(result, output, out, log);
    return kExitInputError;
  }

  result["status"] = outcome.status;
  for (auto it = outcome.body.begin(); it != outcome.body.end(); ++it) {
    result[it.key()] = it.value();
  }
  log.info("status: " + outcome.status);
  if (!write_result(result, output, out, log)) return kExitInputError;
  return outcome.code;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace conecert::cli
