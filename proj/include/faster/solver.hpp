#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <vector>

namespace faster {

/// min 1/2 x'Hx + g'x  s.t.  Aeq x = beq,  Ain x <= bin.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  Eigen::MatrixXd Ain;
  Eigen::VectorXd bin;

  int n() const { return static_cast<int>(H.rows()); }
  /// Throws std::invalid_argument on inconsistent shapes or asymmetric H.
  void validate() const;
  double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(H * x) + g.dot(x); }
};

enum class QpStatus { Optimal, Infeasible };

struct QpResult {
  QpStatus status = QpStatus::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  Eigen::VectorXd lambda_eq;  // multipliers of the equalities
  Eigen::VectorXd mu_in;      // multipliers of the inequalities (>= 0)
  std::vector<int> active;    // active inequality rows
  int iterations = 0;

  bool ok() const { return status == QpStatus::Optimal; }
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
  double max() const;
};

/// Dual active-set solver (Goldfarb-Idnani) followed by a KKT polish on the
/// final active set. A PSD Hessian is regularised by a tiny multiple of I.
QpResult solve_qp(const QpProblem& p, double tol = 1e-8);
KktResiduals kkt_residuals(const QpProblem& p, const QpResult& r);

/// Binary b: when 1, rows A x <= c must hold. `big_m` relaxes them when 0.
struct Indicator {
  int n = 0;  // interval
  int p = 0;  // polyhedron
  Eigen::MatrixXd A;
  Eigen::VectorXd c;
  Eigen::VectorXd big_m;
};

struct MiqpProblem {
  QpProblem base;
  std::vector<Indicator> indicators;    // binary id = position in this list
  std::vector<std::vector<int>> covers;  // each needs at least one binary set

  int binaries() const { return static_cast<int>(indicators.size()); }
  void validate() const;
};

enum class MiqpStatus { Optimal, Infeasible, Timeout };

struct MiqpSolution {
  MiqpStatus status = MiqpStatus::Infeasible;
  Eigen::VectorXd x;
  std::vector<int> assignment;    // per cover: position of the chosen binary
  std::vector<std::uint8_t> values;  // per binary
  double objective = 0.0;
  int nodes_explored = 0;
  bool has_incumbent = false;

  bool usable() const { return has_incumbent; }
};

struct MiqpOptions {
  int budget = 20000;
  double tol = 1e-8;
  double feas_tol = 1e-7;
  /// Curvature given to the relaxed binaries; the node bound subtracts it.
  double binary_reg = 1e-8;
  /// Nodes whose bound is within this gap of the incumbent are pruned.
  double rel_gap = 1e-7;
  double abs_gap = 1e-9;
};

/// Best-first branch and bound over big-M relaxations. `warm` gives a chosen
/// position per cover, solved first to seed the incumbent.
MiqpSolution solve_miqp(const MiqpProblem& p, const MiqpOptions& options = {},
                        const std::optional<std::vector<int>>& warm = std::nullopt);

/// Observer hook used by the tests: called with (node bound, fixed values)
/// for every explored node. Values are -1 (free), 0 or 1.
using NodeObserver = void (*)(void* ctx, double bound, const std::vector<signed char>& fixed);
MiqpSolution solve_miqp_observed(const MiqpProblem& p, const MiqpOptions& options,
                                 const std::optional<std::vector<int>>& warm, NodeObserver observer, void* ctx);

/// Solves with a fixed binary assignment (values per binary).
QpResult solve_fixed(const MiqpProblem& p, const std::vector<std::uint8_t>& values, double tol = 1e-8);

/// Text round-trip of an MIQP.
void dump_miqp(const MiqpProblem& p, std::ostream& out);
MiqpProblem load_miqp(std::istream& in);

}  // namespace faster
