#include "faster/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace faster {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Dual active-set method of Goldfarb and Idnani for
//   min 1/2 x'Gx + g'x  s.t.  ce_i'x = be_i,  ci_j'x <= bi_j.
// Normals are stored as columns. J = L^-T with G = LL'; R is the upper
// triangular factor of J' N for the active normals N.
class DualActiveSet {
 public:
  DualActiveSet(const MatrixXd& G, const VectorXd& g, const MatrixXd& CE, const VectorXd& be, const MatrixXd& CI,
                const VectorXd& bi)
      : G_(G), g_(g), CE_(CE), be_(be), CI_(CI), bi_(bi), n_(static_cast<int>(G.rows())),
        me_(static_cast<int>(CE.cols())), mi_(static_cast<int>(CI.cols())) {}

  bool solve(VectorXd& x, std::vector<int>& active, VectorXd& u_out, int& iters) {
    const int n = n_;
    Eigen::LLT<MatrixXd> llt(G_);
    if (llt.info() != Eigen::Success) return false;
    const MatrixXd L = llt.matrixL();
    J_ = L.transpose().triangularView<Eigen::Upper>().solve(MatrixXd::Identity(n, n));
    R_ = MatrixXd::Zero(n, n);
    R_norm_ = 1.0;
    iq_ = 0;
    A_.assign(static_cast<std::size_t>(n + 1), 0);
    u_ = VectorXd::Zero(n + 1);
    d_.resize(n);
    z_.resize(n);
    r_.resize(n + 1);

    x = -llt.solve(g_);
    iters = 0;

    // Equalities, written as ce'x - be = 0 (normal np = ce).
    for (int i = 0; i < me_; ++i) {
      const VectorXd np = CE_.col(i);
      computeDirections(np);
      const double resid = np.dot(x) - be_(i);
      const double zn = z_.dot(np);
      if (std::abs(zn) <= kEps * std::max(1.0, np.norm()) * 1e3 || z_.norm() <= 1e-12 * np.norm()) {
        if (std::abs(resid) <= 1e-9 * (1.0 + std::abs(be_(i)))) continue;  // dependent but consistent
        return false;
      }
      const double t2 = -resid / zn;
      x += t2 * z_;
      u_(iq_) = t2;
      for (int k = 0; k < iq_; ++k) u_(k) -= t2 * r_(k);
      A_[static_cast<std::size_t>(iq_)] = -i - 1;
      if (!addConstraint()) return false;
      ++me_active_;
    }
    const int p = iq_;  // number of active equalities

    // Inequalities as -ci'x + bi >= 0: normal np = -ci, s = bi - ci'x.
    std::vector<int> iai(static_cast<std::size_t>(mi_));
    std::vector<char> excl(static_cast<std::size_t>(mi_));
    VectorXd s(mi_);
    VectorXd x_old;
    VectorXd u_old(n + 1);
    std::vector<int> A_old(static_cast<std::size_t>(n + 1));
    int iq_old = 0;
    const int max_iter = 50 * (n + mi_ + 10);

    auto slack = [&](int i) { return bi_(i) - CI_.col(i).dot(x); };
    auto tol_of = [&](int i) { return 1e-11 * (1.0 + std::abs(bi_(i)) + CI_.col(i).norm() * x.norm()); };

    while (true) {  // step 1
      if (++iters > max_iter) return false;
      for (int i = 0; i < mi_; ++i) iai[static_cast<std::size_t>(i)] = i;
      for (int i = p; i < iq_; ++i) iai[static_cast<std::size_t>(A_[static_cast<std::size_t>(i)])] = -1;
      bool violated = false;
      for (int i = 0; i < mi_; ++i) {
        excl[static_cast<std::size_t>(i)] = 1;
        s(i) = slack(i);
        if (s(i) < -tol_of(i)) violated = true;
      }
      if (!violated) break;
      iq_old = iq_;
      for (int i = 0; i < iq_; ++i) {
        u_old(i) = u_(i);
        A_old[static_cast<std::size_t>(i)] = A_[static_cast<std::size_t>(i)];
      }
      x_old = x;

      bool restart = false;
      while (!restart) {  // step 2: pick the most violated constraint
        int ip = -1;
        double ss = 0.0;
        for (int i = 0; i < mi_; ++i) {
          const auto si = static_cast<std::size_t>(i);
          if (iai[si] == -1 || !excl[si]) continue;
          const double norm_s = s(i) / std::max(1e-300, CI_.col(i).norm());
          if (s(i) < -tol_of(i) && norm_s < ss) {
            ss = norm_s;
            ip = i;
          }
        }
        if (ip < 0) {
          finish(active, u_out, p);
          return true;
        }
        const VectorXd np = -CI_.col(ip);
        u_(iq_) = 0.0;
        A_[static_cast<std::size_t>(iq_)] = ip;

        while (true) {  // step 2a
          if (++iters > max_iter) return false;
          computeDirections(np);
          int l = -1;
          double t1 = kInf;
          for (int k = p; k < iq_; ++k)
            if (r_(k) > 0.0 && u_(k) / r_(k) < t1) {
              t1 = u_(k) / r_(k);
              l = A_[static_cast<std::size_t>(k)];
            }
          const double zn = z_.dot(np);
          const double t2 = (z_.norm() > 1e-12 * np.norm() && zn > 0) ? -s(ip) / zn : kInf;
          const double t = std::min(t1, t2);
          if (t >= kInf) return false;  // infeasible
          if (t2 >= kInf) {
            for (int k = 0; k < iq_; ++k) u_(k) -= t * r_(k);
            u_(iq_) += t;
            iai[static_cast<std::size_t>(l)] = l;
            deleteConstraint(p, l);
            continue;
          }
          x += t * z_;
          for (int k = 0; k < iq_; ++k) u_(k) -= t * r_(k);
          u_(iq_) += t;
          if (t == t2) {
            if (!addConstraint()) {
              excl[static_cast<std::size_t>(ip)] = 0;
              deleteConstraint(p, ip);
              for (int i = 0; i < mi_; ++i) iai[static_cast<std::size_t>(i)] = i;
              iq_ = iq_old;
              for (int i = 0; i < iq_; ++i) {
                A_[static_cast<std::size_t>(i)] = A_old[static_cast<std::size_t>(i)];
                u_(i) = u_old(i);
                if (i >= p) iai[static_cast<std::size_t>(A_[static_cast<std::size_t>(i)])] = -1;
              }
              x = x_old;
              rebuildFactor(p);
              break;  // back to step 2
            }
            iai[static_cast<std::size_t>(ip)] = -1;
            restart = true;
            break;
          }
          iai[static_cast<std::size_t>(l)] = l;
          deleteConstraint(p, l);
          s(ip) = slack(ip);
        }
      }
    }
    finish(active, u_out, p);
    return true;
  }

 private:
  void computeDirections(const VectorXd& np) {
    d_ = J_.transpose() * np;
    z_ = J_.rightCols(n_ - iq_) * d_.tail(n_ - iq_);
    if (iq_ > 0)
      r_.head(iq_) = R_.topLeftCorner(iq_, iq_).triangularView<Eigen::Upper>().solve(d_.head(iq_));
  }

  bool addConstraint() {
    for (int j = n_ - 1; j >= iq_ + 1; --j) {
      double cc = d_(j - 1), ss = d_(j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d_(j) = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d_(j - 1) = -h;
      } else {
        d_(j - 1) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j - 1), t2 = J_(k, j);
        J_(k, j - 1) = t1 * cc + t2 * ss;
        J_(k, j) = xny * (t1 + J_(k, j - 1)) - t2;
      }
    }
    ++iq_;
    for (int i = 0; i < iq_; ++i) R_(i, iq_ - 1) = d_(i);
    if (std::abs(d_(iq_ - 1)) <= kEps * R_norm_) return false;
    R_norm_ = std::max(R_norm_, std::abs(d_(iq_ - 1)));
    return true;
  }

  void deleteConstraint(int p, int l) {
    int qq = -1;
    for (int i = p; i < iq_; ++i)
      if (A_[static_cast<std::size_t>(i)] == l) {
        qq = i;
        break;
      }
    if (qq < 0) return;
    for (int i = qq; i < iq_ - 1; ++i) {
      A_[static_cast<std::size_t>(i)] = A_[static_cast<std::size_t>(i) + 1];
      u_(i) = u_(i + 1);
      R_.col(i) = R_.col(i + 1);
    }
    A_[static_cast<std::size_t>(iq_) - 1] = A_[static_cast<std::size_t>(iq_)];
    u_(iq_ - 1) = u_(iq_);
    A_[static_cast<std::size_t>(iq_)] = 0;
    u_(iq_) = 0.0;
    R_.col(iq_ - 1).setZero();
    --iq_;
    if (iq_ == 0) return;
    for (int j = qq; j < iq_; ++j) {
      double cc = R_(j, j), ss = R_(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R_(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R_(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < iq_; ++k) {
        const double t1 = R_(j, k), t2 = R_(j + 1, k);
        R_(j, k) = t1 * cc + t2 * ss;
        R_(j + 1, k) = xny * (t1 + R_(j, k)) - t2;
      }
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j), t2 = J_(k, j + 1);
        J_(k, j) = t1 * cc + t2 * ss;
        J_(k, j + 1) = xny * (J_(k, j) + t1) - t2;
      }
    }
  }

  // Recomputes J and R from scratch for the current active list.
  void rebuildFactor(int /*p*/) {
    Eigen::LLT<MatrixXd> llt(G_);
    const MatrixXd L = llt.matrixL();
    J_ = L.transpose().triangularView<Eigen::Upper>().solve(MatrixXd::Identity(n_, n_));
    R_.setZero();
    const int count = iq_;
    const std::vector<int> list(A_.begin(), A_.begin() + count);
    const VectorXd u_keep = u_.head(count);
    iq_ = 0;
    for (int i = 0; i < count; ++i) {
      const int a = list[static_cast<std::size_t>(i)];
      const VectorXd np = a < 0 ? VectorXd(CE_.col(-a - 1)) : VectorXd(-CI_.col(a));
      d_ = J_.transpose() * np;
      addConstraint();
      A_[static_cast<std::size_t>(i)] = a;
    }
    u_.head(count) = u_keep;
  }

  void finish(std::vector<int>& active, VectorXd& u_out, int p) {
    active.clear();
    u_out = VectorXd::Zero(mi_ + me_);
    for (int i = 0; i < iq_; ++i) {
      const int a = A_[static_cast<std::size_t>(i)];
      if (i >= p) {
        active.push_back(a);
        u_out(me_ + a) = u_(i);
      } else {
        u_out(-a - 1) = u_(i);
      }
    }
  }

  const MatrixXd& G_;
  const VectorXd& g_;
  const MatrixXd& CE_;
  const VectorXd& be_;
  const MatrixXd& CI_;
  const VectorXd& bi_;
  int n_, me_, mi_;
  int me_active_ = 0;
  MatrixXd J_, R_;
  double R_norm_ = 1.0;
  int iq_ = 0;
  std::vector<int> A_;
  VectorXd u_, d_, z_, r_;
};

// Solves the equality-constrained QP on the given active set exactly.
bool polish(const QpProblem& p, const std::vector<int>& active, VectorXd& x, VectorXd& lam, VectorXd& mu) {
  const int n = p.n();
  const int me = static_cast<int>(p.Aeq.rows());
  const int ma = static_cast<int>(active.size());
  MatrixXd K = MatrixXd::Zero(n + me + ma, n + me + ma);
  VectorXd rhs(n + me + ma);
  K.topLeftCorner(n, n) = p.H;
  rhs.head(n) = -p.g;
  for (int i = 0; i < me; ++i) {
    K.block(n + i, 0, 1, n) = p.Aeq.row(i);
    K.block(0, n + i, n, 1) = p.Aeq.row(i).transpose();
    rhs(n + i) = p.beq(i);
  }
  for (int k = 0; k < ma; ++k) {
    const int r = active[static_cast<std::size_t>(k)];
    K.block(n + me + k, 0, 1, n) = p.Ain.row(r);
    K.block(0, n + me + k, n, 1) = p.Ain.row(r).transpose();
    rhs(n + me + k) = p.bin(r);
  }
  Eigen::FullPivLU<MatrixXd> lu(K);
  if (lu.rank() < K.rows()) return false;
  const VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) return false;
  x = sol.head(n);
  lam = sol.segment(n, me);
  mu = VectorXd::Zero(p.Ain.rows());
  for (int k = 0; k < ma; ++k) mu(active[static_cast<std::size_t>(k)]) = sol(n + me + k);
  return true;
}

}  // namespace

void QpProblem::validate() const {
  const auto n = H.rows();
  if (H.cols() != n || g.size() != n) throw std::invalid_argument("qp: H/g shape mismatch");
  if (Aeq.rows() != beq.size() || (Aeq.rows() > 0 && Aeq.cols() != n))
    throw std::invalid_argument("qp: equality shape mismatch");
  if (Ain.rows() != bin.size() || (Ain.rows() > 0 && Ain.cols() != n))
    throw std::invalid_argument("qp: inequality shape mismatch");
  if (!(H - H.transpose()).isZero(1e-9 * std::max(1.0, H.cwiseAbs().maxCoeff())))
    throw std::invalid_argument("qp: H not symmetric");
}

double KktResiduals::max() const { return std::max({stationarity, primal, dual, complementarity}); }

KktResiduals kkt_residuals(const QpProblem& p, const QpResult& r) {
  KktResiduals k;
  const VectorXd& x = r.x;
  VectorXd grad = p.H * x + p.g;
  if (p.Aeq.rows() > 0) grad += p.Aeq.transpose() * r.lambda_eq;
  if (p.Ain.rows() > 0) grad += p.Ain.transpose() * r.mu_in;
  k.stationarity = grad.cwiseAbs().maxCoeff();
  if (p.Aeq.rows() > 0) k.primal = (p.Aeq * x - p.beq).cwiseAbs().maxCoeff();
  if (p.Ain.rows() > 0) {
    const VectorXd s = p.Ain * x - p.bin;
    k.primal = std::max(k.primal, std::max(0.0, s.maxCoeff()));
    k.dual = std::max(0.0, -r.mu_in.minCoeff());
    k.complementarity = r.mu_in.cwiseProduct(s).cwiseAbs().maxCoeff();
  }
  return k;
}

QpResult solve_qp(const QpProblem& p, double tol) {
  p.validate();
  QpResult res;
  const int n = p.n();
  MatrixXd H = p.H;
  Eigen::LLT<MatrixXd> probe(H);
  if (probe.info() != Eigen::Success) {
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    for (double reg = 1e-12; reg < 1e-3; reg *= 10) {
      H = p.H + reg * scale * MatrixXd::Identity(n, n);
      if (Eigen::LLT<MatrixXd>(H).info() == Eigen::Success) break;
    }
  }
  const MatrixXd CE = p.Aeq.rows() > 0 ? MatrixXd(p.Aeq.transpose()) : MatrixXd(n, 0);
  const MatrixXd CI = p.Ain.rows() > 0 ? MatrixXd(p.Ain.transpose()) : MatrixXd(n, 0);
  const VectorXd be = p.beq.size() > 0 ? p.beq : VectorXd(0);
  const VectorXd bi = p.bin.size() > 0 ? p.bin : VectorXd(0);
  DualActiveSet solver(H, p.g, CE, be, CI, bi);
  VectorXd x, u;
  std::vector<int> active;
  if (!solver.solve(x, active, u, res.iterations)) {
    res.status = QpStatus::Infeasible;
    return res;
  }
  const int me = static_cast<int>(p.Aeq.rows());
  res.x = x;
  res.lambda_eq = -u.head(me);
  res.mu_in = u.tail(p.Ain.rows());
  res.active = active;
  std::sort(res.active.begin(), res.active.end());

  // Polish on the final active set; keep it if it is at least as good.
  VectorXd px, plam, pmu;
  if (polish(p, res.active, px, plam, pmu)) {
    QpResult cand = res;
    cand.x = px;
    cand.lambda_eq = plam;
    cand.mu_in = pmu;
    const KktResiduals before = kkt_residuals(p, res), after = kkt_residuals(p, cand);
    if (after.max() <= before.max()) res = cand;
  }
  res.objective = p.objective(res.x);
  res.status = QpStatus::Optimal;
  const KktResiduals k = kkt_residuals(p, res);
  if (k.primal > std::max(tol, 1e-6) * (1.0 + res.x.cwiseAbs().maxCoeff())) res.status = QpStatus::Infeasible;
  return res;
}

}  // namespace faster
