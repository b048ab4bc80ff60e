#include "faster/solver.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace faster {

namespace {

constexpr const char* kMagic = "%%FASTER-MIQP";

void writeMatrix(std::ostream& out, const char* name, const Eigen::MatrixXd& m) {
  long nnz = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) nnz += m(i, j) != 0.0;
  out << name << ' ' << m.rows() << ' ' << m.cols() << ' ' << nnz << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) out << i << ' ' << j << ' ' << m(i, j) << '\n';
}

void writeVector(std::ostream& out, const char* name, const Eigen::VectorXd& v) {
  out << name << ' ' << v.size() << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) out << v(i) << (i + 1 == v.size() ? "\n" : " ");
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void expect(const std::string& word) {
    std::string w;
    if (!(in_ >> w) || w != word) throw std::runtime_error("miqp file: expected '" + word + "', got '" + w + "'");
  }
  long integer() {
    long v;
    if (!(in_ >> v)) throw std::runtime_error("miqp file: expected integer");
    return v;
  }
  double real() {
    std::string tok;
    if (!(in_ >> tok)) throw std::runtime_error("miqp file: expected number");
    return std::stod(tok);
  }
  Eigen::MatrixXd matrix(const std::string& name) {
    expect(name);
    const long rows = integer(), cols = integer(), nnz = integer();
    if (rows < 0 || cols < 0 || nnz < 0) throw std::runtime_error("miqp file: negative size for " + name);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
    for (long k = 0; k < nnz; ++k) {
      const long i = integer(), j = integer();
      if (i < 0 || i >= rows || j < 0 || j >= cols) throw std::runtime_error("miqp file: index out of range in " + name);
      m(i, j) = real();
    }
    return m;
  }
  Eigen::VectorXd vector(const std::string& name) {
    expect(name);
    const long n = integer();
    if (n < 0) throw std::runtime_error("miqp file: negative size for " + name);
    Eigen::VectorXd v(n);
    for (long i = 0; i < n; ++i) v(i) = real();
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace

void dump_miqp(const MiqpProblem& p, std::ostream& out) {
  std::ostringstream s;
  s.precision(17);
  s << kMagic << " 1\n";
  writeMatrix(s, "H", p.base.H);
  writeVector(s, "g", p.base.g);
  writeMatrix(s, "Aeq", p.base.Aeq);
  writeVector(s, "beq", p.base.beq);
  writeMatrix(s, "Ain", p.base.Ain);
  writeVector(s, "bin", p.base.bin);
  s << "indicators " << p.indicators.size() << '\n';
  for (const auto& ind : p.indicators) {
    s << "indicator " << ind.n << ' ' << ind.p << '\n';
    writeMatrix(s, "A", ind.A);
    writeVector(s, "c", ind.c);
    writeVector(s, "M", ind.big_m);
  }
  s << "covers " << p.covers.size() << '\n';
  for (const auto& cover : p.covers) {
    s << cover.size();
    for (int id : cover) s << ' ' << id;
    s << '\n';
  }
  out << s.str();
}

MiqpProblem load_miqp(std::istream& in) {
  Reader r(in);
  r.expect(kMagic);
  if (r.integer() != 1) throw std::runtime_error("miqp file: unsupported version");
  MiqpProblem p;
  p.base.H = r.matrix("H");
  p.base.g = r.vector("g");
  p.base.Aeq = r.matrix("Aeq");
  p.base.beq = r.vector("beq");
  p.base.Ain = r.matrix("Ain");
  p.base.bin = r.vector("bin");
  r.expect("indicators");
  const long count = r.integer();
  for (long k = 0; k < count; ++k) {
    r.expect("indicator");
    Indicator ind;
    ind.n = static_cast<int>(r.integer());
    ind.p = static_cast<int>(r.integer());
    ind.A = r.matrix("A");
    ind.c = r.vector("c");
    ind.big_m = r.vector("M");
    p.indicators.push_back(std::move(ind));
  }
  r.expect("covers");
  const long covers = r.integer();
  for (long k = 0; k < covers; ++k) {
    const long size = r.integer();
    std::vector<int> cover;
    for (long i = 0; i < size; ++i) cover.push_back(static_cast<int>(r.integer()));
    p.covers.push_back(std::move(cover));
  }
  p.validate();
  return p;
}

}  // namespace faster
