#include "srtube/geometry_core.hpp"

#include <cmath>
#include <vector>

namespace srtube {

namespace {

constexpr double kBuiltinChart = 1e6;

double fd_step(const Vec& q) { return 1e-5 * (1.0 + q.norm()); }

// 4th-order central difference of a vector-valued map along coordinate b.
template <class F>
Vec central4(const Vec& q, int b, double h, F&& f) {
  Vec x = q;
  x[b] = q[b] + h;
  Vec f1 = f(x);
  x[b] = q[b] - h;
  Vec fm1 = f(x);
  x[b] = q[b] + 2 * h;
  Vec f2 = f(x);
  x[b] = q[b] - 2 * h;
  Vec fm2 = f(x);
  return (8.0 * (f1 - fm1) - (f2 - fm2)) / (12.0 * h);
}

class EuclideanModel final : public FrameModel {
 public:
  explicit EuclideanModel(int n) : n_(n) {}
  int dim() const override { return n_; }
  int count() const override { return n_; }
  void fields(const Vec&, Mat& X) const override { X.setIdentity(n_, n_); }
  void jacobian(const Vec&, int, Mat& J) const override { J.setZero(n_, n_); }
  void hessian_contracted(const Vec&, const Vec&, int, Mat& H) const override {
    H.setZero(n_, n_);
  }
  Vec log_density_gradient(const Vec&) const override { return Vec::Zero(n_); }
  bool analytic() const override { return true; }

 private:
  int n_;
};

// Left-invariant frame on H_{2d+1}, coordinates (x_1..x_d, y_1..y_d, z).
class HeisenbergModel final : public FrameModel {
 public:
  explicit HeisenbergModel(int d) : d_(d), n_(2 * d + 1) {}
  int dim() const override { return n_; }
  int count() const override { return 2 * d_; }
  void fields(const Vec& q, Mat& X) const override {
    X.setZero(n_, 2 * d_);
    for (int i = 0; i < d_; ++i) {
      X(i, i) = 1.0;
      X(2 * d_, i) = -0.5 * q[d_ + i];
      X(d_ + i, d_ + i) = 1.0;
      X(2 * d_, d_ + i) = 0.5 * q[i];
    }
  }
  void jacobian(const Vec&, int i, Mat& J) const override {
    J.setZero(n_, n_);
    if (i < d_) {
      J(2 * d_, d_ + i) = -0.5;
    } else {
      J(2 * d_, i - d_) = 0.5;
    }
  }
  void hessian_contracted(const Vec&, const Vec&, int, Mat& H) const override {
    H.setZero(n_, n_);
  }
  Vec log_density_gradient(const Vec&) const override { return Vec::Zero(n_); }
  bool has_reeb() const override { return true; }
  Vec reeb(const Vec&) const override {
    Vec r = Vec::Zero(n_);
    r[2 * d_] = 1.0;
    return r;
  }
  bool analytic() const override { return true; }

 private:
  int d_, n_;
};

void check_finite(const PhasePoint& lam, int n) {
  if (lam.q.size() != n || lam.p.size() != n) {
    throw InvalidInput("phase point has wrong dimension");
  }
  if (!lam.q.allFinite() || !lam.p.allFinite()) {
    throw InvalidInput("phase point has non-finite entries");
  }
}

// Scratch space for repeated right-hand side evaluations of one trajectory.
struct HamWork {
  explicit HamWork(const SRStructure& s)
      : n(s.dim()), N(s.fields_count()), X(n, N), q(n), p(n),
        J(N, Mat(n, n)), H(n, n), w(n, N), h(N), A(2 * n, 2 * n) {}

  // Fills X, J, w, h for the state (q, p).
  void load(const SRStructure& s, const double* y) {
    for (int a = 0; a < n; ++a) {
      q[a] = y[a];
      p[a] = y[n + a];
    }
    s.model().fields(q, X);
    h.noalias() = X.transpose() * p;
    for (int i = 0; i < N; ++i) {
      s.model().jacobian(q, i, J[i]);
      w.col(i).noalias() = J[i].transpose() * p;
    }
  }

  void velocity(double* dy) const {
    for (int a = 0; a < n; ++a) {
      double qd = 0.0, pd = 0.0;
      for (int i = 0; i < N; ++i) {
        qd += h[i] * X(a, i);
        pd -= h[i] * w(a, i);
      }
      dy[a] = qd;
      dy[n + a] = pd;
    }
  }

  void jacobian(const SRStructure& s) {
    A.setZero();
    auto Aqq = A.topLeftCorner(n, n);
    auto Aqp = A.topRightCorner(n, n);
    auto Apq = A.bottomLeftCorner(n, n);
    auto App = A.bottomRightCorner(n, n);
    Aqp.noalias() = X * X.transpose();
    Aqq.noalias() = X * w.transpose();
    Apq.noalias() = -w * w.transpose();
    App.noalias() = -w * X.transpose();
    for (int i = 0; i < N; ++i) {
      if (h[i] == 0.0) continue;
      Aqq += h[i] * J[i];
      App -= h[i] * J[i].transpose();
      s.model().hessian_contracted(q, p, i, H);
      Apq -= h[i] * H;
    }
  }

  int n, N;
  Mat X;
  Vec q, p;
  std::vector<Mat> J;
  Mat H;
  Mat w;
  Vec h;
  Mat A;
};

}  // namespace

void FrameModel::jacobian(const Vec& q, int i, Mat& J) const {
  const int n = dim();
  J.resize(n, n);
  const double h = fd_step(q);
  Mat X(n, count());
  for (int b = 0; b < n; ++b) {
    J.col(b) = central4(q, b, h, [&](const Vec& x) {
      fields(x, X);
      return Vec(X.col(i));
    });
  }
}

void FrameModel::hessian_contracted(const Vec& q, const Vec& p, int i, Mat& H) const {
  const int n = dim();
  H.resize(n, n);
  const double h = fd_step(q);
  Mat J(n, n);
  for (int c = 0; c < n; ++c) {
    H.col(c) = central4(q, c, h, [&](const Vec& x) {
      jacobian(x, i, J);
      return Vec(J.transpose() * p);
    });
  }
  H = 0.5 * (H + H.transpose()).eval();
}

Vec FrameModel::log_density_gradient(const Vec& q) const {
  const int n = dim();
  Vec g(n);
  const double h = fd_step(q);
  for (int b = 0; b < n; ++b) {
    g[b] = central4(q, b, h, [&](const Vec& x) {
      return Vec::Constant(1, std::log(density(x)));
    })[0];
  }
  return g;
}

Vec FrameModel::reeb(const Vec&) const {
  throw InvalidInput("structure has no Reeb vector field");
}

SRStructure::SRStructure(std::shared_ptr<const FrameModel> model, std::string name, Vec box_lo,
                         Vec box_hi)
    : model_(std::move(model)), name_(std::move(name)), lo_(std::move(box_lo)),
      hi_(std::move(box_hi)) {
  if (!model_) throw InvalidInput("null frame model");
  n_ = model_->dim();
  if (n_ <= 0 || model_->count() <= 0) throw InvalidInput("structure dimensions must be positive");
  if (lo_.size() != n_ || hi_.size() != n_ || !(lo_.array() < hi_.array()).all()) {
    throw InvalidInput("chart box must have lo < hi in every coordinate");
  }
}

SRStructure SRStructure::euclidean(int n) {
  if (n < 1) throw InvalidInput("euclidean dimension must be >= 1");
  return SRStructure(std::make_shared<EuclideanModel>(n), "euclidean",
                     Vec::Constant(n, -kBuiltinChart), Vec::Constant(n, kBuiltinChart));
}

SRStructure SRStructure::heisenberg(int d) {
  if (d < 1) throw InvalidInput("heisenberg parameter d must be >= 1");
  const int n = 2 * d + 1;
  SRStructure s(std::make_shared<HeisenbergModel>(d), "heisenberg",
                Vec::Constant(n, -kBuiltinChart), Vec::Constant(n, kBuiltinChart));
  s.heis_d_ = d;
  return s;
}

Vec SRStructure::field(const Vec& q, int i) const {
  if (i < 0 || i >= fields_count()) throw InvalidInput("field index out of range");
  return fields(q).col(i);
}

Mat SRStructure::fields(const Vec& q) const {
  if (q.size() != n_ || !q.allFinite()) throw InvalidInput("bad point for field evaluation");
  Mat X(n_, fields_count());
  model_->fields(q, X);
  return X;
}

Mat SRStructure::field_jacobian(const Vec& q, int i) const {
  if (i < 0 || i >= fields_count()) throw InvalidInput("field index out of range");
  Mat J(n_, n_);
  model_->jacobian(q, i, J);
  return J;
}

double SRStructure::measure_density(const Vec& q) const { return model_->density(q); }

Vec SRStructure::reeb(const Vec& q) const { return model_->reeb(q); }

bool SRStructure::in_chart(const double* q) const {
  for (int a = 0; a < n_; ++a) {
    if (!(q[a] >= lo_[a] && q[a] <= hi_[a])) return false;
  }
  return true;
}

double hamiltonian(const SRStructure& s, const PhasePoint& lam) {
  check_finite(lam, s.dim());
  Vec h = s.fields(lam.q).transpose() * lam.p;
  return 0.5 * h.squaredNorm();
}

Vec hamiltonian_vector_field(const SRStructure& s, const PhasePoint& lam) {
  check_finite(lam, s.dim());
  HamWork w(s);
  Vec y(2 * s.dim());
  y << lam.q, lam.p;
  w.load(s, y.data());
  Vec dy(2 * s.dim());
  w.velocity(dy.data());
  return dy;
}

Mat hamiltonian_jacobian(const SRStructure& s, const PhasePoint& lam) {
  check_finite(lam, s.dim());
  HamWork w(s);
  Vec y(2 * s.dim());
  y << lam.q, lam.p;
  w.load(s, y.data());
  w.jacobian(s);
  return w.A;
}

PhasePoint flow(const SRStructure& s, const PhasePoint& lam0, double t, const ODESettings& o) {
  check_finite(lam0, s.dim());
  const int n = s.dim();
  if (!s.in_chart(lam0.q.data())) throw InvalidInput("initial point outside the chart box");
  HamWork w(s);
  Vec y(2 * n);
  y << lam0.q, lam0.p;
  integrate(
      [&](const double* yy, double* dy) {
        w.load(s, yy);
        w.velocity(dy);
      },
      2 * n, y.data(), t, o, [&](const double* yy) { return s.in_chart(yy); });
  return {y.head(n), y.tail(n)};
}

FlowTangents flow_with_tangents(const SRStructure& s, const PhasePoint& lam0, const Mat& xi0,
                                double t, const ODESettings& o) {
  check_finite(lam0, s.dim());
  const int n = s.dim();
  const int k = static_cast<int>(xi0.cols());
  if (xi0.rows() != 2 * n) throw InvalidInput("tangent vectors must have length 2n");
  if (!s.in_chart(lam0.q.data())) throw InvalidInput("initial point outside the chart box");
  const int dim = 2 * n * (1 + k);
  Vec y(dim);
  y.head(n) = lam0.q;
  y.segment(n, n) = lam0.p;
  for (int c = 0; c < k; ++c) y.segment(2 * n * (1 + c), 2 * n) = xi0.col(c);

  HamWork w(s);
  FlowTangents out;
  integrate(
      [&](const double* yy, double* dy) {
        w.load(s, yy);
        w.velocity(dy);
        w.jacobian(s);
        Eigen::Map<const Mat> xi(yy + 2 * n, 2 * n, k);
        Eigen::Map<Mat> dxi(dy + 2 * n, 2 * n, k);
        dxi.noalias() = w.A * xi;
      },
      dim, y.data(), t, o, [&](const double* yy) { return s.in_chart(yy); }, &out.stats);
  out.end = {y.head(n), y.segment(n, n)};
  out.tangents = Eigen::Map<const Mat>(y.data() + 2 * n, 2 * n, k);
  return out;
}

Vec linearized_flow(const SRStructure& s, const PhasePoint& lam0, const Vec& xi0, double t,
                    const ODESettings& o) {
  Mat m = xi0;
  return flow_with_tangents(s, lam0, m, t, o).tangents.col(0);
}

Vec horizontal_gradient_components(const SRStructure& s, const Vec& q, const Vec& dphi) {
  if (dphi.size() != s.dim() || !dphi.allFinite()) {
    throw InvalidInput("differential has wrong size or non-finite entries");
  }
  return s.fields(q).transpose() * dphi;
}

}  // namespace srtube
