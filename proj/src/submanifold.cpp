#include "srtube/submanifold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "srtube/numdiff.hpp"

namespace srtube {

using std::numbers::pi;

EmbeddedPatch::EmbeddedPatch(int ambient_dim, Vec lo, Vec hi, EmbedFn embed,
                             JacobianFn jacobian, std::string name)
    : n_(ambient_dim), lo_(std::move(lo)), hi_(std::move(hi)), embed_(std::move(embed)),
      jacobian_(std::move(jacobian)), name_(std::move(name)) {
  if (n_ < 1) throw InvalidInput("patch ambient dimension must be positive");
  if (lo_.size() != hi_.size() || lo_.size() >= n_) {
    throw InvalidInput("patch parameter box must have dimension below the ambient dimension");
  }
  if (!(lo_.array() < hi_.array()).all()) throw InvalidInput("patch box needs lo < hi");
  if (!embed_) throw InvalidInput("patch needs an embedding");
  periodic_.assign(lo_.size(), false);
}

Vec EmbeddedPatch::embed(const Vec& x) const {
  if (x.size() != param_dim()) throw InvalidInput("parameter has wrong dimension");
  Vec q = embed_(x);
  if (q.size() != n_ || !q.allFinite()) throw InvalidInput("embedding returned a bad point");
  return q;
}

Mat EmbeddedPatch::tangent(const Vec& x) const {
  const int k = param_dim();
  if (jacobian_) {
    Mat T = jacobian_(x);
    if (T.rows() != n_ || T.cols() != k) throw InvalidInput("patch jacobian has wrong shape");
    return T;
  }
  Mat T(n_, k);
  for (int j = 0; j < k; ++j) {
    const double h = 1e-5 * (hi_[j] - lo_[j]);
    T.col(j) = central_diff4(
        [&](double t) {
          Vec y = x;
          y[j] += t;
          return embed(y);
        },
        h);
  }
  return T;
}

void EmbeddedPatch::set_periodic(int j, bool periodic) { periodic_.at(j) = periodic; }

Vec EmbeddedPatch::co_orientation(const Vec& x) const {
  if (!co_orientation_) throw InvalidInput("patch has no co-orientation");
  return co_orientation_(x);
}

void EmbeddedPatch::set_distance(DistanceFn d, BoundsFn bounds) {
  distance_ = std::move(d);
  bounds_ = std::move(bounds);
}

double EmbeddedPatch::distance(const Vec& q) const {
  if (!distance_) throw InvalidInput("patch has no closed-form distance");
  return distance_(q);
}

std::pair<Vec, Vec> EmbeddedPatch::distance_bounds(double r) const {
  if (!bounds_) throw InvalidInput("patch has no bounding box for its tube");
  return bounds_(r);
}

Vec EmbeddedPatch::wrap(const Vec& x) const {
  Vec y = x;
  for (int j = 0; j < param_dim(); ++j) {
    if (!periodic_[j]) continue;
    const double L = hi_[j] - lo_[j];
    y[j] = lo_[j] + (y[j] - lo_[j]) - L * std::floor((y[j] - lo_[j]) / L);
  }
  return y;
}

bool EmbeddedPatch::in_extended_box(const Vec& x) const {
  for (int j = 0; j < param_dim(); ++j) {
    if (periodic_[j]) continue;
    const double e = extension_ * (hi_[j] - lo_[j]);
    if (x[j] < lo_[j] - e || x[j] > hi_[j] + e) return false;
  }
  return true;
}

namespace presets {

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

EmbeddedPatch circle(double R) {
  if (!(R > 0)) throw InvalidInput("circle radius must be positive");
  EmbeddedPatch p(
      3, v1(0.0), v1(2 * pi),
      [R](const Vec& x) {
        Vec q(3);
        q << R * std::cos(x[0]), R * std::sin(x[0]), 0.0;
        return q;
      },
      [R](const Vec& x) {
        Mat T(3, 1);
        T << -R * std::sin(x[0]), R * std::cos(x[0]), 0.0;
        return T;
      },
      "circle");
  p.set_periodic(0);
  p.set_distance(
      [R](const Vec& q) { return std::hypot(std::hypot(q[0], q[1]) - R, q[2]); },
      [R](double r) {
        Vec lo(3), hi(3);
        lo << -R - r, -R - r, -r;
        hi << R + r, R + r, r;
        return std::make_pair(lo, hi);
      });
  return p;
}

EmbeddedPatch sphere(double R) {
  if (!(R > 0)) throw InvalidInput("sphere radius must be positive");
  EmbeddedPatch p(
      3, v2(0.0, 0.0), v2(pi, 2 * pi),
      [R](const Vec& x) {
        Vec q(3);
        q << R * std::sin(x[0]) * std::cos(x[1]), R * std::sin(x[0]) * std::sin(x[1]),
            R * std::cos(x[0]);
        return q;
      },
      [R](const Vec& x) {
        const double st = std::sin(x[0]), ct = std::cos(x[0]);
        const double sp = std::sin(x[1]), cp = std::cos(x[1]);
        Mat T(3, 2);
        T << R * ct * cp, -R * st * sp, R * ct * sp, R * st * cp, -R * st, 0.0;
        return T;
      },
      "sphere");
  p.set_periodic(1);
  p.set_co_orientation([](const Vec& x) {
    Vec c(3);
    c << std::sin(x[0]) * std::cos(x[1]), std::sin(x[0]) * std::sin(x[1]), std::cos(x[0]);
    return c;
  });
  p.set_distance([R](const Vec& q) { return q.norm() - R; },
                 [R](double r) {
                   return std::make_pair(Vec(Vec::Constant(3, -R - r)),
                                         Vec(Vec::Constant(3, R + r)));
                 });
  p.set_extension(0.0);
  return p;
}

EmbeddedPatch segment_z(int n, double L) {
  if (!(L > 0) || n < 2) throw InvalidInput("segment needs L > 0 and n >= 2");
  EmbeddedPatch p(
      n, v1(0.0), v1(L),
      [n](const Vec& x) {
        Vec q = Vec::Zero(n);
        q[n - 1] = x[0];
        return q;
      },
      [n](const Vec&) {
        Mat T = Mat::Zero(n, 1);
        T(n - 1, 0) = 1.0;
        return T;
      },
      "segment_z");
  // Distance to the axis; exact for both the Euclidean and the Heisenberg
  // structures at heights inside the segment.
  p.set_distance([n](const Vec& q) { return q.head(n - 1).norm(); }, {});
  return p;
}

EmbeddedPatch line_angle(int d, double alpha, double L) {
  if (!(L > 0) || d < 1) throw InvalidInput("line needs L > 0 and d >= 1");
  const int n = 2 * d + 1;
  Vec dir = Vec::Zero(n);
  dir[0] = std::cos(alpha);
  dir[n - 1] = std::sin(alpha);
  return EmbeddedPatch(
      n, v1(0.0), v1(L), [dir](const Vec& x) { return Vec(x[0] * dir); },
      [dir](const Vec&) { return Mat(dir); }, "line_angle");
}

EmbeddedPatch helix(int d, double rho, double omega, double slope, double L) {
  if (!(L > 0) || d < 1 || !(rho > 0)) throw InvalidInput("helix needs L > 0, rho > 0, d >= 1");
  const int n = 2 * d + 1;
  return EmbeddedPatch(
      n, v1(0.0), v1(L),
      [=](const Vec& x) {
        Vec q = Vec::Zero(n);
        q[0] = rho * std::cos(omega * x[0]);
        q[d] = rho * std::sin(omega * x[0]);
        q[n - 1] = slope * x[0];
        return q;
      },
      [=](const Vec& x) {
        Mat T = Mat::Zero(n, 1);
        T(0, 0) = -rho * omega * std::sin(omega * x[0]);
        T(d, 0) = rho * omega * std::cos(omega * x[0]);
        T(n - 1, 0) = slope;
        return T;
      },
      "helix");
}

namespace {

// Value and gradient of the graded polynomial c00 + c10 x + c01 y + ...
void poly2(const std::vector<double>& c, double x, double y, double& h, double& hx,
           double& hy) {
  h = hx = hy = 0.0;
  size_t k = 0;
  for (int deg = 0; k < c.size(); ++deg) {
    for (int j = 0; j <= deg && k < c.size(); ++j, ++k) {
      const int i = deg - j;
      h += c[k] * std::pow(x, i) * std::pow(y, j);
      if (i > 0) hx += c[k] * i * std::pow(x, i - 1) * std::pow(y, j);
      if (j > 0) hy += c[k] * j * std::pow(x, i) * std::pow(y, j - 1);
    }
  }
}

}  // namespace

EmbeddedPatch graph2d(const std::vector<double>& coeffs, double a) {
  if (!(a > 0)) throw InvalidInput("graph half-width must be positive");
  EmbeddedPatch p(
      3, v2(-a, -a), v2(a, a),
      [coeffs](const Vec& x) {
        double h, hx, hy;
        poly2(coeffs, x[0], x[1], h, hx, hy);
        Vec q(3);
        q << x[0], x[1], h;
        return q;
      },
      [coeffs](const Vec& x) {
        double h, hx, hy;
        poly2(coeffs, x[0], x[1], h, hx, hy);
        Mat T(3, 2);
        T << 1.0, 0.0, 0.0, 1.0, hx, hy;
        return T;
      },
      "graph2d");
  p.set_co_orientation([coeffs](const Vec& x) {
    double h, hx, hy;
    poly2(coeffs, x[0], x[1], h, hx, hy);
    Vec c(3);
    c << -hx, -hy, 1.0;
    return c;
  });
  return p;
}

EmbeddedPatch vertical_plane(double s) {
  if (!(s > 0)) throw InvalidInput("plane side must be positive");
  EmbeddedPatch p(
      3, v2(0.0, 0.0), v2(s, s),
      [](const Vec& x) {
        Vec q(3);
        q << x[0], 0.0, x[1];
        return q;
      },
      [](const Vec&) {
        Mat T(3, 2);
        T << 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
        return T;
      },
      "vertical_plane");
  p.set_co_orientation([](const Vec&) {
    Vec c(3);
    c << 0.0, 1.0, 0.0;
    return c;
  });
  return p;
}

EmbeddedPatch point(const Vec& where) {
  const int n = static_cast<int>(where.size());
  EmbeddedPatch p(
      n, Vec(0), Vec(0), [where](const Vec&) { return where; },
      [n](const Vec&) { return Mat(n, 0); }, "point");
  p.set_distance([where](const Vec& q) { return (q - where).norm(); },
                 [where](double r) {
                   return std::make_pair(Vec(where.array() - r), Vec(where.array() + r));
                 });
  return p;
}

}  // namespace presets

NonCharacteristic non_characteristic_check(const SRStructure& s, const EmbeddedPatch& patch,
                                           const Vec& x) {
  const Vec q = patch.embed(x);
  const Mat X = s.fields(q);
  const Mat T = patch.tangent(x);
  const int n = s.dim();
  Mat S(n, X.cols() + T.cols());
  S << X, T;
  if (S.cols() < n) return {false, 0.0};
  Eigen::JacobiSVD<Mat> svd(S);
  const double margin = svd.singularValues()[n - 1];
  return {margin >= kCharacteristicTol, margin};
}

AnnihilatorFrame::AnnihilatorFrame(const SRStructure& s, const EmbeddedPatch& patch, int grid)
    : s_(s), patch_(patch), m_(patch.codim()) {
  if (patch.ambient_dim() != s.dim()) {
    throw InvalidInput("patch and structure have different dimensions");
  }
  const int k = patch.param_dim();
  grid_ = grid > 0 ? grid : (k <= 1 ? 33 : (k == 2 ? 17 : 7));
  if (k == 0) grid_ = 1;
  int total = 1;
  for (int j = 0; j < k; ++j) total *= grid_;

  // Serpentine sweep: consecutive nodes are grid neighbours.
  nodes_.resize(total);
  refs_.resize(total);
  std::vector<int> order(total);
  const Vec size = patch.box_size();
  for (int t = 0; t < total; ++t) {
    std::vector<int> digit(k);
    int rest = t;
    for (int j = k - 1; j >= 0; --j) {
      digit[j] = rest % grid_;
      rest /= grid_;
    }
    int parity = 0;
    for (int j = 0; j < k; ++j) {
      if (parity % 2 == 1) digit[j] = grid_ - 1 - digit[j];
      parity += digit[j];
    }
    int flat = 0;
    Vec x(k);
    for (int j = 0; j < k; ++j) {
      flat = flat * grid_ + digit[j];
      x[j] = patch.lo()[j] + (digit[j] + 0.5) / grid_ * size[j];
    }
    order[t] = flat;
    nodes_[flat] = x;
  }
  const Mat* prev = nullptr;
  for (int t = 0; t < total; ++t) {
    const int flat = order[t];
    Mat nu = raw(nodes_[flat]);
    if (prev) nu = align(nu, *prev, patch.embed(nodes_[flat]));
    refs_[flat] = nu;
    prev = &refs_[flat];
  }
}

Mat AnnihilatorFrame::raw(const Vec& x) const {
  const int n = s_.dim();
  const int k = patch_.param_dim();
  const NonCharacteristic nc = non_characteristic_check(s_, patch_, x);
  if (!nc.ok) {
    throw CharacteristicPoint("characteristic point on the patch (margin " +
                              std::to_string(nc.margin) + ")");
  }
  Mat K;
  if (k == 0) {
    K = Mat::Identity(n, n);
  } else {
    const Mat T = patch_.tangent(x);
    Eigen::JacobiSVD<Mat> svd(T.transpose(), Eigen::ComputeFullV);
    K = svd.matrixV().rightCols(n - k);
  }
  const Mat X = s_.fields(patch_.embed(x));
  const Mat G = K.transpose() * X * X.transpose() * K;
  Eigen::LLT<Mat> llt(G);
  if (llt.info() != Eigen::Success) throw CharacteristicPoint("Hamiltonian Gram matrix singular");
  Mat nu = llt.matrixL().solve(K.transpose());
  if (m_ == 1 && patch_.has_co_orientation()) {
    if (nu.row(0).dot(patch_.co_orientation(x)) < 0.0) nu = -nu;
  }
  return nu;
}

Mat AnnihilatorFrame::align(const Mat& nu, const Mat& reference, const Vec& q) const {
  if (m_ == 1 && patch_.has_co_orientation()) return nu;
  const Mat X = s_.fields(q);
  const Mat C = nu * X * X.transpose() * reference.transpose();
  Eigen::JacobiSVD<Mat> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat Q = svd.matrixV() * svd.matrixU().transpose();
  return Q * nu;
}

int AnnihilatorFrame::nearest_node(const Vec& x) const {
  const int k = patch_.param_dim();
  int flat = 0;
  for (int j = 0; j < k; ++j) {
    const double t = (x[j] - patch_.lo()[j]) / (patch_.hi()[j] - patch_.lo()[j]);
    const int i = std::clamp(static_cast<int>(std::floor(t * grid_)), 0, grid_ - 1);
    flat = flat * grid_ + i;
  }
  return flat;
}

const Mat& AnnihilatorFrame::reference_near(const Vec& x) const {
  return refs_[nearest_node(patch_.wrap(x))];
}

Mat AnnihilatorFrame::sections_aligned(const Vec& x, const Mat& reference) const {
  return align(raw(x), reference, patch_.embed(x));
}

Mat AnnihilatorFrame::sections(const Vec& x) const {
  return sections_aligned(x, reference_near(x));
}

std::vector<Mat> AnnihilatorFrame::section_derivatives_aligned(const Vec& x,
                                                               const Mat& reference) const {
  const int k = patch_.param_dim();
  std::vector<Mat> out(k);
  for (int j = 0; j < k; ++j) {
    const double h = 1e-4 * (patch_.hi()[j] - patch_.lo()[j]);
    out[j] = central_diff4(
        [&](double t) {
          Vec y = x;
          y[j] += t;
          return sections_aligned(y, reference);
        },
        h);
  }
  return out;
}

std::vector<Mat> AnnihilatorFrame::section_derivatives(const Vec& x) const {
  return section_derivatives_aligned(x, reference_near(x));
}

Mat AnnihilatorFrame::gram(const Vec& x) const {
  const Mat nu = sections(x);
  const Mat X = s_.fields(patch_.embed(x));
  return nu * X * X.transpose() * nu.transpose();
}

double reeb_angle(const SRStructure& s, const EmbeddedPatch& patch, const Vec& x) {
  if (!s.has_reeb()) throw InvalidInput("structure has no Reeb vector field");
  const int n = s.dim();
  if (s.fields_count() + 1 != n) {
    throw InvalidInput("Reeb angle needs a frame completed to a basis by the Reeb field");
  }
  const Vec q = patch.embed(x);
  Mat B(n, n);
  B << s.fields(q), s.reeb(q);
  const Mat C = B.fullPivLu().solve(patch.tangent(x));  // frame coordinates of T
  const Mat G = C.transpose() * C;                      // g_R Gram of T
  const Eigen::RowVectorXd a = C.row(n - 1);            // X_0 components
  const double v = a * G.ldlt().solve(a.transpose());
  return std::clamp(std::sqrt(std::max(0.0, v)), 0.0, 1.0);
}

}  // namespace srtube
