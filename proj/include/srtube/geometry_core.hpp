#pragma once

#include <memory>
#include <optional>
#include <string>

#include "srtube/ode.hpp"
#include "srtube/types.hpp"

namespace srtube {

// A generating family X_1..X_N on one coordinate chart of R^n together with a
// measure density. Derived classes must be reentrant.
class FrameModel {
 public:
  virtual ~FrameModel() = default;

  virtual int dim() const = 0;
  virtual int count() const = 0;

  // Writes X_1(q) .. X_N(q) into the columns of X (n x N).
  virtual void fields(const Vec& q, Mat& X) const = 0;

  // dX_i(q): entry (a, b) is the partial of X_i^a with respect to q^b.
  // Default: 4th-order central differences with step 1e-5 (1 + |q|).
  virtual void jacobian(const Vec& q, int i, Mat& J) const;

  // sum_a p_a d^2 X_i^a / dq dq, an n x n symmetric matrix.
  // Default: central differences of jacobian().
  virtual void hessian_contracted(const Vec& q, const Vec& p, int i, Mat& H) const;

  virtual double density(const Vec&) const { return 1.0; }
  // Gradient of log f. Default: central differences of density().
  virtual Vec log_density_gradient(const Vec& q) const;

  virtual bool has_reeb() const { return false; }
  virtual Vec reeb(const Vec& q) const;

  // True when jacobian and hessian_contracted are closed forms.
  virtual bool analytic() const { return false; }
};

// Sub-Riemannian structure on a chart box. Cheap to copy (shared model).
class SRStructure {
 public:
  SRStructure(std::shared_ptr<const FrameModel> model, std::string name, Vec box_lo,
              Vec box_hi);

  static SRStructure euclidean(int n);
  static SRStructure heisenberg(int d);

  int dim() const { return n_; }
  int fields_count() const { return model_->count(); }
  const std::string& name() const { return name_; }
  bool analytic() const { return model_->analytic(); }
  bool has_reeb() const { return model_->has_reeb(); }
  // Heisenberg half-dimension d, or 0 for other structures.
  int heisenberg_d() const { return heis_d_; }

  Vec field(const Vec& q, int i) const;
  Mat fields(const Vec& q) const;
  Mat field_jacobian(const Vec& q, int i) const;
  double measure_density(const Vec& q) const;
  Vec reeb(const Vec& q) const;
  const FrameModel& model() const { return *model_; }

  bool in_chart(const double* q) const;
  const Vec& box_lo() const { return lo_; }
  const Vec& box_hi() const { return hi_; }

 private:
  std::shared_ptr<const FrameModel> model_;
  std::string name_;
  Vec lo_, hi_;
  int n_;
  int heis_d_ = 0;
};

struct PhasePoint {
  Vec q;
  Vec p;
};

double hamiltonian(const SRStructure& s, const PhasePoint& lam);

// (dH/dp, -dH/dq) stacked into a 2n vector.
Vec hamiltonian_vector_field(const SRStructure& s, const PhasePoint& lam);

// Jacobian of the Hamiltonian vector field (2n x 2n).
Mat hamiltonian_jacobian(const SRStructure& s, const PhasePoint& lam);

PhasePoint flow(const SRStructure& s, const PhasePoint& lam0, double t, const ODESettings& o);

Vec linearized_flow(const SRStructure& s, const PhasePoint& lam0, const Vec& xi0, double t,
                    const ODESettings& o);

struct FlowTangents {
  PhasePoint end;
  Mat tangents;  // 2n x K, columns transported by the variational equation
  OdeStats stats;
};

// Integrates the flow and the variational equation for the columns of xi0 as
// one augmented system.
FlowTangents flow_with_tangents(const SRStructure& s, const PhasePoint& lam0, const Mat& xi0,
                                double t, const ODESettings& o);

// (X_1 phi, .., X_N phi) at q for the differential dphi.
Vec horizontal_gradient_components(const SRStructure& s, const Vec& q, const Vec& dphi);

}  // namespace srtube
