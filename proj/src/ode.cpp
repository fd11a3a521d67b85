#include "srtube/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "srtube/types.hpp"

namespace srtube {

void ODESettings::validate() const {
  auto tol_ok = [](double t) { return std::isfinite(t) && t > 0.0 && t <= 1e-2; };
  if (!tol_ok(rel_tol) || !tol_ok(abs_tol)) {
    throw InvalidInput("ODE tolerances must lie in (0, 1e-2]");
  }
  if (max_steps <= 0) throw InvalidInput("ODE max_steps must be positive");
  if (method == OdeMethod::FixedStep && fixed_steps <= 0) {
    throw InvalidInput("ODE fixed_steps must be positive");
  }
}

namespace {

// Dormand & Prince 8(5,3) coefficients, as published by Hairer & Wanner.
constexpr double c2 = 0.526001519587677318785587544488E-01;
constexpr double c3 = 0.789002279381515978178381316732E-01;
constexpr double c4 = 0.118350341907227396726757197510E+00;
constexpr double c5 = 0.281649658092772603273242802490E+00;
constexpr double c6 = 0.333333333333333333333333333333E+00;
constexpr double c7 = 0.25E+00;
constexpr double c8 = 0.307692307692307692307692307692E+00;
constexpr double c9 = 0.651282051282051282051282051282E+00;
constexpr double c10 = 0.6E+00;
constexpr double c11 = 0.857142857142857142857142857142E+00;

constexpr double b1 = 5.42937341165687622380535766363E-2;
constexpr double b6 = 4.45031289275240888144113950566E0;
constexpr double b7 = 1.89151789931450038304281599044E0;
constexpr double b8 = -5.8012039600105847814672114227E0;
constexpr double b9 = 3.1116436695781989440891606237E-1;
constexpr double b10 = -1.52160949662516078556178806805E-1;
constexpr double b11 = 2.01365400804030348374776537501E-1;
constexpr double b12 = 4.47106157277725905176885569043E-2;

constexpr double bhh1 = 0.244094488188976377952755905512E+00;
constexpr double bhh2 = 0.733846688281611857341361741547E+00;
constexpr double bhh3 = 0.220588235294117647058823529412E-01;

constexpr double er1 = 0.1312004499419488073250102996E-01;
constexpr double er6 = -0.1225156446376204440720569753E+01;
constexpr double er7 = -0.4957589496572501915214079952E+00;
constexpr double er8 = 0.1664377182454986536961530415E+01;
constexpr double er9 = -0.3503288487499736816886487290E+00;
constexpr double er10 = 0.3341791187130174790297318841E+00;
constexpr double er11 = 0.8192320648511571246570742613E-01;
constexpr double er12 = -0.2235530786388629525884427845E-01;

constexpr double a21 = 5.26001519587677318785587544488E-2;
constexpr double a31 = 1.97250569845378994544595329183E-2;
constexpr double a32 = 5.91751709536136983633785987549E-2;
constexpr double a41 = 2.95875854768068491816892993775E-2;
constexpr double a43 = 8.87627564304205475450678981324E-2;
constexpr double a51 = 2.41365134159266685502369798665E-1;
constexpr double a53 = -8.84549479328286085344864962717E-1;
constexpr double a54 = 9.24834003261792003115737966543E-1;
constexpr double a61 = 3.7037037037037037037037037037E-2;
constexpr double a64 = 1.70828608729473871279604482173E-1;
constexpr double a65 = 1.25467687566822425016691814123E-1;
constexpr double a71 = 3.7109375E-2;
constexpr double a74 = 1.70252211019544039314978060272E-1;
constexpr double a75 = 6.02165389804559606850219397283E-2;
constexpr double a76 = -1.7578125E-2;
constexpr double a81 = 3.70920001185047927108779319836E-2;
constexpr double a84 = 1.70383925712239993810214054705E-1;
constexpr double a85 = 1.07262030446373284651809199168E-1;
constexpr double a86 = -1.53194377486244017527936158236E-2;
constexpr double a87 = 8.27378916381402288758473766002E-3;
constexpr double a91 = 6.24110958716075717114429577812E-1;
constexpr double a94 = -3.36089262944694129406857109825E0;
constexpr double a95 = -8.68219346841726006818189891453E-1;
constexpr double a96 = 2.75920996994467083049415600797E1;
constexpr double a97 = 2.01540675504778934086186788979E1;
constexpr double a98 = -4.34898841810699588477366255144E1;
constexpr double a101 = 4.77662536438264365890433908527E-1;
constexpr double a104 = -2.48811461997166764192642586468E0;
constexpr double a105 = -5.90290826836842996371446475743E-1;
constexpr double a106 = 2.12300514481811942347288949897E1;
constexpr double a107 = 1.52792336328824235832596922938E1;
constexpr double a108 = -3.32882109689848629194453265587E1;
constexpr double a109 = -2.03312017085086261358222928593E-2;
constexpr double a111 = -9.3714243008598732571704021658E-1;
constexpr double a114 = 5.18637242884406370830023853209E0;
constexpr double a115 = 1.09143734899672957818500254654E0;
constexpr double a116 = -8.14978701074692612513997267357E0;
constexpr double a117 = -1.85200656599969598641566180701E1;
constexpr double a118 = 2.27394870993505042818970056734E1;
constexpr double a119 = 2.49360555267965238987089396762E0;
constexpr double a1110 = -3.0467644718982195003823669022E0;
constexpr double a121 = 2.27331014751653820792359768449E0;
constexpr double a124 = -1.05344954667372501984066689879E1;
constexpr double a125 = -2.00087205822486249909675718444E0;
constexpr double a126 = -1.79589318631187989172765950534E1;
constexpr double a127 = 2.79488845294199600508499808837E1;
constexpr double a128 = -2.85899827713502369474065508674E0;
constexpr double a129 = -8.87285693353062954433549289258E0;
constexpr double a1210 = 1.23605671757943030647266201528E1;
constexpr double a1211 = 6.43392746015763530355970484046E-1;

constexpr double kUround = 2.3e-16;

class Dop853 {
 public:
  Dop853(const OdeRhs& f, int n) : f_(f), n_(n), k_(13, std::vector<double>(n)), tmp_(n), ynew_(n) {}

  // One step of size h from y; result in ynew_. k_[0] must hold f(y).
  void step(const double* y, double h) {
    auto& k = k_;
    auto stage = [&](std::initializer_list<std::pair<int, double>> terms, int out) {
      for (int i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (const auto& [j, a] : terms) acc += a * k[j][i];
        tmp_[i] = y[i] + h * acc;
      }
      f_(tmp_.data(), k[out].data());
      ++evaluations;
    };
    stage({{0, a21}}, 1);
    stage({{0, a31}, {1, a32}}, 2);
    stage({{0, a41}, {2, a43}}, 3);
    stage({{0, a51}, {2, a53}, {3, a54}}, 4);
    stage({{0, a61}, {3, a64}, {4, a65}}, 5);
    stage({{0, a71}, {3, a74}, {4, a75}, {5, a76}}, 6);
    stage({{0, a81}, {3, a84}, {4, a85}, {5, a86}, {6, a87}}, 7);
    stage({{0, a91}, {3, a94}, {4, a95}, {5, a96}, {6, a97}, {7, a98}}, 8);
    stage({{0, a101}, {3, a104}, {4, a105}, {5, a106}, {6, a107}, {7, a108}, {8, a109}}, 9);
    stage({{0, a111}, {3, a114}, {4, a115}, {5, a116}, {6, a117}, {7, a118}, {8, a119},
           {9, a1110}},
          10);
    stage({{0, a121}, {3, a124}, {4, a125}, {5, a126}, {6, a127}, {7, a128}, {8, a129},
           {9, a1210}, {10, a1211}},
          11);
    for (int i = 0; i < n_; ++i) {
      double bsum = b1 * k[0][i] + b6 * k[5][i] + b7 * k[6][i] + b8 * k[7][i] +
                    b9 * k[8][i] + b10 * k[9][i] + b11 * k[10][i] + b12 * k[11][i];
      k[12][i] = bsum;
      ynew_[i] = y[i] + h * bsum;
    }
  }

  // Hairer's mixed 5th/3rd order error norm of the last step.
  double error(const double* y, double h, double atol, double rtol) const {
    const auto& k = k_;
    double err = 0.0, err2 = 0.0;
    for (int i = 0; i < n_; ++i) {
      const double sk = 1.0 / (atol + rtol * std::max(std::abs(y[i]), std::abs(ynew_[i])));
      double e2 = (k[12][i] - bhh1 * k[0][i] - bhh2 * k[8][i] - bhh3 * k[11][i]) * sk;
      err2 += e2 * e2;
      double e = (er1 * k[0][i] + er6 * k[5][i] + er7 * k[6][i] + er8 * k[7][i] +
                  er9 * k[8][i] + er10 * k[9][i] + er11 * k[10][i] + er12 * k[11][i]) *
                 sk;
      err += e * e;
    }
    double deno = err + 0.01 * err2;
    if (deno <= 0.0) deno = 1.0;
    return std::abs(h) * err * std::sqrt(1.0 / (deno * n_));
  }

  double initial_step(const double* y, double hmax, double posneg, double atol, double rtol) {
    double dnf = 0.0, dny = 0.0;
    for (int i = 0; i < n_; ++i) {
      const double sk = atol + rtol * std::abs(y[i]);
      dnf += (k_[0][i] / sk) * (k_[0][i] / sk);
      dny += (y[i] / sk) * (y[i] / sk);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, hmax) * posneg;
    for (int i = 0; i < n_; ++i) tmp_[i] = y[i] + h * k_[0][i];
    f_(tmp_.data(), k_[1].data());
    ++evaluations;
    double der2 = 0.0;
    for (int i = 0; i < n_; ++i) {
      const double sk = atol + rtol * std::abs(y[i]);
      const double d = (k_[1][i] - k_[0][i]) / sk;
      der2 += d * d;
    }
    der2 = std::sqrt(der2) / std::abs(h);
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3)
                                      : std::pow(0.01 / der12, 1.0 / 8.0);
    return std::min({100.0 * std::abs(h), h1, hmax}) * posneg;
  }

  void eval_first(const double* y) {
    f_(y, k_[0].data());
    ++evaluations;
  }
  const std::vector<double>& result() const { return ynew_; }

  int evaluations = 0;

 private:
  const OdeRhs& f_;
  int n_;
  std::vector<std::vector<double>> k_;
  std::vector<double> tmp_;
  std::vector<double> ynew_;
};

[[noreturn]] void throw_exit(double t) {
  std::ostringstream os;
  os << "trajectory left the chart box at t = " << t;
  throw ChartExit(t, os.str());
}

}  // namespace

void integrate(const OdeRhs& f, int dim, double* y, double t_end, const ODESettings& settings,
               const OdeMonitor& monitor, OdeStats* stats) {
  settings.validate();
  if (t_end == 0.0) return;
  Dop853 rk(f, dim);
  OdeStats local;

  if (settings.method == OdeMethod::FixedStep) {
    const int steps = settings.fixed_steps;
    const double h = t_end / steps;
    for (int s = 0; s < steps; ++s) {
      rk.eval_first(y);
      rk.step(y, h);
      std::copy(rk.result().begin(), rk.result().end(), y);
      ++local.accepted;
      if (monitor && !monitor(y)) throw_exit(h * (s + 1));
    }
    local.evaluations = rk.evaluations;
    if (stats) *stats = local;
    return;
  }

  const double posneg = t_end > 0 ? 1.0 : -1.0;
  const double hmax = std::abs(t_end);
  const double atol = settings.abs_tol, rtol = settings.rel_tol;
  constexpr double safe = 0.9, facc1 = 1.0 / 0.333, facc2 = 1.0 / 6.0, expo = 1.0 / 8.0;

  rk.eval_first(y);
  double h = rk.initial_step(y, hmax, posneg, atol, rtol);
  double t = 0.0;
  bool last = false, reject = false;
  int nstep = 0;
  while (true) {
    if (nstep >= settings.max_steps) {
      std::ostringstream os;
      os << "ODE step limit (" << settings.max_steps << ") reached at t = " << t;
      throw StepLimit(os.str());
    }
    if (0.1 * std::abs(h) <= std::abs(t) * kUround) {
      throw NumericalError("ODE step size underflow");
    }
    if ((t + 1.01 * h - t_end) * posneg > 0.0) {
      h = t_end - t;
      last = true;
    }
    ++nstep;
    rk.step(y, h);
    const double err = rk.error(y, h, atol, rtol);
    if (!std::isfinite(err)) throw NumericalError("non-finite state during ODE integration");
    const double fac11 = std::pow(err, expo);
    const double fac = std::max(facc2, std::min(facc1, fac11 / safe));
    double hnew = h / fac;
    if (err <= 1.0) {
      ++local.accepted;
      std::copy(rk.result().begin(), rk.result().end(), y);
      t = last ? t_end : t + h;
      if (monitor && !monitor(y)) throw_exit(t);
      if (last) break;
      rk.eval_first(y);
      if (std::abs(hnew) > hmax) hnew = posneg * hmax;
      if (reject) hnew = posneg * std::min(std::abs(hnew), std::abs(h));
      reject = false;
    } else {
      hnew = h / std::min(facc1, fac11 / safe);
      reject = true;
      last = false;
      if (local.accepted >= 1) ++local.rejected;
    }
    h = hnew;
  }
  local.evaluations = rk.evaluations;
  if (stats) *stats = local;
}

}  // namespace srtube
