#include "model.hpp"

#include <cmath>
#include <stdexcept>

#include "errors.hpp"

namespace lyodry {

void ModelParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw config_error(std::string(name) + " must be > 0");
  };
  positive(rho_f, "rho_f");
  positive(rho_e, "rho_e");
  if (!(rho_f > rho_e)) throw config_error("rho_f must exceed rho_e");
  positive(cp_f, "cp_f");
  positive(k_f, "k_f");
  positive(H, "H");
  positive(d, "d");
  positive(sigma, "sigma");
  if (!(F_side >= 0.0 && F_side <= 1.0))
    throw config_error("F_side must lie in [0, 1]");
  positive(T_c, "T_c");
  positive(R_p, "R_p");
  if (!(R_p_A1 >= 0.0)) throw config_error("R_p_A1 must be >= 0");
  if (!(R_p_A2 >= 0.0)) throw config_error("R_p_A2 must be >= 0");
  if (!(p_wc >= 0.0)) throw config_error("p_wc must be >= 0");
  positive(dH_sub, "dH_sub");
  if (!(K_v >= 0.0)) throw config_error("K_v must be >= 0");
  positive(T0, "T0");
  if (n < 3) throw config_error("n must be >= 3");
  positive(psat_b, "psat_b");
}

Eigen::VectorXd pack(const ProductState& s) {
  Eigen::VectorXd y(s.T.size() + 1);
  y.head(s.T.size()) = s.T;
  y[s.T.size()] = s.S;
  return y;
}

ProductState unpack(const Eigen::VectorXd& y) {
  ProductState s;
  s.T = y.head(y.size() - 1);
  s.S = y[y.size() - 1];
  return s;
}

double saturation_pressure(double T, const ModelParams& p) {
  if (!(T > 0.0)) throw std::domain_error("saturation_pressure: T <= 0");
  return std::exp(p.psat_a - p.psat_b / T);
}

double mass_transfer_resistance(double S, const ModelParams& p) {
  return p.R_p + p.R_p_A1 * S / (1.0 + p.R_p_A2 * S);
}

double sublimation_flux(double T1, double S, const ModelParams& p) {
  return (saturation_pressure(T1, p) - p.p_wc) / mass_transfer_resistance(S, p);
}

double radiative_heat(double T, double S, const ModelParams& p) {
  if (!(T > 0.0)) throw std::domain_error("radiative_heat: T <= 0");
  if (S >= p.H) throw std::domain_error("radiative_heat: frozen region vanished");
  const double side_area = M_PI * p.d * p.H;
  const double frozen_volume = 0.25 * M_PI * p.d * p.d * (p.H - S);
  const double Tc4 = std::pow(p.T_c, 4);
  return p.sigma * side_area * p.F_side * (Tc4 - std::pow(T, 4)) /
         frozen_volume;
}

double interface_velocity(double T1, double S, const ModelParams& p) {
  return sublimation_flux(T1, S, p) / (p.rho_f - p.rho_e);
}

void model_rhs(const ModelParams& p, const Eigen::VectorXd& y, double Tb,
               Eigen::VectorXd& dy) {
  const int n = p.n;
  if (n < 3) throw config_error("model_rhs: n must be >= 3");
  if (y.size() != n + 1) throw std::invalid_argument("model_rhs: bad state size");
  const double S = y[n];
  if (S >= p.H) throw std::domain_error("model_rhs: frozen region vanished");

  dy.resize(n + 1);
  const double hs = p.H - S;
  const double dxi = 1.0 / (n - 1);
  const double Nw = sublimation_flux(y[0], S, p);
  const double Sdot = Nw / (p.rho_f - p.rho_e);
  const double diff = p.alpha() / (hs * hs * dxi * dxi);
  const double rc = p.rho_f * p.cp_f;

  // Interface node: conductive flux balances the sublimation draw,
  // k_f dT/dz = dH_sub * N_w, folded in through a ghost node.
  {
    const double ghost = 2.0 * dxi * hs * p.dH_sub * Nw / p.k_f;
    const double adv = Sdot / hs * (y[1] - y[0]) / dxi;
    dy[0] = diff * (2.0 * y[1] - 2.0 * y[0] - ghost) + adv +
            radiative_heat(y[0], S, p) / rc;
  }

  for (int i = 1; i < n - 1; ++i) {
    const double xi = i * dxi;
    const double a = (1.0 - xi) * Sdot / hs;
    const double upw =
        a >= 0.0 ? (y[i + 1] - y[i]) / dxi : (y[i] - y[i - 1]) / dxi;
    dy[i] = diff * (y[i + 1] - 2.0 * y[i] + y[i - 1]) + a * upw +
            radiative_heat(y[i], S, p) / rc;
  }

  // Bottom node: shelf heat input, k_f dT/dz = K_v (Tb - T_n).
  {
    const double ghost = 2.0 * dxi * hs * p.K_v * (Tb - y[n - 1]) / p.k_f;
    dy[n - 1] = diff * (2.0 * y[n - 2] - 2.0 * y[n - 1] + ghost) +
                radiative_heat(y[n - 1], S, p) / rc;
  }

  dy[n] = Sdot;
}

void model_rhs_capped(const ModelParams& p, const Eigen::VectorXd& y,
                      double Tb, Eigen::VectorXd& dy) {
  const double cap = p.H * (1.0 - 1e-7);
  if (y[p.n] <= cap) {
    model_rhs(p, y, Tb, dy);
  } else {
    Eigen::VectorXd yc = y;
    yc[p.n] = cap;
    model_rhs(p, yc, Tb, dy);
  }
}

ProductState initial_state(const ModelParams& p) {
  ProductState s;
  s.T = Eigen::VectorXd::Constant(p.n, p.T0);
  s.S = 1e-6 * p.H;
  return s;
}

JacobianPattern model_pattern(const ModelParams& p) {
  return JacobianPattern{p.n + 1, {0, p.n}};
}

double frozen_enthalpy(const ModelParams& p, const Eigen::VectorXd& y) {
  const int n = p.n;
  double sum = 0.5 * (y[0] + y[n - 1]);
  for (int i = 1; i < n - 1; ++i) sum += y[i];
  const double dz = (p.H - y[n]) / (n - 1);
  return p.rho_f * p.cp_f * sum * dz;
}

}  // namespace lyodry
