#pragma once

#include <Eigen/Dense>

#include "linalg.hpp"

namespace lyodry {

// Physical and numerical constants of the primary-drying model. SI units.
struct ModelParams {
  double rho_f = 917.0;    // frozen density, kg/m^3
  double rho_e = 212.0;    // effective dried-region density, kg/m^3
  double cp_f = 2030.0;    // frozen heat capacity, J/(kg K)
  double k_f = 2.4;        // frozen thermal conductivity, W/(m K)
  double H = 0.01;         // product height, m
  double d = 0.01;         // product diameter, m
  double sigma = 5.670374419e-8;  // Stefan-Boltzmann, W/(m^2 K^4)
  double F_side = 0.1;     // side radiative transfer factor
  double T_c = 293.0;      // chamber wall temperature, K
  double R_p = 4.0e4;      // mass-transfer resistance at S = 0, Pa m^2 s/kg
  double R_p_A1 = 3.0e7;   // dried-layer resistance slope, Pa m s/kg
  double R_p_A2 = 0.0;     // dried-layer resistance saturation, 1/m
  double p_wc = 3.0;       // chamber water partial pressure, Pa
  double dH_sub = 2.84e6;  // sublimation enthalpy, J/kg
  double K_v = 20.0;       // shelf-to-product heat transfer, W/(m^2 K)
  double T0 = 233.15;      // initial product temperature, K
  int n = 20;              // spatial grid points
  double psat_a = 28.8912;  // ice saturation-pressure correlation
  double psat_b = 6139.9;   // ln p = psat_a - psat_b / T

  double alpha() const { return k_f / (rho_f * cp_f); }

  // Throws config_error naming the offending field.
  void validate() const;
};

// Discretized product state: temperatures on the moving frozen region plus
// the interface position. T[0] is the sublimation interface, T[n-1] the
// product bottom.
struct ProductState {
  Eigen::VectorXd T;
  double S = 0.0;
};

// State vector layout used by the solvers: y = [T_1..T_n, S].
Eigen::VectorXd pack(const ProductState& s);
ProductState unpack(const Eigen::VectorXd& y);

double saturation_pressure(double T, const ModelParams& p);
double mass_transfer_resistance(double S, const ModelParams& p);
double sublimation_flux(double T1, double S, const ModelParams& p);

// Volumetric radiative source at local temperature T, W/m^3.
double radiative_heat(double T, double S, const ModelParams& p);

double interface_velocity(double T1, double S, const ModelParams& p);

// Time derivative of y = [T, S] at shelf temperature Tb. Method of lines on
// the frozen region mapped to a fixed grid: xi = (z - S)/(H - S), central
// differences for diffusion, first-order upwinding for the grid-motion term.
void model_rhs(const ModelParams& p, const Eigen::VectorXd& y, double Tb,
               Eigen::VectorXd& dy);

// model_rhs with the interface position capped just short of H, so transient
// solver iterates that overshoot the terminal threshold see finite (if very
// stiff) dynamics instead of a domain error.
void model_rhs_capped(const ModelParams& p, const Eigen::VectorXd& y,
                      double Tb, Eigen::VectorXd& dy);

// Uniform profile at T0; S starts at a small positive fraction of H so the
// grid metric (H - S) never sees a degenerate zero-thickness dried layer.
ProductState initial_state(const ModelParams& p);

// Jacobian sparsity of model_rhs: tridiagonal plus dense columns for T_1
// (which drives the grid motion) and S (the metric).
JacobianPattern model_pattern(const ModelParams& p);

// Trapezoidal enthalpy of the frozen region per unit cross-section, J/m^2.
double frozen_enthalpy(const ModelParams& p, const Eigen::VectorXd& y);

}  // namespace lyodry
