#pragma once
// Single-zone air-side plant: three coupled ODEs for zone temperature, zone
// humidity ratio and heat-exchanger (supply air) temperature, integrated
// explicitly. The ODE math runs in imperial units (degF, ft^3, lb, Btu, min);
// the public state and observation boundary is degC and W.

#include <cmath>
#include <stdexcept>
#include <string>

namespace hvacmbrl {

struct PlantParams {
  // Geometry and air properties.
  double V_s = 25000.0;    // thermal-space volume, ft^3 (50 x 50 x 10 zone)
  double V_he = 3000.0;    // heat-exchanger volume, ft^3
  double C_p = 0.24;       // specific heat of air, Btu/(lb degF)
  double rho = 0.074;      // air mass density, lb/ft^3
  double h_fg = 1078.0;    // enthalpy of water vapor, Btu/lb
  double h_w = 180.0;      // enthalpy of liquid water, Btu/lb
  double W_s = 0.008;      // supply-air humidity ratio, lb/lb
  double mix_fresh = 0.25; // fresh-air fraction of supply flow

  // HVAC electric power model: P = k_fan * f^3 + k_chill * gpm, in watts.
  double k_fan = 5.0e-7;   // W per (ft^3/min)^3
  double k_chill = 4.0e4;  // W per (gal/min)

  // Local control loop closing the (setpoint, fan scale) action onto (f, gpm).
  double cfm_base = 800.0;     // f = cfm_base + cfm_per_unit * F
  double cfm_per_unit = 320.0; // ft^3/min per fan-scale unit
  double gpm_kp = 0.3;         // gal/min per degC of (T_3 - TS), clamped below
  double gpm_max = 0.3;        // gal/min

  // Integrator.
  double dt_minutes = 0.25;            // sub-step, must satisfy dt <= 1
  enum class Integrator { euler, rk4 } integrator = Integrator::euler;

  void validate() const;
};

// Public plant state, degC at the boundary.
struct PlantState {
  double T_2 = 20.0;  // supply-air temperature, degC
  double T_3 = 23.5;  // thermal-space temperature, degC
  double W_3 = 0.008; // thermal-space humidity ratio, lb/lb
};

// Exogenous conditions for one sub-step, degC at the boundary.
struct Exogenous {
  double T_o = 24.0;  // outdoor air temperature, degC
  double W_o = 0.009; // outdoor humidity ratio, lb/lb
  double Q_o = 0.0;   // sensible heat load, Btu/min
  double M_o = 0.0;   // moisture load, lb/min
};

// Direct control of one zone's air and chilled-water flows.
struct ControlInput {
  double f = 2800.0;  // volumetric air flow, ft^3/min
  double gpm = 0.0;   // chilled-water flow, gal/min
};

inline double c_to_f(double c) { return c * 1.8 + 32.0; }
inline double f_to_c(double f) { return (f - 32.0) / 1.8; }

// Time derivatives (degF/min, 1/min) of (T_3, W_3, T_2) in imperial units.
// Scalar-templated so tests can cross-check at higher precision.
template <typename S>
struct ZoneDerivs {
  S dT3, dW3, dT2;
};

template <typename S>
ZoneDerivs<S> zone_derivatives(S T3f, S W3, S T2f, const ControlInput& u,
                               const Exogenous& exo, const PlantParams& p) {
  const S Tof = S(c_to_f(exo.T_o));
  const S f = S(u.f);
  const S mix = S(p.mix_fresh);
  ZoneDerivs<S> d;
  d.dT3 = (f / S(p.V_s)) * (T2f - T3f)
        - (S(p.h_fg) * f / (S(p.C_p) * S(p.V_s))) * (S(p.W_s) - W3)
        + (S(exo.Q_o) - S(p.h_fg) * S(exo.M_o)) / (mix * S(p.C_p) * S(p.V_s));
  d.dW3 = (f / S(p.V_s)) * (S(p.W_s) - W3) + S(exo.M_o) / (S(p.rho) * S(p.V_s));
  d.dT2 = (f / S(p.V_he)) * (T3f - T2f)
        + (mix * f / S(p.V_he)) * (Tof - T3f)
        - (f * S(p.h_w) / (S(p.C_p) * S(p.V_he)))
              * ((mix * S(exo.W_o) + (S(1) - mix) * W3) - S(p.W_s))
        - S(6000.0) * S(u.gpm) / (S(p.rho) * S(p.C_p) * S(p.V_he));
  return d;
}

// One explicit integration step of length dt minutes. Pure; dt = 0 is the
// identity. Throws on non-finite derivatives naming the failing component.
PlantState step_single_zone(const PlantState& state, const ControlInput& input,
                            const Exogenous& exo, const PlantParams& params,
                            double dt);

// Electric power draw for one zone's HVAC at the given flows, watts.
double hvac_power(const ControlInput& input, const PlantParams& params);

}  // namespace hvacmbrl
