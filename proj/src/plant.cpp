#include "hvacmbrl/plant.hpp"

namespace hvacmbrl {
namespace {

// Derivatives in boundary units (degC/min for temperatures): evaluated in
// degF where the ODE coefficients live, scaled back linearly. The state is
// never converted and re-converted, so a zero derivative leaves it bitwise
// unchanged.
struct DerivC {
  double dT3, dW3, dT2;
};

DerivC derivs_c(const PlantState& s, const ControlInput& u, const Exogenous& exo,
                const PlantParams& p) {
  ZoneDerivs<double> d =
      zone_derivatives<double>(c_to_f(s.T_3), s.W_3, c_to_f(s.T_2), u, exo, p);
  if (!std::isfinite(d.dT3)) throw std::runtime_error("integration error: dT_3/dt non-finite");
  if (!std::isfinite(d.dW3)) throw std::runtime_error("integration error: dW_3/dt non-finite");
  if (!std::isfinite(d.dT2)) throw std::runtime_error("integration error: dT_2/dt non-finite");
  return {d.dT3 / 1.8, d.dW3, d.dT2 / 1.8};
}

PlantState advance(const PlantState& s, double h, const DerivC& d) {
  PlantState out;
  out.T_3 = s.T_3 + h * d.dT3;
  out.W_3 = s.W_3 + h * d.dW3;
  out.T_2 = s.T_2 + h * d.dT2;
  return out;
}

}  // namespace

void PlantParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::runtime_error(std::string("PlantParams: ") + name + " must be > 0");
  };
  positive(V_s, "V_s");
  positive(V_he, "V_he");
  positive(C_p, "C_p");
  positive(rho, "rho");
  positive(h_fg, "h_fg");
  positive(h_w, "h_w");
  positive(dt_minutes, "dt_minutes");
  if (!(mix_fresh > 0.0 && mix_fresh < 1.0))
    throw std::runtime_error("PlantParams: mix_fresh must be in (0,1)");
  if (k_fan < 0.0 || k_chill < 0.0)
    throw std::runtime_error("PlantParams: power coefficients must be >= 0");
  if (dt_minutes > 1.0)
    throw std::runtime_error("PlantParams: dt_minutes must be <= 1 for stability");
  if (W_s < 0.0) throw std::runtime_error("PlantParams: W_s must be >= 0");
  positive(cfm_per_unit, "cfm_per_unit");
  if (cfm_base < 0.0) throw std::runtime_error("PlantParams: cfm_base must be >= 0");
  if (gpm_kp < 0.0 || gpm_max < 0.0)
    throw std::runtime_error("PlantParams: local loop gains must be >= 0");
}

PlantState step_single_zone(const PlantState& state, const ControlInput& input,
                            const Exogenous& exo, const PlantParams& params,
                            double dt) {
  if (dt < 0.0) throw std::runtime_error("step_single_zone: dt must be >= 0");
  if (dt == 0.0) return state;

  if (params.integrator == PlantParams::Integrator::euler) {
    return advance(state, dt, derivs_c(state, input, exo, params));
  }
  DerivC k1 = derivs_c(state, input, exo, params);
  DerivC k2 = derivs_c(advance(state, dt / 2.0, k1), input, exo, params);
  DerivC k3 = derivs_c(advance(state, dt / 2.0, k2), input, exo, params);
  DerivC k4 = derivs_c(advance(state, dt, k3), input, exo, params);
  DerivC mix{(k1.dT3 + 2.0 * k2.dT3 + 2.0 * k3.dT3 + k4.dT3) / 6.0,
             (k1.dW3 + 2.0 * k2.dW3 + 2.0 * k3.dW3 + k4.dW3) / 6.0,
             (k1.dT2 + 2.0 * k2.dT2 + 2.0 * k3.dT2 + k4.dT2) / 6.0};
  return advance(state, dt, mix);
}

double hvac_power(const ControlInput& input, const PlantParams& params) {
  return params.k_fan * input.f * input.f * input.f + params.k_chill * input.gpm;
}

}  // namespace hvacmbrl
