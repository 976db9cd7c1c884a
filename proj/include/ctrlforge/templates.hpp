#pragma once

#include <string>
#include <vector>

#include "ctrlforge/controller.hpp"

namespace ctrlforge {

struct TemplateResult {
    ControllerStructure structure;
    ParamSpace space;
};

// Canonical controller templates:
//   ConstDuty     duty = p0
//   PI            duty = kp*e + clamp(integral(ki*e))
//   PID           PI plus kd * filtered d/dt(e)
//   SMC           duty = d_bias + K*sign(s),  s = c1*e - (i_l - v_c^2/(R*V_in))
//   AdaptiveSMC   duty = d_bias + K(t)*sat(s/phi),  K' = rate*|s| - leak*K
// The SMC surface's equilibrium-current term uses the nominal plant constants
// (R*V_in = 2500), so these two templates target the bundled boost problem.
TemplateResult make_template(const std::string& name);

const std::vector<std::string>& template_names();

}  // namespace ctrlforge
