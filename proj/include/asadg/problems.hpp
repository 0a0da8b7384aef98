#pragma once

// Named two-input configurations of the case-1 source problem.

#include <array>
#include <string>
#include <vector>

#include "asadg/asadg.hpp"
#include "asadg/transport.hpp"

namespace asadg::problems {

/// Case-1 quantities that may be promoted to inputs.
enum class Case1Input { mach, x_m, a, gaussian_amplitude, alpha, sigma };

const char* to_string(Case1Input v);
/// Accepts the names above plus "b" for gaussian_amplitude. Throws Error{invalid_argument}.
Case1Input case1_input_from_string(const std::string& s);

struct Case1Setup {
  double wave_number = 20.0;
  double mach = 1.0;  // used when mach is not an input
  transport::Case1Source source;
  std::array<Case1Input, 2> inputs{Case1Input::mach, Case1Input::x_m};
};

/// Overwrites the promoted quantities of the setup with the input values.
transport::TransportParams case1_params(const Case1Setup& setup, std::span<const double> input);
SolverContext::ParamMap case1_param_map(Case1Setup setup);

/// Default box of the two-parameter study: mach in [0.3, 1], x_m in [0.2, 0.8].
sampling::BoundingBox default_case1_box();

/// Superposition configuration: inputs (a, b) in [-1, 1]^2 at fixed mach.
Case1Setup superposition_setup(double mach = 0.6);
sampling::BoundingBox superposition_box();

/// Packed nodal case-2 inputs (mach, Re g, Im g) at a fixed wave number.
SolverContext::ParamMap case2_param_map(double wave_number = 20.0);

}  // namespace asadg::problems
