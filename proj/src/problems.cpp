#include "asadg/problems.hpp"

#include "asadg/error.hpp"

namespace asadg::problems {

const char* to_string(Case1Input v) {
  switch (v) {
    case Case1Input::mach: return "mach";
    case Case1Input::x_m: return "x_m";
    case Case1Input::a: return "a";
    case Case1Input::gaussian_amplitude: return "gaussian_amplitude";
    case Case1Input::alpha: return "alpha";
    case Case1Input::sigma: return "sigma";
  }
  return "?";
}

Case1Input case1_input_from_string(const std::string& s) {
  for (Case1Input v : {Case1Input::mach, Case1Input::x_m, Case1Input::a, Case1Input::gaussian_amplitude,
                       Case1Input::alpha, Case1Input::sigma})
    if (s == to_string(v)) return v;
  if (s == "b") return Case1Input::gaussian_amplitude;
  throw Error(Errc::invalid_argument, "unknown case-1 input '" + s + "'");
}

transport::TransportParams case1_params(const Case1Setup& setup, std::span<const double> input) {
  if (input.size() != 2) throw Error(Errc::dimension_mismatch, "case-1 setups take two inputs");
  transport::TransportParams p;
  p.wave_number = setup.wave_number;
  double mach = setup.mach;
  transport::Case1Source src = setup.source;
  for (std::size_t i = 0; i < 2; ++i) {
    const double v = input[i];
    switch (setup.inputs[i]) {
      case Case1Input::mach: mach = v; break;
      case Case1Input::x_m: src.x_m = v; break;
      case Case1Input::a: src.a = v; break;
      case Case1Input::gaussian_amplitude: src.gaussian_amplitude = v; break;
      case Case1Input::alpha: src.alpha = v; break;
      case Case1Input::sigma: src.sigma = v; break;
    }
  }
  p.mach = mach;
  p.source = src;
  return p;
}

SolverContext::ParamMap case1_param_map(Case1Setup setup) {
  return [setup](std::span<const double> input) { return case1_params(setup, input); };
}

sampling::BoundingBox default_case1_box() { return sampling::BoundingBox({{0.3, 1.0}, {0.2, 0.8}}); }

Case1Setup superposition_setup(double mach) {
  Case1Setup s;
  s.mach = mach;
  s.inputs = {Case1Input::a, Case1Input::gaussian_amplitude};
  return s;
}

sampling::BoundingBox superposition_box() { return sampling::BoundingBox({{-1.0, 1.0}, {-1.0, 1.0}}); }

SolverContext::ParamMap case2_param_map(double wave_number) {
  return [wave_number](std::span<const double> input) { return transport::case2_params(input, wave_number); };
}

}  // namespace asadg::problems
