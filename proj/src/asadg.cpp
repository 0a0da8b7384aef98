#include "asadg/asadg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "asadg/error.hpp"
#include "asadg/log.hpp"
#include "exact_rational.hpp"

namespace asadg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

nlohmann::ordered_json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

// ---------------------------------------------------------------------------
// SolverContext

SolverContext::SolverContext(transport::SpatialGrid grid, ParamMap to_params, double tolerance,
                             transport::ResidualNorm norm)
    : grid_(std::move(grid)), to_params_(std::move(to_params)), tolerance_(tolerance), norm_(norm) {
  if (!to_params_) throw Error(Errc::invalid_argument, "solver context needs a parameter map");
  if (!(tolerance_ > 0.0)) throw Error(Errc::invalid_argument, "solver tolerance must be positive");
}

SolverContext::Solved SolverContext::solve(std::span<const double> input) {
  const auto t0 = Clock::now();
  ++counters_.solver_calls;
  Solved out;
  try {
    const transport::TransportParams p = to_params_(input);
    out.output = transport::solve(p, grid_);
    out.residual = transport::residual(p, out.output, grid_, norm_);
  } catch (...) {
    counters_.solver_seconds += seconds_since(t0);
    throw;
  }
  counters_.solver_seconds += seconds_since(t0);
  if (!(out.residual <= tolerance_))
    throw Error(Errc::membership_violation, "solved point has residual " + std::to_string(out.residual) +
                                                " above tolerance " + std::to_string(tolerance_));
  return out;
}

double SolverContext::residual(std::span<const double> input, const transport::SolutionVector& y) {
  const auto t0 = Clock::now();
  ++counters_.residual_calls;
  double r = 0.0;
  try {
    r = transport::residual(to_params_(input), y, grid_, norm_);
  } catch (...) {
    counters_.residual_seconds += seconds_since(t0);
    throw;
  }
  counters_.residual_seconds += seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------------------
// Spaces, schedule, criteria

PlaneSpace::PlaneSpace(sampling::BoundingBox box) : box_(std::move(box)) {
  if (box_.dim() != 2) throw Error(Errc::dimension_mismatch, "plane working space needs a 2D box");
}

RelaxationSchedule::RelaxationSchedule(double rho0, double lambda) : rho0_(rho0), lambda_(lambda) {
  if (!(rho0 > 0.0) || !std::isfinite(rho0))
    throw Error(Errc::invalid_argument, "initial threshold must be positive and finite");
  if (!(lambda > 1.0) || !std::isfinite(lambda))
    throw Error(Errc::invalid_argument, "decay factor must be finite and > 1");
}

Rational RelaxationSchedule::exact(std::size_t k) const {
  const Rational lambda = detail::to_rational(lambda_);
  Rational denom(1);
  for (std::size_t i = 0; i < k; ++i) denom *= lambda;
  return detail::to_rational(rho0_) / denom;
}

Threshold RelaxationSchedule::at(std::size_t k) const {
  const Rational t = exact(k);
  // Smallest double not below the exact threshold.
  double v = static_cast<double>(t);
  const double inf = std::numeric_limits<double>::infinity();
  while (detail::to_rational(v) < t) v = std::nextafter(v, inf);
  for (double below = std::nextafter(v, -inf); below > 0.0 && detail::to_rational(below) >= t;
       below = std::nextafter(v, -inf))
    v = below;
  return Threshold{v, detail::to_rational(v) != t};
}

void StoppingCriteria::validate() const {
  if (max_iterations == npos && max_points == npos && !std::isfinite(time_limit_seconds))
    throw Error(Errc::invalid_argument, "at least one of iterations, points or time must be limited");
  if (metric_floor < 0.0) throw Error(Errc::invalid_argument, "metric floor must be non-negative");
  if (stability_tolerance < 0.0) throw Error(Errc::invalid_argument, "stability tolerance must be non-negative");
}

// ---------------------------------------------------------------------------
// RunReport

std::vector<double> RunReport::metric_series() const {
  std::vector<double> out;
  for (const auto& r : iterations) out.push_back(r.metric_mean);
  return out;
}

std::vector<std::size_t> RunReport::point_series() const {
  std::vector<std::size_t> out;
  for (const auto& r : iterations) out.push_back(r.points);
  return out;
}

nlohmann::ordered_json RunReport::to_json() const {
  nlohmann::ordered_json j;
  j["schedule"] = {{"rho0", rho0}, {"lambda", lambda}};
  j["initial_points"] = initial_points;
  j["final_points"] = final_points;
  j["stop_reason"] = stop_reason;
  j["complete"] = complete;
  if (!error.empty()) j["error"] = error;
  const auto& last = iterations.empty() ? initial : iterations.back().cumulative;
  j["solver_calls"] = last.solver_calls;
  j["residual_calls"] = last.residual_calls;
  auto& its = j["iterations"] = nlohmann::ordered_json::array();
  for (const auto& r : iterations) {
    its.push_back({{"iteration", r.iteration},
                   {"threshold", r.threshold},
                   {"points", r.points},
                   {"candidates", r.candidates},
                   {"newly_scored", r.newly_scored},
                   {"accepted", r.accepted},
                   {"rejected", r.rejected},
                   {"clipped", r.clipped},
                   {"duplicates", r.duplicates},
                   {"skipped", r.skipped},
                   {"metric_mean", number_or_null(r.metric_mean)},
                   {"solver_calls", r.cumulative.solver_calls},
                   {"residual_calls", r.cumulative.residual_calls}});
  }
  auto& timing = j["timing"];
  timing["initial_solver_seconds"] = initial.solver_seconds;
  timing["solver_seconds"] = last.solver_seconds;
  timing["residual_seconds"] = last.residual_seconds;
  auto& per = timing["iterations"] = nlohmann::ordered_json::array();
  for (const auto& r : iterations)
    per.push_back({{"iteration", r.iteration},
                   {"solver_seconds", r.cumulative.solver_seconds},
                   {"residual_seconds", r.cumulative.residual_seconds}});
  return j;
}

// ---------------------------------------------------------------------------
// AdaptiveSampler

AdaptiveSampler::AdaptiveSampler(const WorkingSpace& space, SolverContext& solver, AsadgSettings settings)
    : space_(space), solver_(solver), settings_(std::move(settings)),
      schedule_(settings_.rho0, settings_.lambda) {
  settings_.stop.validate();
  const sampling::BoundingBox box = space_.box();
  if (box.dim() != 2) throw Error(Errc::dimension_mismatch, "working space must be two-dimensional");
  origin_ = {box.lo(0), box.lo(1)};
  scale_ = {box.width(0), box.width(1)};
}

void AdaptiveSampler::add_point(const Recovered& r) {
  SolverContext::Solved s = solver_.solve(r.input);
  points_.push_back(ManifoldPoint{r.input, r.working, std::move(s.output), s.residual, r.grid_index});
  if (r.grid_index != npos) used_grid_.insert(r.grid_index);
}

void AdaptiveSampler::initialize() {
  if (!points_.empty()) throw Error(Errc::invalid_argument, "sampler already initialized");
  const sampling::SampleSet c = sampling::corners(space_.box());
  for (const auto& p : c.points) {
    const Recovered r = space_.recover({p[0], p[1]});
    const bool seen = std::any_of(points_.begin(), points_.end(), [&](const ManifoldPoint& m) {
      return (r.grid_index != npos && m.grid_index == r.grid_index) || m.working == r.working;
    });
    if (seen) continue;
    add_point(r);
  }
}

geometry::Triangulation AdaptiveSampler::triangulation() const {
  std::vector<geometry::Point2> w;
  w.reserve(points_.size());
  for (const auto& p : points_) w.push_back(p.working);
  return geometry::delaunay(w);
}

std::vector<const Candidate*> AdaptiveSampler::score_candidates() {
  const geometry::Triangulation tri = triangulation();
  std::map<Key, Candidate> next;
  live_.clear();
  last_newly_scored_ = 0;
  const double tol = settings_.dedup_tolerance;
  for (const auto& s : tri.triangles) {
    Key key{tri.payload[s.v[0]], tri.payload[s.v[1]], tri.payload[s.v[2]]};
    std::sort(key.begin(), key.end());
    live_.push_back(key);
    if (auto it = cache_.find(key); it != cache_.end()) {
      next.insert(cache_.extract(it));
      continue;
    }
    Candidate c;
    c.working = s.barycenter;
    c.parent = key;
    c.iteration = k_ + 1;
    for (std::size_t idx : key) {
      const auto& v = points_[idx].working;
      if (std::abs(v.x - c.working.x) / scale_.x <= tol && std::abs(v.y - c.working.y) / scale_.y <= tol)
        c.skipped = true;
    }
    if (!c.skipped) {
      c.recovered = space_.recover(c.working);
      if (c.recovered.grid_index != npos && used_grid_.count(c.recovered.grid_index)) c.skipped = true;
    }
    if (!c.skipped) {
      c.interpolated_output = geometry::interpolate_output(points_[key[0]].output, points_[key[1]].output,
                                                           points_[key[2]].output);
      c.rho = solver_.residual(c.recovered.input, c.interpolated_output);
      ++last_newly_scored_;
    }
    next.emplace(key, std::move(c));
  }
  cache_ = std::move(next);
  std::vector<const Candidate*> out;
  out.reserve(live_.size());
  for (const Key& key : live_) out.push_back(&cache_.at(key));
  return out;
}

IterationRecord AdaptiveSampler::step() { return step(schedule_.at(k_)); }

IterationRecord AdaptiveSampler::step(const Threshold& threshold) {
  if (points_.empty()) throw Error(Errc::invalid_argument, "sampler not initialized");
  IterationRecord rec;
  rec.threshold = threshold.value;
  score_candidates();
  rec.newly_scored = last_newly_scored_;

  std::vector<Candidate*> considered;
  for (const Key& key : live_) {
    Candidate& c = cache_.at(key);
    if (!c.skipped && c.recovered.grid_index != npos && used_grid_.count(c.recovered.grid_index))
      c.skipped = true;
    if (c.skipped) {
      ++rec.skipped;
      continue;
    }
    considered.push_back(&c);
  }
  rec.candidates = considered.size();
  double sum = 0.0;
  for (const Candidate* c : considered) sum += c->rho;
  rec.metric_mean = considered.empty() ? std::numeric_limits<double>::quiet_NaN()
                                       : sum / static_cast<double>(considered.size());

  std::vector<Candidate*> over;
  for (Candidate* c : considered)
    if (threshold.exceeded_by(c->rho)) over.push_back(c);
  std::stable_sort(over.begin(), over.end(), [](const Candidate* a, const Candidate* b) { return a->rho > b->rho; });

  std::size_t budget = settings_.max_accept_per_iteration;
  if (settings_.stop.max_points != npos)
    budget = std::min(budget, settings_.stop.max_points > points_.size() ? settings_.stop.max_points - points_.size()
                                                                          : std::size_t{0});
  for (Candidate* c : over) {
    if (rec.accepted >= budget) {
      ++rec.clipped;
      continue;
    }
    if (c->recovered.grid_index != npos && used_grid_.count(c->recovered.grid_index)) {
      ++rec.duplicates;
      continue;
    }
    add_point(c->recovered);
    ++rec.accepted;
  }
  rec.rejected = rec.candidates - rec.accepted;
  ++k_;
  rec.iteration = k_;
  rec.points = points_.size();
  rec.cumulative = solver_.counters();
  return rec;
}

std::optional<std::string> AdaptiveSampler::stop_reason(const RunReport& report, Clock::time_point start) const {
  const auto& stop = settings_.stop;
  if (report.iterations.size() >= stop.max_iterations) return "max_iterations";
  if (points_.size() >= stop.max_points) return "max_points";
  if (seconds_since(start) >= stop.time_limit_seconds) return "time_limit";
  if (!report.iterations.empty()) {
    const IterationRecord& last = report.iterations.back();
    if (last.candidates == 0) return "exhausted";
    if (last.metric_mean <= stop.metric_floor) return "metric_floor";
    if (stop.stability_window > 0 && report.iterations.size() >= stop.stability_window) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo, mean = 0.0;
      for (std::size_t i = report.iterations.size() - stop.stability_window; i < report.iterations.size(); ++i) {
        const double m = report.iterations[i].metric_mean;
        lo = std::min(lo, m);
        hi = std::max(hi, m);
        mean += m / static_cast<double>(stop.stability_window);
      }
      if (hi - lo <= stop.stability_tolerance * std::abs(mean)) return "metric_stable";
    }
  }
  return std::nullopt;
}

RunReport AdaptiveSampler::run() {
  RunReport report;
  report.rho0 = schedule_.rho0();
  report.lambda = schedule_.lambda();
  const auto start = Clock::now();
  try {
    initialize();
    report.initial_points = points_.size();
    report.initial = solver_.counters();
    for (;;) {
      if (auto reason = stop_reason(report, start)) {
        report.stop_reason = *reason;
        break;
      }
      report.iterations.push_back(step());
    }
  } catch (const Error& e) {
    report.complete = false;
    report.error = e.what();
    report.stop_reason = "error";
    log::warn(std::string("adaptive run aborted: ") + e.what());
  }
  report.final_points = points_.size();
  return report;
}

}  // namespace asadg
