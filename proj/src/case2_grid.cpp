#include "asadg/case2_grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "asadg/error.hpp"
#include "csv_format.hpp"

namespace asadg::case2 {

const char* to_string(Field f) {
  switch (f) {
    case Field::mach: return "mach";
    case Field::re_source: return "re_source";
    case Field::im_source: return "im_source";
  }
  return "?";
}

Field field_from_string(const std::string& s) {
  for (Field f : {Field::mach, Field::re_source, Field::im_source})
    if (s == to_string(f)) return f;
  throw Error(Errc::invalid_argument, "unknown field '" + s + "'");
}

std::vector<Coefficient> GridSpec::default_varied() {
  return {{Field::mach, 0}, {Field::mach, 1}, {Field::re_source, 0},
          {Field::re_source, 1}, {Field::im_source, 0}, {Field::im_source, 1}};
}

std::size_t GridSpec::slot(const Coefficient& c) const {
  return static_cast<std::size_t>(c.field) * coefficients_per_field() + c.order;
}

std::pair<double, double> GridSpec::range(const Coefficient& c) const {
  if (c.field != Field::mach) return source;
  return c.order == 0 ? mach_constant : mach_higher;
}

sampling::BoundingBox GridSpec::varied_box() const {
  std::vector<std::pair<double, double>> b;
  for (const auto& c : varied) b.push_back(range(c));
  return sampling::BoundingBox(std::move(b));
}

std::vector<double> GridSpec::coefficients_from_varied(std::span<const double> values) const {
  if (values.size() != varied.size())
    throw Error(Errc::dimension_mismatch, "expected one value per varied coefficient");
  std::vector<double> c(coefficient_count());
  for (std::size_t f = 0; f < 3; ++f)
    for (std::size_t n = 0; n <= degree; ++n) {
      const auto [lo, hi] = range({static_cast<Field>(f), n});
      c[f * coefficients_per_field() + n] = 0.5 * (lo + hi);
    }
  for (std::size_t i = 0; i < varied.size(); ++i) c[slot(varied[i])] = values[i];
  return c;
}

std::vector<double> GridSpec::expand(std::span<const double> coefficients) const {
  if (coefficients.size() != coefficient_count())
    throw Error(Errc::dimension_mismatch, "coefficient vector has the wrong length");
  const transport::SpatialGrid grid(node_count);
  const std::size_t k = coefficients_per_field();
  return transport::pack_case2_input(transport::expand_chebyshev(coefficients.subspan(0, k), grid),
                                     transport::expand_chebyshev(coefficients.subspan(k, k), grid),
                                     transport::expand_chebyshev(coefficients.subspan(2 * k, k), grid));
}

std::string GridSpec::column_name(std::size_t s) const {
  const std::size_t k = coefficients_per_field();
  return std::string(to_string(static_cast<Field>(s / k))) + "_c" + std::to_string(s % k);
}

void GridSpec::validate() const {
  if (levels < 2) throw Error(Errc::invalid_argument, "grid needs at least 2 levels per coefficient");
  if (node_count < 2) throw Error(Errc::invalid_argument, "node_count must be at least 2");
  if (varied.empty()) throw Error(Errc::invalid_argument, "at least one coefficient must vary");
  for (std::size_t i = 0; i < varied.size(); ++i) {
    if (varied[i].order > degree) throw Error(Errc::invalid_argument, "varied coefficient exceeds the degree");
    for (std::size_t j = 0; j < i; ++j)
      if (varied[i] == varied[j]) throw Error(Errc::invalid_argument, "coefficient varied twice");
  }
  for (const auto& r : {mach_constant, mach_higher, source})
    if (!(r.first < r.second)) throw Error(Errc::invalid_argument, "coefficient range must have min < max");
  // Every |T_n| <= 1, so this bounds the Mach field away from zero.
  const auto is_varied = [this](std::size_t n) {
    return std::find(varied.begin(), varied.end(), Coefficient{Field::mach, n}) != varied.end();
  };
  double worst = is_varied(0) ? mach_constant.first : 0.5 * (mach_constant.first + mach_constant.second);
  for (std::size_t n = 1; n <= degree; ++n)
    worst -= is_varied(n) ? std::max(std::abs(mach_higher.first), std::abs(mach_higher.second))
                          : std::abs(0.5 * (mach_higher.first + mach_higher.second));
  if (!(worst > 0.0)) throw Error(Errc::invalid_argument, "Mach coefficient ranges allow a zero Mach number");
}

nlohmann::ordered_json GridSpec::to_json() const {
  nlohmann::ordered_json j;
  j["degree"] = degree;
  j["levels"] = levels;
  j["node_count"] = node_count;
  auto& v = j["varied"] = nlohmann::ordered_json::array();
  for (const auto& c : varied) v.push_back({{"field", to_string(c.field)}, {"order", c.order}});
  j["ranges"] = {{"mach_constant", mach_constant}, {"mach_higher", mach_higher}, {"source", source}};
  return j;
}

GridSpec GridSpec::from_json(const nlohmann::json& j) {
  GridSpec s;
  try {
    s.degree = j.value("degree", s.degree);
    s.levels = j.value("levels", s.levels);
    s.node_count = j.value("node_count", s.node_count);
    if (j.contains("varied")) {
      s.varied.clear();
      for (const auto& c : j.at("varied"))
        s.varied.push_back({field_from_string(c.at("field").get<std::string>()), c.at("order").get<std::size_t>()});
    }
    if (j.contains("ranges")) {
      const auto& r = j.at("ranges");
      s.mach_constant = r.value("mach_constant", s.mach_constant);
      s.mach_higher = r.value("mach_higher", s.mach_higher);
      s.source = r.value("source", s.source);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format_error, std::string("grid descriptor: ") + e.what());
  }
  s.validate();
  return s;
}

double CoefficientGrid::spacing() const {
  double h = 0.0;
  for (const auto& c : spec.varied) {
    const auto [lo, hi] = spec.range(c);
    h = std::max(h, (hi - lo) / static_cast<double>(spec.levels - 1));
  }
  return h;
}

Eigen::MatrixXd CoefficientGrid::nodal_inputs() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(spec.input_dim()), static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) {
    const std::vector<double> x = spec.expand(coefficients[i]);
    m.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  }
  return m;
}

CoefficientGrid build_grid(const GridSpec& spec, std::size_t budget) {
  spec.validate();
  std::vector<std::size_t> counts(spec.varied.size(), spec.levels);
  const sampling::SampleSet levels = sampling::cartesian(counts, spec.varied_box(), budget);
  CoefficientGrid g{spec, {}};
  g.coefficients.reserve(levels.points.size());
  for (const auto& p : levels.points) g.coefficients.push_back(spec.coefficients_from_varied(p));
  return g;
}

void write_grid(const CoefficientGrid& grid, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw Error(Errc::io_failure, "cannot open " + csv_path.string());
  const std::size_t n = grid.spec.coefficient_count();
  for (std::size_t s = 0; s < n; ++s) out << (s ? "," : "") << grid.spec.column_name(s);
  out << '\n';
  for (const auto& c : grid.coefficients) {
    for (std::size_t s = 0; s < n; ++s) out << (s ? "," : "") << detail::format_double(c[s]);
    out << '\n';
  }
  if (!out) throw Error(Errc::io_failure, "write failed for " + csv_path.string());
  auto json_path = csv_path;
  json_path.replace_extension(".json");
  std::ofstream js(json_path);
  if (!js) throw Error(Errc::io_failure, "cannot open " + json_path.string());
  nlohmann::ordered_json meta = grid.spec.to_json();
  meta["count"] = grid.size();
  js << meta.dump(2) << '\n';
}

CoefficientGrid read_grid(const std::filesystem::path& csv_path) {
  auto json_path = csv_path;
  json_path.replace_extension(".json");
  std::ifstream js(json_path);
  if (!js) throw Error(Errc::io_failure, "cannot open " + json_path.string());
  nlohmann::json meta;
  try {
    js >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format_error, json_path.string() + ": " + e.what());
  }
  CoefficientGrid g{GridSpec::from_json(meta), {}};

  std::ifstream in(csv_path);
  if (!in) throw Error(Errc::io_failure, "cannot open " + csv_path.string());
  const std::size_t n = g.spec.coefficient_count();
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::format_error, csv_path.string() + ": missing header");
  const auto header = detail::split_csv(line);
  if (header.size() != n) throw Error(Errc::format_error, csv_path.string() + ": header has the wrong column count");
  for (std::size_t s = 0; s < n; ++s)
    if (header[s] != g.spec.column_name(s))
      throw Error(Errc::format_error, csv_path.string() + ": unexpected column '" + std::string(header[s]) + "'");
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != n)
      throw Error(Errc::format_error, csv_path.string() + ": row " + std::to_string(row) + " has the wrong column count");
    std::vector<double> c(n);
    for (std::size_t s = 0; s < n; ++s) {
      const auto v = detail::parse_number<double>(fields[s]);
      if (!v || !std::isfinite(*v))
        throw Error(Errc::format_error, csv_path.string() + ": bad number on row " + std::to_string(row));
      c[s] = *v;
    }
    g.coefficients.push_back(std::move(c));
  }
  if (meta.contains("count") && meta["count"].get<std::size_t>() != g.size())
    throw Error(Errc::format_error, csv_path.string() + ": row count disagrees with descriptor");
  return g;
}

}  // namespace asadg::case2
