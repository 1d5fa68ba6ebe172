#include "numem/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "numem/errors.hpp"

namespace numem {

std::string_view to_string(PrototypeMethod method) {
  return method == PrototypeMethod::Som ? "som" : "gmm";
}

PrototypeMethod parse_prototype_method(std::string_view name) {
  if (name == "som") return PrototypeMethod::Som;
  if (name == "gmm") return PrototypeMethod::Gmm;
  throw InputError("unknown prototype method '" + std::string(name) + "'");
}

PrototypeModel PrototypeModel::from_som(const SomModel& som, TransformStage stage) {
  PrototypeModel p;
  p.method = PrototypeMethod::Som;
  p.stage = stage;
  p.values = som.neurons;
  std::sort(p.values.begin(), p.values.end());
  return p;
}

PrototypeModel PrototypeModel::from_gmm(const GmmModel& gmm, TransformStage stage) {
  PrototypeModel p;
  p.method = PrototypeMethod::Gmm;
  p.stage = stage;
  p.gmm = gmm;
  std::stable_sort(p.gmm.components.begin(), p.gmm.components.end(),
                   [](const GmmComponent& a, const GmmComponent& b) { return a.mean < b.mean; });
  p.values = p.gmm.means();
  return p;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_prototypes(std::ostream& out, const PrototypeModel& model) {
  out << "PROTO " << to_string(model.method) << ' ' << model.size() << ' '
      << to_string(model.stage) << '\n';
  for (std::size_t k = 0; k < model.size(); ++k) {
    if (model.method == PrototypeMethod::Gmm) {
      const auto& c = model.gmm.components[k];
      out << fmt17(c.mean) << ' ' << fmt17(c.weight) << ' ' << fmt17(c.sigma) << '\n';
    } else {
      out << fmt17(model.values[k]) << " 0 0\n";
    }
  }
}

PrototypeModel read_prototypes(std::istream& in, std::size_t line_offset) {
  std::string line;
  std::size_t lineno = line_offset + 1;
  if (!std::getline(in, line)) throw FormatError("missing PROTO header", lineno);

  std::istringstream header(line);
  std::string tag, method, stage;
  std::size_t m = 0;
  if (!(header >> tag >> method >> m >> stage) || tag != "PROTO") {
    throw FormatError("malformed PROTO header", lineno);
  }
  PrototypeModel model;
  try {
    model.method = parse_prototype_method(method);
    model.stage = parse_transform_stage(stage);
  } catch (const InputError& e) {
    throw FormatError(e.what(), lineno);
  }
  if (m == 0) throw FormatError("prototype count must be positive", lineno);

  for (std::size_t k = 0; k < m; ++k) {
    ++lineno;
    if (!std::getline(in, line)) throw FormatError("truncated prototype block", lineno);
    std::istringstream row(line);
    GmmComponent c;
    if (!(row >> c.mean >> c.weight >> c.sigma) || !std::isfinite(c.mean)) {
      throw FormatError("malformed prototype row", lineno);
    }
    model.values.push_back(c.mean);
    if (model.method == PrototypeMethod::Gmm) model.gmm.components.push_back(c);
  }
  if (model.method == PrototypeMethod::Gmm) {
    try {
      model.gmm.validate();
    } catch (const std::logic_error& e) {
      throw FormatError(std::string("invalid GMM: ") + e.what(), lineno);
    }
  }
  return model;
}

}  // namespace numem
