#include "core/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "core/common.hpp"

namespace mfggp {

Eigen::VectorXd Grid::node(Eigen::Index flat) const {
  const int dim = static_cast<int>(shape.size());
  Eigen::VectorXd x(dim);
  for (int d = dim - 1; d >= 0; --d) {
    const Eigen::Index n = shape[d];
    const Eigen::Index idx = flat % n;
    flat /= n;
    x[d] = lo[d] + (hi[d] - lo[d]) * static_cast<double>(idx) / static_cast<double>(n);
  }
  return x;
}

Grid make_grid(const Box& box, const std::vector<int>& shape) {
  require(static_cast<int>(shape.size()) == box.dim(), "grid shape dimension mismatch");
  Eigen::Index total = 1;
  for (int n : shape) {
    require(n >= 1, "grid axis size must be positive");
    total *= n;
  }
  Grid g;
  g.shape = shape;
  g.lo = box.lo;
  g.hi = box.hi;
  g.values = Eigen::VectorXd::Zero(total);
  return g;
}

Grid eval_on_grid(const FieldFn& field, const Box& box, const std::vector<int>& shape,
                  unsigned threads) {
  Grid g = make_grid(box, shape);
  parallel_for(static_cast<std::size_t>(g.size()), [&](std::size_t i) {
    g.values[static_cast<Eigen::Index>(i)] =
        field(g.node(static_cast<Eigen::Index>(i)), DerivOp::identity());
  }, threads);
  return g;
}

double l2_grid_error(const Grid& a, const Grid& b) {
  require(a.shape == b.shape, "grid shape mismatch");
  return std::sqrt((a.values - b.values).squaredNorm() / static_cast<double>(a.size()));
}

double grid_integral(const Grid& g) {
  const double volume = (g.hi - g.lo).prod();
  return g.values.mean() * volume;
}

void write_grid_csv(const Grid& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SolverError("cannot open grid file for writing: " + path);
  auto join = [](const auto& v, auto fmt) {
    std::ostringstream ss;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(v.size()); ++i) {
      if (i) ss << ',';
      ss << fmt(v[i]);
    }
    return ss.str();
  };
  char buf[32];
  auto fmt_double = [&buf](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
  };
  out << "# mfggp-grid v1\n";
  out << "# shape: " << join(g.shape, [](int n) { return std::to_string(n); }) << '\n';
  out << "# lo: " << join(g.lo, fmt_double) << '\n';
  out << "# hi: " << join(g.hi, fmt_double) << '\n';
  // One line per slowest-axis index; remaining axes flattened on the line.
  Eigen::Index per_line = 1;
  for (std::size_t d = 1; d < g.shape.size(); ++d) per_line *= g.shape[d];
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    out << fmt_double(g.values[i]);
    out << (((i + 1) % per_line == 0) ? '\n' : ',');
  }
}

Grid read_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open grid file: " + path);
  std::string line;
  Grid g;
  auto parse_list = [](const std::string& s, auto push) {
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) push(tok);
  };
  std::vector<double> lo, hi, values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# mfggp-grid", 0) == 0) continue;
    if (line.rfind("# shape: ", 0) == 0) {
      parse_list(line.substr(9), [&](const std::string& t) { g.shape.push_back(std::stoi(t)); });
    } else if (line.rfind("# lo: ", 0) == 0) {
      parse_list(line.substr(6), [&](const std::string& t) { lo.push_back(std::stod(t)); });
    } else if (line.rfind("# hi: ", 0) == 0) {
      parse_list(line.substr(6), [&](const std::string& t) { hi.push_back(std::stod(t)); });
    } else {
      parse_list(line, [&](const std::string& t) { values.push_back(std::stod(t)); });
    }
  }
  require(!g.shape.empty(), "grid file missing shape header: " + path);
  g.lo = Eigen::Map<Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  g.hi = Eigen::Map<Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  g.values =
      Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  Eigen::Index total = 1;
  for (int n : g.shape) total *= n;
  require(g.values.size() == total, "grid file value count does not match shape: " + path);
  return g;
}

}  // namespace mfggp
