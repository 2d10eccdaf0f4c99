#pragma once

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "msot/core.hpp"
#include "msot/euclidean.hpp"
#include "msot/hyperbolic.hpp"
#include "msot/linalg.hpp"
#include "msot/spd.hpp"
#include "msot/sphere.hpp"

namespace msot {

enum class Geometry { kEuclidean, kLorentz, kPoincare, kSpd, kSphere, kCircle };

inline const char* to_string(Geometry g) {
  switch (g) {
    case Geometry::kEuclidean: return "euclidean";
    case Geometry::kLorentz: return "lorentz";
    case Geometry::kPoincare: return "poincare";
    case Geometry::kSpd: return "spd";
    case Geometry::kSphere: return "sphere";
    case Geometry::kCircle: return "circle";
  }
  return "unknown";
}

inline Geometry parse_geometry(const std::string& s) {
  for (auto g : {Geometry::kEuclidean, Geometry::kLorentz, Geometry::kPoincare, Geometry::kSpd, Geometry::kSphere,
                 Geometry::kCircle})
    if (s == to_string(g)) return g;
  fail(ErrorKind::kInvalidInput, "unknown geometry '" + s + "'");
}

// One atom per row. SPD atoms are stored row-major in `points` (d^2 columns).
struct Dataset {
  Geometry geometry = Geometry::kEuclidean;
  Matrix points;
  std::vector<double> weights;
  std::string path;
  Eigen::Index spd_dim = 0;

  Eigen::Index size() const { return points.rows(); }
  double mass() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s, const std::string& where) {
  require(!s.empty(), ErrorKind::kInvalidInput, where + ": empty field");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  require(end == s.c_str() + s.size() && errno == 0 && std::isfinite(v), ErrorKind::kInvalidInput,
          where + ": '" + s + "' is not a finite number");
  return v;
}

inline Matrix spd_atom(const Dataset& d, Eigen::Index i) {
  Matrix m(d.spd_dim, d.spd_dim);
  for (Eigen::Index r = 0; r < d.spd_dim; ++r)
    for (Eigen::Index c = 0; c < d.spd_dim; ++c) m(r, c) = d.points(i, r * d.spd_dim + c);
  return m;
}

// Checks the geometry invariant of every row; the error names the row
// (1-based, header excluded). Rows within tolerance are renormalized.
inline void validate_rows(Dataset& d) {
  const Eigen::Index cols = d.points.cols();
  auto where = [&](Eigen::Index i) { return d.path + ": row " + std::to_string(i + 1); };
  switch (d.geometry) {
    case Geometry::kEuclidean:
      break;
    case Geometry::kCircle:
      require(cols == 1, ErrorKind::kInvalidInput, d.path + ": circle data has one angle column in [0, 1)");
      for (Eigen::Index i = 0; i < d.size(); ++i)
        require(d.points(i, 0) >= 0.0 && d.points(i, 0) < 1.0, ErrorKind::kInvalidInput,
                where(i) + ": angle must lie in [0, 1)");
      break;
    case Geometry::kSphere:
      require(cols >= 3, ErrorKind::kInvalidInput, d.path + ": sphere data needs at least 3 coordinates");
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        const double n = d.points.row(i).norm();
        require(std::abs(n - 1.0) <= 1e-9, ErrorKind::kInvalidInput, where(i) + ": point is not on the unit sphere");
        d.points.row(i) /= n;
      }
      break;
    case Geometry::kPoincare:
      for (Eigen::Index i = 0; i < d.size(); ++i)
        require(d.points.row(i).squaredNorm() < 1.0, ErrorKind::kInvalidInput,
                where(i) + ": point lies outside the open unit ball");
      break;
    case Geometry::kLorentz:
      require(cols >= 2, ErrorKind::kInvalidInput, d.path + ": Lorentz data needs at least 2 coordinates");
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        const Vector x = d.points.row(i).transpose();
        require(x(0) > 0.0 && std::abs(minkowski(x, x) + 1.0) <= 1e-9 * std::max(1.0, x(0) * x(0)),
                ErrorKind::kInvalidInput, where(i) + ": point is not on the upper hyperboloid sheet");
        d.points.row(i) = renormalize_lorentz(x).transpose();
      }
      break;
    case Geometry::kSpd: {
      const auto dim = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(cols))));
      require(dim * dim == cols, ErrorKind::kInvalidInput,
              d.path + ": SPD rows hold d*d row-major entries; got " + std::to_string(cols) + " columns");
      d.spd_dim = dim;
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        const Matrix m = spd_atom(d, i);
        require(is_symmetric(m, 1e-9), ErrorKind::kInvalidInput, where(i) + ": matrix is not symmetric");
        const Vector ev = sym_eig(0.5 * (m + m.transpose())).values;
        require(ev.minCoeff() > 1e-13 * std::max(1.0, ev.maxCoeff()), ErrorKind::kNotPositiveDefinite,
                where(i) + ": matrix is not positive definite");
      }
      break;
    }
  }
}

}  // namespace detail

// CSV with a header line. A trailing column named `weight` holds atom
// weights (default uniform). Lines starting with '#' are skipped.
inline Dataset parse_dataset(std::istream& in, Geometry geometry, const std::string& path = "<input>") {
  Dataset d;
  d.geometry = geometry;
  d.path = path;
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 0, ncols = 0;
  bool weighted = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto cells = detail::split_csv(t);
    if (header.empty()) {
      header = cells;
      for (std::size_t k = 0; k < header.size(); ++k) {
        require(!header[k].empty(), ErrorKind::kInvalidInput, path + ": empty column name in header");
        if (header[k] == "weight")
          require(k + 1 == header.size(), ErrorKind::kInvalidInput, path + ": `weight` must be the last column");
      }
      weighted = header.back() == "weight";
      ncols = header.size() - (weighted ? 1 : 0);
      require(ncols > 0, ErrorKind::kInvalidInput, path + ": no coordinate columns");
      // A numeric first line means the header is missing.
      char* end = nullptr;
      std::strtod(header[0].c_str(), &end);
      require(end != header[0].c_str() + header[0].size(), ErrorKind::kInvalidInput,
              path + ": a header line is required");
      continue;
    }
    const std::string where = path + ": row " + std::to_string(rows.size() + 1) + " (line " + std::to_string(lineno) + ")";
    require(cells.size() == header.size(), ErrorKind::kInvalidInput,
            where + ": expected " + std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
    std::vector<double> r;
    r.reserve(cells.size());
    for (const auto& c : cells) r.push_back(detail::parse_number(c, where));
    rows.push_back(std::move(r));
  }
  require(!header.empty(), ErrorKind::kInvalidInput, path + ": missing header");
  require(!rows.empty(), ErrorKind::kInvalidInput, path + ": no data rows");
  const auto n = static_cast<Eigen::Index>(rows.size());
  d.points.resize(n, static_cast<Eigen::Index>(ncols));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < ncols; ++k) d.points(i, static_cast<Eigen::Index>(k)) = r[k];
    if (weighted) {
      require(r.back() >= 0.0, ErrorKind::kInvalidInput,
              path + ": row " + std::to_string(i + 1) + ": weight must be nonnegative");
      d.weights.push_back(r.back());
    }
  }
  if (!weighted) d.weights = uniform_weights(static_cast<std::size_t>(n));
  require(d.mass() > 0.0, ErrorKind::kInvalidInput, path + ": total weight is zero");
  detail::validate_rows(d);
  return d;
}

inline Dataset load_dataset(const std::string& path, Geometry geometry) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kInvalidInput, path + ": cannot open file");
  return parse_dataset(in, geometry, path);
}

inline EuclideanCloud as_euclidean(const Dataset& d) {
  require(d.geometry == Geometry::kEuclidean, ErrorKind::kUnsupported, d.path + ": expected euclidean data");
  return make_cloud(d.points, d.weights);
}

inline HyperbolicCloud as_hyperbolic(const Dataset& d) {
  require(d.geometry == Geometry::kLorentz || d.geometry == Geometry::kPoincare, ErrorKind::kUnsupported,
          d.path + ": expected lorentz or poincare data");
  return make_hyperbolic_cloud(d.geometry == Geometry::kLorentz ? HyperbolicModel::kLorentz : HyperbolicModel::kPoincare,
                               d.points, d.weights);
}

inline SpdCloud as_spd(const Dataset& d) {
  require(d.geometry == Geometry::kSpd, ErrorKind::kUnsupported, d.path + ": expected spd data");
  std::vector<Matrix> atoms;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const Matrix m = detail::spd_atom(d, i);
    atoms.push_back(0.5 * (m + m.transpose()));
  }
  return make_spd_cloud(std::move(atoms), d.weights);
}

inline SphereCloud as_sphere(const Dataset& d) {
  require(d.geometry == Geometry::kSphere, ErrorKind::kUnsupported, d.path + ": expected sphere data");
  return make_sphere_cloud(d.points, d.weights);
}

}  // namespace msot
