#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "gmmgrid/mixture.hpp"

namespace gmmgrid::plot {

namespace detail {

struct Frame {
  double x0, x1, y0, y1;
  double width = 640, height = 400, pad = 40;

  double sx(double x) const { return pad + (x - x0) / (x1 - x0) * (width - 2 * pad); }
  double sy(double y) const { return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad); }
};

inline std::string header(const Frame& f, const std::string& title) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << f.pad << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n"
    << "<rect x=\"" << f.pad << "\" y=\"" << f.pad << "\" width=\"" << f.width - 2 * f.pad << "\" height=\""
    << f.height - 2 * f.pad << "\" fill=\"none\" stroke=\"#888\"/>\n";
  return s.str();
}

}  // namespace detail

/// 1-d overlay of the true and estimated densities.
inline std::string density_overlay_1d(const SphericalMixture& truth, const SphericalMixture& est) {
  double lo = 1e300, hi = -1e300;
  for (const auto* m : {&truth, &est})
    for (const auto& mu : m->means()) {
      lo = std::min(lo, mu(0) - 4 * m->sigma());
      hi = std::max(hi, mu(0) + 4 * m->sigma());
    }
  constexpr int kPoints = 400;
  std::vector<double> xs, a, b;
  for (int i = 0; i < kPoints; ++i) {
    Vector x(1);
    x(0) = lo + (hi - lo) * i / (kPoints - 1);
    xs.push_back(x(0));
    a.push_back(truth.density(x));
    b.push_back(est.density(x));
  }
  const double top = std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end())) * 1.05;
  detail::Frame f{lo, hi, 0.0, top};
  std::ostringstream s;
  s << detail::header(f, "density: truth (black) vs estimate (red)");
  for (const auto& [ys, color] : {std::pair{&a, "black"}, std::pair{&b, "red"}}) {
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (int i = 0; i < kPoints; ++i) s << f.sx(xs[i]) << ',' << f.sy((*ys)[i]) << ' ';
    s << "\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

/// 2-d scatter of (a subset of) points with true means as black crosses and
/// estimated means as red circles.
inline std::string means_2d(const RowMatrix& points, const std::vector<Vector>& truth, const std::vector<Vector>& est,
                            std::size_t max_points = 2000) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  auto grow = [&](double x, double y) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  };
  const auto n = std::min<std::size_t>(max_points, static_cast<std::size_t>(points.rows()));
  for (std::size_t i = 0; i < n; ++i) grow(points(static_cast<Eigen::Index>(i), 0), points(static_cast<Eigen::Index>(i), 1));
  for (const auto& m : truth) grow(m(0), m(1));
  for (const auto& m : est) grow(m(0), m(1));
  detail::Frame f{x0 - 0.1, x1 + 0.1, y0 - 0.1, y1 + 0.1};
  std::ostringstream s;
  s << detail::header(f, "projected samples, true means (x), estimates (o)");
  for (std::size_t i = 0; i < n; ++i)
    s << "<circle cx=\"" << f.sx(points(static_cast<Eigen::Index>(i), 0)) << "\" cy=\""
      << f.sy(points(static_cast<Eigen::Index>(i), 1)) << "\" r=\"1\" fill=\"#9ab\"/>\n";
  for (const auto& m : truth) {
    const double cx = f.sx(m(0)), cy = f.sy(m(1));
    s << "<path d=\"M" << cx - 5 << ' ' << cy - 5 << " L" << cx + 5 << ' ' << cy + 5 << " M" << cx - 5 << ' ' << cy + 5
      << " L" << cx + 5 << ' ' << cy - 5 << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  for (const auto& m : est)
    s << "<circle cx=\"" << f.sx(m(0)) << "\" cy=\"" << f.sy(m(1)) << "\" r=\"6\" fill=\"none\" stroke=\"red\" "
      << "stroke-width=\"2\"/>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace gmmgrid::plot
