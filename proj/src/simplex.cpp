#include "curvebic/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace curvebic {

SimplexResult minimize_simplex(const std::function<double(const Eigen::VectorXd&)>& f,
                               const Eigen::VectorXd& x0, const SimplexOptions& opts) {
  const int n = static_cast<int>(x0.size());
  const double kBig = std::numeric_limits<double>::max() / 4;
  auto eval = [&](const Eigen::VectorXd& x) {
    double v = f(x);
    return std::isfinite(v) ? v : kBig;
  };

  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (int i = 0; i < n; ++i) pts[i + 1](i) += opts.edge;
  for (int i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

  std::vector<int> order(n + 1);
  int iter = 0;
  bool converged = false;
  for (; iter < opts.max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    const int lo = order[0], hi = order[n], next_hi = order[n - 1];

    double spread = 2.0 * std::abs(vals[hi] - vals[lo]) /
                    (std::abs(vals[hi]) + std::abs(vals[lo]) + 1e-15);
    if (spread < opts.ftol_rel) {
      converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != hi) centroid += pts[i];
    centroid /= n;

    Eigen::VectorXd refl = centroid + (centroid - pts[hi]);
    double frefl = eval(refl);
    if (frefl < vals[lo]) {
      Eigen::VectorXd expd = centroid + 2.0 * (centroid - pts[hi]);
      double fexpd = eval(expd);
      if (fexpd < frefl) {
        pts[hi] = expd;
        vals[hi] = fexpd;
      } else {
        pts[hi] = refl;
        vals[hi] = frefl;
      }
    } else if (frefl < vals[next_hi]) {
      pts[hi] = refl;
      vals[hi] = frefl;
    } else {
      Eigen::VectorXd contr = centroid + 0.5 * (pts[hi] - centroid);
      double fcontr = eval(contr);
      if (fcontr < vals[hi]) {
        pts[hi] = contr;
        vals[hi] = fcontr;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == lo) continue;
          pts[i] = pts[lo] + 0.5 * (pts[i] - pts[lo]);
          vals[i] = eval(pts[i]);
        }
      }
    }
  }

  int best = static_cast<int>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  SimplexResult res;
  res.x = pts[best];
  res.fmin = vals[best];
  res.iterations = iter;
  res.converged = converged;
  return res;
}

}  // namespace curvebic
