#pragma once

#include <array>
#include <vector>

namespace bsnlab::quad {

struct Rule1D {
  std::vector<double> points;   // on [0, 1]
  std::vector<double> weights;  // sum to 1
};

// Gauss-Legendre rules mapped to [0, 1].
inline Rule1D gauss_legendre(int n) {
  switch (n) {
    case 1:
      return {{0.5}, {1.0}};
    case 2: {
      const double g = 0.28867513459481288225;  // 1 / (2 sqrt 3)
      return {{0.5 - g, 0.5 + g}, {0.5, 0.5}};
    }
    case 3: {
      const double g = 0.38729833462074168852;  // sqrt(3/5) / 2
      return {{0.5 - g, 0.5, 0.5 + g}, {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0}};
    }
    default: {
      const double a = 0.16999052179242813331;  // sqrt(3/7 - 2/7 sqrt(6/5)) / 2
      const double b = 0.43056815579702628712;  // sqrt(3/7 + 2/7 sqrt(6/5)) / 2
      const double wa = 0.32607257743127307;    // (18 + sqrt 30) / 72
      const double wb = 0.17392742256872693;    // (18 - sqrt 30) / 72
      return {{0.5 - b, 0.5 - a, 0.5 + a, 0.5 + b}, {wb, wa, wa, wb}};
    }
  }
}

struct RuleTriangle {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> weights;  // sum to 1 (multiply by the cell area)
};

// Seven-point rule, exact for polynomials of total degree 5.
inline RuleTriangle triangle_degree5() {
  RuleTriangle r;
  const double a1 = 0.059715871789769820, b1 = 0.470142064105115090;
  const double a2 = 0.797426985353087322, b2 = 0.101286507323456339;
  const double w0 = 0.225, w1 = 0.132394152788506181, w2 = 0.125939180544827153;
  r.bary = {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {a1, b1, b1}, {b1, a1, b1}, {b1, b1, a1},
            {a2, b2, b2}, {b2, a2, b2}, {b2, b2, a2}};
  r.weights = {w0, w1, w1, w1, w2, w2, w2};
  return r;
}

}  // namespace bsnlab::quad
