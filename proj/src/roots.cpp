#include "ebethe/roots.hpp"

#include <cmath>

#include "ebethe/errors.hpp"

namespace ebethe {

namespace {

double wrap(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a;
}

double cross(cplx u, cplx v) { return u.real() * v.imag() - u.imag() * v.real(); }

void cell_coords(const Parallelogram& c, cplx x, double& a, double& b) {
  const cplx d = x - c.origin;
  const double det = cross(c.e1, c.e2);
  a = cross(d, c.e2) / det;
  b = cross(c.e1, d) / det;
}

LogJet eval_checked(const LogFunction& f, cplx x) {
  const LogJet j = f(x);
  if (!std::isfinite(j.log_value.real()) || !std::isfinite(j.log_value.imag()) ||
      !std::isfinite(std::abs(j.log_deriv))) {
    throw RootCountError("root finder: zero on a sampling contour");
  }
  return j;
}

// change of arg f from p to q, refined until each step is small and consistent
// with the logarithmic derivative
double phase_change(const LogFunction& f, cplx p, const LogJet& lp, cplx q, const LogJet& lq, int depth) {
  const double d = wrap(lq.log_value.imag() - lp.log_value.imag());
  const double pred = (0.5 * (lp.log_deriv + lq.log_deriv) * (q - p)).imag();
  if (std::abs(d) <= kPi / 4 && std::abs(pred - d) <= 0.3) return d;
  if (depth <= 0) throw RootCountError("root finder: contour passes too close to a zero");
  const cplx mid = 0.5 * (p + q);
  const LogJet lm = eval_checked(f, mid);
  return phase_change(f, p, lp, mid, lm, depth - 1) + phase_change(f, mid, lm, q, lq, depth - 1);
}

class Finder {
 public:
  Finder(const LogFunction& f, const RootFinderOptions& o) : f_(f), o_(o) {}

  int winding(const Parallelogram& c) const {
    const cplx corners[5] = {c.at(0, 0), c.at(1, 0), c.at(1, 1), c.at(0, 1), c.at(0, 0)};
    double total = 0.0;
    const int n = std::max(2, o_.edge_samples);
    for (int e = 0; e < 4; ++e) {
      cplx p = corners[e];
      LogJet lp = eval_checked(f_, p);
      for (int s = 1; s <= n; ++s) {
        const cplx q = corners[e] + (corners[e + 1] - corners[e]) * (static_cast<double>(s) / n);
        const LogJet lq = eval_checked(f_, q);
        total += phase_change(f_, p, lp, q, lq, 30);
        p = q;
        lp = lq;
      }
    }
    const double w = total / (2.0 * kPi);
    const double r = std::round(w);
    if (std::abs(w - r) > 0.1) throw RootCountError("root finder: non-integral winding number");
    return static_cast<int>(r);
  }

  void process(const Parallelogram& c, int w, int depth, std::vector<cplx>& out) const {
    if (w == 0) return;
    if (w < 0) throw RootCountError("root finder: negative winding number (pole inside cell?)");
    if (w == 1) {
      cplx x;
      if (newton(c, x)) {
        out.push_back(x);
        return;
      }
    } else if (c.diameter() < o_.multiple_tol) {
      throw MultipleRoot("root finder: zeros closer than the multiple-root tolerance");
    }
    if (depth >= o_.max_depth) throw RootCountError("root finder: subdivision depth exhausted");
    subdivide(c, w, depth, out);
  }

  void subdivide(const Parallelogram& c, int w, int depth, std::vector<cplx>& out) const {
    static constexpr double fractions[] = {0.5, 0.4371, 0.5629, 0.3819};
    for (double s : fractions) {
      const Parallelogram kids[4] = {
          {c.at(0, 0), s * c.e1, s * c.e2},
          {c.at(s, 0), (1 - s) * c.e1, s * c.e2},
          {c.at(0, s), s * c.e1, (1 - s) * c.e2},
          {c.at(s, s), (1 - s) * c.e1, (1 - s) * c.e2},
      };
      int ws[4];
      try {
        int sum = 0;
        for (int k = 0; k < 4; ++k) sum += ws[k] = winding(kids[k]);
        if (sum != w) continue;
      } catch (const RootCountError&) {
        continue;
      }
      for (int k = 0; k < 4; ++k) process(kids[k], ws[k], depth + 1, out);
      return;
    }
    throw RootCountError("root finder: could not subdivide cell cleanly");
  }

  bool newton(const Parallelogram& c, cplx& x) const {
    x = c.at(0.5, 0.5);
    const double cap = c.diameter();
    int settled = 0;
    bool on_zero = false;
    for (int it = 0; it < o_.newton_iters; ++it) {
      const LogJet j = f_(x);
      // an exact zero shows up as log 0 = -inf or an infinite log-derivative
      if (!std::isfinite(j.log_value.real()) || !std::isfinite(std::abs(j.log_deriv))) {
        on_zero = true;
        break;
      }
      if (j.log_deriv == 0.0) return false;
      cplx step = -1.0 / j.log_deriv;
      if (std::abs(step) > cap) step *= cap / std::abs(step);
      x += step;
      if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(x))) {
        if (++settled >= 2) break;
      }
    }
    double a, b;
    cell_coords(c, x, a, b);
    const double m = 1e-6;
    if (!(a > -m && a < 1 + m && b > -m && b < 1 + m)) return false;
    if (on_zero) return true;
    const LogJet j = f_(x);
    return !std::isfinite(j.log_value.real()) || !std::isfinite(std::abs(j.log_deriv)) ||
           std::abs(j.log_deriv) > 1.0 / cap;
  }

 private:
  const LogFunction& f_;
  const RootFinderOptions& o_;
};

}  // namespace

int winding_number(const LogFunction& f, const Parallelogram& cell, const RootFinderOptions& opts) {
  return Finder(f, opts).winding(cell);
}

std::vector<cplx> find_roots(const LogFunction& f, const Parallelogram& cell, int expected,
                             const RootFinderOptions& opts) {
  Finder finder(f, opts);
  const int g = std::max(1, opts.grid);
  std::vector<Parallelogram> cells;
  std::vector<int> ws;
  int total = 0;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      const Parallelogram c{cell.at(static_cast<double>(i) / g, static_cast<double>(j) / g), cell.e1 / double(g),
                            cell.e2 / double(g)};
      const int w = finder.winding(c);
      cells.push_back(c);
      ws.push_back(w);
      total += w;
    }
  if (total != expected) throw RootCountError("root finder: zero count differs from the expected degree");
  std::vector<cplx> roots;
  for (size_t k = 0; k < cells.size(); ++k) finder.process(cells[k], ws[k], 0, roots);
  if (static_cast<int>(roots.size()) != expected) throw RootCountError("root finder: lost a zero during refinement");
  return roots;
}

std::vector<cplx> find_periodic_roots(const LogFunction& f, const Parallelogram& cell, int expected,
                                      const RootFinderOptions& opts) {
  static constexpr double offsets[][2] = {{0.0, 0.0}, {0.3183, 0.2718}, {0.1414, 0.5772}, {0.7071, 0.3679}};
  const double g = std::max(1, opts.grid);
  for (const auto& off : offsets) {
    const Parallelogram shifted{cell.at(off[0] / g, off[1] / g), cell.e1, cell.e2};
    std::vector<cplx> roots;
    try {
      roots = find_roots(f, shifted, expected, opts);
    } catch (const RootCountError&) {
      continue;
    }
    for (auto& r : roots) {
      double a, b;
      cell_coords(cell, r, a, b);
      r -= std::floor(a) * cell.e1 + std::floor(b) * cell.e2;
    }
    return roots;
  }
  throw RootCountError("root finder: every grid offset passed through a zero");
}

}  // namespace ebethe
