#pragma once

#include <functional>
#include <vector>

#include "ebethe/taylor.hpp"

namespace ebethe {

// log f (any branch) and the logarithmic derivative f'/f at a point
struct LogJet {
  cplx log_value;
  cplx log_deriv;
};
using LogFunction = std::function<LogJet(cplx)>;

// origin + a*e1 + b*e2 with a, b in [0, 1)
struct Parallelogram {
  cplx origin;
  cplx e1;
  cplx e2;
  cplx at(double a, double b) const { return origin + a * e1 + b * e2; }
  double diameter() const { return std::max(std::abs(e1 + e2), std::abs(e1 - e2)); }
};

struct RootFinderOptions {
  int grid = 6;                // initial subdivision per side
  int edge_samples = 16;       // initial phase samples per cell edge
  double multiple_tol = 1e-8;  // cells smaller than this that still hold two zeros are a multiple root
  int max_depth = 40;
  int newton_iters = 60;
};

// Number of zeros of f inside the cell, by phase unwrapping along the boundary.
// Throws RootCountError when the boundary passes through (or numerically onto) a zero.
int winding_number(const LogFunction& f, const Parallelogram& cell, const RootFinderOptions& opts = {});

// All zeros of f in the cell (argument principle on a grid, then Newton). The cell
// is assumed free of zeros on its boundary; see find_periodic_roots otherwise.
std::vector<cplx> find_roots(const LogFunction& f, const Parallelogram& cell, int expected,
                             const RootFinderOptions& opts = {});

// Zeros of a function whose zero set is invariant under the periods e1, e2 of `cell`.
// Retries on shifted grids if a zero sits on a grid line; results are reduced into the
// half-open cell.
std::vector<cplx> find_periodic_roots(const LogFunction& f, const Parallelogram& cell, int expected,
                                      const RootFinderOptions& opts = {});

}  // namespace ebethe
