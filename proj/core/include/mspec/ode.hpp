#pragma once

#include <functional>
#include <vector>

#include "mspec/types.hpp"

namespace mspec::ode {

/// Right-hand side y' = f(t, y) for matrix-valued states.
using MatrixRhs = std::function<CMatrix(double t, const CMatrix& y)>;

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;
  int max_steps = 200000;
};

struct Node {
  double t = 0.0;
  CMatrix y;
};

/// Dormand-Prince 5(4) from t0 to t1 (either direction). Returns the accepted nodes including
/// both ends, ordered in the direction of integration. Throws AccuracyError on step underflow
/// or when max_steps is exceeded.
std::vector<Node> integrate(const MatrixRhs& f, double t0, double t1, const CMatrix& y0,
                            const Options& options = {});

/// One fifth-order Dormand-Prince step of size h (used for dense evaluation between nodes).
CMatrix step(const MatrixRhs& f, double t, const CMatrix& y, double h);

}  // namespace mspec::ode
