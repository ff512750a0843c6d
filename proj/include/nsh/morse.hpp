#pragma once

#include <string>
#include <vector>

#include "nsh/contour.hpp"
#include "nsh/field.hpp"
#include "nsh/sampler.hpp"

namespace nsh {

/// Morse index is the number of negative Hessian eigenvalues: in 3D 0..3 map to
/// minimum, 1-saddle, 2-saddle, maximum; in 2D 0..2 to minimum, saddle, maximum.
struct CriticalPoint {
  Vec position;
  double value = 0.0;
  double grad_norm = 0.0;
  Vec eigenvalues;  // ascending
  int index = 0;
  bool degenerate = false;
};

std::string kind_name(const CriticalPoint& p);

struct CriticalSearchOptions {
  Box domain;  // empty means [-1, 1]^d
  int resolution = 64;
  double shell = 0.05;
  double grad_tol = 1e-8;
  double dedup_radius = 1e-4;
  double zero_eigenvalue = 1e-6;
  double tikhonov = 1e-8;
  int max_newton = 50;
};

struct CriticalSearchResult {
  std::vector<CriticalPoint> points;
  std::size_t seeds = 0;
  std::size_t non_converged = 0;
  std::size_t outside_shell = 0;  // converged but outside the domain or with |f| >= shell
};

/// Newton refinement of grad f = 0 from grid nodes where |grad f| is locally minimal.
/// Steps solve (H^T H + mu I) dx = -H^T g, which is plain Newton unless H is near-singular.
CriticalSearchResult find_critical_points(const ScalarField& field, const CriticalSearchOptions& options);

struct ShellStatistics {
  std::size_t samples = 0;
  std::size_t attempts = 0;
  double mean_abs_det = 0.0;
  double max_abs_det = 0.0;
  double mean_abs_trace = 0.0;
  double max_abs_trace = 0.0;
  double mean_grad_norm = 0.0;
  double max_grad_norm = 0.0;
};

struct MorseReport {
  int dim = 3;
  int c_min = 0;
  int c_1saddle = 0;  // the single saddle class in 2D
  int c_2saddle = 0;
  int c_max = 0;
  int euler_estimate = 0;
  int degenerate = 0;
  double shell = 0.05;
  ShellStatistics stats;

  std::string to_json(const std::vector<CriticalPoint>& points = {}) const;
};

/// Counts by kind and the alternating sum; degenerate points are only counted separately.
MorseReport census(const std::vector<CriticalPoint>& points, int dim);

/// Rejection-samples `n` points with |f| < shell. Candidates are Gaussian draws around
/// `cloud` (as in training) or, when `cloud` is null, uniform in `domain`. Throws
/// sampling_failed when the acceptance rate stays below 0.1%.
ShellStatistics shell_statistics(const ScalarField& field, const PointCloud* cloud, const Box& domain, double shell,
                                 std::size_t n, Rng& rng, std::size_t k = 50);

}  // namespace nsh
