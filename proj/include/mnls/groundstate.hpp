#pragma once

#include <string>
#include <vector>

#include "mnls/nonlinear.hpp"

namespace mnls {

struct GroundStateConfig {
  std::vector<double> masses;  // target |u_j|_2^2
  double tau = 1e-3;           // initial flow step
  double tol = 1e-8;           // elliptic residual target
  int max_iter = 200000;
  int max_halvings = 20;       // consecutive halvings before stagnation
};

enum class GroundStateStatus { converged, stagnated, max_iterations };
std::string to_string(GroundStateStatus s);

struct GroundStateResult {
  Field U;
  std::vector<double> lambda;
  double residual = 0.0;
  double energy = 0.0;
  int iterations = 0;
  double final_tau = 0.0;
  GroundStateStatus status = GroundStateStatus::max_iterations;
  /// Critical points of the constrained flow are only candidates.
  std::string label = "ground state candidate";
};

/// Per-component rescaling to |u_j|_2^2 = c_j.
void renormalize(Field& U, const std::vector<double>& masses);

/// lambda_j = < L_A u_j + V u_j - g-terms, u_j > / |u_j|^2.
std::vector<double> rayleigh_quotients(const Field& U, const System& sys);

/// Aggregate L^2 norm of L_A u_j + (V - lambda_j) u_j - g-terms.
double elliptic_residual(const Field& U, const std::vector<double>& lambda, const System& sys);

/// One accepted step of U' = renorm(U - tau F_A'(U)); tau is halved until the
/// energy does not increase beyond rounding, and doubles back towards cfg.tau
/// after a step accepted at once. Throws SolverError after max_halvings halvings.
Field gradient_flow_step(const Field& U, double& tau, const System& sys,
                         const GroundStateConfig& cfg);

GroundStateResult solve_groundstate(const Field& U0, const System& sys,
                                    const GroundStateConfig& cfg);

}  // namespace mnls
