#pragma once

// Grid evaluation of the quasi-static rate functional
//   I(J, rho) = 1/4 int_0^T int_{-1}^{1} (J'(t) + d_y rho)^2 / phi(rho) dy dt
// and of its variational form, its current-only contractions and the
// regularisation operators used to approximate a general (J, rho).
//
// Space integrals are exact for the piecewise-linear interpolant of each time
// slice; time integrals use the trapezoid rule on nodal values of J'.

#include <limits>
#include <vector>

#include "ssepld/fields.hpp"
#include "ssepld/protocol.hpp"

namespace ssepld {

struct RateOptions {
    double phi_min = 1e-8;  // floor inside quotients
    double tol_bc = -1.0;   // boundary tolerance; negative means 2 dy
};

struct RateBreakdown {
    double total = 0.0;
    double current_term = 0.0;   // 1/4 int int J'^2 / phi
    double gradient_term = 0.0;  // 1/4 int int (d_y rho)^2 / phi
    double cross_term = 0.0;     // 1/2 int J' (logit rho(t,1) - logit rho(t,-1)) dt
    bool finite = true;          // false when rho violates the boundary data
    bool floor_active = false;   // phi_min was used somewhere
    double boundary_mismatch = 0.0;
};

RateBreakdown rate_functional_closed(const CurrentPath& j, const DensityField& rho, const BoundaryProtocol& protocol,
                                     const RateOptions& options = {});

// Per-time-node values of 1/4 int (J'(t_i) + d_y rho)^2 / phi dy.
std::vector<double> rate_density_in_time(const CurrentPath& j, const DensityField& rho, const RateOptions& options = {});

// L(H) - int int (d_y H)^2 phi(rho), with
// L(H) = H(T,1) J(T) + int [-d_t H(t,1) J(t) - int d_yy H rho dy + d_y H(t,1) rho_+ - d_y H(t,-1) rho_-] dt.
double variational_objective(const TiltField& h, const CurrentPath& j, const DensityField& rho,
                             const BoundaryProtocol& protocol);

// H(t, y) = 1/2 int_{-1}^{y} (J' + d_y rho) / phi(rho) dy', integrated exactly
// cell by cell for the piecewise-linear rho. Throws std::domain_error if phi
// drops below phi_min.
TiltField optimal_tilt(const CurrentPath& j, const DensityField& rho, double phi_min = 1e-8);

// 1/4 int [2J' + (rho_+ - rho_-)]^2 / phi-bar(t) dt with phi-bar(t) = int phi(rho(t, y)) dy.
double current_marginal_Q(const CurrentPath& j, const DensityField& rho, const BoundaryProtocol& protocol);

// int J'(t) [logit rho_+(t) - logit rho_-(t)] dt
double fluctuation_difference(const CurrentPath& j, const BoundaryProtocol& protocol);

struct BdOptions {
    int space_steps = 400;
    double margin = 1e-6;          // profile values kept in [margin, 1 - margin]
    double gradient_tol = 1e-8;    // on the gradient divided by dy, infinity norm
    int max_iterations = 100000;
};

struct BdResult {
    double value = 0.0;
    std::vector<double> profile;  // nodes y_j = -1 + j dy
    int iterations = 0;
    double gradient_norm = 0.0;
};

// inf over rho with rho(-1) = rho_minus, rho(1) = rho_plus of 1/4 int (q + rho')^2 / phi(rho)
// on piecewise-linear profiles. Throws std::runtime_error on non-convergence.
BdResult bd_rate(double q, double rho_plus, double rho_minus, const BdOptions& options = {});

// int_0^T I_BD(J'(t), rho_+(t), rho_-(t)) dt (trapezoid over the nodes of J).
double contracted_rate(const CurrentPath& j, const BoundaryProtocol& protocol, const BdOptions& options = {});

// (1 - eps) rho + eps rho-bar, eps in [0, 1].
DensityField regularize_convex(const DensityField& rho, const BoundaryProtocol& protocol, double eps);

// rho-bar + (I - eps Delta_D)^{-1} (rho - rho-bar) per time slice; boundary
// values set to rho_+-(t).
DensityField regularize_resolvent(const DensityField& rho, const BoundaryProtocol& protocol, double eps);

// Max over interior nodes of |d_y rho_eps - (I - eps Delta_N)^{-1} d_y rho|, with
// centred derivatives and a node-based Neumann Laplacian.
double resolvent_identity_residual(const DensityField& rho, const BoundaryProtocol& protocol, double eps);

// J_k(t) = int_0^t clamp(J'(s), -k, k) ds on the interval slopes of J.
CurrentPath truncate_current(const CurrentPath& j, double k);

// Solves a tridiagonal system in place: sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i].
// Returns false on a zero pivot.
bool solve_tridiagonal(std::vector<double> sub, std::vector<double> diag, std::vector<double> sup,
                       std::vector<double>& rhs);

}  // namespace ssepld
