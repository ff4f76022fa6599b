#pragma once

#include <vector>

#include "fracflow/grid.hpp"

namespace fracflow {

// Parameters of the coarse-to-fine TV-L1 split Bregman solver.
struct SolverParams {
    double lambda = 0.3;      // data attachment weight
    double theta = 0.3;       // tightness of the u/v coupling
    double epsilon = 0.01;    // stopping threshold on successive flows
    double eta = 0.5;         // pyramid zoom factor
    int n_scales = 5;
    int n_warps = 5;
    int n_maxiter = 100;      // alternation steps per warp
    double lambda_sb = 10.0;  // split Bregman penalty, shared by both flow components
    double alpha = 1.0;       // fractional order; exactly 1 selects the gradient path
    double inner_tol = 1e-3;  // max-norm change of u ending a split Bregman solve
    int pad = 10;             // Dirichlet band width for the fractional path
    int bregman_max_passes = 100;
    int gs_sweeps = 1;        // Gauss-Seidel sweeps per Bregman pass (gradient path)

    // Throws ValidationError naming the first offending field.
    void validate() const;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Vec2&) const = default;
};

// z / |z| * max(|z| - gamma, 0); zero maps to zero.
[[nodiscard]] Vec2 shrink(Vec2 z, double gamma) noexcept;

// Affine data residual rho(u) = grad . u + c around the warp base u0.
struct ResidualCoeffs {
    VectorField grad;  // grad I1 sampled at x + u0
    ScalarGrid c;      // I1(x + u0) - I0(x) - grad . u0
    VectorField u0;

    [[nodiscard]] double rho(int x, int y, double u1, double u2) const noexcept {
        return grad.x(x, y) * u1 + grad.y(x, y) * u2 + c(x, y);
    }
};

[[nodiscard]] ResidualCoeffs compute_residual_coeffs(const GrayImage& I0, const GrayImage& I1,
                                                     const VectorField& u0);

// Pointwise minimizer of (1/2 theta)|u - v|^2 + lambda |rho(v)|: v = u + TH(u).
[[nodiscard]] VectorField threshold_step(const VectorField& u, const ResidualCoeffs& rc,
                                         double lambda, double theta);

// Split variable d and Bregman variable b for one flow component.
struct BregmanState {
    VectorField d;
    VectorField b;
};

struct BregmanOptions {
    double theta = 0.3;
    double lambda_sb = 10.0;
    double tol = 1e-3;
    int max_passes = 100;
    int gs_sweeps = 1;
};

struct BregmanResult {
    ScalarGrid u;
    BregmanState state;  // on the padded grid for the fractional path
    int passes = 0;
    double last_change = 0.0;
    // max |d - grad u| after each pass (the constraint violation).
    std::vector<double> feasibility;
};

// min_u TV(u) + (1/2 theta)|u - v|^2 with forward-difference gradients and natural
// boundary conditions. In-place row-major Gauss-Seidel for the u-subproblem.
[[nodiscard]] BregmanResult split_bregman_alpha1(const ScalarGrid& v, const BregmanOptions& opt);

// min_u |grad_-^alpha u|_1 + (1/2 theta)|u - v|^2 on the grid padded by `pad` pixels
// with u = 0 on the band. Damped Jacobi for the u-subproblem. Returns the unpadded
// interior in BregmanResult::u.
[[nodiscard]] BregmanResult split_bregman_alpha(const ScalarGrid& v, double alpha, int pad,
                                                const BregmanOptions& opt);

// Relaxation factor used by split_bregman_alpha's Jacobi sweeps.
[[nodiscard]] double jacobi_relaxation(double alpha, double theta, double lambda_sb,
                                       double min_diagonal);

// mean((u_new - u_old)^2 summed over components) < epsilon^2.
[[nodiscard]] bool stopping_criterion(const VectorField& u_new, const VectorField& u_old,
                                      double epsilon);

// Sum over pixels of |grad_-^alpha u1| + |grad_-^alpha u2| + (1/2 theta)|u - v|^2
// + lambda |rho(v)|.
[[nodiscard]] double discrete_energy(const VectorField& u, const VectorField& v,
                                     const ResidualCoeffs& rc, const SolverParams& p);

// Per-warp record of the alternation, for diagnostics and regression checks.
struct WarpTrace {
    int scale = 0;  // 0 is full resolution
    int warp = 0;
    int iterations = 0;
    double energy_start = 0.0;  // E(u, u) at the warp's linearization point
    double energy_end = 0.0;    // E(u, v) after the last alternation
};

struct FlowTrace {
    int scales_used = 0;
    std::vector<WarpTrace> warps;
};

// Warping loop at one pyramid level, starting from u0.
[[nodiscard]] VectorField optical_flow_scale(const GrayImage& I0, const GrayImage& I1,
                                             const VectorField& u0, const SolverParams& p,
                                             FlowTrace* trace = nullptr, int scale = 0);

// Full coarse-to-fine estimate of the flow from I0 to I1, with I0(x) ~ I1(x + u(x)).
[[nodiscard]] VectorField optical_flow(const GrayImage& I0, const GrayImage& I1,
                                       const SolverParams& p, FlowTrace* trace = nullptr);

}  // namespace fracflow
