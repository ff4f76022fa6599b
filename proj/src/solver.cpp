#include "fracflow/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fracflow/fracops.hpp"
#include "fracflow/image_io.hpp"
#include "fracflow/imagecore.hpp"

namespace fracflow {
namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& rule) {
    throw ValidationError(field + " must be " + rule);
}

void require_finite(const ScalarGrid& v, const char* op) {
    if (!all_finite(v)) {
        throw NumericalError(std::string(op) + ": non-finite input");
    }
}

void validate_bregman(const BregmanOptions& opt) {
    if (!(opt.theta > 0.0)) invalid("theta", "> 0");
    if (!(opt.lambda_sb > 0.0)) invalid("lambda_sb", "> 0");
    if (!(opt.tol > 0.0)) invalid("inner_tol", "> 0");
    if (opt.max_passes < 1) invalid("bregman_max_passes", ">= 1");
    if (opt.gs_sweeps < 1) invalid("gs_sweeps", ">= 1");
}

// d <- shrink(g + b, 1/lambda_sb), b <- b + g - d, over every pixel. Returns max |d - g|.
double update_split_variables(const ScalarGrid& gx, const ScalarGrid& gy, BregmanState& s,
                              double lambda_sb) {
    const double gamma = 1.0 / lambda_sb;
    auto dx = s.d.x.values();
    auto dy = s.d.y.values();
    auto bx = s.b.x.values();
    auto by = s.b.y.values();
    const auto gxv = gx.values();
    const auto gyv = gy.values();
    double violation = 0.0;
    for (std::size_t i = 0; i < gxv.size(); ++i) {
        const Vec2 d = shrink({gxv[i] + bx[i], gyv[i] + by[i]}, gamma);
        dx[i] = d.x;
        dy[i] = d.y;
        bx[i] += gxv[i] - d.x;
        by[i] += gyv[i] - d.y;
        violation = std::max(violation, std::hypot(d.x - gxv[i], d.y - gyv[i]));
    }
    return violation;
}

// Forward differences, zero on the last column/row.
void forward_gradient(const ScalarGrid& u, ScalarGrid& gx, ScalarGrid& gy) {
    const int w = u.width();
    const int h = u.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            gx(x, y) = x + 1 < w ? u(x + 1, y) - u(x, y) : 0.0;
            gy(x, y) = y + 1 < h ? u(x, y + 1) - u(x, y) : 0.0;
        }
    }
}

void clamp_magnitude(VectorField& u, double limit) {
    auto ux = u.x.values();
    auto uy = u.y.values();
    for (std::size_t i = 0; i < ux.size(); ++i) {
        const double m = std::hypot(ux[i], uy[i]);
        if (m > limit) {
            ux[i] *= limit / m;
            uy[i] *= limit / m;
        }
    }
}

BregmanOptions bregman_options(const SolverParams& p) {
    return {p.theta, p.lambda_sb, p.inner_tol, p.bregman_max_passes, p.gs_sweeps};
}

ScalarGrid solve_component(const ScalarGrid& v, const SolverParams& p) {
    const BregmanOptions opt = bregman_options(p);
    if (p.alpha == 1.0) {
        return split_bregman_alpha1(v, opt).u;
    }
    return split_bregman_alpha(v, p.alpha, p.pad, opt).u;
}

}  // namespace

void SolverParams::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) invalid("lambda", "> 0");
    if (!(theta > 0.0) || !std::isfinite(theta)) invalid("theta", "> 0");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) invalid("epsilon", "> 0");
    if (!(eta > 0.0 && eta < 1.0)) invalid("eta", "in (0,1)");
    if (n_scales < 1) invalid("n_scales", ">= 1");
    if (n_warps < 1) invalid("n_warps", ">= 1");
    if (n_maxiter < 1) invalid("n_maxiter", ">= 1");
    if (!(lambda_sb > 0.0) || !std::isfinite(lambda_sb)) invalid("lambda_sb", "> 0");
    if (!(alpha >= 0.0 && alpha <= 2.0)) invalid("alpha", "in [0,2]");
    if (!(inner_tol > 0.0) || !std::isfinite(inner_tol)) invalid("inner_tol", "> 0");
    if (pad < 0) invalid("pad", ">= 0");
    if (bregman_max_passes < 1) invalid("bregman_max_passes", ">= 1");
    if (gs_sweeps < 1) invalid("gs_sweeps", ">= 1");
}

Vec2 shrink(Vec2 z, double gamma) noexcept {
    const double norm = std::hypot(z.x, z.y);
    if (norm <= gamma || norm == 0.0) return {0.0, 0.0};
    const double scale = (norm - gamma) / norm;
    return {z.x * scale, z.y * scale};
}

ResidualCoeffs compute_residual_coeffs(const GrayImage& I0, const GrayImage& I1,
                                       const VectorField& u0) {
    require_same_shape(I0, I1, "compute_residual_coeffs");
    require_same_shape(I0, u0.x, "compute_residual_coeffs");
    const VectorField grad = central_gradient(I1);
    ResidualCoeffs rc;
    rc.grad = VectorField(warp_image(grad.x, u0), warp_image(grad.y, u0));
    rc.u0 = u0;
    rc.c = warp_image(I1, u0);
    for (int y = 0; y < I0.height(); ++y) {
        for (int x = 0; x < I0.width(); ++x) {
            rc.c(x, y) -= I0(x, y) + rc.grad.x(x, y) * u0.x(x, y) + rc.grad.y(x, y) * u0.y(x, y);
        }
    }
    return rc;
}

VectorField threshold_step(const VectorField& u, const ResidualCoeffs& rc, double lambda,
                           double theta) {
    require_same_shape(u.x, rc.c, "threshold_step");
    const double lt = lambda * theta;
    VectorField v = u;
    for (int y = 0; y < u.height(); ++y) {
        for (int x = 0; x < u.width(); ++x) {
            const double gx = rc.grad.x(x, y);
            const double gy = rc.grad.y(x, y);
            const double g2 = gx * gx + gy * gy;
            if (g2 == 0.0) continue;
            const double r = rc.rho(x, y, u.x(x, y), u.y(x, y));
            double tx;
            double ty;
            if (r < -lt * g2) {
                tx = lt * gx;
                ty = lt * gy;
            } else if (r > lt * g2) {
                tx = -lt * gx;
                ty = -lt * gy;
            } else {
                tx = -r * gx / g2;
                ty = -r * gy / g2;
            }
            v.x(x, y) += tx;
            v.y(x, y) += ty;
        }
    }
    return v;
}

BregmanResult split_bregman_alpha1(const ScalarGrid& v, const BregmanOptions& opt) {
    validate_bregman(opt);
    require_finite(v, "split_bregman_alpha1");
    const int w = v.width();
    const int h = v.height();
    const double inv_theta = 1.0 / opt.theta;
    const double lsb = opt.lambda_sb;

    BregmanResult r;
    r.u = v;
    r.state = {VectorField(w, h), VectorField(w, h)};
    ScalarGrid& u = r.u;
    ScalarGrid px(w, h);
    ScalarGrid py(w, h);
    ScalarGrid gx(w, h);
    ScalarGrid gy(w, h);

    for (int pass = 1; pass <= opt.max_passes; ++pass) {
        for (std::size_t i = 0; i < px.size(); ++i) {
            px.values()[i] = r.state.d.x.values()[i] - r.state.b.x.values()[i];
            py.values()[i] = r.state.d.y.values()[i] - r.state.b.y.values()[i];
        }
        const ScalarGrid before = u;
        for (int sweep = 0; sweep < opt.gs_sweeps; ++sweep) {
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    // Missing neighbours mirror the pixel itself (ghost reflection), which
                    // removes them from both the neighbour sum and the diagonal.
                    double nb = 0.0;
                    int count = 0;
                    if (x > 0) { nb += u(x - 1, y); ++count; }
                    if (x + 1 < w) { nb += u(x + 1, y); ++count; }
                    if (y > 0) { nb += u(x, y - 1); ++count; }
                    if (y + 1 < h) { nb += u(x, y + 1); ++count; }
                    // Backward-difference divergence, the negative adjoint of forward_gradient.
                    const double div = (x + 1 < w ? px(x, y) : 0.0) - (x > 0 ? px(x - 1, y) : 0.0) +
                                       (y + 1 < h ? py(x, y) : 0.0) - (y > 0 ? py(x, y - 1) : 0.0);
                    u(x, y) =
                        (lsb * nb + inv_theta * v(x, y) - lsb * div) / (inv_theta + lsb * count);
                }
            }
        }
        double change = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            change = std::max(change, std::abs(u.values()[i] - before.values()[i]));
        }
        forward_gradient(u, gx, gy);
        r.feasibility.push_back(update_split_variables(gx, gy, r.state, lsb));
        r.passes = pass;
        r.last_change = change;
        if (change < opt.tol) break;
    }
    return r;
}

double jacobi_relaxation(double alpha, double theta, double lambda_sb, double min_diagonal) {
    // ||D_-^alpha|| <= 2^alpha on any grid, so the composed operator's spectrum is
    // bounded by 2 * 4^alpha. A single damped sweep per Bregman pass is a linearized
    // u-step; the pass stays stable when diag / omega dominates the system matrix.
    const double inv_theta = 1.0 / theta;
    const double bound = (inv_theta + 2.0 * lambda_sb * std::pow(4.0, alpha)) /
                         (inv_theta + lambda_sb * min_diagonal);
    return std::min(1.0, 1.0 / bound);
}

BregmanResult split_bregman_alpha(const ScalarGrid& v, double alpha, int pad,
                                  const BregmanOptions& opt) {
    validate_bregman(opt);
    require_finite(v, "split_bregman_alpha");
    if (!(alpha >= 0.0 && alpha <= 2.0)) invalid("alpha", "in [0,2]");
    if (pad < 0) invalid("pad", ">= 0");

    const int w = v.width();
    const int h = v.height();
    const int wp = w + 2 * pad;
    const int hp = h + 2 * pad;
    const GLWeights weights = gl_weights(alpha, std::max(wp, hp));
    const ScalarGrid diag = frac_compose_diagonal(wp, hp, weights);
    const double inv_theta = 1.0 / opt.theta;
    const double lsb = opt.lambda_sb;

    double min_diag = diag(pad, pad);
    for (int y = pad; y < pad + h; ++y) {
        for (int x = pad; x < pad + w; ++x) min_diag = std::min(min_diag, diag(x, y));
    }
    const double omega = jacobi_relaxation(alpha, opt.theta, lsb, min_diag);

    ScalarGrid u(wp, hp);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) u(x + pad, y + pad) = v(x, y);
    }

    BregmanResult r;
    r.state = {VectorField(wp, hp), VectorField(wp, hp)};
    ScalarGrid px(wp, hp);
    ScalarGrid py(wp, hp);

    for (int pass = 1; pass <= opt.max_passes; ++pass) {
        for (std::size_t i = 0; i < px.size(); ++i) {
            px.values()[i] = r.state.d.x.values()[i] - r.state.b.x.values()[i];
            py.values()[i] = r.state.d.y.values()[i] - r.state.b.y.values()[i];
        }
        const ScalarGrid cxx = frac_compose_xx(u, weights);
        const ScalarGrid cyy = frac_compose_yy(u, weights);
        const ScalarGrid rx = frac_dx_plus(px, weights);
        const ScalarGrid ry = frac_dy_plus(py, weights);

        ScalarGrid next = u;
        double change = 0.0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int X = x + pad;
                const int Y = y + pad;
                const double a = diag(X, Y);
                const double off = cxx(X, Y) + cyy(X, Y) - a * u(X, Y);
                const double jacobi = (inv_theta * v(x, y) + lsb * (rx(X, Y) + ry(X, Y) - off)) /
                                      (inv_theta + lsb * a);
                const double updated = u(X, Y) + omega * (jacobi - u(X, Y));
                change = std::max(change, std::abs(updated - u(X, Y)));
                next(X, Y) = updated;
            }
        }
        u = std::move(next);
        const auto [gx, gy] = frac_grad(u, weights);
        r.feasibility.push_back(update_split_variables(gx, gy, r.state, lsb));
        r.passes = pass;
        r.last_change = change;
        if (change < opt.tol) break;
    }

    r.u = ScalarGrid(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) r.u(x, y) = u(x + pad, y + pad);
    }
    return r;
}

bool stopping_criterion(const VectorField& u_new, const VectorField& u_old, double epsilon) {
    require_same_shape(u_new.x, u_old.x, "stopping_criterion");
    const auto ax = u_new.x.values();
    const auto ay = u_new.y.values();
    const auto bx = u_old.x.values();
    const auto by = u_old.y.values();
    double sum = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) {
        const double dx = ax[i] - bx[i];
        const double dy = ay[i] - by[i];
        sum += dx * dx + dy * dy;
    }
    return sum / static_cast<double>(ax.size()) < epsilon * epsilon;
}

double discrete_energy(const VectorField& u, const VectorField& v, const ResidualCoeffs& rc,
                       const SolverParams& p) {
    require_same_shape(u.x, v.x, "discrete_energy");
    require_same_shape(u.x, rc.c, "discrete_energy");
    const GLWeights weights = gl_weights(p.alpha, std::max(u.width(), u.height()));
    const auto [g1x, g1y] = frac_grad(u.x, weights);
    const auto [g2x, g2y] = frac_grad(u.y, weights);
    double energy = 0.0;
    for (int y = 0; y < u.height(); ++y) {
        for (int x = 0; x < u.width(); ++x) {
            const double tv = std::hypot(g1x(x, y), g1y(x, y)) + std::hypot(g2x(x, y), g2y(x, y));
            const double dx = u.x(x, y) - v.x(x, y);
            const double dy = u.y(x, y) - v.y(x, y);
            const double coupling = (dx * dx + dy * dy) / (2.0 * p.theta);
            const double data = p.lambda * std::abs(rc.rho(x, y, v.x(x, y), v.y(x, y)));
            energy += tv + coupling + data;
        }
    }
    return energy;
}

VectorField optical_flow_scale(const GrayImage& I0, const GrayImage& I1, const VectorField& u0,
                               const SolverParams& p, FlowTrace* trace, int scale) {
    p.validate();
    require_same_shape(I0, I1, "optical_flow_scale");
    require_same_shape(I0, u0.x, "optical_flow_scale");
    const double max_motion = std::hypot(I0.width(), I0.height());

    VectorField u = u0;
    for (int warp = 1; warp <= p.n_warps; ++warp) {
        const ResidualCoeffs rc = compute_residual_coeffs(I0, I1, u);
        WarpTrace record{scale, warp, 0, 0.0, 0.0};
        if (trace) record.energy_start = discrete_energy(u, u, rc, p);

        VectorField v = u;
        for (int n = 0; n < p.n_maxiter; ++n) {
            v = threshold_step(u, rc, p.lambda, p.theta);
            VectorField next(solve_component(v.x, p), solve_component(v.y, p));
            const bool converged = stopping_criterion(next, u, p.epsilon);
            u = std::move(next);
            record.iterations = n + 1;
            if (converged) break;
        }
        if (!all_finite(u)) {
            throw NumericalError("non-finite flow at scale " + std::to_string(scale) +
                                 ", warp " + std::to_string(warp));
        }
        if (trace) {
            record.energy_end = discrete_energy(u, v, rc, p);
            trace->warps.push_back(record);
        }
        clamp_magnitude(u, max_motion);
    }
    return u;
}

VectorField optical_flow(const GrayImage& I0, const GrayImage& I1, const SolverParams& p,
                         FlowTrace* trace) {
    p.validate();
    require_same_shape(I0, I1, "optical_flow");
    if (I0.width() < 2 || I0.height() < 2) {
        throw ValidationError("optical_flow: images must be at least 2x2");
    }
    if (!all_finite(I0) || !all_finite(I1)) {
        throw NumericalError("optical_flow: non-finite image data");
    }
    GrayImage a = I0;
    GrayImage b = I1;
    normalize_jointly(a, b);
    const auto pyr0 = build_pyramid(a, p.eta, p.n_scales);
    const auto pyr1 = build_pyramid(b, p.eta, p.n_scales);
    const int levels = static_cast<int>(pyr0.size());
    if (trace) {
        trace->scales_used = levels;
        trace->warps.clear();
    }

    VectorField u(pyr0.back().width(), pyr0.back().height());
    for (int s = levels - 1; s >= 0; --s) {
        u = optical_flow_scale(pyr0[s], pyr1[s], u, p, trace, s);
        if (s > 0) {
            u = upsample_flow(u, p.eta, pyr0[s - 1].width(), pyr0[s - 1].height());
        }
    }
    return u;
}

}  // namespace fracflow
