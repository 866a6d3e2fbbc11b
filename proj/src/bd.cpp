#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ssepld/functional.hpp"

namespace ssepld {

namespace {

// 8-point Gauss-Legendre on [0, 1].
constexpr std::array<double, 8> kTheta = {0.019855071751231856, 0.10166676129318664, 0.23723379504183550,
                                          0.40828267875217510,  0.59171732124782490, 0.76276620495816450,
                                          0.89833323870681336,  0.98014492824876814};
constexpr std::array<double, 8> kWeight = {0.050614268145188129, 0.11119051722668724, 0.15685332293894364,
                                           0.18134189168918100,  0.18134189168918100, 0.15685332293894364,
                                           0.11119051722668724,  0.050614268145188129};

// Cell functional c(a, b) = 1/4 q^2 dy Lambda(a, b) + 1/4 (b - a)(L(b) - L(a)) / dy,
// Lambda(a, b) = int_0^1 dtheta / phi(a + theta (b - a)), L = logit.
// The cross term 1/2 q (L(b) - L(a)) telescopes and is added once.
struct CellDerivatives {
    double value, da, db, daa, dbb, dab;
};

CellDerivatives cell(double a, double b, double q2dy4, double inv_dy4) {
    CellDerivatives c{};
    double lam = 0.0, la = 0.0, lb = 0.0, laa = 0.0, lbb = 0.0, lab = 0.0;
    for (std::size_t k = 0; k < kTheta.size(); ++k) {
        const double th = kTheta[k], w = kWeight[k];
        const double r = a + th * (b - a);
        const double phi = mobility_phi(r);
        const double s = 1.0 - 2.0 * r;
        const double f = 1.0 / phi;
        const double f1 = -s * f * f;
        const double f2 = (2.0 * s * s + 2.0 * phi) * f * f * f;
        lam += w * f;
        la += w * (1.0 - th) * f1;
        lb += w * th * f1;
        laa += w * (1.0 - th) * (1.0 - th) * f2;
        lbb += w * th * th * f2;
        lab += w * th * (1.0 - th) * f2;
    }
    const double d = b - a;
    const double dl = logit(b) - logit(a);
    const double ia = 1.0 / mobility_phi(a), ib = 1.0 / mobility_phi(b);
    const double ia1 = -(1.0 - 2.0 * a) * ia * ia, ib1 = -(1.0 - 2.0 * b) * ib * ib;
    c.value = q2dy4 * lam + inv_dy4 * d * dl;
    c.da = q2dy4 * la + inv_dy4 * (-dl - d * ia);
    c.db = q2dy4 * lb + inv_dy4 * (dl + d * ib);
    c.daa = q2dy4 * laa + inv_dy4 * (2.0 * ia - d * ia1);
    c.dbb = q2dy4 * lbb + inv_dy4 * (2.0 * ib + d * ib1);
    c.dab = q2dy4 * lab + inv_dy4 * (-ia - ib);
    return c;
}

struct Evaluation {
    double value = 0.0;
    std::vector<double> grad, diag, off;  // interior unknowns 1..M-1
};

Evaluation evaluate(const std::vector<double>& r, double q, double dy, bool derivatives) {
    const std::size_t m = r.size() - 1;
    const double q2dy4 = 0.25 * q * q * dy;
    const double inv_dy4 = 0.25 / dy;
    Evaluation e;
    if (derivatives) {
        e.grad.assign(m - 1, 0.0);
        e.diag.assign(m - 1, 0.0);
        e.off.assign(m - 1, 0.0);
    }
    for (std::size_t k = 0; k < m; ++k) {
        const CellDerivatives c = cell(r[k], r[k + 1], q2dy4, inv_dy4);
        e.value += c.value;
        if (!derivatives) continue;
        // Node k is unknown index k-1 when 1 <= k <= m-1.
        if (k >= 1) {
            e.grad[k - 1] += c.da;
            e.diag[k - 1] += c.daa;
        }
        if (k + 1 <= m - 1) {
            e.grad[k] += c.db;
            e.diag[k] += c.dbb;
        }
        if (k >= 1 && k + 1 <= m - 1) e.off[k - 1] += c.dab;  // couples k-1 and k
    }
    e.value += 0.5 * q * (logit(r[m]) - logit(r[0]));
    return e;
}

}  // namespace

BdResult bd_rate(double q, double rho_plus, double rho_minus, const BdOptions& options) {
    if (!(rho_plus > 0.0 && rho_plus < 1.0 && rho_minus > 0.0 && rho_minus < 1.0)) {
        throw std::domain_error("reservoir densities must lie in (0, 1)");
    }
    if (options.space_steps < 2) throw std::invalid_argument("bd_rate needs at least two cells");
    const int m = options.space_steps;
    const double dy = 2.0 / m;
    const double lo = options.margin, hi = 1.0 - options.margin;
    std::vector<double> r(static_cast<std::size_t>(m) + 1);
    for (int k = 0; k <= m; ++k) r[static_cast<std::size_t>(k)] = rho_minus + (rho_plus - rho_minus) * k / m;

    BdResult out;
    Evaluation e = evaluate(r, q, dy, true);
    for (int it = 0; it < options.max_iterations; ++it) {
        // Variables pinned at a bound with the gradient pushing outward are frozen.
        std::vector<bool> free(e.grad.size(), true);
        double gnorm = 0.0;
        for (std::size_t i = 0; i < e.grad.size(); ++i) {
            const double v = r[i + 1];
            if ((v <= lo && e.grad[i] > 0.0) || (v >= hi && e.grad[i] < 0.0)) {
                free[i] = false;
                continue;
            }
            gnorm = std::max(gnorm, std::abs(e.grad[i]) / dy);
        }
        out.iterations = it;
        out.gradient_norm = gnorm;
        if (gnorm < options.gradient_tol) {
            out.value = e.value;
            out.profile = r;
            return out;
        }
        std::vector<double> sub(e.grad.size(), 0.0), diag(e.grad.size()), sup(e.grad.size(), 0.0), step(e.grad.size());
        for (std::size_t i = 0; i < e.grad.size(); ++i) {
            diag[i] = free[i] ? e.diag[i] : 1.0;
            step[i] = free[i] ? -e.grad[i] : 0.0;
            if (i + 1 < e.grad.size() && free[i] && free[i + 1]) {
                sup[i] = e.off[i];
                sub[i + 1] = e.off[i];
            }
        }
        if (!solve_tridiagonal(sub, diag, sup, step)) {
            for (std::size_t i = 0; i < step.size(); ++i) step[i] = free[i] ? -e.grad[i] / std::max(e.diag[i], 1e-12) : 0.0;
        }
        double slope = 0.0;
        for (std::size_t i = 0; i < step.size(); ++i) slope += step[i] * e.grad[i];
        if (slope >= 0.0) {
            for (std::size_t i = 0; i < step.size(); ++i) step[i] = free[i] ? -e.grad[i] : 0.0;
        }
        std::vector<double> trial = r;
        // Close to the minimiser the value no longer resolves the decrease;
        // take the full Newton step whenever it shrinks the gradient.
        if (gnorm < 1e-4) {
            for (std::size_t i = 0; i < step.size(); ++i) trial[i + 1] = std::clamp(r[i + 1] + step[i], lo, hi);
            Evaluation te = evaluate(trial, q, dy, true);
            double tnorm = 0.0;
            for (std::size_t i = 0; i < te.grad.size(); ++i) {
                const double v = trial[i + 1];
                if ((v <= lo && te.grad[i] > 0.0) || (v >= hi && te.grad[i] < 0.0)) continue;
                tnorm = std::max(tnorm, std::abs(te.grad[i]) / dy);
            }
            if (tnorm < gnorm) {
                r = trial;
                e = std::move(te);
                continue;
            }
        }
        // Backtracking on the projected step.
        double alpha = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < step.size(); ++i) trial[i + 1] = std::clamp(r[i + 1] + alpha * step[i], lo, hi);
            double decrease = 0.0;
            for (std::size_t i = 0; i < step.size(); ++i) decrease += e.grad[i] * (trial[i + 1] - r[i + 1]);
            const double v = evaluate(trial, q, dy, false).value;
            if (v <= e.value + 1e-4 * std::min(decrease, 0.0)) {
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!moved) {
            // No decrease is representable; accept the current iterate if it is stationary to rounding.
            if (gnorm < 1e3 * options.gradient_tol) {
                out.value = e.value;
                out.profile = r;
                return out;
            }
            break;
        }
        r = trial;
        e = evaluate(r, q, dy, true);
    }
    std::ostringstream msg;
    msg << "bd_rate did not converge for q=" << q << ", rho_-=" << rho_minus << ", rho_+=" << rho_plus
        << ": gradient norm " << out.gradient_norm << " after " << out.iterations << " iterations";
    throw std::runtime_error(msg.str());
}

double contracted_rate(const CurrentPath& j, const BoundaryProtocol& protocol, const BdOptions& options) {
    const std::vector<double> dj = j.node_derivatives();
    const int m = j.time_steps();
    double s = 0.0;
    for (int i = 0; i <= m; ++i) {
        const double t = i == m ? j.horizon() : i * j.dt();
        const double w = (i == 0 || i == m) ? 0.5 * j.dt() : j.dt();
        s += w * bd_rate(dj[static_cast<std::size_t>(i)], protocol.rho_plus(t), protocol.rho_minus(t), options).value;
    }
    return s;
}

}  // namespace ssepld
