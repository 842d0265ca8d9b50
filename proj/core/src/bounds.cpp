#include "mbdqc/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mbdqc {

namespace {

// exp with the exponent clamped to <= 0, so results never leave [0, 1].
double exp_clamped(double exponent) { return std::exp(std::min(exponent, 0.0)); }

std::vector<double> linspace(double lo, double hi, int count) {
    if (count < 1 || hi < lo) return {};
    if (count == 1) return {lo};
    std::vector<double> xs(count);
    for (int i = 0; i < count; ++i)
        xs[i] = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
    return xs;
}

void log_clamp(std::vector<std::string>* log, const std::string& msg) {
    if (log) log->push_back(msg);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

double BoundParams::delta() const {
    const double ws = static_cast<double>(w) / s;
    if (delta_convention == DeltaConvention::Range) return alpha() - ws * k;
    return alpha() - ws / k;
}

void BoundParams::validate() const {
    if (d < 1) throw std::invalid_argument("need at least one computation round");
    if (s < 1) throw std::invalid_argument("need at least one test round");
    if (w < 0 || w > s) throw std::invalid_argument("tolerance w must satisfy 0 <= w <= s");
    if (k < 1) throw std::invalid_argument("trap type count must be positive");
    if (c < 0 || c >= 0.5) throw std::invalid_argument("computation error c must be in [0, 1/2)");
    if (p_err < 0 || p_err > 1) throw std::invalid_argument("noise rate outside [0,1]");
}

double binom_upper_tail(int n, double p, double k) {
    if (n < 1) throw std::invalid_argument("binomial count must be positive");
    if (p < 0 || p > 1) throw std::invalid_argument("probability outside [0,1]");
    if (k < n * p)
        throw std::invalid_argument("upper tail bound needs k >= np");
    return exp_clamped(-2.0 * (n * p - k) * (n * p - k) / n);
}

double binom_lower_tail(int n, double p, double k) {
    if (n < 1) throw std::invalid_argument("binomial count must be positive");
    if (p < 0 || p > 1) throw std::invalid_argument("probability outside [0,1]");
    if (k > n * p)
        throw std::invalid_argument("lower tail bound needs k <= np");
    return exp_clamped(-2.0 * (n * p - k) * (n * p - k) / n);
}

double hypergeom_tail(int big_n, int big_k, int n, double chi, TailSide side) {
    if (big_n < 1 || big_k < 0 || big_k > big_n)
        throw std::invalid_argument("population parameters invalid");
    if (n < 1 || n > big_n) throw std::invalid_argument("draw count invalid");
    if (chi < 0) throw std::invalid_argument("slack must be nonnegative");
    const double frac = static_cast<double>(big_k) / big_n;
    const double shifted = side == TailSide::Lower ? frac - chi : frac + chi;
    if (shifted < 0 || shifted > 1)
        throw std::invalid_argument("slack pushes the fraction outside [0,1]");
    return exp_clamped(-2.0 * chi * chi * n);
}

double eps_cor(int d, double c) {
    if (d < 1) throw std::invalid_argument("need at least one computation round");
    if (c < 0 || c >= 0.5) throw std::invalid_argument("computation error c must be in [0, 1/2)");
    return exp_clamped(-2.0 * d * (0.5 - c) * (0.5 - c));
}

RobustnessBounds eps_rob(int d, int s, int w, double c, double p_err) {
    if (d < 1 || s < 1) throw std::invalid_argument("need d >= 1 and s >= 1");
    if (w < 0 || w > s) throw std::invalid_argument("tolerance w must satisfy 0 <= w <= s");
    const double ws = static_cast<double>(w) / s;
    if (p_err >= ws)
        throw std::invalid_argument("robustness needs p_err < w/s");
    if (p_err + c >= 0.5)
        throw std::invalid_argument("robustness needs p_err + c < 1/2");
    RobustnessBounds out;
    out.reject_bound = exp_clamped(-2.0 * (p_err - ws) * (p_err - ws) * s);
    out.wrong_bound = exp_clamped(-2.0 * d * (0.5 - (c + p_err)) * (0.5 - (c + p_err)));
    return out;
}

namespace {

// Evaluate the two-term eps sum at a single (phi, chi).
double eps_terms(const BoundParams& p, double phi, double chi,
                 std::vector<std::string>* log) {
    const double ws = static_cast<double>(p.w) / p.s;
    const double m0n = p.alpha() - phi;
    const double t1 = exp_clamped(-2.0 * chi * chi * p.s);
    double t2 = 1.0;
    const double denom = m0n - chi;
    if (denom <= 0) {
        log_clamp(log, "eps inner term vacuous: m0/N - chi <= 0 at phi=" + fmt(phi) +
                           " chi=" + fmt(chi));
    } else {
        const double b = denom / p.k - ws;
        if (b <= 0) {
            log_clamp(log, "eps inner term vacuous: trap margin <= 0 at phi=" +
                               fmt(phi) + " chi=" + fmt(chi));
        } else {
            t2 = exp_clamped(-2.0 * b * b / denom * p.s);
        }
    }
    const double sum = t1 + t2;
    if (sum >= 1.0)
        log_clamp(log, "eps sum clamped to 1 at phi=" + fmt(phi) + " chi=" + fmt(chi));
    return std::min(sum, 1.0);
}

double nu_terms(const BoundParams& p, double phi, double chi,
                std::vector<std::string>* log) {
    const double m0n = p.alpha() - phi;
    const double t1 = exp_clamped(-2.0 * chi * chi * p.d);
    double t2 = 1.0;
    const double denom = 1.0 - m0n - chi;
    if (denom <= 0) {
        log_clamp(log, "nu inner term vacuous: 1 - m0/N - chi <= 0 at phi=" + fmt(phi) +
                           " chi=" + fmt(chi));
    } else {
        const double a = denom * (1.0 - p.c) - 0.5;
        if (a <= 0) {
            log_clamp(log, "nu inner term vacuous: majority margin <= 0 at phi=" +
                               fmt(phi) + " chi=" + fmt(chi));
        } else {
            t2 = exp_clamped(-2.0 * a * a / denom * p.d);
        }
    }
    const double sum = t1 + t2;
    if (sum >= 1.0)
        log_clamp(log, "nu sum clamped to 1 at phi=" + fmt(phi) + " chi=" + fmt(chi));
    return std::min(sum, 1.0);
}

double range_cap(const BoundParams& p) {
    return p.alpha() - static_cast<double>(p.w) / p.s * p.k;
}

}  // namespace

double eps_of_phi(const BoundParams& params, double phi, const std::vector<double>& chi_grid,
                  std::vector<std::string>* clamp_log, double* best_chi) {
    params.validate();
    const double cap = range_cap(params);
    if (phi < -1e-12 || phi > cap + 1e-12)
        throw std::invalid_argument("phi outside [0, alpha - (w/s)k]");
    double best = std::numeric_limits<double>::infinity();
    double arg = 0;
    bool any = false;
    for (double chi : chi_grid) {
        if (chi < -1e-12 || chi > cap - phi + 1e-12) continue;
        any = true;
        const double v = eps_terms(params, phi, std::max(chi, 0.0), clamp_log);
        if (v < best) {
            best = v;
            arg = chi;
        }
    }
    if (!any) throw std::invalid_argument("no feasible chi in the grid for eps");
    if (best_chi) *best_chi = arg;
    return best;
}

double nu_of_phi(const BoundParams& params, double phi, const std::vector<double>& chi_grid,
                 std::vector<std::string>* clamp_log, double* best_chi) {
    params.validate();
    double best = std::numeric_limits<double>::infinity();
    double arg = 0;
    bool any = false;
    for (double chi : chi_grid) {
        if (chi < -1e-12 || chi > phi + 1e-12) continue;
        any = true;
        const double v = nu_terms(params, phi, std::max(chi, 0.0), clamp_log);
        if (v < best) {
            best = v;
            arg = chi;
        }
    }
    if (!any) throw std::invalid_argument("no feasible chi in the grid for nu");
    if (best_chi) *best_chi = arg;
    return best;
}

SecurityBreakdown security_error(const BoundParams& params,
                                 const std::vector<double>& phi_grid, int chi_resolution) {
    params.validate();
    if (chi_resolution < 1) throw std::invalid_argument("chi resolution must be positive");

    SecurityBreakdown out;
    out.alpha = params.alpha();
    out.delta = params.delta();
    const double cap = range_cap(params);

    if (cap <= 1e-15) {
        out.vacuous = true;
        out.p_d = out.grid_p_d = out.closed_form_p_d = 1.0;
        out.clamp_log.push_back(
            "no security margin: w/s >= alpha/k leaves no feasible phi");
        return out;
    }

    double best = std::numeric_limits<double>::infinity();
    for (double phi : phi_grid) {
        if (phi < 0 || phi > cap + 1e-12) continue;
        double ce = 0, cn = 0;
        const double e = eps_of_phi(params, phi, linspace(0, cap - phi, chi_resolution),
                                    nullptr, &ce);
        const double v =
            nu_of_phi(params, phi, linspace(0, phi, chi_resolution), nullptr, &cn);
        const double m = std::max(e, v);
        if (m < best) {
            best = m;
            out.phi = phi;
            out.chi_eps = ce;
            out.chi_nu = cn;
            out.eps_phi = e;
            out.nu_phi = v;
        }
    }
    if (!std::isfinite(best))
        throw std::invalid_argument("phi grid has no feasible points");
    out.grid_p_d = best;
    // Re-evaluate the winning point with clamp logging enabled.
    eps_terms(params, out.phi, out.chi_eps, &out.clamp_log);
    nu_terms(params, out.phi, out.chi_nu, &out.clamp_log);

    // Closed-form instantiation phi = Delta/2, chi = Delta/4 per the chosen
    // Delta convention; infeasible points are reported as vacuous (1).
    const double phi_c = out.delta / 2, chi_c = out.delta / 4;
    if (out.delta > 0 && phi_c <= cap + 1e-12 && chi_c <= cap - phi_c + 1e-12) {
        const double e = eps_terms(params, phi_c, chi_c, &out.clamp_log);
        const double v = nu_terms(params, phi_c, chi_c, &out.clamp_log);
        out.closed_form_p_d = std::max(e, v);
    } else {
        out.closed_form_p_d = 1.0;
        out.clamp_log.push_back(
            "closed-form phi=Delta/2, chi=Delta/4 infeasible under this convention");
    }

    out.p_d = std::min(out.grid_p_d, out.closed_form_p_d);
    if (out.closed_form_p_d < out.grid_p_d) {
        out.phi = phi_c;
        out.chi_eps = out.chi_nu = chi_c;
        out.eps_phi = eps_terms(params, phi_c, chi_c, nullptr);
        out.nu_phi = nu_terms(params, phi_c, chi_c, nullptr);
    }
    out.m0_over_n = out.alpha - out.phi;
    out.minus_log2_p_d = -std::log2(std::max(out.p_d, 1e-300));
    return out;
}

SecurityBreakdown security_error(const BoundParams& params) {
    params.validate();
    const double cap = range_cap(params);
    if (cap <= 1e-15) return security_error(params, {0.0}, 1);

    SecurityBreakdown coarse = security_error(params, linspace(0, cap, 64), 64);
    const double step = cap / 63;
    const double lo = std::max(0.0, coarse.phi - step);
    const double hi = std::min(cap, coarse.phi + step);
    SecurityBreakdown fine = security_error(params, linspace(lo, hi, 64), 256);
    return fine.grid_p_d < coarse.grid_p_d ? fine : coarse;
}

std::string breakdown_table(const SecurityBreakdown& b) {
    std::ostringstream os;
    os.precision(6);
    const auto row = [&](const char* name, double p) {
        os << name << "  " << p << "  (-log2: " << -std::log2(std::max(p, 1e-300))
           << ")\n";
    };
    os << "alpha      " << b.alpha << '\n';
    os << "delta      " << b.delta << '\n';
    if (b.vacuous) {
        os << "vacuous: no security margin (w too large for s, alpha, k)\n";
        return os.str();
    }
    os << "phi        " << b.phi << '\n';
    os << "chi_eps    " << b.chi_eps << '\n';
    os << "chi_nu     " << b.chi_nu << '\n';
    os << "m0/N       " << b.m0_over_n << '\n';
    row("eps(phi) ", b.eps_phi);
    row("nu(phi)  ", b.nu_phi);
    row("grid p_d ", b.grid_p_d);
    row("closed   ", b.closed_form_p_d);
    row("p_d      ", b.p_d);
    if (!b.clamp_log.empty()) os << "clamps: " << b.clamp_log.size() << " events\n";
    return os.str();
}

}  // namespace mbdqc
