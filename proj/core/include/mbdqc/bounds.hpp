#pragma once

#include <string>
#include <vector>

namespace mbdqc {

// Which definition of the security margin Delta to use. The chi feasibility
// range in the epsilon derivation implies Delta = alpha - (w/s)*k, while the
// constants list writes Delta = alpha - w/(s*k); both are exposed and the
// range form is the default.
enum class DeltaConvention : uint8_t { Range, Item9 };

struct BoundParams {
    int d = 1;          // computation rounds
    int s = 1;          // test rounds
    int w = 0;          // tolerated trap failures
    int k = 1;          // trap type count (n + t)
    double c = 0.0;     // decision error of the honest computation, in [0, 1/2)
    double p_err = 0.0; // per-round noise rate
    DeltaConvention delta_convention = DeltaConvention::Range;

    int big_n() const { return d + s; }
    double alpha() const { return (1 - 2 * c) / (2 - 2 * c); }
    double delta() const;
    void validate() const;
};

struct SecurityBreakdown {
    double alpha = 0;
    double delta = 0;        // per the chosen convention
    double m0_over_n = 0;    // alpha - phi at the reported choice
    double phi = 0;          // reported argmin
    double chi_eps = 0;      // chi minimizing the eps term at phi
    double chi_nu = 0;       // chi minimizing the nu term at phi
    double eps_phi = 1;
    double nu_phi = 1;
    double grid_p_d = 1;         // grid minimum of max(nu, eps)
    double closed_form_p_d = 1;  // phi = Delta/2, chi = Delta/4 instantiation
    double p_d = 1;              // the tighter of the two
    double minus_log2_p_d = 0;
    bool vacuous = false;  // Delta <= 0: no security margin
    std::vector<std::string> clamp_log;
};

// Hoeffding tail for X ~ Binomial(n, p): P(X >= k) <= exp(-2(np-k)^2/n) for
// k >= np, and P(X <= k) <= the same expression for k <= np.
double binom_upper_tail(int n, double p, double k);
double binom_lower_tail(int n, double p, double k);

enum class TailSide : uint8_t { Lower, Upper };

// Hoeffding-Chvatal tail for a hypergeometric draw of n items from a
// population of big_n with marked fraction big_k/big_n: slipping chi below
// (Lower) or above (Upper) the mean fraction has probability <= exp(-2 chi^2 n).
double hypergeom_tail(int big_n, int big_k, int n, double chi, TailSide side);

// Wrong-majority probability of an honest c-biased computation.
double eps_cor(int d, double c);

struct RobustnessBounds {
    double reject_bound = 1;  // honest-but-noisy run rejected
    double wrong_bound = 1;   // accepted with the wrong majority
};

RobustnessBounds eps_rob(int d, int s, int w, double c, double p_err);

// Acceptance probability bound when at least m0 = (alpha - phi) * N rounds are
// attacked; minimized over the chi grid (filtered to the feasible interval).
double eps_of_phi(const BoundParams& params, double phi, const std::vector<double>& chi_grid,
                  std::vector<std::string>* clamp_log = nullptr, double* best_chi = nullptr);

// Accept-and-wrong probability bound when fewer than m0 rounds are attacked.
double nu_of_phi(const BoundParams& params, double phi, const std::vector<double>& chi_grid,
                 std::vector<std::string>* clamp_log = nullptr, double* best_chi = nullptr);

// p_d <= min over phi of max(nu(phi), eps(phi)), evaluated on the given phi
// grid with chi grids of the given resolution, plus the closed-form
// phi = Delta/2, chi = Delta/4 instantiation; the tighter value wins.
SecurityBreakdown security_error(const BoundParams& params,
                                 const std::vector<double>& phi_grid, int chi_resolution);

// Default 64-point grids with a x4 refinement pass around the coarse argmin.
SecurityBreakdown security_error(const BoundParams& params);

std::string breakdown_table(const SecurityBreakdown& b);

}  // namespace mbdqc
